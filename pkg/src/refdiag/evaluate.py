"""Scoring of external predictions with the full diagnostic breakdown.

Both IoU aggregations are reported: cumulative (total intersection over total
union, the referring-segmentation convention) and per-expression mean.  A
prediction and ground truth that are both empty count as IoU 1.0 — the
false-premise convention — and contribute nothing to the cumulative sums.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidReferenceError
from .families import CATEGORIES
from .masks import Mask
from .vocab import ATTRIBUTE_KINDS, VALUES

# Module kinds for the include/exclude table on the zero_relate subset.
BASIC_MODULE_KINDS = ("color", "size", "shape", "material", "ordinal", "visible")

RELATE_DEPTH_CATEGORIES = {
    "zero_relate": 0,
    "one_relate": 1,
    "two_relate": 2,
    "three_relate": 3,
}


@dataclass(frozen=True)
class PredictionRecord:
    expression_id: int
    mask: Mask = None            # segmentation track
    candidate: int = None        # detection track
    step_masks: tuple = None     # optional per-program-node masks

    def __post_init__(self):
        if (self.mask is None) == (self.candidate is None):
            raise FormatError(
                f"prediction {self.expression_id}: exactly one of mask/candidate required"
            )


def iou(pred, gt):
    """Intersection over union of two equal-sized masks.

    Both-empty counts as 1.0 (a correct no-foreground prediction); exactly
    one empty is 0.0.
    """
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise FormatError(
            f"mask dimensions differ: {pred.width}x{pred.height} vs {gt.width}x{gt.height}"
        )
    inter = int((pred.bits & gt.bits).sum())
    union = int((pred.bits | gt.bits).sum())
    if union == 0:
        return 1.0
    return inter / union


def _mean(values):
    return sum(values) / len(values) if values else None


@dataclass
class _Row:
    expression: object
    value: float       # per-expression metric (IoU or 0/1 accuracy)
    inter: int = 0
    union: int = 0
    pred_pixels: int = 0


def _slice_stats(rows, metric="iou"):
    out = {"count": len(rows), "mean": _mean([r.value for r in rows])}
    if metric == "iou":
        union = sum(r.union for r in rows)
        inter = sum(r.inter for r in rows)
        out["cumulative"] = inter / union if union else (1.0 if rows else None)
    return out


@dataclass
class EvalReport:
    track: str
    overall: dict
    per_category: dict
    include_exclude: dict
    relation_depth: dict
    chain_vs_tree: dict
    spatial_vs_same: dict
    object_count: dict
    false_premise: dict = None
    stepwise: dict = None

    def verify(self):
        """Slice-consistency invariants: counts partition the dataset and the
        weighted recombination of per-category means equals the overall mean."""
        n = self.overall["count"]
        cat_n = sum(s["count"] for s in self.per_category.values())
        if cat_n != n:
            raise AssertionError(f"category counts {cat_n} != total {n}")
        obj_n = sum(s["count"] for s in self.object_count.values())
        if obj_n != n:
            raise AssertionError(f"object-count slice counts {obj_n} != total {n}")
        if n:
            weighted = (
                sum(s["mean"] * s["count"] for s in self.per_category.values() if s["count"])
                / n
            )
            if abs(weighted - self.overall["mean"]) > 1e-9:
                raise AssertionError("per-category means do not recombine to the overall mean")
        return self

    def to_dict(self):
        d = {
            "track": self.track,
            "overall": self.overall,
            "per_category": self.per_category,
            "include_exclude": self.include_exclude,
            "relation_depth": self.relation_depth,
            "chain_vs_tree": self.chain_vs_tree,
            "spatial_vs_same": self.spatial_vs_same,
            "object_count": self.object_count,
        }
        if self.false_premise is not None:
            d["false_premise"] = self.false_premise
        if self.stepwise is not None:
            d["stepwise"] = self.stepwise
        return d

    def format_table(self):
        def fmt(v):
            return "-" if v is None else f"{v:.4f}"

        lines = [f"track: {self.track}"]
        o = self.overall
        if self.track == "segmentation":
            lines.append(
                f"overall: cumulative IoU {fmt(o.get('cumulative'))}  "
                f"mean IoU {fmt(o['mean'])}  (n={o['count']})"
            )
        else:
            lines.append(f"overall: accuracy {fmt(o['mean'])}  (n={o['count']})")
        lines.append("per category:")
        for cat in CATEGORIES:
            s = self.per_category.get(cat)
            if s:
                lines.append(f"  {cat:14s} {fmt(s['mean'])}  (n={s['count']})")
        lines.append("include/exclude on zero_relate:")
        for kind, pair in self.include_exclude.items():
            lines.append(
                f"  {kind:10s} include {fmt(pair['include']['mean'])} "
                f"(n={pair['include']['count']})  exclude {fmt(pair['exclude']['mean'])} "
                f"(n={pair['exclude']['count']})"
            )
        lines.append("relation depth: " + "  ".join(
            f"{d}:{fmt(s['mean'])}" for d, s in sorted(self.relation_depth.items())
        ))
        lines.append(
            f"chain vs tree: {fmt(self.chain_vs_tree['chain']['mean'])} vs "
            f"{fmt(self.chain_vs_tree['tree']['mean'])}"
        )
        lines.append(
            f"spatial vs same: {fmt(self.spatial_vs_same['spatial']['mean'])} vs "
            f"{fmt(self.spatial_vs_same['same']['mean'])}"
        )
        lines.append("objects per scene: " + "  ".join(
            f"{k}:{fmt(s['mean'])}" for k, s in sorted(self.object_count.items())
        ))
        if self.false_premise is not None:
            fp = self.false_premise
            lines.append(
                f"false premise: n={fp['count']}  zero-foreground {fmt(fp['frac_zero_pixels'])}  "
                f"<=8 px {fmt(fp['frac_le_8_pixels'])}"
            )
        if self.stepwise is not None:
            lines.append("stepwise in/out IoU per module:")
            for kind, s in sorted(self.stepwise.items()):
                lines.append(
                    f"  {kind:16s} in {fmt(s['in_iou'])} (n={s['n_in']})  "
                    f"out {fmt(s['out_iou'])} (n={s['n_out']})"
                )
        return "\n".join(lines)


def _expression_module_kinds(expr):
    kinds = set()
    for node in expr.program.nodes:
        f = node.function
        if f.startswith("filter_"):
            kinds.add(f.split("_", 1)[1])
        elif f in ("ordinal", "visible"):
            kinds.add(f)
    return kinds


def _build_report(track, rows, metric):
    by_cat = {}
    for r in rows:
        by_cat.setdefault(r.expression.category, []).append(r)
    per_category = {c: _slice_stats(rs, metric) for c, rs in by_cat.items()}

    zero_rows = by_cat.get("zero_relate", [])
    include_exclude = {}
    for kind in BASIC_MODULE_KINDS:
        inc = [r for r in zero_rows if kind in _expression_module_kinds(r.expression)]
        exc = [r for r in zero_rows if kind not in _expression_module_kinds(r.expression)]
        include_exclude[kind] = {
            "include": _slice_stats(inc, metric),
            "exclude": _slice_stats(exc, metric),
        }

    relation_depth = {}
    for cat, depth in RELATE_DEPTH_CATEGORIES.items():
        relation_depth[depth] = _slice_stats(by_cat.get(cat, []), metric)

    chain_vs_tree = {
        "chain": _slice_stats(by_cat.get("two_relate", []), metric),
        "tree": _slice_stats(by_cat.get("and_logic", []), metric),
    }
    spatial_vs_same = {
        "spatial": _slice_stats(by_cat.get("two_relate", []), metric),
        "same": _slice_stats(by_cat.get("same_relate", []), metric),
    }

    by_count = {}
    for r in rows:
        by_count.setdefault(len(r.expression.scene.objects), []).append(r)
    object_count = {k: _slice_stats(rs, metric) for k, rs in sorted(by_count.items())}

    fp_rows = [r for r in rows if r.expression.is_false_premise]
    false_premise = None
    if fp_rows and track == "segmentation":
        pixels = [r.pred_pixels for r in fp_rows]
        hist = {}
        for p in pixels:
            hist[p] = hist.get(p, 0) + 1
        false_premise = {
            "count": len(fp_rows),
            "foreground_pixel_histogram": sorted(hist.items()),
            "frac_zero_pixels": sum(1 for p in pixels if p == 0) / len(pixels),
            "frac_le_8_pixels": sum(1 for p in pixels if p <= 8) / len(pixels),
        }

    report = EvalReport(
        track=track,
        overall=_slice_stats(rows, metric),
        per_category=per_category,
        include_exclude=include_exclude,
        relation_depth=relation_depth,
        chain_vs_tree=chain_vs_tree,
        spatial_vs_same=spatial_vs_same,
        object_count=object_count,
        false_premise=false_premise,
    )
    return report.verify()


@dataclass(frozen=True)
class _BoundExpression:
    """Expression joined with its scene/render, as scoring needs it."""
    id: int
    category: str
    program: object
    referred_ids: frozenset
    step_sets: tuple
    is_false_premise: bool
    is_single_object: bool
    scene: object
    render: object

    def gt_mask(self):
        return self.render.union_visible(self.referred_ids)


def bind_dataset(manifest, renders=None):
    """Join expressions with scenes and renders; renders are computed when
    not supplied (rendering is deterministic)."""
    from .raster import rasterize

    if renders is None:
        renders = [rasterize(s) for s in manifest.scenes]
    bound = []
    for i, e in enumerate(manifest.expressions):
        bound.append(
            _BoundExpression(
                id=i,
                category=e.category,
                program=e.program,
                referred_ids=e.referred_ids,
                step_sets=tuple(e.step_sets),
                is_false_premise=e.is_false_premise,
                is_single_object=e.is_single_object,
                scene=manifest.scenes[e.scene_id],
                render=renders[e.scene_id],
            )
        )
    return bound


def _index_predictions(predictions, expected_ids):
    by_id = {}
    for p in predictions:
        if p.expression_id in by_id:
            raise FormatError(f"duplicate prediction for expression {p.expression_id}")
        by_id[p.expression_id] = p
    missing = expected_ids - set(by_id)
    extra = set(by_id) - expected_ids
    if missing:
        raise FormatError(f"missing predictions for expressions {sorted(missing)[:10]}")
    if extra:
        raise FormatError(f"predictions for unknown expressions {sorted(extra)[:10]}")
    return by_id


def score_segmentation(predictions, dataset, renders=None):
    """Score mask predictions (one per expression) against referent masks."""
    bound = bind_dataset(dataset, renders)
    by_id = _index_predictions(predictions, {b.id for b in bound})
    rows = []
    for b in bound:
        p = by_id[b.id]
        if p.mask is None:
            raise FormatError(f"expression {b.id}: segmentation track needs a mask")
        gt = b.gt_mask()
        inter = int((p.mask.bits & gt.bits).sum())
        union = int((p.mask.bits | gt.bits).sum())
        value = iou(p.mask, gt)
        rows.append(_Row(b, value, inter=inter, union=union, pred_pixels=p.mask.pixel_count))
    return _build_report("segmentation", rows, "iou")


def score_detection(predictions, dataset, renders=None):
    """Score chosen-candidate predictions on the single-object subset.

    Candidates are the scene's ground-truth objects; accuracy is the fraction
    of expressions whose chosen id equals the referred id.
    """
    bound = [b for b in bind_dataset(dataset, renders) if b.is_single_object]
    by_id = _index_predictions(predictions, {b.id for b in bound})
    rows = []
    for b in bound:
        p = by_id[b.id]
        if p.candidate is None:
            raise FormatError(f"expression {b.id}: detection track needs a candidate id")
        if p.candidate not in b.scene.ids():
            raise InvalidReferenceError(
                f"expression {b.id}: candidate {p.candidate} is not a scene object"
            )
        (referred,) = b.referred_ids
        rows.append(_Row(b, 1.0 if p.candidate == referred else 0.0))
    return _build_report("detection", rows, "accuracy")


def stepwise_iou(predictions, dataset, renders=None):
    """Per-module-kind (in-IoU, out-IoU) table from per-node mask predictions.

    A node's ground truth is the union of visible masks of its referent set;
    in-IoU of a node averages the IoU at its input positions.
    """
    bound = bind_dataset(dataset, renders)
    by_id = _index_predictions(predictions, {b.id for b in bound})
    in_vals = {}
    out_vals = {}
    for b in bound:
        p = by_id[b.id]
        if p.step_masks is None:
            raise FormatError(f"expression {b.id}: step masks required")
        nodes = b.program.nodes
        if len(p.step_masks) != len(nodes):
            raise FormatError(
                f"expression {b.id}: {len(p.step_masks)} step masks for "
                f"{len(nodes)} program nodes (trace-length mismatch)"
            )
        node_iou = []
        for idx, node in enumerate(nodes):
            gt = b.render.union_visible(b.step_sets[idx])
            node_iou.append(iou(p.step_masks[idx], gt))
        for idx, node in enumerate(nodes):
            out_vals.setdefault(node.function, []).append(node_iou[idx])
            for ref in node.inputs:
                in_vals.setdefault(node.function, []).append(node_iou[ref])
    table = {}
    for kind in sorted(set(out_vals) | set(in_vals)):
        outs = out_vals.get(kind, [])
        ins = in_vals.get(kind, [])
        table[kind] = {
            "in_iou": _mean(ins),
            "out_iou": _mean(outs),
            "n_in": len(ins),
            "n_out": len(outs),
        }
    return table


# --- dataset bias audit -----------------------------------------------------

@dataclass
class BiasReport:
    set_size_distribution: dict
    attribute_marginals: dict
    blind_segmentation: dict
    blind_detection: dict

    def to_dict(self):
        return {
            "set_size_distribution": self.set_size_distribution,
            "attribute_marginals": self.attribute_marginals,
            "blind_segmentation": self.blind_segmentation,
            "blind_detection": self.blind_detection,
        }


def _best_constant_mask(bound):
    """Best expression-blind constant mask under cumulative IoU, searched over
    pixel-frequency thresholds (the natural family for this objective)."""
    if not bound:
        return {"cumulative_iou": None, "threshold": None, "mask_pixels": 0}
    h, w = bound[0].render.height, bound[0].render.width
    freq = np.zeros((h, w), dtype=np.int64)
    total_gt = 0
    for b in bound:
        gt = b.gt_mask()
        freq += gt.bits
        total_gt += gt.pixel_count
    n = len(bound)
    best = (0.0, None, 0)  # empty mask scores 0 on any non-degenerate data
    for tau in np.unique(freq)[::-1]:
        if tau == 0:
            continue
        sel = freq >= tau
        m = int(sel.sum())
        inter = int(freq[sel].sum())
        union = n * m + total_gt - inter
        score = inter / union if union else 1.0
        if score > best[0]:
            best = (score, int(tau), m)
    return {"cumulative_iou": best[0], "threshold": best[1], "mask_pixels": best[2]}


def _detection_baselines(bound):
    single = [b for b in bound if b.is_single_object]
    if not single:
        return {"count": 0}
    referred = [next(iter(b.referred_ids)) for b in single]

    uniform = _mean([1.0 / len(b.scene.objects) for b in single])

    index_counts = {}
    for rid in referred:
        index_counts[rid] = index_counts.get(rid, 0) + 1
    best_index = min(sorted(index_counts), key=lambda i: -index_counts[i])
    index_acc = _mean(
        [1.0 if rid == best_index else 0.0 for rid in referred]
    )

    best_attr = {"attribute": None, "value": None, "accuracy": 0.0}
    for kind in ATTRIBUTE_KINDS:
        for value in VALUES[kind]:
            hits = 0
            for b, rid in zip(single, referred):
                matching = [o.id for o in b.scene.objects if o.attribute(kind) == value]
                chosen = min(matching) if matching else best_index
                if chosen == rid:
                    hits += 1
            acc = hits / len(single)
            if acc > best_attr["accuracy"]:
                best_attr = {"attribute": kind, "value": value, "accuracy": acc}

    largest_hits = 0
    for b, rid in zip(single, referred):
        sizes = {o.id: int(b.render.visible[b.render._row(o.id)].sum()) for o in b.scene.objects}
        chosen = min(sorted(sizes), key=lambda i: (-sizes[i], i))
        if chosen == rid:
            largest_hits += 1

    return {
        "count": len(single),
        "uniform_random_expected": uniform,
        "most_frequent_index": {"index": best_index, "accuracy": index_acc},
        "best_attribute_chooser": best_attr,
        "largest_visible_mask_accuracy": largest_hits / len(single),
    }


def bias_audit(dataset, renders=None):
    """Measure what an expression-blind model could score on this dataset:
    referent-set sizes, attribute marginals, and degenerate baselines."""
    bound = bind_dataset(dataset, renders)

    sizes = {}
    for b in bound:
        k = len(b.referred_ids)
        sizes[k] = sizes.get(k, 0) + 1

    marginals = {}
    for kind in ATTRIBUTE_KINDS:
        referred_counts = {v: 0 for v in VALUES[kind]}
        scene_counts = {v: 0 for v in VALUES[kind]}
        for b in bound:
            for oid in b.referred_ids:
                referred_counts[b.scene.object_by_id(oid).attribute(kind)] += 1
        for scene in dataset.scenes:
            for o in scene.objects:
                scene_counts[o.attribute(kind)] += 1
        r_total = sum(referred_counts.values()) or 1
        s_total = sum(scene_counts.values()) or 1
        marginals[kind] = {
            v: {
                "referred_frac": referred_counts[v] / r_total,
                "scene_frac": scene_counts[v] / s_total,
            }
            for v in VALUES[kind]
        }

    return BiasReport(
        set_size_distribution=sizes,
        attribute_marginals=marginals,
        blind_segmentation=_best_constant_mask(bound),
        blind_detection=_detection_baselines(bound),
    )
