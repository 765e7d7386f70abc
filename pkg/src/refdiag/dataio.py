"""Versioned on-disk formats: scenes, renders, dataset manifests, predictions,
reports.

Everything is canonical JSON (sorted keys, fixed separators) so identical
content is byte-identical on disk.  Readers reject files whose major format
version differs from theirs.
"""

import json

import numpy as np

from .config import GeneratorConfig, config_hash
from .errors import FormatError
from .generate import DatasetManifest, RefExpression
from .masks import Mask, decode_rle, encode_rle
from .programs import emit_program, parse_program
from .raster.engine import RenderResult
from .scene import SceneGraph

FORMAT_VERSION = "1.0"

SCENES_FORMAT = "refdiag/scenes"
RENDERS_FORMAT = "refdiag/renders"
DATASET_FORMAT = "refdiag/dataset"
REPORT_FORMAT = "refdiag/report"
BIAS_FORMAT = "refdiag/bias-report"


def dumps_canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_document(path, fmt, body):
    doc = {"format": fmt, "version": FORMAT_VERSION}
    doc.update(body)
    with open(path, "w") as f:
        f.write(dumps_canonical(doc))


def read_document(path, fmt):
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON ({e})") from None
    if doc.get("format") != fmt:
        raise FormatError(f"{path}: expected format {fmt!r}, got {doc.get('format')!r}")
    version = str(doc.get("version", ""))
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise FormatError(
            f"{path}: unsupported major version {version!r} (reader is {FORMAT_VERSION})"
        )
    return doc


# --- scenes ------------------------------------------------------------------

def save_scenes(path, scenes, config):
    write_document(
        path,
        SCENES_FORMAT,
        {
            "config": config.to_dict(),
            "config_hash": config_hash(config),
            "scenes": [s.to_dict() for s in scenes],
        },
    )


def load_scenes(path):
    doc = read_document(path, SCENES_FORMAT)
    scenes = tuple(SceneGraph.from_dict(s) for s in doc["scenes"])
    config = GeneratorConfig.from_dict(doc["config"])
    return scenes, config


# --- renders -----------------------------------------------------------------

def save_renders(path, renders, scene_ids=None):
    if scene_ids is None:
        scene_ids = list(range(len(renders)))
    entries = []
    for sid, r in zip(scene_ids, renders):
        objects = []
        for i, oid in enumerate(r.object_ids):
            objects.append(
                {
                    "id": oid,
                    "full_rle": encode_rle(Mask.from_array(r.full[i])),
                    "visible_rle": encode_rle(Mask.from_array(r.visible[i])),
                    "bbox": list(r.bboxes[i]) if r.bboxes[i] is not None else None,
                    "occlusion_ratio": r.occlusion[i],
                }
            )
        entries.append({"scene_id": sid, "objects": objects})
    first = renders[0]
    write_document(
        path,
        RENDERS_FORMAT,
        {"image_size": [first.width, first.height], "renders": entries},
    )


def load_renders(path, scenes):
    """Rebuild RenderResult objects; camera distances come from the scenes."""
    doc = read_document(path, RENDERS_FORMAT)
    width, height = doc["image_size"]
    out = []
    for entry in doc["renders"]:
        scene = scenes[entry["scene_id"]]
        n = len(entry["objects"])
        full = np.zeros((n, height, width), dtype=bool)
        visible = np.zeros((n, height, width), dtype=bool)
        bboxes = []
        occlusion = []
        ids = []
        for i, obj in enumerate(entry["objects"]):
            ids.append(obj["id"])
            full[i] = decode_rle(obj["full_rle"], (width, height)).bits
            visible[i] = decode_rle(obj["visible_rle"], (width, height)).bits
            bboxes.append(tuple(obj["bbox"]) if obj["bbox"] is not None else None)
            occlusion.append(obj["occlusion_ratio"])
        depth_index = np.full((height, width), -1, dtype=np.int32)
        for i in range(n):
            depth_index[visible[i]] = i
        eye = scene.camera.eye
        eye_dist2 = []
        for oid in ids:
            o = scene.object_by_id(oid)
            eye_dist2.append(
                (o.position[0] - eye[0]) ** 2
                + (o.position[1] - eye[1]) ** 2
                + (o.position[2] - eye[2]) ** 2
            )
        out.append(
            RenderResult(
                width=width,
                height=height,
                object_ids=tuple(ids),
                full=full,
                visible=visible,
                depth_index=depth_index,
                bboxes=tuple(bboxes),
                occlusion=tuple(occlusion),
                eye_dist2=tuple(eye_dist2),
            )
        )
    return out


# --- dataset manifests ---------------------------------------------------------

def _expression_to_dict(e, idx):
    return {
        "id": idx,
        "scene_id": e.scene_id,
        "text": e.text,
        "category": e.category,
        "program": emit_program(e.program),
        "referred_ids": sorted(e.referred_ids),
        "step_referents": [sorted(s) for s in e.step_sets],
        "is_single_object": e.is_single_object,
        "is_false_premise": e.is_false_premise,
    }


def _expression_from_dict(d):
    return RefExpression(
        text=d["text"],
        program=parse_program(d["program"]),
        category=d["category"],
        referred_ids=frozenset(d["referred_ids"]),
        step_sets=tuple(frozenset(s) for s in d["step_referents"]),
        scene_id=int(d["scene_id"]),
        is_single_object=bool(d["is_single_object"]),
        is_false_premise=bool(d["is_false_premise"]),
    )


def save_dataset(path, manifest, config):
    manifest.validate_counts()
    write_document(
        path,
        DATASET_FORMAT,
        {
            "config": config.to_dict(),
            "config_hash": config_hash(config),
            "seed": manifest.seed,
            "n_per_image": manifest.n_per_image,
            "category_counts": manifest.category_counts,
            "scenes": [s.to_dict() for s in manifest.scenes],
            "expressions": [
                _expression_to_dict(e, i) for i, e in enumerate(manifest.expressions)
            ],
        },
    )


def load_dataset(path):
    doc = read_document(path, DATASET_FORMAT)
    scenes = tuple(SceneGraph.from_dict(s) for s in doc["scenes"])
    expressions = tuple(_expression_from_dict(d) for d in doc["expressions"])
    manifest = DatasetManifest(
        scenes=scenes,
        expressions=expressions,
        category_counts=doc["category_counts"],
        seed=int(doc["seed"]),
        n_per_image=int(doc["n_per_image"]),
    )
    manifest.validate_counts()
    config = GeneratorConfig.from_dict(doc["config"])
    return manifest, config


# --- predictions ---------------------------------------------------------------

def save_predictions(path, records):
    from .evaluate import PredictionRecord  # noqa: F401  (documentation pointer)

    with open(path, "w") as f:
        for r in records:
            row = {"expression_id": r.expression_id}
            if r.mask is not None:
                row["mask"] = encode_rle(r.mask)
            if r.candidate is not None:
                row["candidate"] = r.candidate
            if r.step_masks is not None:
                row["step_masks"] = [encode_rle(m) for m in r.step_masks]
            f.write(dumps_canonical(row))


def load_predictions(path, dims):
    from .evaluate import PredictionRecord

    records = []
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{line_no}: bad JSON ({e})") from None
            mask = decode_rle(row["mask"], dims) if "mask" in row else None
            steps = None
            if "step_masks" in row:
                steps = tuple(decode_rle(s, dims) for s in row["step_masks"])
            records.append(
                PredictionRecord(
                    expression_id=int(row["expression_id"]),
                    mask=mask,
                    candidate=row.get("candidate"),
                    step_masks=steps,
                )
            )
    return records


# --- reports ---------------------------------------------------------------------

def save_report(path, report):
    write_document(path, REPORT_FORMAT, {"report": report.to_dict()})


def save_stepwise(path, table):
    write_document(path, REPORT_FORMAT, {"report": {"track": "stepwise", "stepwise": table}})


def save_bias_report(path, report):
    write_document(path, BIAS_FORMAT, {"report": report.to_dict()})
