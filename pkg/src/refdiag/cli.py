"""Command-line surface tying the pipeline together.

Exit codes: 0 success, 1 validation/scoring failure, 2 configuration error,
3 format error, 4 sampling/generation exhausted.
"""

import argparse
import sys

from . import dataio
from .config import GeneratorConfig
from .errors import (
    ConfigError,
    FormatError,
    GenerationExhaustedError,
    RefDiagError,
    SamplingExhaustedError,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_EXHAUSTED = 4


def _load_config(args):
    if getattr(args, "config", None):
        import json

        with open(args.config) as f:
            cfg = GeneratorConfig.from_dict(json.load(f))
    else:
        cfg = GeneratorConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "n", None) is not None:
        overrides["n_scenes"] = args.n
    if getattr(args, "per_image", None) is not None:
        overrides["n_per_image"] = args.per_image
    if getattr(args, "split", None) is not None:
        overrides["split_condition"] = args.split
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _cmd_gen_scenes(args):
    from .scene import sample_scene

    cfg = _load_config(args)
    scene_cfg = cfg.scene_config()
    scenes = [sample_scene(cfg.seed + k, scene_cfg) for k in range(cfg.n_scenes)]
    dataio.save_scenes(args.out, scenes, cfg)
    print(f"wrote {len(scenes)} scenes to {args.out}")
    return EXIT_OK


def _cmd_render(args):
    from .raster import rasterize

    scenes, _cfg = dataio.load_scenes(args.scenes)
    renders = [rasterize(s, backend=args.backend) for s in scenes]
    dataio.save_renders(args.out, renders)
    print(f"wrote {len(renders)} renders to {args.out}")
    return EXIT_OK


def _cmd_gen_refexps(args):
    from .generate import generate_dataset

    scenes, _scene_cfg = dataio.load_scenes(args.scenes)
    cfg = _load_config(args)
    renders = None
    if args.renders:
        renders = dataio.load_renders(args.renders, scenes)
    manifest = generate_dataset(
        scenes,
        cfg.n_per_image,
        cfg.catalog(),
        cfg.seed,
        renders=renders,
        settings=cfg.settings(),
        false_premise=args.false_premise,
    )
    dataio.save_dataset(args.out, manifest, cfg)
    print(
        f"wrote {len(manifest.expressions)} expressions "
        f"({len(manifest.scenes)} scenes) to {args.out}"
    )
    return EXIT_OK


def _cmd_gen_false_premise(args):
    from .generate import DatasetManifest, generate_false_premise, _recount
    from .raster import rasterize
    from .scene import scene_rng

    scenes, _scene_cfg = dataio.load_scenes(args.scenes)
    cfg = _load_config(args)
    renders = (
        dataio.load_renders(args.renders, scenes)
        if args.renders
        else [rasterize(s) for s in scenes]
    )
    catalog = cfg.catalog()
    settings = cfg.settings()
    expressions = []
    for j in range(args.n):
        k = j % len(scenes)
        rng = scene_rng(cfg.seed, 2, j)
        expressions.append(
            generate_false_premise(scenes[k], renders[k], catalog, rng, settings, scene_id=k)
        )
    # n_per_image = 0 marks a set without an expressions-per-scene contract.
    manifest = DatasetManifest(
        scenes=tuple(scenes),
        expressions=tuple(expressions),
        category_counts=_recount(expressions),
        seed=cfg.seed,
        n_per_image=0,
    )
    _save_fp_dataset(args.out, manifest, cfg)
    print(f"wrote {len(expressions)} false-premise expressions to {args.out}")
    return EXIT_OK


def _save_fp_dataset(path, manifest, cfg):
    # A false-premise set has no expressions-per-scene contract, so skip the
    # per-image count validation that save_dataset would apply.
    dataio.write_document(
        path,
        dataio.DATASET_FORMAT,
        {
            "config": cfg.to_dict(),
            "config_hash": dataio.config_hash(cfg),
            "seed": manifest.seed,
            "n_per_image": manifest.n_per_image,
            "category_counts": manifest.category_counts,
            "scenes": [s.to_dict() for s in manifest.scenes],
            "expressions": [
                dataio._expression_to_dict(e, i)
                for i, e in enumerate(manifest.expressions)
            ],
        },
    )


def _load_scoring_inputs(args):
    manifest, _cfg = dataio.load_dataset(args.dataset)
    renders = None
    if getattr(args, "renders", None):
        renders = dataio.load_renders(args.renders, manifest.scenes)
    dims = tuple(manifest.scenes[0].camera.image_size)
    predictions = dataio.load_predictions(args.pred, dims)
    return manifest, renders, predictions


def _cmd_score_seg(args):
    from .evaluate import score_segmentation

    manifest, renders, predictions = _load_scoring_inputs(args)
    report = score_segmentation(predictions, manifest, renders)
    dataio.save_report(args.out, report)
    print(report.format_table())
    return EXIT_OK


def _cmd_score_det(args):
    from .evaluate import score_detection

    manifest, renders, predictions = _load_scoring_inputs(args)
    report = score_detection(predictions, manifest, renders)
    dataio.save_report(args.out, report)
    print(report.format_table())
    return EXIT_OK


def _cmd_score_steps(args):
    from .evaluate import stepwise_iou

    manifest, renders, predictions = _load_scoring_inputs(args)
    table = stepwise_iou(predictions, manifest, renders)
    dataio.save_stepwise(args.out, table)
    for kind, s in sorted(table.items()):
        in_s = "-" if s["in_iou"] is None else f"{s['in_iou']:.4f}"
        print(f"{kind:16s} in {in_s} (n={s['n_in']})  out {s['out_iou']:.4f} (n={s['n_out']})")
    return EXIT_OK


def _cmd_audit_bias(args):
    from .evaluate import bias_audit

    manifest, _cfg = dataio.load_dataset(args.dataset)
    report = bias_audit(manifest)
    dataio.save_bias_report(args.out, report)
    det = report.blind_detection
    seg = report.blind_segmentation
    print("referred-set sizes:", dict(sorted(report.set_size_distribution.items())))
    print(f"blind constant-mask cumulative IoU: {seg['cumulative_iou']:.4f}")
    if det.get("count"):
        print(
            f"blind detection: uniform {det['uniform_random_expected']:.4f}, "
            f"index prior {det['most_frequent_index']['accuracy']:.4f}, "
            f"attribute {det['best_attribute_chooser']['accuracy']:.4f}, "
            f"largest-mask {det['largest_visible_mask_accuracy']:.4f}"
        )
    return EXIT_OK


def _cmd_validate(args):
    from .executor import execute
    from .raster import rasterize
    from .scene import validate_scene

    manifest, cfg = dataio.load_dataset(args.dataset)
    renders = (
        dataio.load_renders(args.renders, manifest.scenes)
        if args.renders
        else [rasterize(s) for s in manifest.scenes]
    )
    scene_cfg = cfg.scene_config()
    for scene in manifest.scenes:
        validate_scene(scene, scene_cfg)
    for i, e in enumerate(manifest.expressions):
        scene = manifest.scenes[e.scene_id]
        render = renders[e.scene_id]
        trace = execute(e.program, scene, render)
        if tuple(trace.sets) != tuple(e.step_sets) or trace.final != e.referred_ids:
            print(f"expression {i}: stored trace does not match re-execution")
            return EXIT_FAILURE
        if not e.is_false_premise and not e.referred_ids:
            print(f"expression {i}: empty referent set on a non-false-premise row")
            return EXIT_FAILURE
        if e.is_false_premise and e.referred_ids:
            print(f"expression {i}: false-premise row with a non-empty referent set")
            return EXIT_FAILURE
        if e.is_single_object != (len(e.referred_ids) == 1):
            print(f"expression {i}: is_single_object flag inconsistent")
            return EXIT_FAILURE
    print(f"validated {len(manifest.expressions)} expressions: OK")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="refdiag",
        description="Deterministic referring-expression dataset generator and harness",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **flags):
        sp = sub.add_parser(name)
        for flag, kwargs in flags.items():
            sp.add_argument(flag, **kwargs)
        sp.set_defaults(fn=fn)
        return sp

    add(
        "gen-scenes",
        _cmd_gen_scenes,
        **{
            "--n": dict(type=int, default=None, help="number of scenes"),
            "--seed": dict(type=int, default=None),
            "--split": dict(choices=["A", "B", "none"], default=None),
            "--config": dict(default=None, help="JSON config file"),
            "--out": dict(required=True),
        },
    )
    add(
        "render",
        _cmd_render,
        **{
            "--scenes": dict(required=True),
            "--backend": dict(choices=["compiled", "numpy"], default=None),
            "--out": dict(required=True),
        },
    )
    add(
        "gen-refexps",
        _cmd_gen_refexps,
        **{
            "--scenes": dict(required=True),
            "--renders": dict(default=None),
            "--per-image": dict(type=int, default=None, dest="per_image"),
            "--false-premise": dict(type=int, default=0, dest="false_premise"),
            "--seed": dict(type=int, default=None),
            "--config": dict(default=None),
            "--out": dict(required=True),
        },
    )
    add(
        "gen-false-premise",
        _cmd_gen_false_premise,
        **{
            "--scenes": dict(required=True),
            "--renders": dict(default=None),
            "--n": dict(type=int, required=True),
            "--seed": dict(type=int, default=None),
            "--config": dict(default=None),
            "--out": dict(required=True),
        },
    )
    add(
        "score-seg",
        _cmd_score_seg,
        **{
            "--dataset": dict(required=True),
            "--pred": dict(required=True),
            "--renders": dict(default=None),
            "--out": dict(required=True),
        },
    )
    add(
        "score-det",
        _cmd_score_det,
        **{
            "--dataset": dict(required=True),
            "--pred": dict(required=True),
            "--out": dict(required=True),
        },
    )
    add(
        "score-steps",
        _cmd_score_steps,
        **{
            "--dataset": dict(required=True),
            "--pred": dict(required=True),
            "--renders": dict(default=None),
            "--out": dict(required=True),
        },
    )
    add(
        "audit-bias",
        _cmd_audit_bias,
        **{
            "--dataset": dict(required=True),
            "--out": dict(required=True),
        },
    )
    add(
        "validate",
        _cmd_validate,
        **{
            "--dataset": dict(required=True),
            "--renders": dict(default=None),
        },
    )
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except (SamplingExhaustedError, GenerationExhaustedError) as e:
        print(f"generation exhausted: {e}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except RefDiagError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def console_entry():
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
