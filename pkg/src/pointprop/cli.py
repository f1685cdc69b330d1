"""Command-line interface.

Subcommands: ``run`` (batch experiment from a JSON spec), ``synth``
(generate a synthetic dataset), ``propagate`` (labels CSV -> mask PNG),
``hil`` (simulated-expert session on one image), ``eval`` (score predicted
masks against ground truth) and ``serve`` (start the session service).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import harness, metrics, synthetic, tensor_io
from .embedding import FeatureField, build_field, l2_normalize
from .expert import SimulatedExpert
from .propagation import LabeledPointSet, propagate
from .proposal import HilConfig, run_hil_session


def _load_field(features_path: str, out_h: int | None, out_w: int | None) -> FeatureField:
    patch = tensor_io.read_tensor(features_path)
    if out_h is None or out_w is None:
        data, degenerate = l2_normalize(patch)
        return FeatureField(data=data, degenerate=degenerate)
    return build_field(patch, out_h, out_w)


def cmd_run(args) -> int:
    spec = harness.ExperimentSpec.from_json(args.spec)
    if args.output:
        spec.output = args.output
    report = harness.run(spec)
    if not spec.output:
        json.dump(report, sys.stdout, indent=2)
        print()
    else:
        print(f"report written to {spec.output}")
    return 0


def cmd_synth(args) -> int:
    params = synthetic.SceneParams(
        height=args.size,
        width=args.size,
        classes=args.classes,
        dim=args.dim,
        noise=args.noise,
    )
    manifest = synthetic.generate_dataset(args.out, args.scenes, args.seed, params)
    print(f"wrote {manifest['scenes']} scenes to {args.out}")
    return 0


def cmd_propagate(args) -> int:
    field = _load_field(args.features, args.height, args.width)
    points = tensor_io.read_points(args.labels)
    tensor_io.validate_points(points, field.width, field.height)
    labels = LabeledPointSet.from_points(field, points)
    mask = propagate(field, labels, k=args.k)
    tensor_io.write_mask(mask, args.out)
    print(f"propagated {len(labels)} labels -> {args.out}")
    return 0


def cmd_hil(args) -> int:
    gt = tensor_io.read_mask(args.gt)
    patch = tensor_io.read_tensor(args.features)
    field = build_field(patch, gt.shape[0], gt.shape[1])
    cfg = HilConfig(
        budget=args.budget,
        similarity_weight=args.lambda_,
        sigma=args.sigma,
        initial_points=args.initial,
        k=args.k,
    )
    labels = run_hil_session(field, SimulatedExpert(gt), cfg)
    if args.out_labels:
        tensor_io.write_points(labels.as_rows(), args.out_labels)
    mask = propagate(field, labels, k=args.k)
    tensor_io.write_mask(mask, args.out)
    num_classes = int(np.max(gt[gt != tensor_io.RESERVED_ID])) + 1
    cm = metrics.accumulate(gt, mask, num_classes)
    print(json.dumps({
        "labels": len(labels),
        "pa": metrics.pa(cm),
        "mpa": metrics.mpa(cm),
        "miou": metrics.miou(cm),
        "out": args.out,
    }, indent=2))
    return 0


def cmd_eval(args) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    stems = sorted(p.stem for p in gt_dir.glob("*.png"))
    if not stems:
        print("no ground-truth masks found", file=sys.stderr)
        return 1
    num_classes = args.num_classes or harness.infer_num_classes(gt_dir.parent, stems)
    ignore_ids = {tensor_io.RESERVED_ID}
    for token in args.ignore or []:
        if token == "unidentified":
            # The Unidentified class id is dataset configuration; default to
            # the last class id unless given explicitly.
            resolved = args.unidentified_id
            if resolved is None:
                resolved = num_classes - 1
                print(f"note: 'unidentified' resolved to class id {resolved} "
                      "(override with --unidentified-id)", file=sys.stderr)
            ignore_ids.add(resolved)
        else:
            ignore_ids.add(int(token))
    merged = metrics.ConfusionMatrix(num_classes)
    evaluated = 0
    for stem in stems:
        pred_path = pred_dir / f"{stem}.png"
        if not pred_path.exists():
            print(f"warning: no prediction for {stem}", file=sys.stderr)
            continue
        gt = tensor_io.read_mask(gt_dir / f"{stem}.png")
        pred = tensor_io.read_mask(pred_path)
        merged.merge(metrics.accumulate(gt, pred, num_classes,
                                        frozenset(ignore_ids)))
        evaluated += 1
    if evaluated == 0:
        print("no image pairs evaluated", file=sys.stderr)
        return 1
    json.dump(metrics.summary(merged), sys.stdout, indent=2)
    print()
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        data_root=args.data_root,
        max_sessions=args.max_sessions,
        strict=not args.no_strict,
        event_log_dir=args.event_log,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointprop",
        description="Point-label propagation engine, experiment harness and service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a JSON spec")
    p.add_argument("--spec", required=True, help="path to the experiment spec JSON")
    p.add_argument("--output", help="override the spec's output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--scenes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.2)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("propagate", help="propagate a point-label CSV to a mask")
    p.add_argument("--features", required=True, help="FTNS feature tensor")
    p.add_argument("--labels", required=True, help="point-label CSV")
    p.add_argument("--out", required=True, help="output mask PNG")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--height", type=int, help="target height (default: feature rows)")
    p.add_argument("--width", type=int, help="target width (default: feature cols)")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("hil", help="simulated-expert labeling session on one image")
    p.add_argument("--features", required=True)
    p.add_argument("--gt", required=True, help="ground-truth mask PNG")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--lambda", dest="lambda_", type=float, default=2.2)
    p.add_argument("--sigma", type=float, default=50.0)
    p.add_argument("--initial", type=int, default=10)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out", required=True, help="output augmented mask PNG")
    p.add_argument("--out-labels", help="optional output point-label CSV")
    p.set_defaults(func=cmd_hil)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted masks")
    p.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p.add_argument("--ignore", nargs="*",
                   help="extra classes to ignore: ids or the keyword "
                        "'unidentified' (255 always ignored)")
    p.add_argument("--unidentified-id", type=int,
                   help="class id the 'unidentified' keyword maps to")
    p.add_argument("--num-classes", type=int)
    p.set_defaults(func=cmd_eval)

    env = os.environ
    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--host", default=env.get("POINTPROP_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int,
                   default=int(env.get("POINTPROP_PORT", "8000")))
    p.add_argument("--data-root", default=env.get("POINTPROP_DATA_ROOT"),
                   help="dataset root with features/ masks/ images/")
    p.add_argument("--max-sessions", type=int,
                   default=int(env.get("POINTPROP_MAX_SESSIONS", "64")))
    p.add_argument("--no-strict", action="store_true",
                   default=env.get("POINTPROP_STRICT", "1") == "0",
                   help="allow labeling pixels other than the proposal")
    p.add_argument("--event-log", default=env.get("POINTPROP_EVENT_LOG"),
                   help="directory for per-session JSONL event logs")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
