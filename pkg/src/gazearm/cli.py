"""Command-line entry points for calibration, training, harness runs and
the gateway server."""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import blocks, gaze, hri, mapping
from .arm import ArmGeometry
from .blocks import BlockModel, CalibrationSet, Hyperparameters, ScreenGrid
from .geometry import display_bounds
from .harness import (
    run_pointing_scripted,
    run_pointing_synthetic,
    run_reachability,
)


def _parse_display(text: str) -> tuple[float, float]:
    w, h = text.lower().split("x")
    return float(w), float(h)


def _seed(args_seed: Optional[int]) -> Optional[int]:
    env = os.environ.get("GAZEARM_SEED")
    return int(env) if env is not None else args_seed


def cmd_calibrate(args: argparse.Namespace) -> int:
    w, h = _parse_display(args.display)
    grid = ScreenGrid(w, h)
    path = blocks.make_marker_path(grid, args.dwell_ms, args.transition_ms)
    samples = gaze.read_replay(args.replay)
    calib = blocks.collect_calibration(
        samples, path, settle_ms=args.settle_ms, seed=_seed(args.seed)
    )
    if args.set_out:
        calib.to_csv(args.set_out)
    model = blocks.train(calib, Hyperparameters(seed=_seed(args.seed)))
    model.save(args.out)
    print(
        f"trained on {len(calib)} samples: test_accuracy={model.test_accuracy:.3f} "
        f"epochs={model.epochs_run} converged={model.converged}"
    )
    return 0 if model.converged else 1


def cmd_train(args: argparse.Namespace) -> int:
    calib = CalibrationSet.from_csv(args.set)
    model = blocks.train(calib, Hyperparameters(seed=_seed(args.seed)))
    model.save(args.out)
    print(
        f"test_accuracy={model.test_accuracy:.3f} epochs={model.epochs_run} "
        f"converged={model.converged}"
    )
    return 0 if model.converged else 1


def cmd_predict(args: argparse.Namespace) -> int:
    model = BlockModel.load(args.model)
    if args.vec:
        vecs = [args.vec]
    else:
        vecs = [line.strip() for line in sys.stdin if line.strip()]
    for text in vecs:
        vec = [float(v) for v in text.split(",")]
        print(blocks.predict(model, vec))
    return 0


def cmd_calibrate_map(args: argparse.Namespace) -> int:
    pairs = mapping.pairs_from_csv(args.pairs)
    amap = mapping.fit_mapping(pairs)
    amap.save(args.out)
    print(f"r_squared={amap.r_squared:.4f} rmse_cm={amap.rmse_cm:.3f}")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    log = hri.SessionLog.from_jsonl(args.log)
    print(json.dumps(hri.session_metrics(log).to_json(), indent=2))
    return 0


def cmd_run_pointing(args: argparse.Namespace) -> int:
    seed = _seed(args.seed)
    grid = ScreenGrid(*_parse_display(args.display))
    if args.replay:
        from .harness import run_pointing_replay

        log = run_pointing_replay(gaze.read_replay(args.replay), grid=grid)
    elif args.latency_ms is not None:
        log = run_pointing_scripted(args.trials, args.latency_ms, seed=seed, grid=grid)
    else:
        log = run_pointing_synthetic(args.trials, seed=seed, grid=grid)
    if args.out:
        log.to_jsonl(args.out)
    print(json.dumps(hri.session_metrics(log).to_json(), indent=2))
    return 0


def cmd_run_reachability(args: argparse.Namespace) -> int:
    geometry = ArmGeometry.load(args.geometry) if args.geometry else None
    log, summary, task = run_reachability(seed=_seed(args.seed), geometry=geometry)
    if args.out:
        log.to_jsonl(args.out)
    result = summary.to_json()
    result["target_cm"] = list(task.target_cm)
    result["reached"] = len(log.of_kind("task_done")) == 1
    print(json.dumps(result, indent=2))
    return 0 if result["reached"] else 1


def cmd_serve(args: argparse.Namespace) -> int:
    from .gateway import Gateway, serve
    from .harness import build_scene

    geometry = ArmGeometry.load(args.geometry) if args.geometry else None
    display = display_bounds(*_parse_display(args.display))
    scene = build_scene(geometry=geometry, display=display)
    if args.map:
        scene.amap = mapping.AffineMap.load(args.map)
    if args.backend == "serial":
        print(
            "serial backend: connect the device and mirror commands via "
            "gazearm's SerialBackend; the gateway itself always simulates.",
            file=sys.stderr,
        )
    gw = Gateway(scene=scene)
    if args.model:
        BlockModel.load(args.model)  # validated; prediction is client-driven
    serve(port=args.port, host=args.host, gateway=gw)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gazearm")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", help="collect a replay into a trained block model")
    c.add_argument("--replay", required=True)
    c.add_argument("--out", default="model.json")
    c.add_argument("--set-out", help="also write the labeled calibration CSV")
    c.add_argument("--display", default="1920x1080")
    c.add_argument("--dwell-ms", type=float, default=2000.0)
    c.add_argument("--transition-ms", type=float, default=500.0)
    c.add_argument("--settle-ms", type=float, default=300.0)
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_calibrate)

    t = sub.add_parser("train", help="train a block model from a calibration CSV")
    t.add_argument("--set", required=True)
    t.add_argument("--out", default="model.json")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="predict block indices for gaze vectors")
    pr.add_argument("--model", required=True)
    pr.add_argument("--vec", help="comma-separated 6-vector; default reads stdin")
    pr.set_defaults(func=cmd_predict)

    cm = sub.add_parser("calibrate-map", help="fit the display-to-workspace affine")
    cm.add_argument("--pairs", required=True)
    cm.add_argument("--out", default="map.json")
    cm.set_defaults(func=cmd_calibrate_map)

    m = sub.add_parser("metrics", help="summarize a session log")
    m.add_argument("--log", required=True)
    m.set_defaults(func=cmd_metrics)

    rp = sub.add_parser("run-pointing", help="run the pointing-task harness")
    rp.add_argument("--replay", help="gaze replay file")
    rp.add_argument("--synthetic", action="store_true", help="synthetic gaze (default)")
    rp.add_argument("--latency-ms", type=float, help="scripted selector latency")
    rp.add_argument("--trials", type=int, default=20)
    rp.add_argument("--seed", type=int)
    rp.add_argument("--display", default="1920x1080")
    rp.add_argument("--out", help="write the session log (JSON lines)")
    rp.set_defaults(func=cmd_run_pointing)

    rr = sub.add_parser("run-reachability", help="run the four-way reachability loop")
    rr.add_argument("--seed", type=int)
    rr.add_argument("--geometry", help="arm geometry JSON")
    rr.add_argument("--out", help="write the session log (JSON lines)")
    rr.set_defaults(func=cmd_run_reachability)

    s = sub.add_parser("serve", help="serve the websocket gateway")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--backend", choices=("sim", "serial"), default="sim")
    s.add_argument("--geometry", help="arm geometry JSON")
    s.add_argument("--map", help="fitted display-to-workspace map JSON")
    s.add_argument("--model", help="trained block model JSON")
    s.add_argument("--display", default="1920x1080")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
