"""Command-line entry point.

    emoxfer synth  --config cfg.json [--out DIR]
    emoxfer run    {tt|transfer|matrix|ablate|gradcheck|eval} --config cfg.json
                   [--jobs N] [--out DIR] [--seed N] [--style markdown|text]
                   [--scenario S] [--approach A] [--weights W] [--manifest M]
    emoxfer render --report report.json [--style markdown|text]

Exit codes: 0 success, 1 runtime/experiment failure, 2 usage or config error.
The output directory falls back to $EMOXFER_OUT, then to "<config dir>/out".
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .report import ReportSchemaError, render_report

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emoxfer",
                                     description="Multi-domain emotion network experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate the synthetic corpus")
    synth.add_argument("--config", required=True)
    synth.add_argument("--out", default=None)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("subcommand",
                     choices=["tt", "transfer", "matrix", "ablate", "gradcheck", "eval"])
    run.add_argument("--config", required=True)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", default=None)
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--style", choices=["markdown", "text"], default="text")
    run.add_argument("--scenario", default=None, help="transfer: scenario (S1 or S2)")
    run.add_argument("--approach", default=None, help="transfer: approach (A1..A8)")
    run.add_argument("--weights", default=None, help="eval: weight file")
    run.add_argument("--manifest", default=None, help="eval: manifest to evaluate")

    render = sub.add_parser("render", help="render a report file as a table")
    render.add_argument("--report", required=True)
    render.add_argument("--style", choices=["markdown", "text"], default="text")
    return parser


def _out_dir(args, config_path: Path) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get("EMOXFER_OUT")
    if env:
        return Path(env)
    return config_path.parent / "out"


def _cmd_synth(args) -> int:
    from .synth import synth_generate

    cfg = load_config(args.config, require_data=False)
    config_path = Path(args.config)
    out_root = Path(args.out) if args.out else (
        Path(os.environ["EMOXFER_OUT"]) if os.environ.get("EMOXFER_OUT")
        else config_path.parent)
    out_dir = out_root / cfg.synth.out_dir
    manifests = synth_generate(cfg.synth.specs(cfg.seed), out_dir)
    for domain in sorted(manifests):
        print(manifests[domain])
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config, require_data=args.subcommand not in ("gradcheck",))
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = _out_dir(args, Path(args.config))

    if args.subcommand == "gradcheck":
        return _cmd_gradcheck()
    if args.subcommand == "eval":
        return _cmd_eval(args, cfg)

    from .experiments import APPROACHES, ExperimentContext, TransferPlan, run_tt

    ctx = ExperimentContext(cfg, out_dir)
    if args.subcommand == "tt":
        record = run_tt(cfg.target, ctx)
        document = {"experiment": "tt", "target": cfg.target,
                    "fold_uars": [round(u, 10) for u in record.fold_uars],
                    "mean_uar": round(record.mean_uar, 10),
                    "seed": cfg.seed, "config_hash": record.config_hash}
        path = out_dir / "tt.json"
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(render_report(document, args.style), end="")
        print(f"report: {path}")
        return EXIT_OK

    if args.subcommand == "transfer":
        scenario = args.scenario or cfg.scenarios[0]
        approach = args.approach or cfg.approaches[0]
        if approach not in APPROACHES:
            raise ConfigError(f"unknown approach {approach!r}")
        from .experiments import run_transfer

        plan = TransferPlan(scenario=scenario, approach=approach, target=cfg.target,
                            sources=tuple(cfg.sources), seed=cfg.seed,
                            pretrain_epochs=cfg.pretrain_epochs,
                            finetune_epochs=cfg.finetune_epochs)
        baseline = run_tt(cfg.target, ctx)
        report = run_transfer(plan, ctx, baseline,
                              run_dir=out_dir / "runs" / f"transfer-{plan.cell}")
        document = {"experiment": "transfer", "target": cfg.target,
                    "seed": cfg.seed,
                    "baseline": {"fold_uars": [round(u, 10) for u in baseline.fold_uars],
                                 "mean_uar": round(baseline.mean_uar, 10)},
                    "cells": {plan.cell: report.to_dict()}}
        path = out_dir / "transfer.json"
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(render_report(document, args.style), end="")
        print(f"report: {path}")
        return EXIT_OK

    if args.subcommand == "matrix":
        from .experiments import run_matrix

        run_matrix(cfg.target, ctx, jobs=args.jobs)
        path = out_dir / "matrix.json"
        document = json.loads(path.read_text(encoding="utf-8"))
        print(render_report(document, args.style), end="")
        print(f"report: {path}")
        return EXIT_OK

    if args.subcommand == "ablate":
        from .experiments import run_ablation

        run_ablation(cfg.target, ctx, jobs=args.jobs)
        path = out_dir / "ablation.json"
        document = json.loads(path.read_text(encoding="utf-8"))
        print(render_report(document, args.style), end="")
        print(f"report: {path}")
        return EXIT_OK

    raise ConfigError(f"unknown subcommand {args.subcommand!r}")


def _cmd_gradcheck() -> int:
    from .checks import run_layer_checks

    failures = 0
    for name, report in run_layer_checks().items():
        status = "PASS" if report.passed else "FAIL"
        if not report.passed:
            failures += 1
        print(f"{status}  {name}: max rel err {report.max_rel_error:.3e} (tol {report.tol:.1e})")
    return EXIT_RUNTIME if failures else EXIT_OK


def _cmd_eval(args, cfg) -> int:
    if not args.weights or not args.manifest:
        raise ConfigError("eval needs --weights and --manifest")
    from .data import Manifest, load_waveforms
    from .network import load_weights
    from .stats import ConfusionMatrix, uar

    weights_path = Path(args.weights)
    if not weights_path.exists():
        raise ConfigError(f"weight file not found: {weights_path}")
    model = load_weights(weights_path.read_bytes(), cfg.network)
    manifest = Manifest.load(args.manifest)
    x, y = load_waveforms(manifest, model.config.input_length,
                          cfg.working_rate, cfg.pad_mode)
    score = uar(ConfusionMatrix.from_predictions(y, model.predict(x),
                                                 model.config.num_classes))
    print(f"UAR {score:.3f}")
    return EXIT_OK


def _cmd_render(args) -> int:
    path = Path(args.report)
    if not path.exists():
        raise ConfigError(f"report file not found: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    print(render_report(document, args.style), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "render":
            return _cmd_render(args)
        return EXIT_CONFIG
    except (ConfigError, ReportSchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # experiment/runtime failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
