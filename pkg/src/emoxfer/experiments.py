"""Experiment orchestration: TT baselines, transfer matrix, domain ablation.

A transfer cell is (scenario, approach, target).  Per cross-validation fold
the flow is: pre-train on the source-domain union (scenario S1 additionally
includes the target's training folds, S2 never sees target data), apply the
approach's freeze/reinit mask, fine-tune on the target training folds (A1
skips fine-tuning entirely), and evaluate on the held-out target fold.

Pre-training is approach-independent, so checkpoints are cached by
(scenario, source set, fold for S1, seed, config hash) and shared across
approaches.  Every random draw comes from a stream labeled by the cell, so
one master seed reproduces the whole table.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Manifest, load_waveforms, split_folds
from .network import LayerMask, NetworkModel, apply_mask, load_weights, save_weights
from .rng import Rng
from .stats import (ConfusionMatrix, MARK_FLAT, TTestResult, classify_significance,
                    gain, paired_t_test, uar)
from .train import fit

SCENARIOS = ("S1", "S2")
APPROACHES = ("A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8")

# Freeze/reinit derivation table.  "rest" for A6-A8 means every layer that
# is not frozen.  A1 performs no fine-tuning at all.
_FULL = ("conv1", "conv2", "lstm", "fc1", "fc2", "out")
APPROACH_MASKS = {
    "A1": dict(frozen=_FULL, reinit=(), finetune=False),
    "A2": dict(frozen=(), reinit=(), finetune=True),
    "A3": dict(frozen=("conv1",), reinit=(), finetune=True),
    "A4": dict(frozen=("conv1", "conv2"), reinit=(), finetune=True),
    "A5": dict(frozen=("conv1", "conv2", "lstm"), reinit=(), finetune=True),
    "A6": dict(frozen=("conv1",), reinit=("conv2", "lstm", "fc1", "fc2", "out"), finetune=True),
    "A7": dict(frozen=("conv1", "conv2"), reinit=("lstm", "fc1", "fc2", "out"), finetune=True),
    "A8": dict(frozen=("conv1", "conv2", "lstm"), reinit=("fc1", "fc2", "out"), finetune=True),
}


def approach_mask(approach: str, layer_names) -> LayerMask:
    """LayerMask for an approach, restricted to the layers the model has."""
    if approach not in APPROACH_MASKS:
        raise KeyError(f"unknown approach {approach!r}")
    row = APPROACH_MASKS[approach]
    names = set(layer_names)
    return LayerMask(frozen=frozenset(row["frozen"]) & names,
                     reinit=frozenset(row["reinit"]) & names)


@dataclass(frozen=True)
class TransferPlan:
    scenario: str
    approach: str
    target: str
    sources: tuple
    pretrain_epochs: int
    finetune_epochs: int
    seed: int

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.approach not in APPROACH_MASKS:
            raise ValueError(f"unknown approach {self.approach!r}")
        if self.target in self.sources:
            raise ValueError(f"target {self.target!r} cannot be one of its sources")
        if not self.sources:
            raise ValueError("need at least one source domain")

    @property
    def cell(self) -> str:
        return f"{self.scenario}-{self.approach}"


@dataclass
class RunRecord:
    """One executed training run and its evaluation."""
    kind: str            # "tt" or "transfer"
    target: str
    fold_uars: list
    mean_uar: float
    weights_path: str = ""
    wall_time: float = 0.0
    config_hash: str = ""
    plan: TransferPlan | None = None


@dataclass
class EvalReport:
    scenario: str
    approach: str
    target: str
    fold_uars: list
    mean_uar: float
    baseline_fold_uars: list
    baseline_mean_uar: float
    gain: float
    t: float
    p: float
    mark: str

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "approach": self.approach,
            "target": self.target,
            "fold_uars": [round(u, 10) for u in self.fold_uars],
            "mean_uar": round(self.mean_uar, 10),
            "baseline_fold_uars": [round(u, 10) for u in self.baseline_fold_uars],
            "baseline_mean_uar": round(self.baseline_mean_uar, 10),
            "gain": round(self.gain, 10),
            "t": round(self.t, 10) if np.isfinite(self.t) else ("inf" if self.t > 0 else "-inf"),
            "p": round(self.p, 10),
            "mark": self.mark,
        }


class ExperimentContext:
    """Loaded corpora plus run directories and the checkpoint cache."""

    def __init__(self, config, out_dir):
        self.config = config
        self.out_dir = Path(out_dir)
        self.cache_dir = self.out_dir / "cache"
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        net = config.network
        self._domains = {}
        for domain, manifest_path in config.manifests.items():
            manifest = Manifest.load(manifest_path)
            x, y = load_waveforms(manifest, net.input_length,
                                  config.working_rate, config.pad_mode)
            self._domains[domain] = (manifest, x, y)

    def domain(self, name: str):
        if name not in self._domains:
            raise KeyError(f"domain {name!r} has no manifest in the config")
        return self._domains[name]

    def folds(self, domain: str) -> list:
        manifest, _, _ = self.domain(domain)
        return split_folds(manifest, self.config.folds, self.config.seed)

    def source_union(self, sources) -> tuple:
        xs = [self.domain(d)[1] for d in sources]
        ys = [self.domain(d)[2] for d in sources]
        return np.concatenate(xs), np.concatenate(ys)

    def master_rng(self) -> Rng:
        return Rng(self.config.seed)


def _evaluate(model: NetworkModel, x, y, num_classes: int) -> float:
    cm = ConfusionMatrix.from_predictions(y, model.predict(x), num_classes)
    return uar(cm)


def run_tt(target: str, ctx: ExperimentContext) -> RunRecord:
    """Training-on-target baseline: k-fold CV using target data only."""
    cfg = ctx.config
    manifest, x, y = ctx.domain(target)
    folds = ctx.folds(target)
    started = time.time()
    fold_uars = []
    weights_path = ctx.out_dir / "runs" / f"tt-{target}" / "weights.mdnw"
    weights_path.parent.mkdir(parents=True, exist_ok=True)
    for f, test_idx in enumerate(folds):
        train_idx = sorted(set(range(len(manifest))) - set(test_idx))
        rng = ctx.master_rng().spawn(f"tt/{target}/fold{f}")
        model = NetworkModel(cfg.network, rng.spawn("init"))
        fit(model, x[train_idx], y[train_idx], cfg.tt_epochs, cfg.batch_size,
            rng.spawn("train"), cfg.rho, cfg.eps)
        fold_uars.append(_evaluate(model, x[np.array(test_idx)], y[np.array(test_idx)],
                                   cfg.network.num_classes))
        if f == len(folds) - 1:
            weights_path.write_bytes(save_weights(model))
    return RunRecord(kind="tt", target=target, fold_uars=fold_uars,
                     mean_uar=float(np.mean(fold_uars)), weights_path=str(weights_path),
                     wall_time=time.time() - started,
                     config_hash=cfg.network.config_hash().hex())


def _pretrain_key(ctx, scenario, sources, fold) -> str:
    blob = json.dumps({
        "scenario": scenario,
        "sources": sorted(sources),
        "fold": fold if scenario == "S1" else None,
        "seed": ctx.config.seed,
        "pretrain_epochs": ctx.config.pretrain_epochs,
        "config": ctx.config.network.to_dict(),
    }, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def pretrain_checkpoint(ctx: ExperimentContext, scenario: str, target: str,
                        sources, fold: int) -> Path:
    """Train (or fetch from cache) the pre-trained weights for one cell fold.

    S2 checkpoints do not depend on the fold: target data never enter
    pre-training, so all folds and approaches share one file.
    """
    cfg = ctx.config
    key = _pretrain_key(ctx, scenario, sources, fold)
    path = ctx.cache_dir / f"pretrain-{key}.mdnw"
    if path.exists():
        return path
    x_src, y_src = ctx.source_union(sources)
    if scenario == "S1":
        manifest, x_t, y_t = ctx.domain(target)
        folds = ctx.folds(target)
        train_idx = sorted(set(range(len(manifest))) - set(folds[fold]))
        x_src = np.concatenate([x_src, x_t[train_idx]])
        y_src = np.concatenate([y_src, y_t[train_idx]])
        rng = ctx.master_rng().spawn(f"pretrain/{scenario}/{'+'.join(sorted(sources))}/fold{fold}")
    else:
        rng = ctx.master_rng().spawn(f"pretrain/{scenario}/{'+'.join(sorted(sources))}")
    model = NetworkModel(cfg.network, rng.spawn("init"))
    fit(model, x_src, y_src, cfg.pretrain_epochs, cfg.batch_size,
        rng.spawn("train"), cfg.rho, cfg.eps)
    path.write_bytes(save_weights(model))
    return path


def run_transfer(plan: TransferPlan, ctx: ExperimentContext,
                 baseline: RunRecord, alpha: float | None = None,
                 run_dir: Path | None = None) -> EvalReport:
    """Execute one (scenario, approach) cell against its TT baseline."""
    cfg = ctx.config
    if alpha is None:
        alpha = cfg.alpha
    manifest, x, y = ctx.domain(plan.target)
    folds = ctx.folds(plan.target)
    mask_spec = APPROACH_MASKS[plan.approach]
    fold_uars = []
    last_weights = None
    for f, test_idx in enumerate(folds):
        ckpt = pretrain_checkpoint(ctx, plan.scenario, plan.target, plan.sources, f)
        model = load_weights(ckpt.read_bytes(), cfg.network)
        rng = ctx.master_rng().spawn(f"transfer/{plan.cell}/{plan.target}/fold{f}")
        apply_mask(model, approach_mask(plan.approach, model.layer_names()), rng.spawn("mask"))
        if mask_spec["finetune"]:
            train_idx = sorted(set(range(len(manifest))) - set(test_idx))
            fit(model, x[train_idx], y[train_idx], plan.finetune_epochs, cfg.batch_size,
                rng.spawn("finetune"), cfg.rho, cfg.eps)
        fold_uars.append(_evaluate(model, x[np.array(test_idx)], y[np.array(test_idx)],
                                   cfg.network.num_classes))
        last_weights = save_weights(model)
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "weights.mdnw").write_bytes(last_weights)
    mean_uar = float(np.mean(fold_uars))
    test = paired_t_test(fold_uars, baseline.fold_uars)
    return EvalReport(
        scenario=plan.scenario, approach=plan.approach, target=plan.target,
        fold_uars=fold_uars, mean_uar=mean_uar,
        baseline_fold_uars=list(baseline.fold_uars),
        baseline_mean_uar=baseline.mean_uar,
        gain=gain(baseline.mean_uar, mean_uar),
        t=test.t, p=test.p,
        mark=classify_significance(test.p, test.mean_diff, alpha),
    )


def _materialize_checkpoints(ctx: ExperimentContext, target: str, sources,
                             scenarios) -> None:
    """Pre-train every checkpoint the cells will need, sequentially.

    Running this up front keeps cache writes out of the parallel phase.
    """
    for scenario in scenarios:
        folds = range(ctx.config.folds) if scenario == "S1" else (0,)
        for f in folds:
            pretrain_checkpoint(ctx, scenario, target, sources, f)


def run_matrix(target: str, ctx: ExperimentContext, jobs: int = 1) -> dict:
    """All configured scenarios x approaches for one target (Table-3 style)."""
    cfg = ctx.config
    baseline = run_tt(target, ctx)
    _materialize_checkpoints(ctx, target, tuple(cfg.sources), cfg.scenarios)
    plans = []
    for scenario in cfg.scenarios:
        for approach in cfg.approaches:
            plans.append(TransferPlan(scenario=scenario, approach=approach, target=target,
                                      sources=tuple(cfg.sources), seed=cfg.seed,
                                      pretrain_epochs=cfg.pretrain_epochs,
                                      finetune_epochs=cfg.finetune_epochs))

    def _cell(plan):
        run_dir = ctx.out_dir / "runs" / f"matrix-{target}" / plan.cell
        return plan.cell, run_transfer(plan, ctx, baseline, run_dir=run_dir)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = dict(pool.map(_cell, plans))
    else:
        cells = dict(_cell(plan) for plan in plans)
    document = {
        "experiment": "matrix",
        "target": target,
        "sources": sorted(cfg.sources),
        "seed": cfg.seed,
        "config_hash": cfg.network.config_hash().hex(),
        "baseline": {"fold_uars": [round(u, 10) for u in baseline.fold_uars],
                     "mean_uar": round(baseline.mean_uar, 10)},
        "cells": {name: report.to_dict() for name, report in sorted(cells.items())},
    }
    _write_json(ctx.out_dir / "matrix.json", document)
    return cells


def run_ablation(target: str, ctx: ExperimentContext, jobs: int = 1) -> dict:
    """Leave-one-source-out ablation (Table-4 style).

    Rows are "All" plus one row per excluded source; marks compare each
    exclusion row against the "All" row per (scenario, approach) column.
    """
    cfg = ctx.config
    sources = sorted(cfg.sources)
    if len(sources) < 2:
        raise ValueError("ablation needs at least two source domains")
    baseline = run_tt(target, ctx)
    approaches = cfg.ablation_approaches
    row_names = ["All"] + [f"-{d}" for d in sources]
    row_sources = {
        row: tuple(sources) if row == "All" else tuple(d for d in sources if d != row[1:])
        for row in row_names
    }
    for row in row_names:
        _materialize_checkpoints(ctx, target, row_sources[row], cfg.scenarios)

    work = []
    for row in row_names:
        for scenario in cfg.scenarios:
            for approach in approaches:
                work.append((row, TransferPlan(
                    scenario=scenario, approach=approach, target=target,
                    sources=row_sources[row], seed=cfg.seed,
                    pretrain_epochs=cfg.pretrain_epochs,
                    finetune_epochs=cfg.finetune_epochs)))

    def _cell(item):
        row, plan = item
        return row, plan.cell, run_transfer(plan, ctx, baseline)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell, work))
    else:
        results = [_cell(item) for item in work]
    rows = {row: {} for row in row_names}
    for row, cell_name, report in results:
        rows[row][cell_name] = report

    table = {}
    for row in row_names:
        table[row] = {}
        for cell_name, report in sorted(rows[row].items()):
            ref = rows["All"][cell_name]
            if row == "All":
                mark = MARK_FLAT
                test = TTestResult(t=0.0, df=len(report.fold_uars) - 1, p=1.0,
                                   mean_diff=0.0, degenerate=True)
            else:
                test = paired_t_test(report.fold_uars, ref.fold_uars)
                mark = classify_significance(test.p, test.mean_diff, cfg.alpha)
            table[row][cell_name] = {
                "uar": round(report.mean_uar, 10),
                "fold_uars": [round(u, 10) for u in report.fold_uars],
                "p_vs_all": round(test.p, 10),
                "mark": mark,
            }
    document = {
        "experiment": "ablation",
        "target": target,
        "sources": sources,
        "seed": cfg.seed,
        "config_hash": cfg.network.config_hash().hex(),
        "baseline_mean_uar": round(baseline.mean_uar, 10),
        "rows": table,
    }
    _write_json(ctx.out_dir / "ablation.json", document)
    return rows


def _write_json(path: Path, document: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
