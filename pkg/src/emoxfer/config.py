"""Experiment configuration: one JSON document drives everything.

Layout (all sections optional except data.manifests for run commands):

    {
      "network":   { ... NetworkConfig fields ... },
      "optimizer": {"rho": 0.95, "eps": 1e-6},
      "train":     {"batch_size": 32, "epochs": 30, "seed": 12345},
      "data":      {"working_rate": 16000, "pad_mode": "center",
                    "manifests": {"d0": "corpus/d0.jsonl", ...}},
      "experiment": {"target": "d0", "sources": ["d1", ...],
                     "scenarios": ["S1", "S2"], "approaches": ["A1", ..., "A8"],
                     "ablation_approaches": ["A1", "A2", "A3", "A4"],
                     "folds": 5, "alpha": 0.05,
                     "pretrain_epochs": 30, "finetune_epochs": 30},
      "synth":     {"out_dir": "corpus", "seed": ..., "samples_per_emotion": 20,
                    "clip_samples": 2000, "sample_rate": 16000,
                    "domains": [ ...explicit specs, else the stock corpus... ]}
    }

The master seed lives at train.seed; every subsystem derives its stream from
it by labeled hashing.  Relative paths resolve against the config file's
directory.  The config hash (canonical JSON, SHA-256) keys checkpoint caching.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .experiments import APPROACHES, SCENARIOS
from .network import NetworkConfig
from .synth import EmotionPrototype, SynthDomainSpec, make_default_specs


class ConfigError(ValueError):
    """Configuration file is invalid or references missing data."""


@dataclass
class SynthSection:
    out_dir: str = "corpus"
    seed: int | None = None  # defaults to the master seed
    samples_per_emotion: int = 20
    clip_samples: int = 2000
    sample_rate: int = 16000
    domains: list = field(default_factory=list)  # explicit SynthDomainSpec list

    def specs(self, master_seed: int) -> list:
        seed = self.seed if self.seed is not None else master_seed
        if not self.domains:
            return make_default_specs(seed, self.samples_per_emotion,
                                      self.clip_samples, self.sample_rate)
        return self.domains


@dataclass
class ExperimentConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    rho: float = 0.95
    eps: float = 1e-6
    batch_size: int = 32
    tt_epochs: int = 30
    seed: int = 12345
    working_rate: int = 16000
    pad_mode: str = "center"
    manifests: dict = field(default_factory=dict)  # domain -> absolute path
    target: str = ""
    sources: list = field(default_factory=list)
    scenarios: list = field(default_factory=lambda: list(SCENARIOS))
    approaches: list = field(default_factory=lambda: list(APPROACHES))
    ablation_approaches: list = field(default_factory=lambda: ["A1", "A2", "A3", "A4"])
    folds: int = 5
    alpha: float = 0.05
    pretrain_epochs: int = 30
    finetune_epochs: int = 30
    synth: SynthSection = field(default_factory=SynthSection)
    raw: dict = field(default_factory=dict)

    def validate(self, require_data: bool = True) -> None:
        try:
            self.network.resolved().validate()
        except ValueError as exc:
            raise ConfigError(f"network: {exc}") from exc
        if not 0.0 < self.rho < 1.0 or self.eps <= 0:
            raise ConfigError("optimizer: rho must lie in (0,1) and eps must be positive")
        if min(self.batch_size, self.tt_epochs, self.pretrain_epochs, self.finetune_epochs) < 1:
            raise ConfigError("train: batch size and epoch counts must be positive")
        if self.pad_mode not in ("head", "center", "tail"):
            raise ConfigError(f"data: unknown pad mode {self.pad_mode!r}")
        if self.folds < 2:
            raise ConfigError("experiment: need at least 2 folds")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("experiment: alpha must lie in (0, 1)")
        bad = set(self.scenarios) - set(SCENARIOS)
        if bad or not self.scenarios:
            raise ConfigError(f"experiment: scenarios must be a nonempty subset of {SCENARIOS}")
        for name, group in (("approaches", self.approaches),
                            ("ablation_approaches", self.ablation_approaches)):
            bad = set(group) - set(APPROACHES)
            if bad or not group:
                raise ConfigError(f"experiment: {name} must be a nonempty subset of {APPROACHES}")
        if require_data:
            if not self.manifests:
                raise ConfigError("data: no manifests configured")
            for domain, path in self.manifests.items():
                if not Path(path).exists():
                    raise ConfigError(f"data: manifest for {domain!r} not found: {path}")
            if not self.target:
                raise ConfigError("experiment: no target domain set")
            if self.target not in self.manifests:
                raise ConfigError(f"experiment: target {self.target!r} has no manifest")
            missing = [s for s in self.sources if s not in self.manifests]
            if missing:
                raise ConfigError(f"experiment: sources without manifests: {missing}")
            if self.target in self.sources:
                raise ConfigError("experiment: target cannot be one of the sources")

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _parse_synth(section: dict) -> SynthSection:
    out = SynthSection(
        out_dir=section.get("out_dir", "corpus"),
        seed=section.get("seed"),
        samples_per_emotion=section.get("samples_per_emotion", 20),
        clip_samples=section.get("clip_samples", 2000),
        sample_rate=section.get("sample_rate", 16000),
    )
    for dom in section.get("domains", []):
        try:
            protos = {
                emotion: EmotionPrototype(
                    carrier_hz=float(p["carrier_hz"]),
                    am_hz=float(p["am_hz"]),
                    envelope=p.get("envelope", "flat"),
                )
                for emotion, p in dom["prototypes"].items()
            }
            spec = SynthDomainSpec(
                domain=dom["domain"],
                prototypes=protos,
                gain=float(dom.get("gain", 1.0)),
                noise_std=float(dom.get("noise_std", 0.05)),
                tilt=float(dom.get("tilt", 0.0)),
                samples_per_emotion=int(dom.get("samples_per_emotion", out.samples_per_emotion)),
                seed=int(dom.get("seed", 0)),
                clip_samples=int(dom.get("clip_samples", out.clip_samples)),
                sample_rate=int(dom.get("sample_rate", out.sample_rate)),
            )
            spec.validate()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"synth: bad domain spec: {exc}") from exc
        out.domains.append(spec)
    return out


def load_config(path, require_data: bool = True) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError on any problem."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    base = path.parent

    known = {"network", "optimizer", "train", "data", "experiment", "synth"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")

    try:
        network = NetworkConfig.from_dict(raw.get("network", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"network: {exc}") from exc
    optimizer = raw.get("optimizer", {})
    train = raw.get("train", {})
    data = raw.get("data", {})
    experiment = raw.get("experiment", {})

    manifests = {}
    for domain, rel in data.get("manifests", {}).items():
        p = Path(rel)
        manifests[domain] = str(p if p.is_absolute() else base / p)

    cfg = ExperimentConfig(
        network=network,
        rho=optimizer.get("rho", 0.95),
        eps=optimizer.get("eps", 1e-6),
        batch_size=train.get("batch_size", 32),
        tt_epochs=train.get("epochs", 30),
        seed=train.get("seed", 12345),
        working_rate=data.get("working_rate", 16000),
        pad_mode=data.get("pad_mode", "center"),
        manifests=manifests,
        target=experiment.get("target", ""),
        sources=list(experiment.get("sources", [])),
        scenarios=list(experiment.get("scenarios", SCENARIOS)),
        approaches=list(experiment.get("approaches", APPROACHES)),
        ablation_approaches=list(experiment.get("ablation_approaches", ["A1", "A2", "A3", "A4"])),
        folds=experiment.get("folds", 5),
        alpha=experiment.get("alpha", 0.05),
        pretrain_epochs=experiment.get("pretrain_epochs", 30),
        finetune_epochs=experiment.get("finetune_epochs", 30),
        synth=_parse_synth(raw.get("synth", {})),
        raw=raw,
    )
    cfg.validate(require_data=require_data)
    return cfg
