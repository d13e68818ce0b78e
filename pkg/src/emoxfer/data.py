"""Emotion labels, corpus manifests and stratified fold splitting.

A manifest is UTF-8 JSON Lines, one record per audio file with keys
"path", "label" and "domain".  Paths may be relative to the manifest file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import load_wav, preprocess
from .rng import Rng

EMOTIONS = ("anger", "disgust", "fear", "happiness", "sadness", "surprise")
EMOTION_INDEX = {name: i for i, name in enumerate(EMOTIONS)}


class ManifestError(ValueError):
    """Manifest file is malformed or references bad data."""


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    label: str
    domain: str

    @property
    def label_index(self) -> int:
        return EMOTION_INDEX[self.label]


@dataclass
class Manifest:
    records: list

    def __len__(self) -> int:
        return len(self.records)

    def labels(self) -> np.ndarray:
        return np.array([r.label_index for r in self.records], dtype=np.int64)

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        records = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            missing = {"path", "label", "domain"} - set(obj)
            if missing:
                raise ManifestError(f"{path}:{lineno}: missing keys {sorted(missing)}")
            if obj["label"] not in EMOTION_INDEX:
                raise ManifestError(f"{path}:{lineno}: unknown label {obj['label']!r}")
            if not obj["domain"]:
                raise ManifestError(f"{path}:{lineno}: empty domain")
            rec_path = Path(obj["path"])
            if not rec_path.is_absolute():
                rec_path = path.parent / rec_path
            if not rec_path.exists():
                raise ManifestError(f"{path}:{lineno}: audio file not found: {rec_path}")
            records.append(ManifestRecord(str(rec_path), obj["label"], obj["domain"]))
        if not records:
            raise ManifestError(f"{path}: empty manifest")
        return cls(records)

    def save(self, path, relative_to=None) -> None:
        path = Path(path)
        lines = []
        for r in self.records:
            p = r.path
            if relative_to is not None:
                p = str(Path(p).relative_to(relative_to))
            lines.append(json.dumps({"path": p, "label": r.label, "domain": r.domain}))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_waveforms(manifest: Manifest, input_length: int, working_rate: int = 16000,
                   crop: str = "center") -> tuple:
    """Decode and preprocess every record; returns (X (N, L), y (N,))."""
    n = len(manifest)
    x = np.empty((n, input_length))
    for i, rec in enumerate(manifest.records):
        samples, rate = load_wav(rec.path)
        x[i] = preprocess(samples, rate, input_length, working_rate, crop)
    return x, manifest.labels()


def split_folds(manifest: Manifest, k: int, seed: int) -> list:
    """Stratified k-fold split; returns k disjoint index lists.

    Within each label stratum the (shuffled) samples are dealt round-robin,
    with the dealing cursor carried across strata so overall fold sizes also
    differ by at most one.
    """
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if k > len(manifest):
        raise ValueError(f"cannot split {len(manifest)} samples into {k} folds")
    labels = manifest.labels()
    folds = [[] for _ in range(k)]
    rng = Rng(seed).spawn("folds")
    cursor = 0
    for label in sorted(set(labels.tolist())):
        stratum = np.flatnonzero(labels == label)
        order = rng.permutation(stratum.size)
        for idx in stratum[order]:
            folds[cursor % k].append(int(idx))
            cursor += 1
    for fold in folds:
        if not fold:
            raise ValueError("a fold came out empty; use fewer folds")
        fold.sort()
    return folds
