"""Synthetic multi-domain emotion corpus generator.

Each emotion has a prototype tone: an amplitude-modulated carrier under an
envelope, with per-sample jitter of carrier frequency, AM rate and phases.
A domain applies its transform (gain, spectral tilt, additive noise) to every
sample, the way recording conditions differ between corpora.  Domains may
also use different prototype parameters, which is what makes their emotion
signatures discrepant.  Everything is a pure function of the spec and its
seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import write_wav
from .data import EMOTIONS, Manifest, ManifestRecord
from .rng import Rng

AM_DEPTH = 0.6
CARRIER_JITTER = 0.13  # +/-13% per sample; adjacent default carriers overlap
BASE_AMPLITUDE = 0.45  # pre-transform peak, leaves headroom for gain

ENVELOPES = ("flat", "attack", "decay")


@dataclass(frozen=True)
class EmotionPrototype:
    carrier_hz: float
    am_hz: float
    envelope: str = "flat"


@dataclass(frozen=True)
class SynthDomainSpec:
    domain: str
    prototypes: dict  # emotion name -> EmotionPrototype
    gain: float = 1.0
    noise_std: float = 0.05
    tilt: float = 0.0
    samples_per_emotion: int = 20
    seed: int = 0
    clip_samples: int = 2000
    sample_rate: int = 16000

    def validate(self) -> None:
        if not self.domain:
            raise ValueError("domain id must be nonempty")
        if set(self.prototypes) != set(EMOTIONS):
            raise ValueError(f"{self.domain}: prototypes must cover exactly {EMOTIONS}")
        nyquist = self.sample_rate / 2.0
        for emotion, proto in self.prototypes.items():
            if not 0.0 < proto.carrier_hz < nyquist:
                raise ValueError(
                    f"{self.domain}/{emotion}: carrier {proto.carrier_hz} Hz outside (0, {nyquist})")
            if not 0.0 < proto.am_hz < nyquist:
                raise ValueError(
                    f"{self.domain}/{emotion}: AM rate {proto.am_hz} Hz outside (0, {nyquist})")
            if proto.envelope not in ENVELOPES:
                raise ValueError(f"{self.domain}/{emotion}: unknown envelope {proto.envelope!r}")
        if self.noise_std < 0:
            raise ValueError(f"{self.domain}: noise std must be nonnegative")
        if self.samples_per_emotion < 1 or self.clip_samples < 8 or self.sample_rate < 1:
            raise ValueError(f"{self.domain}: sizes must be positive")


def _envelope(kind: str, n: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)
    if kind == "attack":
        return 0.2 + 0.8 * t
    if kind == "decay":
        return 1.0 - 0.8 * t
    return np.ones(n)


def prototype_waveform(proto: EmotionPrototype, n: int, rate: int,
                       carrier_hz: float | None = None, am_hz: float | None = None,
                       phase: float = 0.0, am_phase: float = 0.0) -> np.ndarray:
    """Clean emotion prototype without any domain transform."""
    f = proto.carrier_hz if carrier_hz is None else carrier_hz
    am_f = proto.am_hz if am_hz is None else am_hz
    t = np.arange(n) / rate
    carrier = np.sin(2.0 * np.pi * f * t + phase)
    am = 1.0 + AM_DEPTH * np.sin(2.0 * np.pi * am_f * t + am_phase)
    return BASE_AMPLITUDE * _envelope(proto.envelope, n) * carrier * am


def apply_tilt(x: np.ndarray, tilt: float) -> np.ndarray:
    """First-order pre-emphasis y[n] = x[n] - tilt*x[n-1]; identity at 0."""
    if tilt == 0.0:
        return x
    y = x.copy()
    y[1:] -= tilt * x[:-1]
    return y


def render_sample(spec: SynthDomainSpec, emotion: str, rng: Rng) -> np.ndarray:
    """One domain-transformed sample; consumes draws from ``rng``."""
    proto = spec.prototypes[emotion]
    jitter = 1.0 + CARRIER_JITTER * (2.0 * rng.uniform() - 1.0)
    phase = 2.0 * np.pi * rng.uniform()
    am_phase = 2.0 * np.pi * rng.uniform()
    clean = prototype_waveform(proto, spec.clip_samples, spec.sample_rate,
                               carrier_hz=proto.carrier_hz * jitter,
                               phase=phase, am_phase=am_phase)
    out = spec.gain * apply_tilt(clean, spec.tilt)
    if spec.noise_std > 0:
        out = out + spec.noise_std * rng.normal(out.shape)
    return out


def synth_generate(specs: list, out_dir) -> dict:
    """Write WAVs and one manifest per domain; returns {domain: manifest path}.

    Fully determined by the specs (including their seeds); rerunning with the
    same arguments produces byte-identical files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seen = set()
    for spec in specs:
        spec.validate()
        if spec.domain in seen:
            raise ValueError(f"duplicate domain id {spec.domain!r}")
        seen.add(spec.domain)

    manifests = {}
    for spec in specs:
        domain_dir = out_dir / spec.domain
        domain_dir.mkdir(parents=True, exist_ok=True)
        rng = Rng(spec.seed).spawn(f"synth/{spec.domain}")
        records = []
        for emotion in EMOTIONS:
            for i in range(spec.samples_per_emotion):
                wav_path = domain_dir / f"{emotion}_{i:03d}.wav"
                write_wav(wav_path, render_sample(spec, emotion, rng), spec.sample_rate)
                records.append(ManifestRecord(str(wav_path), emotion, spec.domain))
        manifest_path = out_dir / f"{spec.domain}.jsonl"
        Manifest(records).save(manifest_path, relative_to=out_dir)
        manifests[spec.domain] = manifest_path
    return manifests


# Default 6-domain corpus.  Emotions are told apart by carrier frequency
# alone (adjacent carriers a factor 1.25 apart, per-sample jitter +/-12%,
# so classes genuinely overlap).  d0 plays the target and is the noisiest
# domain; d1 is its "twin": the same emotion signatures under a different
# recording transform.  d2..d5 shift every carrier by a domain factor of up
# to almost two class steps, so their signatures mislead a model evaluated
# on d0 without adaptation.
BASE_CARRIERS = (420.0, 525.0, 656.0, 820.0, 1025.0, 1282.0)

_DOMAIN_TABLE = {
    "d0": dict(shift=1.00, am_hz=40.0, envelope="flat", gain=1.00, noise_std=0.62, tilt=0.00),
    "d1": dict(shift=1.00, am_hz=40.0, envelope="flat", gain=0.70, noise_std=0.10, tilt=0.30),
    "d2": dict(shift=0.62, am_hz=30.0, envelope="flat", gain=1.20, noise_std=0.12, tilt=0.15),
    "d3": dict(shift=1.55, am_hz=52.0, envelope="flat", gain=0.90, noise_std=0.20, tilt=0.45),
    "d4": dict(shift=0.48, am_hz=24.0, envelope="flat", gain=1.10, noise_std=0.25, tilt=0.60),
    "d5": dict(shift=1.90, am_hz=62.0, envelope="flat", gain=0.80, noise_std=0.18, tilt=0.20),
}

TARGET_DOMAIN = "d0"
TWIN_DOMAIN = "d1"


def default_prototypes(shift: float = 1.0, am_hz: float = 40.0,
                       envelope: str = "flat", nyquist: float = 8000.0) -> dict:
    return {
        emotion: EmotionPrototype(
            carrier_hz=min(BASE_CARRIERS[i] * shift, 0.95 * nyquist),
            am_hz=am_hz,
            envelope=envelope,
        )
        for i, emotion in enumerate(EMOTIONS)
    }


def make_default_specs(seed: int, samples_per_emotion: int = 20,
                       clip_samples: int = 2000, sample_rate: int = 16000) -> list:
    """The stock 6-domain corpus used by the experiment demos and tests."""
    master = Rng(seed)
    specs = []
    for domain, row in _DOMAIN_TABLE.items():
        specs.append(SynthDomainSpec(
            domain=domain,
            prototypes=default_prototypes(row["shift"], row["am_hz"], row["envelope"],
                                          nyquist=sample_rate / 2.0),
            gain=row["gain"],
            noise_std=row["noise_std"],
            tilt=row["tilt"],
            samples_per_emotion=samples_per_emotion,
            seed=master.spawn(f"domain/{domain}").seed,
            clip_samples=clip_samples,
            sample_rate=sample_rate,
        ))
    return specs
