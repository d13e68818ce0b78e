"""WAV decoding and the waveform preprocessing pipeline.

Only RIFF/WAVE PCM 16-bit files are accepted.  Stereo is downmixed by channel
mean.  Preprocessing resamples by linear interpolation (no anti-alias filter,
adequate for the synthetic corpora; lossy for real 48 kHz material), pads or
crops to a fixed length, and standardizes each waveform to mean 0 / std 1.
"""

from __future__ import annotations

import wave

import numpy as np

from .tensor import NumericError, Tensor

INT16_SCALE = 32768.0


class AudioFormatError(ValueError):
    """Unsupported or malformed audio file."""


def load_wav(path) -> tuple:
    """Decode a PCM16 WAV file to (samples in [-1, 1], sample rate)."""
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            sample_width = wav.getsampwidth()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            if wav.getcomptype() != "NONE":
                raise AudioFormatError(f"{path}: compressed WAV not supported")
            if sample_width != 2:
                raise AudioFormatError(f"{path}: only 16-bit PCM supported, got {8 * sample_width}-bit")
            raw = wav.readframes(n_frames)
    except wave.Error as exc:
        raise AudioFormatError(f"{path}: {exc}") from exc
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return data / INT16_SCALE, rate


def write_wav(path, samples: Tensor, rate: int) -> None:
    """Write samples in [-1, 1] as mono PCM16; values are clipped."""
    quantized = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ints = np.clip(np.round(quantized * INT16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(int(rate))
        wav.writeframes(ints.tobytes())


def resample_linear(samples: Tensor, rate: int, target_rate: int) -> Tensor:
    """Linear-interpolation resampling; output length round(n * target/rate)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("cannot resample an empty signal")
    if rate == target_rate:
        return samples
    n_out = max(1, int(round(samples.size * target_rate / rate)))
    positions = np.arange(n_out) * (rate / target_rate)
    return np.interp(positions, np.arange(samples.size), samples)


def pad_or_crop(samples: Tensor, length: int, mode: str = "center") -> Tensor:
    """Fit the signal to ``length``: zero-pad symmetrically when short,
    crop (head|center|tail) when long."""
    if mode not in ("head", "center", "tail"):
        raise ValueError(f"crop mode must be head|center|tail, got {mode!r}")
    n = samples.size
    if n == length:
        return samples
    if n < length:
        lead = (length - n) // 2
        out = np.zeros(length)
        out[lead : lead + n] = samples
        return out
    if mode == "head":
        start = 0
    elif mode == "tail":
        start = n - length
    else:
        start = (n - length) // 2
    return samples[start : start + length]


def standardize(samples: Tensor) -> Tensor:
    """Subtract the mean, divide by population std (guarded at 1e-8).

    Constant signals map to all zeros.
    """
    centered = samples - samples.mean()
    return centered / max(float(samples.std()), 1e-8)


def preprocess(samples: Tensor, rate: int, input_length: int,
               working_rate: int = 16000, crop: str = "center") -> Tensor:
    """Full pipeline: resample -> pad/crop -> standardize."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("cannot preprocess an empty signal")
    out = resample_linear(samples, rate, working_rate)
    out = pad_or_crop(out, input_length, crop)
    out = standardize(out)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite values after preprocessing")
    return out
