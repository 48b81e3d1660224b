"""OFDM symbol synthesis and peak-power statistics.

Frequency-domain sequences are mapped onto contiguous subcarriers, zero-padded
to an oversampled grid, and transformed with a unitary IDFT.  PMEPR is the
ratio of the peak instantaneous power to the mean power over the full symbol
window, in dB, measured on the oversampled envelope (factor >= 4; the 3 dB
complementary-sequence bound is a continuous-envelope statement, so critical
sampling would under-read peaks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OfdmConfig:
    """Synthesis grid: IDFT size, oversampling factor, first mapped subcarrier."""

    n_fft: int
    oversampling: int = 8
    subcarrier_offset: int = 0

    def __post_init__(self):
        if self.n_fft < 1:
            raise ValueError("n_fft must be >= 1")
        if self.oversampling < 4:
            raise ValueError("oversampling must be >= 4")
        if self.subcarrier_offset < 0:
            raise ValueError("subcarrier_offset must be >= 0")

    @property
    def n_samples(self) -> int:
        return self.n_fft * self.oversampling


@dataclass(frozen=True)
class PmeprSample:
    """One PMEPR measurement in dB."""

    value_db: float

    def __post_init__(self):
        if not self.value_db >= 0.0:
            raise ValueError(f"PMEPR must be >= 0 dB, got {self.value_db!r}")


def synthesize(seq, config: OfdmConfig) -> np.ndarray:
    """Oversampled time-domain symbol(s) for frequency-domain sequence(s).

    seq has shape (..., L); the result has shape (..., n_fft*oversampling).
    The transform is unitary over the padded grid, so time-domain energy
    equals ||seq||^2 exactly.
    """
    a = np.asarray(seq, dtype=np.complex128)
    L = a.shape[-1]
    if L + config.subcarrier_offset > config.n_fft:
        raise ValueError(
            f"{L} subcarriers at offset {config.subcarrier_offset} "
            f"do not fit in n_fft={config.n_fft}"
        )
    N = config.n_samples
    spec = np.zeros(a.shape[:-1] + (N,), dtype=np.complex128)
    spec[..., config.subcarrier_offset : config.subcarrier_offset + L] = a
    return np.fft.ifft(spec, axis=-1) * math.sqrt(N)


def pmepr(time_samples) -> PmeprSample:
    """Peak-to-mean envelope power ratio of one symbol, in dB.

    Raises ValueError for an all-zero symbol (the ratio is undefined).
    """
    s = np.asarray(time_samples)
    if s.ndim != 1:
        raise ValueError("pmepr expects a single 1-D symbol")
    p = np.abs(s) ** 2
    mean = p.mean()
    if mean == 0.0:
        raise ValueError("PMEPR undefined for an all-zero symbol")
    return PmeprSample(value_db=max(0.0, 10.0 * math.log10(p.max() / mean)))


def pmepr_batch(time_samples) -> np.ndarray:
    """PMEPR in dB along the last axis; all-zero symbols yield NaN."""
    p = np.abs(np.asarray(time_samples)) ** 2
    mean = p.mean(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 10.0 * np.log10(p.max(axis=-1) / mean)
    return np.where(mean > 0.0, np.maximum(out, 0.0), np.nan)


def pmepr_ccdf(values_db, thresholds_db=None) -> tuple[np.ndarray, np.ndarray]:
    """Empirical complementary CDF P(PMEPR > threshold).

    Returns (thresholds_db, exceedance_prob), both 1-D.  The default grid
    runs from 0 dB past the sample maximum in 0.05 dB steps.
    """
    v = np.asarray(values_db, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise ValueError("pmepr_ccdf needs at least one finite sample")
    if thresholds_db is None:
        top = math.ceil((v.max() + 0.05) / 0.05) * 0.05
        thresholds_db = np.arange(0.0, top + 1e-12, 0.05)
    thr = np.asarray(thresholds_db, dtype=np.float64)
    prob = (v[None, :] > thr[:, None]).mean(axis=1)
    return thr, prob
