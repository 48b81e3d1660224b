"""Multi-access channel models for superposed subcarrier transmission.

Three kinds, all with unit transmit power per sensor:

  awgn_only          h = 1 for every sensor and subcarrier
  flat_rayleigh      one CN(0,1) gain per sensor, constant across subcarriers
  selective_rayleigh iid CN(0,1) per sensor per subcarrier

noise_var is the per-subcarrier complex noise variance; with P_k = 1 it is
10^(-snr_db/10).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("awgn_only", "flat_rayleigh", "selective_rayleigh")


@dataclass(frozen=True)
class ChannelModel:
    kind: str
    noise_var: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.noise_var >= 0.0:
            raise ValueError("noise_var must be >= 0")

    @classmethod
    def from_snr_db(cls, kind: str, snr_db: float) -> "ChannelModel":
        return cls(kind=kind, noise_var=10.0 ** (-snr_db / 10.0))

    @property
    def snr_db(self) -> float:
        if self.noise_var == 0.0:
            return math.inf
        return -10.0 * math.log10(self.noise_var)


@dataclass(frozen=True)
class ChannelRealization:
    """Gains h (n_sensors, length) and additive noise w (length,)."""

    h: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        w = np.asarray(self.w, dtype=np.complex128)
        if h.ndim != 2 or w.ndim != 1 or h.shape[1] != w.shape[0]:
            raise ValueError(f"shape mismatch: h {h.shape}, w {w.shape}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "w", w)


def complex_normal(shape, rng, var: float = 1.0) -> np.ndarray:
    """CN(0, var) samples; real and imaginary parts drawn in that order."""
    scale = math.sqrt(var / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * scale


def gain_block(model: ChannelModel, batch_shape, length: int, rng) -> np.ndarray:
    """Channel gains for one sensor, broadcastable to (*batch_shape, length).

    flat_rayleigh returns a trailing axis of 1 (one gain per batch entry);
    awgn_only returns a scalar-shaped constant.  Callers relying on explicit
    shape should broadcast the result themselves.
    """
    batch_shape = tuple(batch_shape)
    if model.kind == "awgn_only":
        return np.ones(batch_shape + (1,), dtype=np.complex128)
    if model.kind == "flat_rayleigh":
        return complex_normal(batch_shape + (1,), rng)
    return complex_normal(batch_shape + (length,), rng)


def noise_block(model: ChannelModel, batch_shape, length: int, rng) -> np.ndarray:
    """Additive noise of shape (*batch_shape, length)."""
    return complex_normal(tuple(batch_shape) + (length,), rng, var=model.noise_var)


def draw(model: ChannelModel, n_sensors: int, length: int, rng) -> ChannelRealization:
    """One channel realization; sensor gains are drawn in sensor order, then noise."""
    rows = [
        np.broadcast_to(gain_block(model, (), length, rng), (length,))
        for _ in range(n_sensors)
    ]
    h = np.stack(rows, axis=0)
    w = noise_block(model, (), length, rng)
    return ChannelRealization(h=h, w=w)


def superpose(t, realization: ChannelRealization) -> np.ndarray:
    """Received sequence r = sum_k h_k * t_k + w for stacked transmissions t (K, L)."""
    t = np.asarray(t, dtype=np.complex128)
    if t.shape != realization.h.shape:
        raise ValueError(f"t shape {t.shape} != h shape {realization.h.shape}")
    return (realization.h * t).sum(axis=0) + realization.w
