"""Complementary-sequence construction and vote encoding.

A length-2^m sequence is built from a pair of pseudo-Boolean functions on the
m-bit hypercube: a real amplitude exponent f_r(x) and an integer phase exponent
f_i(x).  Element i(x) of the sequence is exp(f_r(x)) * exp(j*2*pi*f_i(x)/H),
where i(x) is the MSB-first integer index of the bit vector x.

The amplitude exponent is a weighted sum of "offset" monomials: with a fixed
shared permutation pi of (1..m),

    xt_{pi(n)} = (x_{pi(n)} + x_{pi(n+1)}) mod 2   for n < m,
    xt_{pi(m)} = x_{pi(m)},

and f_r(x) = c_0 + sum_n c_n * xt_{pi(n)}.  The map x -> xt is a bijection
(a Gray-type map), so each xt pattern marks exactly one element, and each
coefficient c_n splits the 2^m indices into two halves of size 2^{m-1}.

The phase exponent keeps the quadratic Golay core plus a linear coset:
f_i(x) = (H/2) * sum_{n<m} x_{pi(n)} x_{pi(n+1)} + sum_n e_n x_{pi(n)} + e_0.
Any choice of integer e_n leaves the sequence complementary, so transmitters
may draw the linear coset at random without coordination.

A vote vector v in {-1, 0, +1}^m is encoded by c_n = xi * v_n with the
normalizer c_0 chosen so that ||t||^2 = 2^m for every v and xi.  In the
xi -> infinity limit the surviving elements are those whose xt pattern agrees
with every nonzero vote, scaled to 2^{w/2} for w nonzero votes; that limit is
computed exactly rather than with a large finite xi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SQRT2 = math.sqrt(2.0)
LN2 = math.log(2.0)


def default_pi(m: int) -> tuple[int, ...]:
    """Network-wide default permutation (m, m-1, ..., 1)."""
    return tuple(range(m, 0, -1))


def check_votes(v, m: int | None = None) -> np.ndarray:
    """Validate a vote vector and return it as an int8 array."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError(f"vote vector must be 1-D, got shape {v.shape}")
    if m is not None and v.shape[0] != m:
        raise ValueError(f"expected {m} votes, got {v.shape[0]}")
    if not np.isin(v, (-1, 0, 1)).all():
        raise ValueError("votes must be -1, 0, or +1")
    return v.astype(np.int8)


def _check_pi(pi, m: int) -> tuple[int, ...]:
    pi = tuple(int(p) for p in pi)
    if sorted(pi) != list(range(1, m + 1)):
        raise ValueError(f"pi must be a permutation of 1..{m}, got {pi}")
    return pi


def index_of(x) -> int:
    """MSB-first index of a bit vector: i(x) = sum_j x_j 2^(m-j)."""
    x = np.asarray(x, dtype=np.int64)
    if x.ndim != 1 or not np.isin(x, (0, 1)).all():
        raise ValueError("x must be a 1-D vector of bits")
    m = x.shape[0]
    return int((x << np.arange(m - 1, -1, -1)).sum())


def bits_of(i: int, m: int) -> np.ndarray:
    """Inverse of index_of: the m-bit vector of index i, MSB first."""
    if not 0 <= i < 2**m:
        raise ValueError(f"index {i} out of range for m={m}")
    return (i >> np.arange(m - 1, -1, -1)) & 1


def tilde_monomial(x, pi, n: int) -> int:
    """Offset monomial xt_{pi(n)}(x) for n in 1..m."""
    x = np.asarray(x, dtype=np.int64)
    m = x.shape[0]
    pi = _check_pi(pi, m)
    if not 1 <= n <= m:
        raise ValueError(f"n must be in 1..{m}")
    if n == m:
        return int(x[pi[m - 1] - 1])
    return int((x[pi[n - 1] - 1] + x[pi[n] - 1]) % 2)


@lru_cache(maxsize=64)
def _tables(m: int, pi: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-(m, pi) lookup tables over all 2^m indices, rows ordered by i(x).

    Returns (tilde, xbits, quad): tilde[i, n-1] = xt_{pi(n)},
    xbits[i, n-1] = x_{pi(n)}, quad[i] = sum_{n<m} x_{pi(n)} x_{pi(n+1)}.
    """
    L = 2**m
    bits = (np.arange(L)[:, None] >> np.arange(m - 1, -1, -1)[None, :]) & 1
    xbits = bits[:, np.array(pi) - 1]
    tilde = np.empty((L, m), dtype=np.int8)
    tilde[:, :-1] = (xbits[:, :-1] + xbits[:, 1:]) % 2
    tilde[:, -1] = xbits[:, -1]
    quad = (xbits[:, :-1] * xbits[:, 1:]).sum(axis=1)
    for a in (tilde, xbits, quad):
        a.setflags(write=False)
    return tilde, xbits.astype(np.int8), quad.astype(np.int64)


def tilde_matrix(m: int, pi=None) -> np.ndarray:
    """Read-only (2^m, m) table of offset monomials, row i = index i(x)."""
    pi = default_pi(m) if pi is None else _check_pi(pi, m)
    return _tables(m, pi)[0]


@dataclass(frozen=True)
class CsParams:
    """Parameters of one complementary sequence.

    phase_coeffs holds (e_0, e_1, ..., e_m) as integers mod H; amp_coeffs
    holds (c_0, c_1, ..., c_m) in nats.  pi defaults to (m, m-1, ..., 1).
    """

    m: int
    H: int = 2
    pi: tuple[int, ...] | None = None
    phase_coeffs: tuple[int, ...] | None = None
    amp_coeffs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.H < 2 or self.H % 2:
            raise ValueError("H must be a positive even integer")
        pi = default_pi(self.m) if self.pi is None else _check_pi(self.pi, self.m)
        object.__setattr__(self, "pi", pi)
        e = (0,) * (self.m + 1) if self.phase_coeffs is None else self.phase_coeffs
        if len(e) != self.m + 1:
            raise ValueError(f"phase_coeffs must have length m+1={self.m + 1}")
        object.__setattr__(self, "phase_coeffs", tuple(int(v) % self.H for v in e))
        c = (0.0,) * (self.m + 1) if self.amp_coeffs is None else self.amp_coeffs
        if len(c) != self.m + 1:
            raise ValueError(f"amp_coeffs must have length m+1={self.m + 1}")
        if not all(math.isfinite(v) for v in c):
            raise ValueError("amp_coeffs must be finite")
        object.__setattr__(self, "amp_coeffs", tuple(float(v) for v in c))

    @property
    def length(self) -> int:
        return 2**self.m


@dataclass(frozen=True)
class EncodedSequence:
    """A synthesized sequence plus the vote scaling it was built with.

    xi is the vote scale (finite positive float or math.inf), or None for a
    sequence synthesized directly from raw amplitude coefficients.  Sequences
    produced by vote encoding always satisfy ||t||^2 = 2^m.
    """

    t: np.ndarray
    xi: float | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.complex128)
        object.__setattr__(self, "t", t)
        if t.ndim != 1 or t.shape[0] & (t.shape[0] - 1):
            raise ValueError("t must be 1-D with power-of-two length")
        if self.xi is not None:
            if not self.xi > 0:
                raise ValueError("xi must be positive")
            L = t.shape[0]
            energy = float(np.vdot(t, t).real)
            if not math.isclose(energy, L, rel_tol=1e-9):
                raise ValueError(f"||t||^2 = {energy!r}, expected {L}")

    @property
    def m(self) -> int:
        return self.t.shape[0].bit_length() - 1


def _phase_factors(m, H, pi, e) -> np.ndarray:
    """exp(j*2*pi*f_i/H) over all indices for linear coset e = (e_0..e_m)."""
    _, xbits, quad = _tables(m, tuple(pi))
    e = np.asarray(e, dtype=np.int64)
    f = (H // 2) * quad + xbits.astype(np.int64) @ e[1:] + e[0]
    if H == 2:
        # exact +-1, keeps golden-vector comparisons free of exp() roundoff
        return (1.0 - 2.0 * (f % 2)).astype(np.complex128)
    return np.exp(2j * np.pi * (f % H) / H)


def generate_cs(params: CsParams) -> EncodedSequence:
    """Synthesize the sequence for explicit amplitude and phase coefficients."""
    tilde, _, _ = _tables(params.m, params.pi)
    c = np.asarray(params.amp_coeffs)
    amp = np.exp(c[0] + tilde @ c[1:])
    t = amp * _phase_factors(params.m, params.H, params.pi, params.phase_coeffs)
    return EncodedSequence(t=t, xi=None)


def vote_amplitudes(votes, xi: float, pi=None) -> np.ndarray:
    """Element amplitudes exp(f_r) for a batch of vote vectors.

    votes has shape (..., m); the result has shape (..., 2^m).  Every row
    satisfies sum(amp^2) = 2^m.  xi = math.inf selects the exact limit:
    elements whose offset-monomial pattern matches all w nonzero votes get
    amplitude 2^(w/2), the rest 0.
    """
    votes = np.asarray(votes)
    m = votes.shape[-1]
    pi = default_pi(m) if pi is None else _check_pi(pi, m)
    tilde, _, _ = _tables(m, pi)
    Y = tilde.astype(np.float64)
    if math.isinf(xi):
        pos = (votes > 0).astype(np.float64)
        neg = (votes < 0).astype(np.float64)
        # violations: a +1 vote needs xt=1, a -1 vote needs xt=0
        viol = pos @ (1.0 - Y.T) + neg @ Y.T
        w = (votes != 0).sum(axis=-1)
        scale = 2.0 ** (w // 2) * np.where(w % 2, SQRT2, 1.0)
        return np.where(viol == 0, scale[..., None], 0.0)
    if not xi > 0:
        raise ValueError("xi must be positive")
    c = xi * votes.astype(np.float64)
    c0 = -0.5 * (np.logaddexp(0.0, 2.0 * c) - LN2).sum(axis=-1)
    return np.exp(c0[..., None] + c @ Y.T)


def random_phase_factors(batch_shape, m: int, rng, H: int = 2, pi=None) -> np.ndarray:
    """Per-transmitter random linear phase cosets, shape (*batch_shape, 2^m).

    Each batch entry draws its own (e_0..e_m) uniformly mod H.  For H=2 the
    factors are returned as real +-1 (complex dtype is kept for uniformity).
    """
    pi = default_pi(m) if pi is None else _check_pi(pi, m)
    _, xbits, quad = _tables(m, pi)
    batch_shape = tuple(batch_shape)
    e = rng.integers(0, H, size=batch_shape + (m + 1,))
    f = (H // 2) * quad + e[..., 1:] @ xbits.T.astype(np.int64) + e[..., :1]
    if H == 2:
        return (1.0 - 2.0 * (f % 2)).astype(np.complex128)
    return np.exp(2j * np.pi * (f % H) / H)


def encode_votes(v, xi: float, params: CsParams, rng=None) -> EncodedSequence:
    """Encode one vote vector into a transmit sequence.

    With rng=None the linear phase coset in params is used as-is; passing a
    generator draws a fresh random coset, which is what transmitters do in
    operation (the detector never needs to know it).
    """
    v = check_votes(v, params.m)
    if rng is None:
        e = params.phase_coeffs
    else:
        e = rng.integers(0, params.H, size=params.m + 1)
    amp = vote_amplitudes(v, xi, params.pi)
    t = amp * _phase_factors(params.m, params.H, params.pi, e)
    return EncodedSequence(t=t, xi=float(xi))


def aacf(a) -> np.ndarray:
    """Aperiodic autocorrelation at lags -(L-1)..(L-1).

    Entry L-1+tau is sum_i a[i+tau] * conj(a[i]); complementary pairs sum to
    zero at every nonzero lag.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 1:
        raise ValueError("aacf expects a 1-D sequence")
    return np.correlate(a, a, mode="full")
