"""Detection-error theory for the energy-based vote detector.

Under Rayleigh fading the received subcarrier powers |r_i|^2 are independent
exponentials whose means form a rate profile

    a_i = sum_k amp_k(i)^2 + noise_var,

where amp_k is sensor k's encoded amplitude.  The column-n metric difference
D = M+ - M- is then a weighted difference of exponential sums, its CDF is
recovered from the characteristic function

    Phi(t) = prod_{i in plus half} (1 - j t a_i)^-1
             * prod_{i in minus half} (1 + j t a_i)^-1

by numerical inversion, F(x) = 1/2 - (1/pi) * int_0^inf Im[Phi(t) e^{-jtx}]/t dt,
and the per-column error probability follows by conditioning on the sign of
the true majority.  Amplitudes factor per column (amp^2 = prod_n g(v_n, xt_n)
with g from the vote scale xi), which is what makes averaging over the other
m-1 columns cheap: one draw of all sensors' other-column factors serves every
split of the column under test into +1/-1/0 classes via prefix sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln

from . import sequences
from .detect import MetricPair

_NODES16, _WEIGHTS16 = np.polynomial.legendre.leggauss(16)
_TAIL_LOG = math.log(1e-13)
_CHUNK = 1 << 18


class QuadratureError(ArithmeticError):
    """Inversion integral failed to converge; carries the best estimate."""

    def __init__(self, message: str, estimate: float, error_estimate: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class VoteCounts:
    """Per-column tally of +1, -1, and absentee votes."""

    k_plus: int
    k_minus: int
    k_zero: int

    def __post_init__(self):
        if min(self.k_plus, self.k_minus, self.k_zero) < 0:
            raise ValueError("counts must be >= 0")
        if self.total < 1:
            raise ValueError("at least one sensor required")

    @property
    def total(self) -> int:
        return self.k_plus + self.k_minus + self.k_zero


@dataclass(frozen=True)
class VoteDistribution:
    """P(vote = +1), P(vote = -1), P(vote = 0)."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("probabilities must be >= 0")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-12:
            raise ValueError("alpha + beta + gamma must equal 1")


@dataclass(frozen=True)
class RateProfile:
    """Exponential means of the 2^m received subcarrier powers."""

    rates: np.ndarray
    noise_var: float
    pi: tuple[int, ...]

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=np.float64)
        object.__setattr__(self, "rates", rates)
        L = rates.shape[0]
        if rates.ndim != 1 or L & (L - 1):
            raise ValueError("rates must be 1-D with power-of-two length")
        if (rates < self.noise_var - 1e-12 * max(1.0, self.noise_var)).any():
            raise ValueError("every rate must be >= noise_var")
        if len(self.pi) != self.m:
            raise ValueError(f"pi has length {len(self.pi)}, expected {self.m}")

    @property
    def m(self) -> int:
        return self.rates.shape[0].bit_length() - 1


def expected_metrics(counts: VoteCounts, m: int, xi: float, noise_var: float) -> MetricPair:
    """Mean energy metrics E[M+], E[M-] for a column with the given tally.

    Holds for any unit-power fading; each nonzero vote moves a
    2^m * sigmoid(2 xi) share of its energy into the matching half.
    """
    L = 2.0**m
    s = expit(2.0 * xi)
    base = L / 2.0 * (counts.k_zero + noise_var)
    plus = L * (s * counts.k_plus + (1.0 - s) * counts.k_minus) + base
    minus = L * ((1.0 - s) * counts.k_plus + s * counts.k_minus) + base
    return MetricPair(m_plus=plus, m_minus=minus)


def rate_profile(votes, xi: float, noise_var: float, pi=None) -> RateProfile:
    """Exponential rate profile for fixed votes of all sensors, shape (K, m)."""
    votes = np.asarray(votes)
    if votes.ndim != 2:
        raise ValueError("votes must have shape (n_sensors, m)")
    m = votes.shape[1]
    pi = sequences.default_pi(m) if pi is None else tuple(pi)
    amp = sequences.vote_amplitudes(votes, xi, pi)
    return RateProfile(rates=(amp**2).sum(axis=0) + noise_var, noise_var=noise_var, pi=pi)


# === characteristic-function inversion ===


def _gl_integral(up, cp, um, cm, x: float, edges, base_panels, mult: int) -> float:
    """Gauss-Legendre integral of Im[Phi(t) e^{-jtx}]/t over the segments.

    Phi is evaluated through log magnitude and phase separately:
    log|Phi| = -1/2 sum c log1p((ta)^2), arg Phi = sum_plus c atan(ta)
    - sum_minus c atan(ta), so the integrand is exp(.)*sin(arg - tx)/t.
    """
    t_parts = []
    w_parts = []
    for j in range(len(base_panels)):
        lo, hi = edges[j], edges[j + 1]
        p = min(base_panels[j] * mult, 1 << 14)
        h = (hi - lo) / (2.0 * p)
        centers = lo + (np.arange(p) * 2.0 + 1.0) * h
        t_parts.append((centers[:, None] + h * _NODES16[None, :]).ravel())
        w_parts.append(np.tile(_WEIGHTS16 * h, p))
    t = np.concatenate(t_parts)
    wq = np.concatenate(w_parts)
    total = 0.0
    for s in range(0, t.shape[0], _CHUNK):
        ts = t[s : s + _CHUNK]
        logmag = np.zeros(ts.shape[0])
        phase = -ts * x
        if up.size:
            M = np.outer(ts, up)
            logmag -= 0.5 * (np.log1p(M * M) @ cp)
            phase += np.arctan(M) @ cp
        if um.size:
            M = np.outer(ts, um)
            logmag -= 0.5 * (np.log1p(M * M) @ cm)
            phase -= np.arctan(M) @ cm
        total += float(wq[s : s + _CHUNK] @ (np.exp(logmag) * np.sin(phase) / ts))
    return total


def _diff_cdf(a_plus, a_minus, x: float = 0.0, atol: float = 1e-9, max_mult: int = 64) -> float:
    """P(sum Exp(a_plus) - sum Exp(a_minus) <= x), rates given as means."""
    ap = np.asarray(a_plus, dtype=np.float64).ravel()
    am = np.asarray(a_minus, dtype=np.float64).ravel()
    if (ap < 0).any() or (am < 0).any():
        raise ValueError("rates must be >= 0")
    ap = ap[ap > 0]
    am = am[am > 0]
    if ap.size == 0 and am.size == 0:
        return 1.0 if x >= 0 else 0.0
    if x == 0.0 and ap.size == am.size and np.array_equal(np.sort(ap), np.sort(am)):
        return 0.5
    up, cp = np.unique(ap, return_counts=True)
    um, cm = np.unique(am, return_counts=True)
    cp = cp.astype(np.float64)
    cm = cm.astype(np.float64)
    rates = np.concatenate([up, um])
    counts = np.concatenate([cp, cm])

    # cutoff where |Phi| < 1e-13; |Phi| decays like t^-(total count), so the
    # truncated tail integral is below the cutoff as well
    scale = 1.0 / rates.max()
    T = scale
    for _ in range(200):
        if -0.5 * float(counts @ np.log1p((T * rates) ** 2)) <= _TAIL_LOG:
            break
        T *= 2.0

    # dyadic segments [0,s], [s,2s], ...: uniform panels per segment, sized to
    # the local phase rate sum c*a/(1+(t a)^2) + |x|, which falls off past 1/a
    edges = [0.0]
    while edges[-1] < T:
        edges.append(scale if len(edges) == 1 else edges[-1] * 2.0)
    base_panels = []
    for j in range(len(edges) - 1):
        t_lo = edges[j]
        freq = float(counts @ (rates / (1.0 + (t_lo * rates) ** 2))) + abs(x)
        width = edges[j + 1] - edges[j]
        base_panels.append(max(2, math.ceil(width * freq / (2.0 * math.pi))))

    prev = _gl_integral(up, cp, um, cm, x, edges, base_panels, 1)
    mult, err = 2, math.inf
    while mult <= max_mult:
        cur = _gl_integral(up, cp, um, cm, x, edges, base_panels, mult)
        err = abs(cur - prev)
        if err <= max(atol, 1e-8 * abs(cur)):
            return min(1.0, max(0.0, 0.5 - cur / math.pi))
        prev = cur
        mult *= 2
    raise QuadratureError(
        f"CDF inversion did not converge (refinement x{max_mult}, est. error {err:.2e})",
        estimate=min(1.0, max(0.0, 0.5 - prev / math.pi)),
        error_estimate=err,
    )


def cdf_metric_diff(profile: RateProfile, n: int, x: float = 0.0) -> float:
    """F(x) = P(M+_n - M-_n <= x) under the profile, clamped to [0, 1]."""
    if not 1 <= n <= profile.m:
        raise ValueError(f"n must be in 1..{profile.m}")
    half = sequences.tilde_matrix(profile.m, profile.pi)[:, n - 1].astype(bool)
    return _diff_cdf(profile.rates[half], profile.rates[~half], x)


def cer_given_votes(votes, n: int, xi: float, noise_var: float, pi=None) -> float:
    """Error probability of the column-n majority decision for fixed votes.

    A tied column (equal +1 and -1 counts) has no correct +-1 decision and
    counts as error with probability one.
    """
    votes = np.asarray(votes)
    prof = rate_profile(votes, xi, noise_var, pi)
    col = votes[:, n - 1]
    k_plus = int((col > 0).sum())
    k_minus = int((col < 0).sum())
    if k_plus == k_minus:
        return 1.0
    F0 = cdf_metric_diff(prof, n)
    return F0 if k_plus > k_minus else 1.0 - F0


# === averaging over the other columns ===


def _factor_table(xi: float) -> np.ndarray:
    """Per-column amplitude-squared factors g[v+1, xt] with prod_n g = amp^2."""
    if math.isinf(xi):
        return np.array([[2.0, 0.0], [1.0, 1.0], [0.0, 2.0]])
    s = expit(2.0 * xi)
    return np.array([[2.0 * s, 2.0 * (1.0 - s)], [1.0, 1.0], [2.0 * (1.0 - s), 2.0 * s]])


def _other_factors(votes_other, table, tilde, n: int) -> np.ndarray:
    """prod over columns != n of g(v, xt), shape (..., K, 2^m)."""
    cols = [j for j in range(tilde.shape[1]) if j != n - 1]
    out = np.ones(votes_other.shape[:-1] + (tilde.shape[0],))
    for idx, j in enumerate(cols):
        out *= table[votes_other[..., idx] + 1][..., tilde[:, j]]
    return out


def _class_factors(counts: VoteCounts, table, col) -> np.ndarray:
    """Column-n factor per sensor (K, 2^m), sensors ordered +1, -1, 0."""
    cls = np.repeat([2, 0, 1], [counts.k_plus, counts.k_minus, counts.k_zero])
    return table[cls][:, col]


def cer_given_counts(
    counts,
    dist,
    m: int,
    xi: float,
    noise_var: float,
    n: int = 1,
    method: str = "monte_carlo",
    draws: int = 1000,
    rng=None,
    pi=None,
    return_stderr: bool = False,
):
    """Column-n error probability given its tally, other columns iid from dist.

    method='exhaustive' enumerates all other-column vote tuples and is
    accepted only when total_sensors*(m-1) <= 12; 'monte_carlo' averages
    over `draws` realizations.
    """
    counts = VoteCounts(*counts) if not isinstance(counts, VoteCounts) else counts
    dist = VoteDistribution(*dist) if not isinstance(dist, VoteDistribution) else dist
    K = counts.total
    if not 1 <= n <= m:
        raise ValueError(f"n must be in 1..{m}")
    if counts.k_plus == counts.k_minus:
        return (1.0, 0.0) if return_stderr else 1.0
    pi = sequences.default_pi(m) if pi is None else tuple(pi)
    tilde = sequences.tilde_matrix(m, pi)
    col = tilde[:, n - 1].astype(np.intp)
    half = col.astype(bool)
    table = _factor_table(xi)
    class_fac = _class_factors(counts, table, col)
    plus_wins = counts.k_plus > counts.k_minus

    if method == "exhaustive":
        n_trits = K * (m - 1)
        if n_trits > 12:
            raise ValueError(
                f"exhaustive enumeration needs {n_trits} trits > 12; use monte_carlo"
            )
        digits = np.arange(3**n_trits)[:, None] // 3 ** np.arange(n_trits)[None, :] % 3
        votes_other = (digits - 1).reshape(-1, K, m - 1)
        n_pos = (votes_other == 1).sum(axis=(1, 2))
        n_neg = (votes_other == -1).sum(axis=(1, 2))
        weights = (
            dist.alpha**n_pos * dist.beta**n_neg * dist.gamma ** (n_trits - n_pos - n_neg)
        )
        value = 0.0
        for lo in range(0, votes_other.shape[0], 4096):
            chunk = votes_other[lo : lo + 4096]
            wts = weights[lo : lo + 4096]
            keep = wts > 0
            if not keep.any():
                continue
            fac = _other_factors(chunk[keep], table, tilde, n)
            rates = (class_fac[None] * fac).sum(axis=1) + noise_var
            for w, row in zip(wts[keep], rates):
                F0 = _diff_cdf(row[half], row[~half])
                value += w * (F0 if plus_wins else 1.0 - F0)
        return (value, 0.0) if return_stderr else value

    if method != "monte_carlo":
        raise ValueError("method must be 'monte_carlo' or 'exhaustive'")
    if rng is None:
        raise ValueError("monte_carlo averaging needs an rng")
    vals = np.empty(draws)
    for r in range(draws):
        votes_other = rng.choice(
            np.array([1, -1, 0]), size=(K, m - 1), p=(dist.alpha, dist.beta, dist.gamma)
        )
        fac = _other_factors(votes_other, table, tilde, n)
        rates = (class_fac * fac).sum(axis=0) + noise_var
        F0 = _diff_cdf(rates[half], rates[~half])
        vals[r] = F0 if plus_wins else 1.0 - F0
    value = float(vals.mean())
    if return_stderr:
        return value, float(vals.std(ddof=1) / math.sqrt(draws))
    return value


def _log_trinomial(K: int, dist: VoteDistribution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """log P(k sensors vote +1, l vote -1) over all pairs with k+l <= K."""
    k, l = np.meshgrid(np.arange(K + 1), np.arange(K + 1), indexing="ij")
    keep = (k + l) <= K
    k = k[keep]
    l = l[keep]
    z = K - k - l
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (
            gammaln(K + 1)
            - gammaln(k + 1)
            - gammaln(l + 1)
            - gammaln(z + 1)
            + np.where(k > 0, k * np.log(dist.alpha), 0.0)
            + np.where(l > 0, l * np.log(dist.beta), 0.0)
            + np.where(z > 0, z * np.log(dist.gamma), 0.0)
        )
    return k, l, logp


def mv_zero_probability(dist, K: int) -> float:
    """P(a column's +1 and -1 tallies tie) under iid votes."""
    dist = VoteDistribution(*dist) if not isinstance(dist, VoteDistribution) else dist
    k, l, logp = _log_trinomial(K, dist)
    ties = k == l
    return float(np.exp(logp[ties]).sum())


def system_cer(
    dist,
    K: int,
    m: int,
    xi: float,
    noise_var: float,
    other_draws: int = 1000,
    weight_floor: float = 1e-9,
    rng=None,
    pi=None,
    return_stderr: bool = False,
):
    """Unconditional per-column error probability under iid votes.

    Sums the tally probabilities against the conditional error of each
    (k_plus, k_minus) pair, including the tie mass at probability one.
    All pairs share one set of other-column realizations through prefix
    sums over the sensor axis; pairs below weight_floor are dropped
    (total dropped mass is bounded by pairs*weight_floor).
    """
    dist = VoteDistribution(*dist) if not isinstance(dist, VoteDistribution) else dist
    if rng is None:
        raise ValueError("system_cer needs an rng for the other-column average")
    pi = sequences.default_pi(m) if pi is None else tuple(pi)
    tilde = sequences.tilde_matrix(m, pi)
    col = tilde[:, 0].astype(np.intp)
    half = col.astype(bool)
    table = _factor_table(xi)
    f_plus = table[2][col]
    f_minus = table[0][col]

    kv, lv, logp = _log_trinomial(K, dist)
    w = np.exp(logp)
    tie_mass = float(w[kv == lv].sum())
    keep = (kv != lv) & (w > weight_floor)
    kv, lv, w = kv[keep], lv[keep], w[keep]

    totals = np.empty(other_draws)
    for r in range(other_draws):
        votes_other = rng.choice(
            np.array([1, -1, 0]), size=(K, m - 1), p=(dist.alpha, dist.beta, dist.gamma)
        )
        fac = _other_factors(votes_other, table, tilde, 1)
        S = np.vstack([np.zeros(fac.shape[1]), np.cumsum(fac, axis=0)])
        plus_part = f_plus[None, :] * S[kv]
        minus_part = f_minus[None, :] * (S[kv + lv] - S[kv])
        zero_part = (S[K] - S[kv + lv])
        rates = plus_part + minus_part + zero_part + noise_var
        total = 0.0
        for i in range(kv.shape[0]):
            F0 = _diff_cdf(rates[i][half], rates[i][~half])
            total += w[i] * (F0 if kv[i] > lv[i] else 1.0 - F0)
        totals[r] = total
    value = float(totals.mean()) + tie_mass
    if return_stderr:
        spread = float(totals.std(ddof=1) / math.sqrt(other_draws)) if other_draws > 1 else 0.0
        return value, spread
    return value


# === resource accounting ===


def computation_rate(m: int) -> float:
    """Majority votes per complex dimension: m / 2^(m+1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return m / 2.0 ** (m + 1)


def resource_utilization(m: int, n_sensors: int, reuse: int = 1) -> float:
    """Subcarriers consumed per sensor-vote opportunity: 2^m / (reuse*m*K)."""
    if m < 1 or n_sensors < 1 or reuse < 1:
        raise ValueError("all arguments must be >= 1")
    return 2.0**m / (reuse * m * n_sensors)
