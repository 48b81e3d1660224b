"""Closed-loop waypoint tracking driven by sensor majority votes.

Each round, ground sensors estimate the vehicle position with iid Gaussian
error per coordinate and vote on the sign of (estimate - target).  The
controller applies

    p <- p - T * u,   u = clip(mu * g, -u_limit, +u_limit)

with feedback g per strategy: the mean estimation offset (continuous_ideal),
the exact majority vote sign (mv_ideal), or the majority vote detected over
the air (mv_oac, which needs a communication link).  Coordinate votes occupy
the first three vote slots of the link's m-vote frame; remaining slots carry
absentee votes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, ndtr

from . import channel as chan
from . import detect, sequences

STRATEGIES = ("continuous_ideal", "mv_ideal", "mv_oac")


@dataclass(frozen=True)
class ControlConfig:
    n_sensors: int = 50
    t_update: float = 0.01
    mu: float = 2.0
    u_limit: float = 3.0
    sigma_s2: float = 2.0
    strategy: str = "mv_oac"
    waypoints: tuple = ((10.0, 8.0, 6.0),)
    initial: tuple = (0.0, 0.0, 0.0)
    rounds_per_waypoint: int = 5000
    arrival_radius: float | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if min(self.t_update, self.mu, self.u_limit) <= 0:
            raise ValueError("t_update, mu, u_limit must be > 0")
        if self.sigma_s2 < 0:
            raise ValueError("sigma_s2 must be >= 0")
        if self.n_sensors < 1:
            raise ValueError("n_sensors must be >= 1")
        wps = tuple(tuple(float(c) for c in w) for w in self.waypoints)
        if not wps or any(len(w) != 3 for w in wps):
            raise ValueError("waypoints must be a non-empty list of 3-D points")
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "initial", tuple(float(c) for c in self.initial))
        if len(self.initial) != 3:
            raise ValueError("initial position must be 3-D")
        if self.rounds_per_waypoint < 1:
            raise ValueError("rounds_per_waypoint must be >= 1")
        if self.arrival_radius is not None and not self.arrival_radius > 0:
            raise ValueError("arrival_radius must be > 0")

    @property
    def sigma_s(self) -> float:
        return math.sqrt(self.sigma_s2)


@dataclass(frozen=True)
class UavState:
    position: np.ndarray
    round_index: int = 0
    waypoint_index: int = 0

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64)
        if p.shape != (3,):
            raise ValueError("position must be a 3-vector")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class SensorReading:
    """One sensor's position estimate and its per-coordinate votes."""

    estimate: np.ndarray
    vote: np.ndarray


@dataclass(frozen=True)
class OacLink:
    """Over-the-air vote aggregation between the sensors and the vehicle."""

    m: int = 6
    scheme: str = "proposed"
    channel: chan.ChannelModel = field(
        default_factory=lambda: chan.ChannelModel.from_snr_db("selective_rayleigh", 10.0)
    )
    xi: float = math.inf
    tie_mode: str = "random"
    literal_amplitude: bool = False

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("the link needs at least 3 vote slots")
        if self.scheme not in ("proposed", "goldenbaum"):
            raise ValueError("scheme must be 'proposed' or 'goldenbaum'")

    def transmit(self, votes, rng) -> np.ndarray:
        """Detected majority votes for stacked coordinate votes (..., K, 3)."""
        votes = np.asarray(votes)
        if votes.shape[-1] != 3:
            raise ValueError("expected 3 coordinate votes per sensor")
        full = np.zeros(votes.shape[:-1] + (self.m,), dtype=np.int8)
        full[..., :3] = votes
        K = votes.shape[-2]
        if self.scheme == "proposed":
            L = 2**self.m
            r = np.zeros(votes.shape[:-2] + (L,), dtype=np.complex128)
            for k in range(K):
                amp = sequences.vote_amplitudes(full[..., k, :], self.xi)
                ph = sequences.random_phase_factors(votes.shape[:-2], self.m, rng)
                h = chan.gain_block(self.channel, votes.shape[:-2], L, rng)
                r += h * (amp * ph)
            r += chan.noise_block(self.channel, votes.shape[:-2], L, rng)
            return detect.decide_all(r, self.tie_mode, rng)[..., :3]
        Lb = detect.goldenbaum_layout(self.m)
        n = self.m * Lb
        r = np.zeros(votes.shape[:-2] + (n,), dtype=np.complex128)
        for k in range(K):
            t = detect.goldenbaum_encode(full[..., k, :], Lb, rng, self.literal_amplitude)
            h = chan.gain_block(self.channel, votes.shape[:-2], n, rng)
            r += h * t
        r += chan.noise_block(self.channel, votes.shape[:-2], n, rng)
        return detect.goldenbaum_decode(r, Lb, K)[..., :3]


def take_readings(position, target, n_sensors: int, sigma_s: float, rng) -> list[SensorReading]:
    """Per-sensor readings for one round (single vehicle position)."""
    est, votes = _sense(np.asarray(position)[None, :], np.asarray(target), n_sensors, sigma_s, rng)
    return [SensorReading(estimate=est[0, k], vote=votes[0, k]) for k in range(n_sensors)]


def _sense(positions, target, n_sensors, sigma_s, rng):
    """Estimates and votes for stacked positions (S, 3) -> (S, K, 3) each."""
    S = positions.shape[0]
    err = rng.standard_normal((S, n_sensors, 3)) * sigma_s
    est = positions[:, None, :] + err
    votes = np.sign(est - target[None, None, :]).astype(np.int8)
    return est, votes


def feedback(cfg: ControlConfig, estimates, votes, target, detected=None) -> np.ndarray:
    """Velocity-update feedback g per strategy; shapes (..., K, 3) -> (..., 3)."""
    estimates = np.asarray(estimates)
    if cfg.strategy == "continuous_ideal":
        return estimates.mean(axis=-2) - np.asarray(target)
    if cfg.strategy == "mv_ideal":
        return np.sign(np.asarray(votes).sum(axis=-2)).astype(np.float64)
    if detected is None:
        raise ValueError("mv_oac feedback needs the detected votes from a link")
    return np.asarray(detected, dtype=np.float64)


def velocity(g, cfg: ControlConfig) -> np.ndarray:
    return np.clip(cfg.mu * np.asarray(g), -cfg.u_limit, cfg.u_limit)


def step(state: UavState, u, cfg: ControlConfig, waypoint_index: int | None = None) -> UavState:
    """One control update p <- p - T*u."""
    widx = state.waypoint_index if waypoint_index is None else waypoint_index
    return UavState(
        position=state.position - cfg.t_update * np.asarray(u),
        round_index=state.round_index + 1,
        waypoint_index=widx,
    )


# === vote statistics ===


def vote_probs(d, sigma_s: float) -> tuple[np.ndarray, np.ndarray]:
    """(P(vote=+1), P(vote=-1)) per coordinate at signed distance d to target.

    With continuous Gaussian estimation error the absentee probability is 0;
    sigma_s = 0 degenerates to a hard sign.
    """
    d = np.asarray(d, dtype=np.float64)
    if sigma_s == 0.0:
        alpha = (d > 0).astype(np.float64) + 0.5 * (d == 0)
        return alpha, 1.0 - alpha
    alpha = ndtr(d / sigma_s)
    return alpha, ndtr(-d / sigma_s)


def mv_sign_probs(alpha, beta, n_sensors: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """P(MV = +1), P(MV = -1), P(MV = 0) for K iid +-1 votes.

    MV is +1 when fewer than ceil(K/2) sensors vote -1; the tie mass exists
    only for even K.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    K = n_sensors
    k = np.arange(math.ceil(K / 2))
    comb = np.exp(gammaln(K + 1) - gammaln(k + 1) - gammaln(K - k + 1))
    # plain powers: 0**0 = 1 keeps the k=0 term alive at the boundary
    phi_plus = (comb * alpha[..., None] ** (K - k) * beta[..., None] ** k).sum(axis=-1)
    phi_minus = (comb * alpha[..., None] ** k * beta[..., None] ** (K - k)).sum(axis=-1)
    if K % 2:
        phi_zero = np.zeros_like(phi_plus)
    else:
        comb2 = math.exp(gammaln(K + 1) - 2.0 * gammaln(K // 2 + 1))
        phi_zero = comb2 * (alpha * beta) ** (K // 2)
    return phi_plus, phi_minus, phi_zero


def ultimate_bound(cfg: ControlConfig) -> float:
    """Largest |q| with (phi+(q) - phi-(q)) * q = mu*T/2 for the ideal MV loop.

    The left side grows monotonically in |q| from 0, so the root brackets by
    doubling and closes by bisection.
    """
    target = cfg.mu * cfg.t_update / 2.0

    def lhs(q: float) -> float:
        a, b = vote_probs(np.array(q), cfg.sigma_s)
        pp, pm, _ = mv_sign_probs(a, b, cfg.n_sensors)
        return float((pp - pm) * q)

    hi = max(cfg.sigma_s, 1e-3)
    for _ in range(200):
        if lhs(hi) >= target:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lhs(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi


# === mission execution ===


@dataclass(frozen=True)
class TrajectoryLog:
    """Per-round mission history (S missions in lockstep).

    positions[s, i] is the position after round i (row 0 is the start);
    mv_oac is NaN-filled when the strategy does not use a link.
    """

    t_update: float
    positions: np.ndarray
    velocities: np.ndarray
    feedbacks: np.ndarray
    mv_ideal: np.ndarray
    mv_oac: np.ndarray
    waypoint_index: np.ndarray

    @property
    def n_rounds(self) -> int:
        return self.velocities.shape[1]


def run_missions(
    cfg: ControlConfig, rng, comm: OacLink | None = None, n_runs: int = 1
) -> TrajectoryLog:
    """Run n_runs missions in lockstep off one generator.

    mv_oac strategy requires comm; draws per round are sensor noise first,
    then (for OAC) per-sensor phases and gains in sensor order, then noise,
    then tie resolutions.
    """
    if cfg.strategy == "mv_oac" and comm is None:
        raise ValueError("mv_oac strategy needs an OacLink")
    waypoints = np.asarray(cfg.waypoints)
    n_rounds = cfg.rounds_per_waypoint * len(cfg.waypoints)
    S = n_runs
    pos = np.tile(np.asarray(cfg.initial), (S, 1))
    widx = np.zeros(S, dtype=np.int64)
    rounds_at = np.zeros(S, dtype=np.int64)

    positions = np.empty((S, n_rounds + 1, 3))
    velocities = np.empty((S, n_rounds, 3))
    feedbacks = np.empty((S, n_rounds, 3))
    mv_ideal = np.empty((S, n_rounds, 3), dtype=np.int8)
    mv_oac = np.full((S, n_rounds, 3), np.nan)
    waypoint_hist = np.empty((S, n_rounds), dtype=np.int64)
    positions[:, 0] = pos

    for i in range(n_rounds):
        target = waypoints[widx]
        err = rng.standard_normal((S, cfg.n_sensors, 3)) * cfg.sigma_s
        est = pos[:, None, :] + err
        votes = np.sign(est - target[:, None, :]).astype(np.int8)
        ideal = np.sign(votes.sum(axis=1)).astype(np.int8)
        detected = None
        if cfg.strategy == "mv_oac":
            detected = comm.transmit(votes, rng)
            mv_oac[:, i] = detected
        if cfg.strategy == "continuous_ideal":
            g = est.mean(axis=1) - target
        elif cfg.strategy == "mv_ideal":
            g = ideal.astype(np.float64)
        else:
            g = detected.astype(np.float64)
        u = np.clip(cfg.mu * g, -cfg.u_limit, cfg.u_limit)
        pos = pos - cfg.t_update * u

        positions[:, i + 1] = pos
        velocities[:, i] = u
        feedbacks[:, i] = g
        mv_ideal[:, i] = ideal
        waypoint_hist[:, i] = widx

        rounds_at += 1
        if cfg.arrival_radius is None:
            advance = rounds_at >= cfg.rounds_per_waypoint
        else:
            dist = np.linalg.norm(pos - target, axis=1)
            advance = dist <= cfg.arrival_radius
        advance &= widx < len(cfg.waypoints) - 1
        widx = np.where(advance, widx + 1, widx)
        rounds_at = np.where(advance, 0, rounds_at)

    return TrajectoryLog(
        t_update=cfg.t_update,
        positions=positions,
        velocities=velocities,
        feedbacks=feedbacks,
        mv_ideal=mv_ideal,
        mv_oac=mv_oac,
        waypoint_index=waypoint_hist,
    )


def run_mission(cfg: ControlConfig, rng, comm: OacLink | None = None) -> TrajectoryLog:
    """Single mission; identical to run_missions with n_runs=1."""
    return run_missions(cfg, rng, comm, n_runs=1)
