"""Closed-form outage of a NOMA pair, diversity orders and throughput.

Model of one pair (center user n, edge user m) on K sparse carriers. Each
user's effective gain is ``chi * Z`` with ``Z ~ Gamma(K, 1)``. SNR is
``rho = Ps / sigma^2``. Channel-estimation error adds ``rho * omega`` to the
noise-normalized denominator. A co-channel interference state ``s`` adds
``inr_s`` (interference over noise). Both users decode at thresholds
``eps = 2^R - 1``:

    gamma_{n->m} = rho a_m chi Z_n / (rho a_n chi Z_n + rho omega + 1 + inr_s)
    gamma_n      = rho a_n chi Z_n / (rho omega + 1 + inr_s)
    gamma_m      = rho a_m chi Z_m / (rho a_n chi Z_m + rho omega + 1 + inr_s)

User n is in outage unless both of its tests pass; user m fails when its own
test fails. Conditioned on a state, each event is a Gamma(K, 1) tail beyond a
threshold ``Lambda_s / chi``; the states are mixed with the overlap weights
from :func:`p_avg_overlap`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .channel import gamma_cdf, gamma_sf
from .errors import DegenerateCurve, InfeasiblePowerSplit
from .scenario import ScenarioConfig
from .streams import OVERLAP, substream

CD, PD = "cd", "pd"
IPCSI, PCSI = "ipcsi", "pcsi"
VARIANTS = (CD, PD)
CSI_MODES = (IPCSI, PCSI)


def sinr_threshold(rate, bandwidth=1.0):
    """Decoding threshold ``2^(R/W) - 1``; with W = 1 the rate is in BPCU."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return np.exp2(np.asarray(rate, dtype=float) / bandwidth) - 1.0


@dataclass(frozen=True)
class OutageParams:
    """One operating point. ``rho`` is linear SNR, ``omega`` the error variance."""

    rho: float
    a_n: float = 0.26
    a_m: float = 0.74
    eps_n: float = 1.0
    eps_m: float = float(2.0 ** 1.5 - 1.0)
    omega: float = 0.1
    chi: float = 1.0
    K: int = 4
    kappa: float = 0.2

    @classmethod
    def from_rates(cls, rho, R_n=1.0, R_m=1.5, **kw) -> "OutageParams":
        return cls(rho=rho, eps_n=float(sinr_threshold(R_n)), eps_m=float(sinr_threshold(R_m)), **kw)

    @property
    def variant(self) -> str:
        return PD if self.K == 1 else CD

    @property
    def sic_margin(self) -> float:
        return self.a_m - self.eps_m * self.a_n

    @property
    def feasible(self) -> bool:
        return self.sic_margin > 0 and self.a_n > 0

    @property
    def omega1(self) -> float:
        return self.eps_m * self.omega / self.sic_margin if self.feasible else math.inf

    @property
    def omega2(self) -> float:
        return self.eps_n * self.omega / self.a_n if self.a_n > 0 else math.inf

    @property
    def tau1(self) -> float:
        return self.eps_m / (self.rho * self.sic_margin) if self.feasible else math.inf

    @property
    def tau2(self) -> float:
        return self.eps_n / (self.rho * self.a_n) if self.a_n > 0 else math.inf

    @property
    def tau_m(self) -> float:
        return self.tau1

    @property
    def lambda1(self) -> float:
        return max(self.tau1 + self.omega1, self.tau2 + self.omega2)

    @property
    def lambda2(self) -> float:
        return max(self.tau1, self.tau2)

    def with_(self, **changes) -> "OutageParams":
        return replace(self, **changes)

    def for_variant(self, variant: str, K: int = 4) -> "OutageParams":
        return replace(self, K=1 if variant == PD else K)

    def for_csi(self, csi: str) -> "OutageParams":
        return replace(self, omega=0.0) if csi == PCSI else self


# ---------------------------------------------------------------------------
# interference states


@dataclass(frozen=True)
class OverlapModel:
    """Co-channel interference seen by a user of the target beam.

    The target beam is a disk of radius ``radius`` surrounded by
    ``neighbors`` same-color beams on the first hexagonal ring, at center
    distance ``sqrt(3) * radius``. In a slot where the target is lit, each
    neighbor is co-active with probability ``kappa``. At most
    ``max_coactive`` of them are lit together; a uniformly random subset is
    kept when more are drawn. The state is the nearest co-active neighbor,
    or 0 when none is lit.
    """

    radius: float = 1.0
    neighbors: int = 6
    max_coactive: int = 6

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "OverlapModel":
        return cls(radius=float(cfg.effective_beam_radius),
                   neighbors=min(6, cfg.beam_count - 1),
                   max_coactive=max(cfg.max_active_beams - 1, 0))

    @property
    def centers(self) -> np.ndarray:
        ang = np.pi / 6 + np.arange(self.neighbors) * np.pi / 3
        return math.sqrt(3.0) * self.radius * np.column_stack([np.cos(ang), np.sin(ang)])

    @property
    def state_count(self) -> int:
        return self.neighbors + 1

    def draw_uniforms(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Raw uniforms for n trials: radius, angle, activity, cap priority."""
        return rng.random((n, 2 + 2 * self.neighbors))

    def states(self, u: np.ndarray, kappa: float) -> np.ndarray:
        """State per trial from :meth:`draw_uniforms` output.

        The same uniforms give nested co-active sets as kappa grows, so
        states compared across kappa share their randomness.
        """
        J = self.neighbors
        n = len(u)
        if J == 0 or self.max_coactive == 0:
            return np.zeros(n, dtype=np.int64)
        rad = self.radius * np.sqrt(u[:, 0])
        ang = 2 * np.pi * u[:, 1]
        pos = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        on = u[:, 2:2 + J] < kappa
        if self.max_coactive < J:
            # keep the max_coactive lit neighbors with the smallest priority draw
            prio = np.where(on, u[:, 2 + J:], np.inf)
            rank = np.argsort(np.argsort(prio, axis=1, kind="stable"), axis=1, kind="stable")
            on &= rank < self.max_coactive
        dist = np.linalg.norm(pos[:, None, :] - self.centers[None, :, :], axis=2)
        dist = np.where(on, dist, np.inf)
        nearest = np.argmin(dist, axis=1)
        return np.where(on.any(axis=1), nearest + 1, 0).astype(np.int64)


@dataclass(frozen=True)
class InterferenceWeightSet:
    """Normalized probabilities of the interference states (state 0 = none)."""

    weights: np.ndarray
    inr: np.ndarray
    half_width: np.ndarray
    kappa: float
    trials: int
    radius: float

    @classmethod
    def single(cls, inr: float = 0.0) -> "InterferenceWeightSet":
        """One certain state, e.g. the interference-free case."""
        return cls(weights=np.array([1.0]), inr=np.array([float(inr)]), half_width=np.zeros(1),
                   kappa=0.0, trials=0, radius=1.0)

    @property
    def interfered(self) -> float:
        return float(self.weights[self.inr > 0].sum())


def p_avg_overlap(cfg: ScenarioConfig | None, kappa: float, trials: int = 100_000, seed: int = 1,
                  inr: float = 1.0, model: OverlapModel | None = None,
                  chunk: int = 1 << 16) -> InterferenceWeightSet:
    """Monte Carlo weights of the interference states for overlap ``kappa``.

    Positions are uniform over the target beam disk. Every interfering
    state carries the same interference-to-noise ratio ``inr``. The same
    seed gives the same underlying draws for every kappa.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    if trials < 1:
        raise ValueError("trials must be positive")
    if model is None:
        model = OverlapModel.from_config(cfg) if cfg is not None else OverlapModel()
    counts = np.zeros(model.state_count, dtype=np.int64)
    for c, start in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - start)
        u = model.draw_uniforms(substream(seed, OVERLAP, c), n)
        counts += np.bincount(model.states(u, kappa), minlength=model.state_count)
    w = counts / trials
    hw = 1.96 * np.sqrt(w * (1 - w) / trials)
    inr_s = np.full(model.state_count, float(inr))
    inr_s[0] = 0.0
    return InterferenceWeightSet(weights=w, inr=inr_s, half_width=hw, kappa=float(kappa),
                                 trials=int(trials), radius=model.radius)


# ---------------------------------------------------------------------------
# exact outage


def _thresholds(p: OutageParams, inr: np.ndarray, user: str) -> np.ndarray:
    """Gain threshold per interference state, divided by chi."""
    scale = 1.0 + inr
    if user == "n":
        lam = np.maximum(p.tau1 * scale + p.omega1, p.tau2 * scale + p.omega2)
    else:
        lam = p.tau_m * scale + p.omega1
    return lam / p.chi


def _infeasible(p: OutageParams, user: str) -> bool:
    # user m only needs a positive SIC margin; user n also needs a_n > 0
    if p.sic_margin > 0 and (user == "m" or p.a_n > 0):
        return False
    warnings.warn(InfeasiblePowerSplit(
        f"a_m - eps_m a_n = {p.sic_margin:.4g} <= 0: SIC cannot succeed, outage is 1"), stacklevel=3)
    return True


def _mixture(p: OutageParams, weights: InterferenceWeightSet, user: str) -> float:
    x = _thresholds(p, weights.inr, user)
    # the lower tail is summed directly so tiny probabilities keep their digits
    return float(np.clip(np.dot(weights.weights, gamma_cdf(x, p.K)), 0.0, 1.0))


def _survival_only(p: OutageParams, weights: InterferenceWeightSet, user: str) -> float:
    """Survival-only closed form: no leading ``1 -`` and the Gamma sum started at i = 1.

    For K = 1 only the exponential is kept.
    """
    x = _thresholds(p, weights.inr, user)
    if p.K == 1:
        tail = np.exp(-x)
    else:
        tail = gamma_sf(x, p.K) - np.exp(-x)
    return float(np.dot(weights.weights, tail))


def outage_user_n(params: OutageParams, csi: str = IPCSI, weights: InterferenceWeightSet | None = None,
                  raw_theorem: bool = False) -> float:
    """Outage of the center user: SIC of the partner or its own decode fails."""
    p = params.for_csi(csi)
    weights = weights or InterferenceWeightSet.single()
    if _infeasible(p, "n"):
        return 1.0
    return _survival_only(p, weights, "n") if raw_theorem else _mixture(p, weights, "n")


def outage_user_m(params: OutageParams, csi: str = IPCSI, weights: InterferenceWeightSet | None = None,
                  raw_theorem: bool = False) -> float:
    """Outage of the edge user, which decodes its own signal directly."""
    p = params.for_csi(csi)
    weights = weights or InterferenceWeightSet.single()
    if _infeasible(p, "m"):
        return 1.0
    return _survival_only(p, weights, "m") if raw_theorem else _mixture(p, weights, "m")


def outage(params: OutageParams, user: str, csi: str = IPCSI, weights=None, raw_theorem=False) -> float:
    fn = outage_user_n if user == "n" else outage_user_m
    return fn(params, csi, weights, raw_theorem)


def outage_floor(params: OutageParams, user: str, weights: InterferenceWeightSet | None = None) -> float:
    """Limit of the exact outage as rho -> infinity (error term only)."""
    p = params.with_(rho=math.inf)
    if not p.feasible:
        return 1.0
    x = (max(p.omega1, p.omega2) if user == "n" else p.omega1) / p.chi
    return float(gamma_cdf(x, p.K))


def asymptotic_outage(params: OutageParams, user: str, csi: str = IPCSI,
                      weights: InterferenceWeightSet | None = None, raw: bool = False) -> float:
    """High-SNR approximation: the leading term of the Gamma(K, 1) lower tail.

    For every variant this is ``sum_s w_s (Lambda_s / chi)^K / K!``. The PD
    center user under imperfect CSI uses the own-decode threshold only,
    in a signed form whose magnitude is returned. ``raw=True`` returns the
    signed and survival-only expressions unchanged, for comparison. Away from high SNR the leading
    term overshoots and is clipped to 1.
    """
    p = params.for_csi(csi)
    weights = weights or InterferenceWeightSet.single()
    if not p.feasible:
        return 1.0
    if user == "n" and p.K == 1 and csi == IPCSI:
        lead = (p.omega2 + p.tau2 * (1.0 + weights.inr)) / p.chi
        if raw:
            return float(np.dot(weights.weights, -lead))
        return float(min(abs(np.dot(weights.weights, lead)), 1.0))
    x = _thresholds(p, weights.inr, user)
    lead = x ** p.K / math.factorial(p.K)
    if raw:
        return float(np.dot(weights.weights, 1.0 - lead))
    return float(min(np.dot(weights.weights, lead), 1.0))


# ---------------------------------------------------------------------------
# diversity order and throughput


@dataclass(frozen=True)
class DiversityEstimate:
    slope: float
    half_width: float
    floor: bool
    points: int


def estimate_diversity_order(rho_db, prob, decade_db: float = 10.0, min_points: int = 5,
                             floor_slope: float = 0.1) -> DiversityEstimate:
    """Least-squares slope of -log P against log rho over the top decade.

    The half-width is the 95% Student-t interval of the slope. A slope below
    ``floor_slope`` marks an error floor.
    """
    rho_db = np.asarray(rho_db, dtype=float)
    prob = np.asarray(prob, dtype=float)
    top = rho_db >= rho_db.max() - decade_db
    x, y = rho_db[top] / 10.0, prob[top]
    if np.count_nonzero(y > 0) < min_points or np.any(y <= 0):
        raise DegenerateCurve(f"need {min_points} positive points in the top decade, "
                              f"got {np.count_nonzero(y > 0)} of {len(y)}")
    y = -np.log10(y)
    n = len(x)
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y - y.mean()) / sxx)
    resid = y - y.mean() - slope * xc
    se = math.sqrt(float(np.dot(resid, resid)) / max(n - 2, 1) / sxx)
    hw = float(stats.t.ppf(0.975, max(n - 2, 1)) * se)
    return DiversityEstimate(slope=slope, half_width=hw, floor=slope < floor_slope, points=n)


def system_throughput(P_n, P_m, R_n=1.0, R_m=1.5, variant: str = CD):
    """Delay-limited throughput ``(1 - P_m) R_m + (1 - P_n) R_n``.

    The identity is the same for CD and PD; ``variant`` only labels the
    call.
    """
    P_n = np.asarray(P_n, dtype=float)
    P_m = np.asarray(P_m, dtype=float)
    if np.any((P_n < 0) | (P_n > 1) | (P_m < 0) | (P_m > 1)):
        raise ValueError("outage probabilities must lie in [0, 1]")
    out = (1.0 - P_m) * R_m + (1.0 - P_n) * R_n
    return float(out) if out.ndim == 0 else out
