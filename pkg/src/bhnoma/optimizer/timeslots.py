"""Beam time-slot allocation on residual demand.

Each beam first receives one pre-allocated slot. The remaining capacity of
every slot goes to the beams chosen by a relaxed problem: with ``r_b`` the
estimated rates a beam would deliver if lit,

    min_delta  sum_b sum_{u in b} (delta_b r_u - Y_u)^2
    s.t.       sum_b delta_b <= capacity,   0 <= delta_b <= 1,

solved exactly through its Lagrange multiplier, then rounded by keeping the
largest fractional values among beams whose estimated service lowers their
squared gap. Beams whose users are all served leave the
candidate set for the rest of the window. The whole window is re-run with
per-beam correction factors (delivered over estimated rate) learned from the
previous pass, up to the pass cap or until the schedule repeats; the best
pass is kept.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelState
from ..errors import WindowExhausted
from ..linkmodel import ResourcePlan, slot_rates
from ..scenario import ScenarioConfig
from .power import objective
from .service import NOMA, eligible, estimate_rates, serve_slot

REMOVED = np.inf
# bounds on the learned delivered/estimated ratio, so no beam is frozen out
CORRECTION_RANGE = (0.05, 2.0)


def residual_demand(D, rate_history, t: int) -> np.ndarray:
    """D - sum of the rates of slots 0..t-1 (not floored)."""
    D = np.asarray(D, dtype=float)
    hist = np.asarray(rate_history, dtype=float)
    if t <= 0 or hist.size == 0:
        return D.copy()
    return D - hist[:t].sum(axis=0)


@dataclass
class ResidualDemand:
    """Running residual per user; removed beams hold the +inf sentinel."""

    Y: np.ndarray
    users_per_beam: int
    removed: np.ndarray = None

    def __post_init__(self):
        if self.removed is None:
            self.removed = np.zeros(len(self.Y) // self.users_per_beam, dtype=bool)

    def beam_view(self) -> np.ndarray:
        return self.Y.reshape(-1, self.users_per_beam)

    def serve(self, rates):
        live = np.isfinite(self.Y)
        self.Y[live] -= rates[live]

    def remove_satisfied(self):
        """Drop beams with nothing left to send; their residuals become +inf."""
        Yb = self.beam_view()
        done = ~self.removed & np.all(Yb <= 0, axis=1)
        self.removed |= done
        Yb[done] = REMOVED
        return np.flatnonzero(done)

    def needy(self) -> np.ndarray:
        return ~self.removed & np.any(eligible(self.beam_view()), axis=1)


def relaxed_slot_shares(r_hat: np.ndarray, Y: np.ndarray, capacity: float,
                        tol: float = 1e-12) -> np.ndarray:
    """Exact minimizer of the relaxed per-slot problem.

    ``r_hat`` and ``Y`` are (n_beams, M) with nonnegative residuals. Each
    beam's term is ``A_b d^2 - 2 C_b d + const`` with ``A_b = sum r^2`` and
    ``C_b = sum r Y``; the capacity multiplier is found by bisection.
    """
    A = np.sum(r_hat ** 2, axis=1)
    C = np.sum(r_hat * Y, axis=1)
    pos = A > 0

    def shares(lam):
        d = np.zeros_like(A)
        d[pos] = np.clip((C[pos] - 0.5 * lam) / A[pos], 0.0, 1.0)
        return d

    d = shares(0.0)
    if d.sum() <= capacity + tol:
        return d
    lo, hi = 0.0, 2.0 * float(np.max(C[pos]))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if shares(mid).sum() > capacity:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(hi, 1.0):
            break
    return shares(hi)


def round_shares(shares: np.ndarray, gains: np.ndarray, capacity: int) -> np.ndarray:
    """Indices of the beams kept: largest share, then largest gain, then lowest index."""
    idx = np.arange(len(shares))
    order = np.lexsort((idx, -gains, -shares))
    keep = [int(i) for i in order if shares[i] > 0][:capacity]
    return np.array(sorted(keep), dtype=int)


@dataclass
class WindowResult:
    plan: ResourcePlan
    rate_history: np.ndarray            # (T, U)
    objective: float
    objective_trace: list = field(default_factory=list)
    dinkelbach_traces: list = field(default_factory=list)
    passes: int = 1
    dinkelbach_converged: bool = True
    removed_beams: list = field(default_factory=list)


def pre_allocation(cfg: ScenarioConfig) -> np.ndarray:
    """Slot index pre-assigned to every beam (beam b -> slot b // B0), -1 if none."""
    slot = np.arange(cfg.beam_count) // cfg.max_active_beams
    return np.where(slot < cfg.window_slots, slot, -1)


def _slots(T):
    t = 0
    while True:
        if t >= T:
            raise WindowExhausted(f"all {T} slots assigned")
        yield t
        t += 1


def run_window(cfg: ScenarioConfig, channels: list[ChannelState], demands, select, scheme=NOMA):
    """Serve the window slot by slot with ``select(t, residual, channel)`` picking beams."""
    plan = ResourcePlan.empty(cfg)
    hist = np.zeros((cfg.window_slots, cfg.user_count))
    res = ResidualDemand(np.asarray(demands, dtype=float).copy(), cfg.users_per_beam)
    traces, converged = [], True
    slots = _slots(cfg.window_slots)
    while True:
        try:
            t = next(slots)
        except (WindowExhausted, StopIteration):
            break
        res.remove_satisfied()
        beams = np.asarray(select(t, res, channels[t]), dtype=int)
        sp, stats = serve_slot(cfg, channels[t], res.Y, beams, scheme)
        r = slot_rates(sp, channels[t], cfg)
        plan.slots[t] = sp
        plan.schedule[beams, t] = 1
        hist[t] = r
        res.serve(r)
        traces.extend(stats.dinkelbach_traces)
        converged &= stats.converged
    R = hist.sum(axis=0)
    return WindowResult(plan=plan, rate_history=hist, objective=objective(R, demands),
                        dinkelbach_traces=traces, dinkelbach_converged=converged,
                        removed_beams=[int(b) for b in np.flatnonzero(res.removed)])


def allocate_timeslots(cfg: ScenarioConfig, users, channels: list[ChannelState],
                       scheme: str = NOMA, demands=None) -> WindowResult:
    """Pre-allocation plus relaxed dynamic allocation, repeated over passes."""
    D = np.array([u.demand for u in users]) if demands is None else np.asarray(demands, float)
    B, M, B0 = cfg.beam_count, cfg.users_per_beam, cfg.max_active_beams
    pre = pre_allocation(cfg)
    correction = np.ones(B)

    def make_select(record):
        def select(t, res: ResidualDemand, channel):
            forced = np.flatnonzero(pre == t)
            capacity = B0 - len(forced)
            cand = np.flatnonzero(res.needy() & (pre != t))
            if capacity <= 0 or len(cand) == 0:
                return forced
            est = estimate_rates(cfg, channel, res.Y, cand, scheme).reshape(B, M)
            r_hat = est[cand] * correction[cand, None]
            Yc = np.maximum(np.where(np.isfinite(res.beam_view()[cand]), res.beam_view()[cand], 0.0), 0.0)
            shares = relaxed_slot_shares(r_hat, Yc, capacity)
            gain = np.sum(Yc ** 2 - (r_hat - Yc) ** 2, axis=1)
            # a beam whose estimated service would widen its gap stays dark
            shares = np.where(gain > 0, shares, 0.0)
            chosen = cand[round_shares(shares, gain, capacity)]
            record.append((t, chosen, est[chosen].sum(axis=1)))
            return np.sort(np.concatenate([forced, chosen]))
        return select

    best, trace, prev_sched = None, [], None
    all_traces, converged = [], True
    for p in range(1, cfg.max_timeslot_iterations + 1):
        record = []
        result = run_window(cfg, channels, D, make_select(record), scheme)
        all_traces.extend(result.dinkelbach_traces)
        converged &= result.dinkelbach_converged
        if best is None or result.objective < best.objective:
            best = result
        trace.append(best.objective)
        sched = result.plan.schedule
        if prev_sched is not None and np.array_equal(sched, prev_sched):
            break
        prev_sched = sched.copy()
        # learn delivered/estimated ratios of the dynamically chosen beams
        est_sum, got_sum = np.zeros(B), np.zeros(B)
        for t, chosen, est in record:
            est_sum[chosen] += est
            got_sum[chosen] += result.rate_history[t].reshape(B, M)[chosen].sum(axis=1)
        seen = est_sum > 0
        ratio = got_sum / np.where(seen, est_sum, 1.0)
        correction = np.where(seen, np.clip(ratio, CORRECTION_RANGE[0], CORRECTION_RANGE[1]), correction)
    best.objective_trace = trace
    best.passes = p
    best.dinkelbach_traces = all_traces
    best.dinkelbach_converged = converged
    return best
