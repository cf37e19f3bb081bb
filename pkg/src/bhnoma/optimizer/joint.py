"""End-to-end runs: users, channels, schedule, service and the run report."""
from __future__ import annotations

import time

import numpy as np

from ..channel import draw_window
from ..linkmodel import slot_rates, validate_plan
from ..report import RunReport
from ..scenario import ScenarioConfig, generate_users
from .power import objective
from .service import NOMA, OMA, serve_slot
from .timeslots import WindowResult, allocate_timeslots


def min_rate_repair(cfg: ScenarioConfig, result: WindowResult, channels, demands,
                    scheme: str = NOMA) -> list[int]:
    """Lift users below the minimum rate; returns the users left short.

    A short user's beam is lit in the first slot where it is dark and a beam
    position is free, and that slot is re-served with the user forced in.
    Failing that, the first lit slot where the user sat idle is re-served
    with the user forced in. The target is ``min(R_min, D)`` per user.
    """
    M, B0 = cfg.users_per_beam, cfg.max_active_beams
    D = np.asarray(demands, dtype=float)
    need = np.minimum(cfg.min_rate, D)
    plan, hist = result.plan, result.rate_history

    def reserve(t, beams, u):
        Y = D - hist[:t].sum(axis=0)
        sp, _ = serve_slot(cfg, channels[t], Y, beams, scheme, must_serve=[u])
        return sp, slot_rates(sp, channels[t], cfg)

    for u in range(cfg.user_count):
        R = hist.sum(axis=0)
        if R[u] >= need[u]:
            continue
        b = u // M
        options = [t for t in range(cfg.window_slots)
                   if plan.schedule[b, t] == 0 and plan.schedule[:, t].sum() < B0]
        options += [t for t in range(cfg.window_slots)
                    if plan.schedule[b, t] == 1 and plan.slots[t].role[u] == 0]
        for t in options:
            beams = np.flatnonzero(plan.schedule[:, t])
            if b not in beams:
                beams = np.sort(np.append(beams, b))
            sp, r = reserve(t, beams, u)
            trial = hist.copy()
            trial[t] = r
            # keep the change only if nobody else drops below their target
            R_new = trial.sum(axis=0)
            if R_new[u] >= need[u] and not np.any((R_new < need) & (R >= need)):
                plan.slots[t] = sp
                plan.schedule[:, t] = sp.active.astype(np.int8)
                hist[t] = r
                break
    R = hist.sum(axis=0)
    result.objective = objective(R, D)
    return [int(u) for u in np.flatnonzero(R < need)]


def _dinkelbach_summary(result: WindowResult) -> dict:
    traces = result.dinkelbach_traces
    monotone = all(all(b <= a for a, b in zip(tr, tr[1:])) for tr in traces)
    return {"solves": len(traces), "monotone": monotone,
            "converged": bool(result.dinkelbach_converged),
            "max_iterations": max((len(tr) - 1 for tr in traces), default=0)}


def build_report(cfg, seed, scheduler, result: WindowResult, demands, infeasible, started) -> RunReport:
    R = result.rate_history.sum(axis=0)
    D = np.asarray(demands, dtype=float)
    schedule = [[int(b) for b in np.flatnonzero(result.plan.schedule[:, t])]
                for t in range(cfg.window_slots)]
    trace = [float(v) for v in result.objective_trace] or [float(result.objective)]
    final = objective(R, D)
    if final < trace[-1]:
        trace.append(final)
    return RunReport(
        scenario_hash=cfg.digest(), seed=int(seed), scheduler=scheduler, reuse_mode=cfg.reuse_mode,
        demands=[float(x) for x in D], rates=[float(x) for x in R], objective=final,
        objective_trace=trace, schedule=schedule, dinkelbach=_dinkelbach_summary(result),
        infeasible_users=infeasible, passes=result.passes,
        wall_clock=round(time.perf_counter() - started, 6))


def prepare(cfg: ScenarioConfig, seed: int, demands=None):
    users = generate_users(cfg, seed)
    D = np.array([u.demand for u in users]) if demands is None else np.asarray(demands, float)
    channels = draw_window(cfg, users, seed)
    return users, D, channels


def run_joint_optimization(cfg: ScenarioConfig, seed: int | None = None, scheme: str = NOMA,
                           demands=None, validate: bool = True, return_result: bool = False):
    """Full U-NOMA-BH pipeline (or its OMA counterpart) for one seed."""
    seed = cfg.master_seed if seed is None else seed
    started = time.perf_counter()
    users, D, channels = prepare(cfg, seed, demands)
    result = allocate_timeslots(cfg, users, channels, scheme=scheme, demands=D)
    infeasible = min_rate_repair(cfg, result, channels, D, scheme)
    if validate:
        validate_plan(result.plan, cfg)
    name = "unoma" if scheme == NOMA else "oma"
    report = build_report(cfg, seed, name, result, D, infeasible, started)
    return (report, result) if return_result else report


__all__ = ["run_joint_optimization", "min_rate_repair", "build_report", "prepare", "NOMA", "OMA"]
