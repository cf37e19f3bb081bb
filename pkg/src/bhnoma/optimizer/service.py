"""Per-slot service of the lit beams: pairing, carriers and power splits.

``serve_slot`` is the joint power and carrier step run for every slot once
the lit beams are known; ``estimate_rates`` is the cheap interference-model
version used to rank beams before a slot is committed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelState
from ..linkmodel import CENTER, EDGE, SOLO, SlotPlan, _slot_terms, bandwidth_factor, beam_colors, cross_gains, slot_rates
from ..scenario import ScenarioConfig
from .matching import match_subcarriers, unit_patterns
from .power import PairProblem, initial_split, solve_pairs

NOMA = "noma"
OMA = "oma"


@dataclass
class SlotStats:
    dinkelbach_traces: list = field(default_factory=list)
    outer_iterations: int = 0
    converged: bool = True


def eligible(Y: np.ndarray) -> np.ndarray:
    """Users still owed traffic; removed beams carry the +inf sentinel."""
    return (Y > 0) & np.isfinite(Y)


def beam_units(gains: np.ndarray, ok: np.ndarray, offset: int):
    """Rank-symmetric pairs (strongest first) plus the odd median user.

    Returns global ids. Users are ranked by effective gain, ties to the
    lower id; with an odd count the median-ranked user is served alone.
    """
    local = np.flatnonzero(ok)
    if len(local) == 0:
        return [], []
    order = local[np.lexsort((local, -gains[local]))]
    solos = []
    if len(order) % 2:
        mid = len(order) // 2
        solos = [int(order[mid]) + offset]
        order = np.delete(order, mid)
    half = len(order) // 2
    pairs = [(int(n) + offset, int(m) + offset) for n, m in zip(order[:half], order[half:])]
    return pairs, solos


def _carrier_scale(cfg: ScenarioConfig) -> float:
    return cfg.bandwidth_per_carrier * bandwidth_factor(cfg.reuse_mode) / cfg.total_subcarriers


def _layout(cfg: ScenarioConfig, channel: ChannelState, Y, beams, scheme, must_serve=()):
    """Roles and carriers of the lit beams, powers left at their defaults."""
    M, K, Q = cfg.users_per_beam, cfg.subcarriers_per_beam, cfg.max_carriers_per_user
    plan = SlotPlan.empty(cfg)
    plan.active[list(beams)] = True
    gains = channel.norm2
    ok_all = eligible(Y)
    must = np.zeros(len(Y), dtype=bool)
    must[list(must_serve)] = True
    for b in beams:
        sl = slice(b * M, (b + 1) * M)
        ok = ok_all[sl] | must[sl]
        if scheme == OMA:
            local = np.flatnonzero(ok)
            if len(local) == 0:
                continue
            key = np.where(must[sl][local], np.inf, Y[sl][local])
            order = local[np.lexsort((local, -key))]
            chosen = order[: math.ceil(K / Q)]
            for u, pat in zip(chosen, unit_patterns(len(chosen), K, Q)):
                g = b * M + int(u)
                plan.beta[g, pat] = 1
                plan.role[g] = SOLO
                plan.power[g] = 1.0
            continue
        pairs, solos = beam_units(gains[sl], ok, b * M)
        if not pairs and not solos:
            continue
        loc_pairs = [(n - b * M, m - b * M) for n, m in pairs]
        loc_solos = [s - b * M for s in solos]
        match = match_subcarriers(loc_pairs, loc_solos, K, Q, M)
        plan.beta[sl] = match.beta
        for n, m in pairs:
            plan.role[n], plan.role[m] = CENTER, EDGE
            plan.partner[n], plan.partner[m] = m, n
            plan.power[n], plan.power[m] = 0.25, 0.75
        for s in solos:
            plan.role[s] = SOLO
            plan.power[s] = 1.0
    return plan


def _pair_problem(cfg, plan, channel, zeta, Y, centers, edges):
    own, via_partner = cross_gains(plan, channel)
    Ps = cfg.tx_power
    scale = _carrier_scale(cfg)
    counts = plan.beta.sum(axis=1)
    return PairProblem(
        s_n=Ps * own[centers] / zeta[centers],
        s_m=Ps * own[edges] / zeta[edges],
        x_m=Ps * via_partner[edges] / zeta[edges],
        c_n=scale * counts[centers], c_m=scale * counts[edges],
        y_n=Y[centers], y_m=Y[edges])


def serve_slot(cfg: ScenarioConfig, channel: ChannelState, Y: np.ndarray, beams,
               scheme: str = NOMA, must_serve=()) -> tuple[SlotPlan, SlotStats]:
    """Pair, match and power the users of the lit ``beams`` for one slot.

    Users with no residual demand are left idle. Power splits are found by
    the Dinkelbach pair solver against the current interference; when the
    splits move the interference (partners on different carriers) the solve
    is repeated, up to the outer-iteration cap.
    """
    plan = _layout(cfg, channel, Y, beams, scheme, must_serve)
    stats = SlotStats()
    centers = np.flatnonzero(plan.role == CENTER)
    if len(centers) == 0:
        return plan, stats
    edges = plan.partner[centers]
    Yc = np.where(eligible(Y), Y, 0.0)
    a0 = None
    for it in range(1, cfg.max_outer_iterations + 1):
        intra, inter, ipcsi = _slot_terms(plan, channel, cfg)
        zeta = intra + inter + ipcsi + cfg.noise_power
        prob = _pair_problem(cfg, plan, channel, zeta, Yc, centers, edges)
        res = solve_pairs(prob, max_iter=cfg.max_dinkelbach_iterations, a0=a0, warn=False)
        stats.dinkelbach_traces.append(res.trace)
        stats.converged &= res.converged
        a_n = res.a_n
        moved = np.max(np.abs(a_n - plan.power[centers]))
        plan.power[centers] = a_n
        plan.power[edges] = 1.0 - a_n
        stats.outer_iterations = it
        if moved <= 1e-6 or _interference_fixed(plan):
            break
        a0 = a_n
    return plan, stats


def _interference_fixed(plan: SlotPlan) -> bool:
    """True when every pair shares one pattern, so splits cannot move loads."""
    centers = np.flatnonzero(plan.role == CENTER)
    return bool(np.array_equal(plan.beta[centers], plan.beta[plan.partner[centers]]))


def estimate_rates(cfg: ScenarioConfig, channel: ChannelState, Y: np.ndarray, beams,
                   scheme: str = NOMA, co_active: int | None = None) -> np.ndarray:
    """Approximate per-user slot rates if ``beams`` were lit (U,) array.

    Inter-beam interference is replaced by ``co_active`` average interferers
    of the same color on the user's own carriers; splits come from a coarse
    grid of the pair objective.
    """
    if co_active is None:
        same = np.mean(beam_colors(cfg.beam_count, cfg.reuse_mode) == 0)
        co_active = max(cfg.max_active_beams - 1, 0) * same
    plan = _layout(cfg, channel, Y, beams, scheme)
    rates = np.zeros(cfg.user_count)
    served = plan.role != 0
    if not served.any():
        return rates
    intra, _, ipcsi = _slot_terms(plan, channel, cfg)
    own, _ = cross_gains(plan, channel)
    inter = cfg.interbeam_attenuation * co_active * cfg.tx_power * own
    zeta = intra + inter + ipcsi + cfg.noise_power
    centers = np.flatnonzero(plan.role == CENTER)
    if len(centers):
        edges = plan.partner[centers]
        Yc = np.where(eligible(Y), Y, 0.0)
        prob = _pair_problem(cfg, plan, channel, zeta, Yc, centers, edges)
        a_n = initial_split(prob, grid_points=17)
        plan.power[centers] = a_n
        plan.power[edges] = 1.0 - a_n
    own, via = cross_gains(plan, channel)
    Ps = cfg.tx_power
    a = plan.power
    a_p = np.where(plan.partner >= 0, a[np.maximum(plan.partner, 0)], 0.0)
    gamma = np.where(plan.role == EDGE, Ps * own * a / (Ps * via * a_p + zeta), Ps * own * a / zeta)
    rates[served] = _carrier_scale(cfg) * plan.beta.sum(axis=1)[served] * np.log2(1.0 + gamma[served])
    return rates
