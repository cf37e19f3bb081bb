"""Independent reference computations used by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from bhnoma.linkmodel import EDGE
from bhnoma.optimizer.service import NOMA


def loop_interference(plan, channel, cfg):
    """Per-user intra, inter and error terms by explicit loops."""
    B, M = cfg.beam_count, cfg.users_per_beam
    U, K = plan.beta.shape
    G = channel.gain
    colors = {"one_color": [0] * B, "two_color": [b % 2 for b in range(B)],
              "four_color": [b % 4 for b in range(B)]}[cfg.reuse_mode]
    intra, inter = np.zeros(U), np.zeros(U)
    for u in range(U):
        b = u // M
        if not plan.active[b]:
            continue
        for k in range(K):
            if not plan.beta[u, k]:
                continue
            for v in range(b * M, (b + 1) * M):
                if v != u and v != plan.partner[u] and plan.beta[v, k]:
                    intra[u] += G[u, k] * cfg.tx_power * plan.power[v]
            for b2 in range(B):
                if b2 == b or not plan.active[b2] or colors[b2] != colors[b]:
                    continue
                for v in range(b2 * M, (b2 + 1) * M):
                    if plan.beta[v, k]:
                        inter[u] += cfg.interbeam_attenuation * G[u, k] * cfg.tx_power * plan.power[v]
    err = cfg.channel_error_variance * cfg.tx_power * channel.chi ** 2
    return intra, inter, err


def loop_rates(plan, channel, cfg):
    """Slot rates from the SINR definitions, one user at a time."""
    intra, inter, err = loop_interference(plan, channel, cfg)
    zeta = intra + inter + err + cfg.noise_power
    G = channel.gain
    Ps = cfg.tx_power
    bf = 0.5 if cfg.reuse_mode == "four_color" else 1.0
    scale = cfg.bandwidth_per_carrier * bf / cfg.total_subcarriers
    rates = np.zeros(len(zeta))
    for u in range(len(zeta)):
        if plan.role[u] == 0 or not plan.active[u // cfg.users_per_beam]:
            continue
        own = sum(G[u, k] for k in range(G.shape[1]) if plan.beta[u, k])
        if plan.role[u] == EDGE:
            p = plan.partner[u]
            via = sum(G[u, k] for k in range(G.shape[1]) if plan.beta[u, k] and plan.beta[p, k])
            sinr = Ps * own * plan.power[u] / (Ps * via * plan.power[p] + zeta[u])
        else:
            sinr = Ps * own * plan.power[u] / zeta[u]
        rates[u] = scale * plan.beta[u].sum() * np.log2(1.0 + sinr)
    return rates


def all_schedules(B, B0, T):
    """Every (B, T) binary schedule with at most B0 lit beams per slot."""
    cols = [c for r in range(B0 + 1) for c in itertools.combinations(range(B), r)]
    for choice in itertools.product(cols, repeat=T):
        sched = np.zeros((B, T), dtype=np.int8)
        for t, beams in enumerate(choice):
            sched[list(beams), t] = 1
        yield sched


def exhaustive_schedule_search(cfg, channels, demands, scheme=NOMA):
    """Best objective over all schedules, each served slot by slot.

    Every slot uses the package's per-slot service for the beams the
    schedule lights, then the same minimum-rate repair; only the choice of
    lit beams is searched.
    """
    from bhnoma.optimizer.joint import min_rate_repair
    from bhnoma.optimizer.timeslots import run_window

    best, best_sched = np.inf, None
    for sched in all_schedules(cfg.beam_count, cfg.max_active_beams, cfg.window_slots):
        result = run_window(cfg, channels, demands, lambda t, res, ch, s=sched: np.flatnonzero(s[:, t]), scheme)
        min_rate_repair(cfg, result, channels, demands, scheme)
        if result.objective < best:
            best, best_sched = result.objective, sched
    return best, best_sched


def min_overlap_oracle(units, K, Q, n_users):
    """Smallest non-partner collision count over every carrier assignment.

    Each unit (a pair or a lone user) takes one nonempty set of at most Q
    carriers, shared by all of its users.
    """
    from bhnoma.optimizer.matching import overlap_count

    subsets = [s for r in range(1, Q + 1) for s in itertools.combinations(range(K), r)]
    pairs = [u for u in units if len(u) == 2]
    best = None
    for choice in itertools.product(subsets, repeat=len(units)):
        beta = np.zeros((n_users, K), dtype=int)
        for unit, pat in zip(units, choice):
            for u in unit:
                beta[u, list(pat)] = 1
        c = overlap_count(beta, pairs)
        best = c if best is None else min(best, c)
    return best
