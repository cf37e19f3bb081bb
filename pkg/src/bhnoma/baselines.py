"""Reference schedulers: OMA-BH, Max-SINR-BH, periodic BH, and reuse coloring."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .linkmodel import SlotPlan, bandwidth_factor, beam_colors, validate_plan
from .optimizer.joint import build_report, min_rate_repair, prepare, run_joint_optimization
from .optimizer.service import NOMA, OMA, eligible
from .optimizer.timeslots import run_window
from .scenario import REUSE_ALIASES, ScenarioConfig

SCHEDULERS = ("unoma", "oma", "maxsinr", "periodic")


@dataclass(frozen=True)
class ReuseColoring:
    colors: np.ndarray           # per-beam tag; equal tags interfere
    polarization: np.ndarray     # 0 = RHCP, 1 = LHCP
    subband: np.ndarray
    bandwidth_factor: float


def apply_reuse_mode(plan_or_beams, mode: str) -> ReuseColoring:
    """Polarization and sub-band tags per beam for a reuse mode.

    Accepts a beam count, or a plan whose schedule fixes the beam count.
    """
    mode = REUSE_ALIASES.get(mode, mode)
    if isinstance(plan_or_beams, (int, np.integer)):
        B = int(plan_or_beams)
    elif isinstance(plan_or_beams, SlotPlan):
        B = len(plan_or_beams.active)
    else:
        B = np.asarray(plan_or_beams.schedule).shape[0]
    colors = beam_colors(B, mode)
    idx = np.arange(B)
    pol = idx % 2 if mode in ("two_color", "four_color") else np.zeros(B, dtype=int)
    band = (idx // 2) % 2 if mode == "four_color" else np.zeros(B, dtype=int)
    return ReuseColoring(colors=colors, polarization=pol, subband=band,
                         bandwidth_factor=bandwidth_factor(mode))


def beam_sinr_scores(cfg: ScenarioConfig, channel, Y) -> np.ndarray:
    """Best interference-free SINR among each beam's users still owed traffic."""
    M = cfg.users_per_beam
    snr = cfg.tx_power * channel.norm2 / (
        cfg.noise_power + cfg.channel_error_variance * cfg.tx_power * channel.chi ** 2)
    snr = np.where(eligible(Y), snr, -np.inf)
    return snr.reshape(-1, M).max(axis=1)


def max_sinr_select(cfg: ScenarioConfig):
    def select(t, res, channel):
        scores = beam_sinr_scores(cfg, channel, res.Y)
        idx = np.arange(cfg.beam_count)
        order = np.lexsort((idx, -scores))
        return np.sort([int(b) for b in order[: cfg.max_active_beams] if np.isfinite(scores[b])])
    return select


def periodic_schedule(cfg: ScenarioConfig) -> np.ndarray:
    """(B, T) round-robin: slot t lights the group (t mod ceil(B/B0))."""
    B, B0, T = cfg.beam_count, cfg.max_active_beams, cfg.window_slots
    groups = math.ceil(B / B0)
    sched = np.zeros((B, T), dtype=np.int8)
    for t in range(T):
        g = t % groups
        sched[g * B0: min((g + 1) * B0, B), t] = 1
    return sched


def periodic_select(cfg: ScenarioConfig):
    sched = periodic_schedule(cfg)
    return lambda t, res, channel: np.flatnonzero(sched[:, t])


def _baseline(cfg, seed, name, select_factory, scheme=NOMA, demands=None, validate=True):
    seed = cfg.master_seed if seed is None else seed
    started = time.perf_counter()
    users, D, channels = prepare(cfg, seed, demands)
    result = run_window(cfg, channels, D, select_factory(cfg), scheme)
    result.objective_trace = [result.objective]
    infeasible = min_rate_repair(cfg, result, channels, D, scheme)
    if validate:
        validate_plan(result.plan, cfg)
    return build_report(cfg, seed, name, result, D, infeasible, started)


def oma_bh(cfg: ScenarioConfig, seed=None, demands=None, validate=True):
    """Same slot allocation as U-NOMA-BH, orthogonal single-user service."""
    report = run_joint_optimization(cfg, seed, scheme=OMA, demands=demands, validate=validate)
    return report


def max_sinr_bh(cfg: ScenarioConfig, seed=None, demands=None, validate=True):
    return _baseline(cfg, seed, "maxsinr", max_sinr_select, demands=demands, validate=validate)


def periodic_bh(cfg: ScenarioConfig, seed=None, demands=None, validate=True):
    return _baseline(cfg, seed, "periodic", periodic_select, demands=demands, validate=validate)


def run_scheduler(name: str, cfg: ScenarioConfig, seed=None, demands=None, validate=True):
    if name == "unoma":
        return run_joint_optimization(cfg, seed, demands=demands, validate=validate)
    if name == "oma":
        return oma_bh(cfg, seed, demands, validate)
    if name == "maxsinr":
        return max_sinr_bh(cfg, seed, demands, validate)
    if name == "periodic":
        return periodic_bh(cfg, seed, demands, validate)
    raise ValueError(f"unknown scheduler {name!r}; choose from {SCHEDULERS}")
