"""Interference aggregates, SINRs, per-slot rates and window capacity.

A :class:`SlotPlan` stores one slot's decisions in flat per-user arrays so
that every SINR of the slot is evaluated in a few vectorized passes:

* ``beta[u, k]``  carrier k assigned to user u (the sparse codeword g_u);
* ``power[u]``    share of the beam power Ps used by u (a_n, a_m, or 1 for a
  user served alone);
* ``partner[u]``  global id of u's NOMA partner, or -1;
* ``role[u]``     IDLE, CENTER (n, decodes its partner first), EDGE (m) or SOLO.

User ``u`` belongs to beam ``u // M``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelState
from .errors import InactiveBeam, PlanViolation
from .scenario import ScenarioConfig

IDLE, CENTER, EDGE, SOLO = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# reuse coloring

def beam_colors(beam_count: int, mode: str) -> np.ndarray:
    """Color tag per beam; only beams with equal tags interfere."""
    idx = np.arange(beam_count)
    if mode == "one_color":
        return np.zeros(beam_count, dtype=int)
    if mode == "two_color":
        return idx % 2
    if mode == "four_color":
        return idx % 4
    raise ValueError(f"unknown reuse mode {mode!r}")


def bandwidth_factor(mode: str) -> float:
    """Share of W usable per carrier; four colors split the band in two."""
    return 0.5 if mode == "four_color" else 1.0


# ---------------------------------------------------------------------------
# plans

@dataclass
class SlotPlan:
    active: np.ndarray       # (B,) bool
    beta: np.ndarray         # (U, K) int8
    power: np.ndarray        # (U,) float
    partner: np.ndarray      # (U,) int
    role: np.ndarray         # (U,) int8

    @classmethod
    def empty(cls, cfg: ScenarioConfig) -> "SlotPlan":
        U, K = cfg.user_count, cfg.subcarriers_per_beam
        return cls(active=np.zeros(cfg.beam_count, dtype=bool),
                   beta=np.zeros((U, K), dtype=np.int8),
                   power=np.zeros(U),
                   partner=np.full(U, -1),
                   role=np.zeros(U, dtype=np.int8))

    def pairs(self) -> list[tuple[int, int]]:
        centers = np.flatnonzero(self.role == CENTER)
        return [(int(n), int(self.partner[n])) for n in centers]

    def solos(self) -> list[int]:
        return [int(u) for u in np.flatnonzero(self.role == SOLO)]

    def a_n(self) -> np.ndarray:
        return np.array([self.power[n] for n, _ in self.pairs()])

    def copy(self) -> "SlotPlan":
        return SlotPlan(self.active.copy(), self.beta.copy(), self.power.copy(),
                        self.partner.copy(), self.role.copy())


@dataclass
class ResourcePlan:
    """Decisions over the whole window: schedule plus one SlotPlan per slot."""

    schedule: np.ndarray               # (B, T) int8 binary
    slots: list = field(default_factory=list)

    @classmethod
    def empty(cls, cfg: ScenarioConfig) -> "ResourcePlan":
        return cls(schedule=np.zeros((cfg.beam_count, cfg.window_slots), dtype=np.int8),
                   slots=[SlotPlan.empty(cfg) for _ in range(cfg.window_slots)])


def validate_plan(plan: ResourcePlan, cfg: ScenarioConfig) -> None:
    """Raise :class:`PlanViolation` unless every hard constraint holds exactly.

    Checked: binary schedule with at most B0 beams per slot; every user has at
    most Q carriers and none when its beam is dark; paired users share a
    carrier; a_n <= a_m and a_n + a_m == 1 in floating point.
    """
    B, T, M, Q = cfg.beam_count, cfg.window_slots, cfg.users_per_beam, cfg.max_carriers_per_user
    sched = np.asarray(plan.schedule)
    if sched.shape != (B, T):
        raise PlanViolation(f"schedule shape {sched.shape} != {(B, T)}")
    if not np.isin(sched, (0, 1)).all():
        raise PlanViolation("schedule must be binary")
    per_slot = sched.sum(axis=0)
    if (per_slot > cfg.max_active_beams).any():
        t = int(np.argmax(per_slot > cfg.max_active_beams))
        raise PlanViolation(f"slot {t}: {per_slot[t]} active beams > B0={cfg.max_active_beams}")
    if len(plan.slots) != T:
        raise PlanViolation("one SlotPlan per slot required")
    for t, sp in enumerate(plan.slots):
        if not np.array_equal(sp.active.astype(np.int8), sched[:, t]):
            raise PlanViolation(f"slot {t}: active flags disagree with schedule")
        if not np.isin(sp.beta, (0, 1)).all():
            raise PlanViolation(f"slot {t}: carrier matrix must be binary")
        counts = sp.beta.sum(axis=1)
        user_on = np.repeat(sp.active, M)
        if (counts > Q * user_on).any():
            u = int(np.argmax(counts > Q * user_on))
            raise PlanViolation(f"slot {t}: user {u} holds {counts[u]} carriers, limit {Q * user_on[u]}")
        if (sp.role[~user_on] != IDLE).any() or (sp.power[~user_on] != 0).any():
            raise PlanViolation(f"slot {t}: user of a dark beam is scheduled")
        served = sp.role != IDLE
        if (counts[served] < 1).any():
            raise PlanViolation(f"slot {t}: served user without a carrier")
        if (counts[~served] != 0).any():
            raise PlanViolation(f"slot {t}: idle user holds carriers")
        for n, m in sp.pairs():
            if not 0 <= m < len(sp.role) or sp.role[m] != EDGE or sp.partner[m] != n:
                raise PlanViolation(f"slot {t}: pair ({n}, {m}) is not mutual")
            if n // M != m // M:
                raise PlanViolation(f"slot {t}: pair ({n}, {m}) spans two beams")
            if int(np.dot(sp.beta[n], sp.beta[m])) < 1:
                raise PlanViolation(f"slot {t}: pair ({n}, {m}) shares no carrier")
            an, am = sp.power[n], sp.power[m]
            if not (0 <= an <= am) or an + am != 1.0:
                raise PlanViolation(f"slot {t}: power split ({an!r}, {am!r}) off the simplex")
        edges = np.flatnonzero(sp.role == EDGE)
        for m in edges:
            if sp.role[sp.partner[m]] != CENTER:
                raise PlanViolation(f"slot {t}: edge user {m} without a center partner")
        solos = sp.role == SOLO
        if (sp.power[solos] != 1.0).any():
            raise PlanViolation(f"slot {t}: solo user not at full beam power")


# ---------------------------------------------------------------------------
# SINR building blocks

@dataclass(frozen=True)
class InterferenceBudget:
    """Per-user interference of one beam in one slot (arrays over its M users)."""

    intra: np.ndarray
    inter: np.ndarray
    imperfect_csi: np.ndarray
    noise: float

    @property
    def zeta(self) -> np.ndarray:
        return self.intra + self.inter + self.imperfect_csi + self.noise


def _slot_terms(plan: SlotPlan, channel: ChannelState, cfg: ScenarioConfig):
    """Vectorized interference for every user of the slot."""
    B, M = cfg.beam_count, cfg.users_per_beam
    G = channel.gain                                     # (U, K)
    beta = plan.beta.astype(float)
    P = cfg.tx_power * plan.power                        # (U,)
    tx = P[:, None] * beta                               # (U, K) transmitted load
    txb = tx.reshape(B, M, -1)
    txb[~plan.active] = 0.0
    load = txb.sum(axis=1)                               # (B, K)
    # sum over explicit "other" sets so an empty set gives exactly zero
    local = np.arange(M)
    partner_local = np.where(plan.partner >= 0, plan.partner % M, -1).reshape(B, M)
    others = (local[None, None, :] != local[None, :, None]) & \
             (local[None, None, :] != partner_local[:, :, None])          # (B, M, M)
    intra_load = np.einsum("bij,bjk->bik", others.astype(float), txb).reshape(len(P), -1)
    colors = beam_colors(B, cfg.reuse_mode)
    coupled = (colors[:, None] == colors[None, :]) & ~np.eye(B, dtype=bool) & plan.active[None, :]
    inter_load = (coupled.astype(float) @ load)[np.arange(len(P)) // M]
    seen = beta * G
    intra = np.einsum("uk,uk->u", seen, intra_load)
    inter = cfg.interbeam_attenuation * np.einsum("uk,uk->u", seen, inter_load)
    ipcsi = cfg.channel_error_variance * cfg.tx_power * channel.chi ** 2
    return intra, inter, ipcsi


def interference(plan: SlotPlan, channel: ChannelState, cfg: ScenarioConfig, beam: int) -> InterferenceBudget:
    if not plan.active[beam]:
        raise InactiveBeam(f"beam {beam} is dark in this slot")
    M = cfg.users_per_beam
    intra, inter, ipcsi = _slot_terms(plan, channel, cfg)
    sl = slice(beam * M, (beam + 1) * M)
    return InterferenceBudget(intra=intra[sl], inter=inter[sl], imperfect_csi=ipcsi[sl],
                              noise=cfg.noise_power)


def sinr_cross(g_n_on_m, g_n_on_n, a_n, a_m, tx_power, zeta_n):
    """SINR of the edge user's signal seen at the center user (before SIC)."""
    return tx_power * g_n_on_m * a_m / (tx_power * g_n_on_n * a_n + zeta_n)


def sinr_n(g_n_on_n, a_n, tx_power, zeta_n):
    """SINR of the center user after removing its partner's signal."""
    return tx_power * g_n_on_n * a_n / zeta_n


def sinr_m(g_m_on_m, g_m_on_n, a_n, a_m, tx_power, zeta_m):
    """SINR of the edge user treating its partner's signal as noise."""
    return tx_power * g_m_on_m * a_m / (tx_power * g_m_on_n * a_n + zeta_m)


def rate_per_slot(n_carriers, sinr, bandwidth, total_subcarriers):
    """sum_k (W beta_k / N) log2(1 + gamma) with a per-user gamma."""
    return bandwidth / total_subcarriers * np.asarray(n_carriers) * np.log2(1.0 + np.asarray(sinr))


def cross_gains(plan: SlotPlan, channel: ChannelState):
    """Own-pattern gain and the gain seen through the partner's pattern."""
    G = channel.gain
    beta = plan.beta.astype(float)
    own = np.einsum("uk,uk->u", beta, G)
    pb = beta[np.maximum(plan.partner, 0)]
    via_partner = np.where(plan.partner >= 0, np.einsum("uk,uk->u", pb, G), 0.0)
    return own, via_partner


def slot_sinrs(plan: SlotPlan, channel: ChannelState, cfg: ScenarioConfig):
    """Per-user decoding SINR and, for center users, the SIC-stage SINR."""
    intra, inter, ipcsi = _slot_terms(plan, channel, cfg)
    zeta = intra + inter + ipcsi + cfg.noise_power
    own, via_partner = cross_gains(plan, channel)
    Ps = cfg.tx_power
    a = plan.power
    a_partner = np.where(plan.partner >= 0, a[np.maximum(plan.partner, 0)], 0.0)
    gamma = np.zeros_like(a)
    sic = np.full_like(a, np.inf)
    c = plan.role == CENTER
    e = plan.role == EDGE
    s = plan.role == SOLO
    gamma[c] = sinr_n(own[c], a[c], Ps, zeta[c])
    sic[c] = sinr_cross(via_partner[c], own[c], a[c], a_partner[c], Ps, zeta[c])
    gamma[e] = sinr_m(own[e], via_partner[e], a_partner[e], a[e], Ps, zeta[e])
    gamma[s] = sinr_n(own[s], a[s], Ps, zeta[s])
    return gamma, sic, zeta


def slot_rates(plan: SlotPlan, channel: ChannelState, cfg: ScenarioConfig) -> np.ndarray:
    gamma, _, _ = slot_sinrs(plan, channel, cfg)
    W = cfg.bandwidth_per_carrier * bandwidth_factor(cfg.reuse_mode)
    return rate_per_slot(plan.beta.sum(axis=1), gamma, W, cfg.total_subcarriers)


def rate_history(plan: ResourcePlan, channels, cfg: ScenarioConfig) -> np.ndarray:
    """(T, U) achieved rates; dark beams contribute zero."""
    return np.array([slot_rates(sp, ch, cfg) for sp, ch in zip(plan.slots, channels)])


def total_capacity(plan: ResourcePlan, channels, cfg: ScenarioConfig) -> np.ndarray:
    """Window capacity per user: the sum of its per-slot rates."""
    if not plan.slots:
        return np.zeros(cfg.user_count)
    return rate_history(plan, channels, cfg).sum(axis=0)
