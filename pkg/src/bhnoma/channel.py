"""Fading draws, imperfect CSI, SIC ordering and Gamma(K, 1) statistics."""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from . import streams
from .errors import OddUserCount
from .scenario import ScenarioConfig, UserTerminal


def path_constant(cfg: ScenarioConfig, distance):
    """chi = sqrt(Gr) * (lambda / (4 pi d)) * sqrt(Gt), broadcasting over ``distance``."""
    d = np.asarray(distance, dtype=float)
    return np.sqrt(cfg.rx_gain * cfg.tx_gain) * cfg.wavelength / (4 * np.pi * d)


def complex_normal(rng: np.random.Generator, shape, variance=1.0):
    """CN(0, variance) samples: independent real/imag parts of variance/2."""
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return np.sqrt(variance / 2.0) * (z[0] + 1j * z[1])


@dataclass(frozen=True)
class ChannelState:
    """One slot's channel for every user on the beam's K carriers.

    ``eta`` is the normalized CN(0, 1) fading, ``error`` the CN(0, omega*)
    estimation error, and ``chi`` the per-user path constant. True gains are
    ``h = chi * eta``; the scheduler sees ``h_est = chi * (eta + error)``.
    """

    eta: np.ndarray          # (U, K) complex
    error: np.ndarray        # (U, K) complex
    chi: np.ndarray          # (U,)
    error_variance: float

    @property
    def h(self) -> np.ndarray:
        return self.chi[:, None] * self.eta

    @property
    def h_est(self) -> np.ndarray:
        return self.chi[:, None] * (self.eta + self.error)

    @property
    def gain(self) -> np.ndarray:
        """|h_est|^2 per (user, carrier); what the transmitter schedules on."""
        return np.abs(self.h_est) ** 2

    @property
    def norm2(self) -> np.ndarray:
        """Effective squared channel norm per user over the beam's carriers."""
        return self.gain.sum(axis=1)

    def ranks(self, users_per_beam: int) -> np.ndarray:
        """Rank of every user inside its beam, 0 = strongest."""
        g = self.norm2.reshape(-1, users_per_beam)
        order = np.argsort(-g, axis=1, kind="stable")
        ranks = np.empty_like(order)
        np.put_along_axis(ranks, order, np.arange(users_per_beam)[None, :], axis=1)
        return ranks.reshape(-1)


def draw_channels(cfg: ScenarioConfig, users: list[UserTerminal], slot_seed: int,
                  slot: int = 0) -> ChannelState:
    """Draw the channel of one slot.

    Draws come from a counter-based stream keyed by ``(slot_seed, slot)``;
    user ``i`` always reads rows ``i`` of the slot block, so slots can be
    generated in any order or in parallel with identical results.
    """
    K = cfg.subcarriers_per_beam
    U = len(users)
    rng = streams.substream(slot_seed, streams.CHANNEL, slot)
    eta = complex_normal(rng, (U, K))
    unit_err = complex_normal(rng, (U, K))
    error = np.sqrt(cfg.channel_error_variance) * unit_err
    chi = path_constant(cfg, np.array([u.slant_distance for u in users]))
    return ChannelState(eta=eta, error=error, chi=chi,
                        error_variance=cfg.channel_error_variance)


def draw_window(cfg: ScenarioConfig, users: list[UserTerminal], seed: int) -> list[ChannelState]:
    return [draw_channels(cfg, users, seed, t) for t in range(cfg.window_slots)]


# ---------------------------------------------------------------------------
# ordering and pairing

@dataclass(frozen=True)
class BeamPairing:
    """SIC roles of one beam: ``pairs`` hold (center n, edge m) user ids."""

    pairs: tuple
    centers: tuple
    edges: tuple


def order_and_pair(user_ids, gains) -> BeamPairing:
    """Median split by gain, then pair the i-th strongest center with the
    i-th strongest edge user. Ties fall to the lower user id."""
    user_ids = np.asarray(user_ids)
    gains = np.asarray(gains, dtype=float)
    if len(user_ids) % 2:
        raise OddUserCount(f"{len(user_ids)} users cannot be split into NOMA pairs")
    order = np.lexsort((user_ids, -gains))
    ranked = [int(u) for u in user_ids[order]]
    half = len(ranked) // 2
    centers, edges = tuple(ranked[:half]), tuple(ranked[half:])
    return BeamPairing(pairs=tuple(zip(centers, edges)), centers=centers, edges=edges)


def beam_pairings(cfg: ScenarioConfig, channel: ChannelState) -> list[BeamPairing]:
    M = cfg.users_per_beam
    g = channel.norm2
    return [order_and_pair(np.arange(b * M, (b + 1) * M), g[b * M:(b + 1) * M])
            for b in range(cfg.beam_count)]


# ---------------------------------------------------------------------------
# Gamma(K, 1) statistics of Z = sum_k |h_k|^2 with unit-mean exponentials

def gamma_sf(z, K: int):
    """Survival function e^{-z} sum_{i<K} z^i / i! of Gamma(K, 1)."""
    z = np.maximum(np.asarray(z, dtype=float), 0.0)
    term = np.exp(-z)
    total = term.copy()
    for i in range(1, K):
        term = term * z / i
        total = total + term
    return np.minimum(total, 1.0)


def gamma_cdf(z, K: int):
    """CDF of Gamma(K, 1).

    For z below K the complement form loses digits, so the lower tail is
    summed directly as e^{-z} sum_{i>=K} z^i / i!.
    """
    z_in = np.asarray(z, dtype=float)
    z = np.maximum(np.atleast_1d(z_in), 0.0)
    out = 1.0 - gamma_sf(z, K)
    small = z < K
    if small.any():
        zs = z[small]
        term = np.exp(-zs) * zs ** K / factorial(K)
        total = term.copy()
        i = K
        while np.any(term > 1e-17 * total):
            i += 1
            term = term * zs / i
            total += term
        out[small] = total
    out = np.clip(out, 0.0, 1.0).reshape(z_in.shape)
    return out if out.ndim else float(out)


def gamma_pdf(z, K: int):
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0, np.maximum(z, 0.0) ** (K - 1) * np.exp(-np.maximum(z, 0.0)) / factorial(K - 1), 0.0)


def sample_gamma_sum(rng: np.random.Generator, K: int, size) -> np.ndarray:
    """Z = sum of K unit exponentials, i.e. sum_k |h_k|^2 with h_k ~ CN(0, 1)."""
    size = tuple(np.atleast_1d(size))
    return rng.standard_exponential(size + (K,)).sum(axis=-1)
