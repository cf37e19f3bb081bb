"""Empirical outage, overlap weights and throughput by direct simulation.

Each trial draws an interference state from the overlap model, draws both
users' effective gains as sums of K unit exponentials, and then evaluates
the SINRs and decode tests literally. Trials are processed in fixed-size
chunks, each with its own counter-keyed substream. Counts are kept as
integers, so results do not depend on how chunks are spread over workers.
Every SNR point of a sweep is evaluated on the same draws.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytics import IPCSI, PCSI, OutageParams, OverlapModel, system_throughput
from .scenario import ScenarioConfig
from .streams import OUTAGE, substream

CHUNK = 1 << 16


@dataclass
class TrialBatch:
    """Exact failure counts per SNR point for both users."""

    trials: int
    seed: int
    fail_n: np.ndarray
    fail_m: np.ndarray

    @property
    def p_n(self) -> np.ndarray:
        return self.fail_n / self.trials

    @property
    def p_m(self) -> np.ndarray:
        return self.fail_m / self.trials

    def half_width(self, user: str) -> np.ndarray:
        p = self.p_n if user == "n" else self.p_m
        return 1.96 * np.sqrt(p * (1 - p) / self.trials)


@dataclass(frozen=True)
class OutageEstimate:
    p_n: float
    p_m: float
    half_width_n: float
    half_width_m: float
    trials: int


def _chunk_failures(c: int, n: int, seed: int, rhos: np.ndarray, p: OutageParams,
                    model: OverlapModel, inr: float):
    rng = substream(seed, OUTAGE, c)
    state = model.states(model.draw_uniforms(rng, n), p.kappa)
    z_n = rng.standard_exponential((n, p.K)).sum(axis=1) * p.chi
    z_m = rng.standard_exponential((n, p.K)).sum(axis=1) * p.chi
    noise = 1.0 + np.where(state > 0, inr, 0.0)
    fn = np.empty(len(rhos), dtype=np.int64)
    fm = np.empty(len(rhos), dtype=np.int64)
    for i, rho in enumerate(rhos):
        den = rho * p.omega + noise
        sic = rho * p.a_m * z_n / (rho * p.a_n * z_n + den)
        own_n = rho * p.a_n * z_n / den
        own_m = rho * p.a_m * z_m / (rho * p.a_n * z_m + den)
        fn[i] = np.count_nonzero(~((sic > p.eps_m) & (own_n > p.eps_n)))
        fm[i] = np.count_nonzero(own_m <= p.eps_m)
    return fn, fm


def simulate_outage_sweep(params: OutageParams, rho_db, csi: str = IPCSI, trials: int = 100_000,
                          seed: int = 1, cfg: ScenarioConfig | None = None, inr: float = 1.0,
                          model: OverlapModel | None = None, workers: int = 1) -> TrialBatch:
    """Failure counts of both users at every SNR in ``rho_db``.

    ``params.rho`` is ignored; ``csi = "pcsi"`` drops the error term.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    p = params.for_csi(csi)
    if model is None:
        model = OverlapModel.from_config(cfg) if cfg is not None else OverlapModel()
    rhos = 10.0 ** (np.asarray(rho_db, dtype=float) / 10.0)
    jobs = [(c, min(CHUNK, trials - start)) for c, start in enumerate(range(0, trials, CHUNK))]

    def run(job):
        return _chunk_failures(job[0], job[1], seed, rhos, p, model, inr)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    fail_n = np.sum([f for f, _ in parts], axis=0, dtype=np.int64)
    fail_m = np.sum([f for _, f in parts], axis=0, dtype=np.int64)
    return TrialBatch(trials=trials, seed=seed, fail_n=fail_n, fail_m=fail_m)


def simulate_outage(params: OutageParams, csi: str = IPCSI, trials: int = 100_000, seed: int = 1,
                    cfg: ScenarioConfig | None = None, inr: float = 1.0,
                    model: OverlapModel | None = None, workers: int = 1) -> OutageEstimate:
    """Empirical outage of both users at ``params.rho`` with 95% half-widths."""
    rho_db = 10.0 * np.log10(params.rho)
    batch = simulate_outage_sweep(params, [rho_db], csi, trials, seed, cfg, inr, model, workers)
    return OutageEstimate(p_n=float(batch.p_n[0]), p_m=float(batch.p_m[0]),
                          half_width_n=float(batch.half_width("n")[0]),
                          half_width_m=float(batch.half_width("m")[0]), trials=trials)


def simulate_throughput(params: OutageParams, R_n: float = 1.0, R_m: float = 1.5, csi: str = IPCSI,
                        trials: int = 100_000, seed: int = 1, **kw) -> float:
    """Delay-limited throughput with empirical outage plugged in."""
    est = simulate_outage(params, csi, trials, seed, **kw)
    return system_throughput(est.p_n, est.p_m, R_n, R_m, params.variant)


__all__ = ["TrialBatch", "OutageEstimate", "simulate_outage", "simulate_outage_sweep",
           "simulate_throughput", "IPCSI", "PCSI"]
