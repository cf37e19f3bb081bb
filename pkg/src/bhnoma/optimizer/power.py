"""Power split of NOMA pairs.

Each pair's split ``a_n`` (with ``a_m = 1 - a_n``) minimizes the squared gap
between its two slot rates and the residual demands. The edge user's SINR is
a ratio of affine functions of ``a_n``; Dinkelbach's parameter ``theta`` turns
it into the affine surrogate

    gamma~(a) = theta + (num(a) - theta * den(a)) / den(a0),

which matches the true SINR in value and slope at the current iterate, so
``log2(1 + gamma~)`` is concave. Each outer iteration minimizes the surrogate
gap on the 1-D domain (grid, then golden section), keeps the step only if
the true objective does not increase (halving towards the iterate otherwise),
then refreshes ``theta``. All pairs of a slot are solved together.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonPositiveLogArgument, NoConvergence

A_MIN = 1e-6
A_MAX = 0.5
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def objective(rates, demands) -> float:
    """Sum of squared capacity-demand gaps."""
    rates = np.asarray(rates, dtype=float)
    demands = np.asarray(demands, dtype=float)
    if rates.shape != demands.shape:
        raise ValueError(f"length mismatch: {rates.shape} vs {demands.shape}")
    return float(np.sum((rates - demands) ** 2))


# ---------------------------------------------------------------------------
# surrogate and theta update, kept term by term

def surrogate(theta, a_n, a_m, g_nn, g_mm, g_mn, zeta):
    """Log-domain decoupled rate term, grouped term by term.

    ``g_nn = |diag(h_n) g_n|^2``, ``g_mm = |diag(h_m) g_m|^2`` and
    ``g_mn = |diag(h_m) g_n|^2``. Raises :class:`NonPositiveLogArgument` if
    the bracket is not positive.
    """
    arg = (1.0 + g_nn * a_n * zeta + g_mm * a_m * zeta + g_nn * g_mn * a_n ** 2
           + g_nn * g_mm * a_m * a_n - theta * (zeta * (zeta + g_mn * a_n + zeta)))
    arg = np.asarray(arg, dtype=float)
    if np.any(arg <= 0):
        raise NonPositiveLogArgument(f"log argument {arg.min():.3g} <= 0 for theta={theta}")
    return np.log(arg)


def update_theta(a_n, a_m, g_nn, g_mm, g_mn, zeta):
    """Full-width theta ratio evaluated at the split (a_n, a_m)."""
    num = (g_mn * a_n + zeta) * g_nn * a_n + (a_m * zeta + g_nn * a_m * a_n) * g_mm
    den = zeta * (zeta + g_mn * a_n + zeta)
    return num / den


# ---------------------------------------------------------------------------
# pair solver

@dataclass
class PairProblem:
    """Vectorized description of P pairs (all arrays of shape (P,)).

    ``s_n = Ps |diag(h_n) g_n|^2 / zeta_n`` is the center user's SNR per unit
    power; ``s_m = Ps |diag(h_m) g_m|^2 / zeta_m`` and
    ``x_m = Ps |diag(h_m) g_n|^2 / zeta_m`` are the edge user's own-signal and
    cross SNRs. ``c_n, c_m`` convert bits per use to bit/s (``W |g| / N``).
    """

    s_n: np.ndarray
    s_m: np.ndarray
    x_m: np.ndarray
    c_n: np.ndarray
    c_m: np.ndarray
    y_n: np.ndarray
    y_m: np.ndarray

    def rates(self, a_n):
        """Slot rates of both users; ``a_n`` is (P,) or (P, G)."""
        a_n = np.asarray(a_n, dtype=float)
        col = (lambda v: v[:, None]) if a_n.ndim == 2 else (lambda v: v)
        gn = col(self.s_n) * a_n
        gm = col(self.s_m) * (1.0 - a_n) / (col(self.x_m) * a_n + 1.0)
        return col(self.c_n) * np.log2(1.0 + gn), col(self.c_m) * np.log2(1.0 + gm)

    def gap(self, a_n):
        a_n = np.asarray(a_n, dtype=float)
        col = (lambda v: v[:, None]) if a_n.ndim == 2 else (lambda v: v)
        rn, rm = self.rates(a_n)
        return (rn - col(self.y_n)) ** 2 + (rm - col(self.y_m)) ** 2


@dataclass
class DinkelbachResult:
    a_n: np.ndarray
    theta: np.ndarray
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)   # summed true objective per iteration


def _surrogate_gap(prob: PairProblem, a, theta, den0):
    """Surrogate squared gap, with the edge SINR linearized through theta.

    ``a`` is (P,) or (P, G); pair parameters broadcast along the rows.
    """
    col = (lambda v: v[:, None]) if np.ndim(a) == 2 else (lambda v: v)
    s_m, x_m, th, d0 = col(prob.s_m), col(prob.x_m), col(theta), col(den0)
    g_m = th + (s_m * (1.0 - a) - th * (x_m * a + 1.0)) / d0
    rn = col(prob.c_n) * np.log2(1.0 + col(prob.s_n) * a)
    rm = col(prob.c_m) * np.log2(np.maximum(1.0 + g_m, 1e-300))
    return (rn - col(prob.y_n)) ** 2 + (rm - col(prob.y_m)) ** 2


def _upper_limit(prob: PairProblem, theta, den0):
    """Largest a_n in the domain keeping 1 + gamma~ positive."""
    # 1 + theta + (s_m (1 - a) - theta (x_m a + 1)) / den0 > 0, slope negative in a
    slope = -(prob.s_m + theta * prob.x_m) / den0
    value0 = 1.0 + theta + (prob.s_m - theta) / den0
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(slope < 0, -value0 / slope, np.inf)
    return np.clip(root * (1 - 1e-9), A_MIN, A_MAX)


def _slope(prob: PairProblem, a, h=1e-7):
    return prob.gap(np.minimum(a + h, A_MAX)) - prob.gap(np.maximum(a - h, A_MIN))


def _minimize_surrogate(prob, theta, den0, lo, hi, grid_points=33, tol=1e-9):
    hi = np.maximum(np.minimum(hi, _upper_limit(prob, theta, den0)), lo)
    u = np.linspace(0.0, 1.0, grid_points)
    grid = lo[:, None] + (hi - lo)[:, None] * u[None, :]
    vals = _surrogate_gap(prob, grid, theta, den0)
    j = np.argmin(vals, axis=1)
    rows = np.arange(len(hi))
    left = grid[rows, np.maximum(j - 1, 0)]
    right = grid[rows, np.minimum(j + 1, grid_points - 1)]
    best_a, best_v = grid[rows, j], vals[rows, j]
    surf = lambda x: _surrogate_gap(prob, x, theta, den0)  # noqa: E731
    mid = _golden(surf, left, right, tol)
    vm = surf(mid)
    return np.where(vm < best_v, mid, best_a)


def _golden(fun, left, right, tol=1e-10):
    """Vectorized golden-section search of ``fun`` on [left, right]."""
    left, right = np.array(left, dtype=float), np.array(right, dtype=float)
    x1 = right - GOLDEN * (right - left)
    x2 = left + GOLDEN * (right - left)
    f1, f2 = fun(x1), fun(x2)
    while np.max(right - left) > tol:
        go_right = f1 > f2
        left = np.where(go_right, x1, left)
        right = np.where(go_right, right, x2)
        keep_x = np.where(go_right, x2, x1)
        keep_f = np.where(go_right, f2, f1)
        new_x = np.where(go_right, left + GOLDEN * (right - left), right - GOLDEN * (right - left))
        new_f = fun(new_x)
        x1 = np.where(go_right, keep_x, new_x)
        f1 = np.where(go_right, keep_f, new_f)
        x2 = np.where(go_right, new_x, keep_x)
        f2 = np.where(go_right, new_f, keep_f)
    xs = np.stack([left, right, 0.5 * (left + right)])
    fs = np.stack([fun(x) for x in xs])
    return xs[np.argmin(fs, axis=0), np.arange(xs.shape[1])]


def edge_theta(prob: PairProblem, a_n):
    """Dinkelbach ratio of the edge user: num / den at the current split."""
    return prob.s_m * (1.0 - a_n) / (prob.x_m * a_n + 1.0)


def initial_split(prob: PairProblem, grid_points=65) -> np.ndarray:
    """Best point of a uniform grid of the true objective."""
    grid = np.linspace(A_MIN, A_MAX, grid_points)
    vals = prob.gap(np.broadcast_to(grid, (len(prob.s_n), grid_points)))
    return grid[np.argmin(vals, axis=1)]


def _subset(prob: PairProblem, idx) -> PairProblem:
    return PairProblem(*(getattr(prob, f)[idx] for f in
                         ("s_n", "s_m", "x_m", "c_n", "c_m", "y_n", "y_m")))


def solve_pairs(prob: PairProblem, max_iter: int = 50, tol: float = 1e-6,
                a0=None, warn: bool = True) -> DinkelbachResult:
    """Dinkelbach iterations for all pairs at once.

    Pairs whose theta and split have settled are frozen; the others keep
    iterating. Each step line-searches the true objective between the iterate
    and the surrogate minimizer, so the objective trace never rises.
    """
    a = initial_split(prob) if a0 is None else np.clip(np.asarray(a0, dtype=float), A_MIN, A_MAX)
    f = prob.gap(a)
    theta = edge_theta(prob, a)
    active = np.ones(len(a), dtype=bool)
    trace = [float(f.sum())]
    it = 0
    reach = np.full(len(a), 2.0)
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        sub = _subset(prob, idx)
        ai, fi, th = a[idx], f[idx], theta[idx]
        den0 = sub.x_m * ai + 1.0
        # the surrogate shares value and slope with the true objective at the
        # iterate; its minimizer is sought on the descent side only
        slope = _slope(sub, ai)
        lo = np.where(slope > 0, A_MIN, ai)
        hi = np.where(slope > 0, ai, A_MAX)
        cand = _minimize_surrogate(sub, th, den0, lo, hi)
        # safeguard: line search of the true objective along the surrogate
        # step, stretched while the best point keeps landing at its far end
        far = np.clip(ai + reach[idx] * (cand - ai), A_MIN, A_MAX)
        new = _golden(sub.gap, np.minimum(ai, far), np.maximum(ai, far))
        at_end = np.abs(new - far) <= 0.05 * np.abs(far - ai)
        reach[idx] = np.where(at_end, reach[idx] * 4.0, 2.0)
        fn = sub.gap(new)
        keep = fn <= fi
        ai, fi = np.where(keep, new, ai), np.where(keep, fn, fi)
        step = np.abs(ai - a[idx])
        a[idx], f[idx] = ai, fi
        new_th = edge_theta(sub, ai)
        done = (np.abs(new_th - th) <= tol * np.maximum(1.0, np.abs(new_th))) & (step <= tol)
        theta[idx] = new_th
        active[idx[done]] = False
        trace.append(float(f.sum()))
        if not active.any():
            break
    converged = not active.any()
    if not converged and warn:
        warnings.warn(f"Dinkelbach cap of {max_iter} iterations reached", NoConvergence, stacklevel=2)
    return DinkelbachResult(a_n=a, theta=theta, iterations=it, converged=converged, trace=trace)


def optimize_power_pair(s_n, s_m, x_m, c_n, c_m, y_n, y_m, max_iter=50):
    """Single-pair convenience wrapper returning ``(a_n, a_m)``."""
    prob = PairProblem(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in
                         (s_n, s_m, x_m, c_n, c_m, y_n, y_m)))
    res = solve_pairs(prob, max_iter=max_iter)
    a_n = float(res.a_n[0])
    return a_n, 1.0 - a_n
