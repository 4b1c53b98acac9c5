"""Deterministic fluid benchmark for UCB-style pull counts.

The fluid system equalizes all arms' scores at a common level lam and
spends the whole budget:

    mu_i + f_t / sqrt(n_i) = lam   for every arm i,      sum_i n_i = t.

Substituting n_i = (f_t / (lam - mu_i))^2 reduces the system to one scalar
equation G(lam) = sum_i f_t^2 / (lam - mu_i)^2 = t, with G strictly
decreasing on (mu*, inf). The solver brackets lam and bisects; bisection is
preferred over Newton because the bracket is certified and there are no
derivative blowups as lam approaches mu*. Counts are real-valued by design
(no rounding); for t close to K with large gaps the solution can have
n_i < 1 and is returned unmodified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import ParameterError
from .policies import ExplorationFunction

_MAX_BISECT = 200


@dataclass(frozen=True)
class FluidSolution:
    """Fluid pull counts with the residual certificate of the solve."""

    n: np.ndarray        # per-arm fluid counts, sums to t within residual
    lam: float           # common score level, > max mean
    residual: float      # |sum n - t|
    t: float
    f_t: float


def solve_fluid(means, f_t: float, t: float) -> FluidSolution:
    """Solve the fluid balance system for one budget t.

    The bracket is derived from elementary monotonicity: at
    lam_lo = mu* + f_t/sqrt(t) the best arm alone already absorbs the
    budget (G >= t); at lam_hi = mu* + f_t*sqrt(K/t) every arm gets at most
    t/K (G <= t). Bisection runs to floating-point adjacency (well past the
    1e-12 relative target), capped at 200 iterations.
    """
    mu = np.asarray(means, dtype=np.float64)
    K = mu.size
    if K < 2:
        raise ParameterError("fluid system needs K >= 2 arms")
    if not (f_t > 0):
        raise ParameterError(f"f_t must be > 0, got {f_t}")
    if t < K:
        raise ParameterError(f"budget t = {t} below K = {K}")
    mu_star = mu.max()
    ft2 = f_t * f_t

    def excess(lam: float) -> float:
        d = lam - mu
        return float(np.sum(ft2 / (d * d))) - t

    lo = mu_star + f_t / np.sqrt(t)
    hi = mu_star + f_t * np.sqrt(K / t)
    e_lo, e_hi = excess(lo), excess(hi)
    assert e_lo >= 0.0 >= e_hi, "bracket failure (cannot happen for valid inputs)"
    if e_lo == 0.0:
        lam = lo
    elif e_hi == 0.0:
        lam = hi
    else:
        for _ in range(_MAX_BISECT):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if excess(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        lam = 0.5 * (lo + hi)
    n = ft2 / (lam - mu) ** 2
    return FluidSolution(n=n, lam=float(lam), residual=abs(float(n.sum()) - t), t=float(t), f_t=float(f_t))


def fluid_trajectory(means, f: ExplorationFunction, t_grid) -> list[FluidSolution]:
    """One fluid solution per grid point, with f_t = f(t)."""
    grid = np.asarray(t_grid, dtype=np.float64)
    if grid.size == 0:
        raise ParameterError("empty t grid")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("t grid must be strictly increasing")
    if grid[0] < np.asarray(means).size:
        raise ParameterError("t grid must start at or above K")
    return [solve_fluid(means, float(f(t)), float(t)) for t in grid]


def predicted_variability_bound(n2: float, f_T: float, T: int, K: int) -> float:
    """Theoretical ceiling on sd(N_i): sqrt(2) * (K-1) * ln(T) * n2 / f(T).

    Used as a comparison line against measured allocation variability.
    """
    if n2 <= 0 or f_T <= 0 or T <= 0 or K <= 0:
        raise ParameterError("all arguments must be positive")
    return float(np.sqrt(2.0) * (K - 1) * np.log(T) * n2 / f_T)
