"""Vectorized trial engine: many independent trials advanced in lockstep.

Each trial owns a counter-based stream (key = its seed); every draw is a
pure function of (key, counter), and per-trial counters advance exactly as
in the scalar reference path (policies.select_arm + env.sample driven by a
single rng.Stream). The equivalence is asserted trace-for-trace in tests;
any change to the consumption protocol must be made in both places.

The engine exists purely for speed: a sweep cell simulates 1e4 trials of up
to 2^16 rounds, which is far too slow one trial at a time in Python.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaincinv, ndtri

from . import rng
from .env import BanditInstance, ParameterError, gaussian_from_uniforms
from .policies import PolicySpec, hybrid_switch_time


@dataclass
class BatchResult:
    """Per-trial outcomes for a block of trials (row = trial)."""

    counts: np.ndarray       # (n, K) int64 pull counts at horizon
    reward_sums: np.ndarray  # (n, K) float64 cumulative reward per arm
    pseudo_regret: np.ndarray  # (n,) float64 sum_i gap_i * N_i
    seeds: np.ndarray        # (n,) uint64 per-trial stream keys


def _uniform_where(keys, ctrs, mask):
    """One uniform for the masked trials only; advances their counters."""
    u = rng.uniforms(keys[mask], ctrs[mask])
    ctrs[mask] += np.uint64(1)
    return u


def _tiebreak_argmax_batch(scores, keys, ctrs):
    """Row-wise argmax with exact ties broken uniformly at random.

    Mirrors policies._tiebreak_argmax: consumes one uniform per row iff that
    row has >= 2 arms at the max score.
    """
    m = scores.max(axis=1)
    tied = scores == m[:, None]
    ntied = tied.sum(axis=1)
    sel = scores.argmax(axis=1)
    need = ntied > 1
    if need.any():
        u = _uniform_where(keys, ctrs, need)
        choice = (u * ntied[need]).astype(np.int64)
        ranks = np.cumsum(tied[need], axis=1)
        sel[need] = np.argmax(ranks == (choice + 1)[:, None], axis=1)
    return sel


def _sample_rewards(arm_kind_gauss, arm_mean, arm_scale, arm_p, sel, keys, ctrs):
    """Rewards for the selected arms; 2 uniforms per Gaussian draw, 1 per Bernoulli."""
    reward = np.empty(sel.shape[0], dtype=np.float64)
    g = arm_kind_gauss[sel]
    if g.any():
        gk, gc = keys[g], ctrs[g]
        u1 = rng.uniforms(gk, gc)
        u2 = rng.uniforms(gk, gc + np.uint64(1))
        ctrs[g] += np.uint64(2)
        a = sel[g]
        reward[g] = gaussian_from_uniforms(u1, u2, arm_mean[a], arm_scale[a])
    b = ~g
    if b.any():
        u = _uniform_where(keys, ctrs, b)
        reward[b] = np.where(u < arm_p[sel[b]], 1.0, 0.0)
    return reward


def run_trials_batch(inst: BanditInstance, spec: PolicySpec, T: int, seeds) -> BatchResult:
    """Simulate one full trial per seed, all advanced round-by-round."""
    bad = spec.violations()
    if bad:
        raise ParameterError("; ".join(bad))
    K = inst.K
    if T < K:
        raise ParameterError(f"horizon T = {T} below K = {K}")
    keys = np.asarray(seeds, dtype=np.uint64).copy()
    n = keys.shape[0]
    ctrs = np.zeros(n, dtype=np.uint64)
    rows = np.arange(n)

    counts = np.zeros((n, K), dtype=np.int64)
    sums = np.zeros((n, K), dtype=np.float64)
    means = np.zeros((n, K), dtype=np.float64)

    arm_kind_gauss = np.array([a.kind == "gaussian" for a in inst.arms])
    arm_mean = inst.means()
    arm_scale = np.array([a.scale for a in inst.arms], dtype=np.float64)
    arm_p = np.array([a.p if a.p is not None else np.nan for a in inst.arms], dtype=np.float64)

    kind = spec.kind
    f_vals = spec.f.values(T) if spec.f is not None else None
    inv_sqrt_counts = np.zeros((n, K), dtype=np.float64)
    t_switch = hybrid_switch_time(T, spec.switch_alpha) if kind == "hybrid" else None
    commit_t = spec.explore_rounds * K if kind == "etc" else None
    committed = None
    if kind == "ts_bernoulli":
        ts_succ = np.zeros((n, K), dtype=np.float64)
        ts_fail = np.zeros((n, K), dtype=np.float64)
    arm_range = np.arange(K, dtype=np.uint64)

    for t in range(1, T + 1):
        if t <= K:
            sel = np.full(n, t - 1, dtype=np.int64)
        elif kind == "round_robin":
            sel = np.full(n, (t - 1) % K, dtype=np.int64)
        elif kind == "etc":
            if t <= commit_t:
                sel = np.full(n, (t - 1) % K, dtype=np.int64)
            else:
                if committed is None:
                    committed = _tiebreak_argmax_batch(means, keys, ctrs)
                sel = committed
        elif kind == "hybrid" and t > t_switch:
            sel = np.full(n, (t - t_switch - 1) % K, dtype=np.int64)
        else:
            if kind in ("ucbf", "hybrid"):
                scores = means + f_vals[t - 1] * inv_sqrt_counts
            elif kind == "ucb1":
                scores = means + np.sqrt(2.0 * np.log(t)) * inv_sqrt_counts
            elif kind == "greedy":
                scores = means
            elif kind == "ts_bernoulli":
                u = rng.uniforms(keys[:, None], ctrs[:, None] + arm_range)
                ctrs += np.uint64(K)
                scores = betaincinv(1.0 + ts_succ, 1.0 + ts_fail, u)
            elif kind == "ts_gaussian":
                u = rng.uniforms(keys[:, None], ctrs[:, None] + arm_range)
                ctrs += np.uint64(K)
                scores = means + ndtri(u) * inv_sqrt_counts
            else:
                raise ParameterError(f"unhandled kind {kind!r}")
            sel = _tiebreak_argmax_batch(scores, keys, ctrs)

        reward = _sample_rewards(arm_kind_gauss, arm_mean, arm_scale, arm_p, sel, keys, ctrs)

        c = counts[rows, sel] + 1
        counts[rows, sel] = c
        s = sums[rows, sel] + reward
        sums[rows, sel] = s
        means[rows, sel] = s / c
        inv_sqrt_counts[rows, sel] = 1.0 / np.sqrt(c)
        if kind == "ts_bernoulli":
            is_one = reward == 1.0
            ts_succ[rows, sel] += is_one
            ts_fail[rows, sel] += ~is_one

    gaps = inst.gaps()
    pseudo_regret = (counts * gaps).sum(axis=1)
    return BatchResult(counts=counts, reward_sums=sums, pseudo_regret=pseudo_regret, seeds=keys)
