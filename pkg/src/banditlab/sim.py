"""Monte Carlo estimation of regret and allocation variability.

A trial is one full T-round run of a policy on an instance; experiments
aggregate many independent trials into estimates of

    mean pull counts  E[N_i]            (g_T for the gap family's arm 2)
    allocation variability S_T          max_i sd(N_i)
    expected pseudo-regret R_T          sum_i gap_i * E[N_i]
    regret variability sd(R^hat)

Reproducibility contract: trial i of an experiment uses the stream key
split_seed(master_seed, stream_offset + i). Trials are partitioned into
fixed-size chunks (independent of worker count); chunk statistics are merged
in chunk-index order, so results are bit-identical for any --threads value.
Worst cases over the instance class are approximated by a finite grid of
two-armed Gaussian gap instances; reports must label such estimates
"grid-worst", never "worst-case".
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import BatchResult, run_trials_batch
from .env import BanditInstance, ParameterError, make_gap_instance
from .fluid import solve_fluid
from .policies import PolicySpec, init_state, select_arm, update
from .rng import Stream, split_seed
from .stats import Moments, merge_in_order

CHUNK_TRIALS = 4096        # fixed: chunk layout must not depend on threads
HISTOGRAM_BINS = 100
Z_95 = 1.959963984540054   # two-sided 95% normal quantile


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of a single trial."""

    counts: np.ndarray
    pseudo_regret: float
    seed: int
    trial_index: int
    reward_sums: np.ndarray


@dataclass(frozen=True)
class AllocationStats:
    """Cross-trial aggregates for one (instance, policy, T) cell."""

    n_trials: int
    mean_counts: np.ndarray
    sd_counts: np.ndarray
    S_T_hat: float
    R_T_hat: float
    sd_regret_hat: float
    ci_halfwidths: np.ndarray
    dispersion_ratio: float

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "mean_counts": self.mean_counts.tolist(),
            "sd_counts": self.sd_counts.tolist(),
            "S_T_hat": self.S_T_hat,
            "R_T_hat": self.R_T_hat,
            "sd_regret_hat": self.sd_regret_hat,
            "ci_halfwidths": self.ci_halfwidths.tolist(),
            "dispersion_ratio": self.dispersion_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AllocationStats":
        return cls(
            n_trials=int(d["n_trials"]),
            mean_counts=np.asarray(d["mean_counts"], dtype=np.float64),
            sd_counts=np.asarray(d["sd_counts"], dtype=np.float64),
            S_T_hat=float(d["S_T_hat"]),
            R_T_hat=float(d["R_T_hat"]),
            sd_regret_hat=float(d["sd_regret_hat"]),
            ci_halfwidths=np.asarray(d["ci_halfwidths"], dtype=np.float64),
            dispersion_ratio=float(d["dispersion_ratio"]),
        )


@dataclass
class ExperimentResult:
    """AllocationStats plus optional per-trial data and histogram."""

    stats: AllocationStats
    trial_counts: np.ndarray | None = None      # (n_trials, K)
    trial_regret: np.ndarray | None = None      # (n_trials,)
    trial_reward_sums: np.ndarray | None = None
    histogram: np.ndarray | None = None         # bin counts for histogram_arm
    histogram_edges: np.ndarray | None = None


def run_trial(inst: BanditInstance, spec: PolicySpec, T: int, seed: int, trial_index: int = 0) -> TrialRecord:
    """Reference single-trial path: scalar policy loop on one stream.

    The batch engine reproduces this trial bit-for-bit given the same seed
    (asserted in tests); use run_experiment for anything sizeable.
    """
    if T < inst.K:
        raise ParameterError(f"horizon T = {T} below K = {inst.K}")
    from .env import sample  # local import keeps module load light

    stream = Stream(seed)
    state = init_state(spec, inst.K, T)
    for _ in range(T):
        arm = select_arm(state, stream)
        reward = sample(inst.arms[arm], stream)
        update(state, arm, reward)
    gaps = inst.gaps()
    return TrialRecord(
        counts=state.counts.copy(),
        pseudo_regret=float((state.counts * gaps).sum()),
        seed=seed,
        trial_index=trial_index,
        reward_sums=state.sums.copy(),
    )


def _fluid_arm2(inst: BanditInstance, spec: PolicySpec, T: int) -> float | None:
    """Fluid benchmark n_2 when the policy has an exploration function."""
    if spec.kind in ("ucbf", "hybrid") and spec.f is not None:
        f_T = float(spec.f(T))
    elif spec.kind == "ucb1":
        f_T = float(math.sqrt(2.0 * math.log(max(T, 2))))
    else:
        return None
    return float(solve_fluid(inst.means(), f_T, T).n[1])


def run_experiment_detailed(
    inst: BanditInstance,
    spec: PolicySpec,
    T: int,
    n_trials: int,
    master_seed: int,
    *,
    stream_offset: int = 0,
    threads: int | None = None,
    keep_trials: bool = False,
    histogram_arm: int | None = None,
) -> ExperimentResult:
    """Run n_trials independent trials and aggregate (see module docstring)."""
    if n_trials < 2:
        raise ParameterError("need n_trials >= 2 (variance undefined below)")
    seeds = split_seed(master_seed, stream_offset + np.arange(n_trials, dtype=np.uint64))
    starts = list(range(0, n_trials, CHUNK_TRIALS))
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, min(threads, len(starts)))

    edges = np.linspace(0.0, float(T), HISTOGRAM_BINS + 1) if histogram_arm is not None else None

    def run_chunk(lo: int) -> tuple[BatchResult, Moments, np.ndarray | None]:
        batch = run_trials_batch(inst, spec, T, seeds[lo : lo + CHUNK_TRIALS])
        obs = np.concatenate([batch.counts.astype(np.float64), batch.pseudo_regret[:, None]], axis=1)
        mom = Moments.from_batch(obs)
        hist = None
        if histogram_arm is not None:
            hist, _ = np.histogram(batch.counts[:, histogram_arm], bins=edges)
        return batch, mom, hist

    if threads == 1:
        parts = [run_chunk(lo) for lo in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_chunk, starts))

    mom = merge_in_order([p[1] for p in parts])
    K = inst.K
    mean_counts = mom.mean[:K]
    sd_all = mom.sd(ddof=1)
    sd_counts = sd_all[:K]
    gaps = inst.gaps()
    fluid_n2 = _fluid_arm2(inst, spec, T)
    norm2 = fluid_n2 if fluid_n2 is not None else float(mean_counts[1])
    stats = AllocationStats(
        n_trials=n_trials,
        mean_counts=mean_counts,
        sd_counts=sd_counts,
        S_T_hat=float(sd_counts.max()),
        R_T_hat=float((gaps * mean_counts).sum()),
        sd_regret_hat=float(sd_all[K]),
        ci_halfwidths=Z_95 * sd_counts / math.sqrt(n_trials),
        dispersion_ratio=float(sd_counts[1] / norm2),
    )
    res = ExperimentResult(stats=stats)
    if histogram_arm is not None:
        res.histogram = np.sum([p[2] for p in parts], axis=0)
        res.histogram_edges = edges
    if keep_trials:
        res.trial_counts = np.concatenate([p[0].counts for p in parts], axis=0)
        res.trial_regret = np.concatenate([p[0].pseudo_regret for p in parts], axis=0)
        res.trial_reward_sums = np.concatenate([p[0].reward_sums for p in parts], axis=0)
    return res


def run_experiment(inst, spec, T, n_trials, master_seed, **kw) -> AllocationStats:
    """AllocationStats for one cell (thin wrapper over the detailed runner)."""
    return run_experiment_detailed(inst, spec, T, n_trials, master_seed, **kw).stats


def default_delta_grid(T: int) -> np.ndarray:
    """Gap grid probing the 1/sqrt(T) worst-case window plus O(1) gaps."""
    rt = math.sqrt(T)
    grid = [0.0, 0.5 / rt, 1.0 / rt, 2.0 / rt, 4.0 / rt, 8.0 / rt, 16.0 / rt, 0.5, 1.0]
    return np.array(sorted(set(grid)), dtype=np.float64)


@dataclass(frozen=True)
class DeltaSweepRow:
    delta: float
    stats: AllocationStats


@dataclass(frozen=True)
class DeltaSweepResult:
    """Per-gap statistics plus the grid locations of the worst cases."""

    T: int
    rows: tuple[DeltaSweepRow, ...]
    argmax_S_delta: float
    argmax_R_delta: float

    @property
    def worst_S(self) -> float:
        return max(r.stats.S_T_hat for r in self.rows)

    @property
    def worst_R(self) -> float:
        return max(r.stats.R_T_hat for r in self.rows)

    @property
    def worst_sd_regret(self) -> float:
        return max(r.stats.sd_regret_hat for r in self.rows)


def sweep_delta(
    spec: PolicySpec,
    T: int,
    delta_grid,
    n_trials: int,
    master_seed: int,
    *,
    threads: int | None = None,
    M: float = 2.0,
    sigma: float = 1.0,
) -> DeltaSweepResult:
    """One experiment per gap value on a shared master seed.

    Stream ids are delta_index * 2^32 + trial_index, so any single cell can
    be reproduced in isolation.
    """
    grid = np.asarray(delta_grid, dtype=np.float64)
    if grid.size == 0:
        raise ParameterError("empty delta grid")
    if np.any((grid < 0) | (grid > 2.0)):
        raise ParameterError("delta grid values must lie in [0, 2]")
    rows = []
    for di, delta in enumerate(grid):
        inst = make_gap_instance(float(delta), M=M, sigma=sigma)
        stats = run_experiment(inst, spec, T, n_trials, master_seed, stream_offset=di << 32, threads=threads)
        rows.append(DeltaSweepRow(delta=float(delta), stats=stats))
    s_vals = [r.stats.S_T_hat for r in rows]
    r_vals = [r.stats.R_T_hat for r in rows]
    return DeltaSweepResult(
        T=T,
        rows=tuple(rows),
        argmax_S_delta=rows[int(np.argmax(s_vals))].delta,
        argmax_R_delta=rows[int(np.argmax(r_vals))].delta,
    )


@dataclass(frozen=True)
class ParetoCell:
    gamma: float
    T: int
    sweep: DeltaSweepResult


@dataclass(frozen=True)
class FrontierRow:
    gamma: float
    T: int
    worst_R: float
    worst_S: float
    worst_sd_regret: float
    argmax_R_delta: float
    argmax_S_delta: float


@dataclass(frozen=True)
class SlopeRow:
    """OLS slopes of log(grid-worst metric) against log T for one gamma."""

    gamma: float
    slope_R: float
    slope_S: float
    slope_product: float
    slope_sd_regret: float


@dataclass(frozen=True)
class ParetoResult:
    cells: tuple[ParetoCell, ...]
    frontier: tuple[FrontierRow, ...]
    slopes: tuple[SlopeRow, ...]


def _ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def pareto_sweep(
    gammas,
    Ts,
    delta_grid,
    n_trials: int,
    master_seed: int,
    *,
    threads: int | None = None,
    checkpoint=None,
    progress=None,
) -> ParetoResult:
    """Sweep exploration exponents f(t) = t^gamma * ln t across horizons.

    delta_grid=None uses default_delta_grid(T) per horizon (the gap window
    scales with 1/sqrt(T)); an explicit grid is used verbatim for every T.
    `checkpoint` is an optional callable cache (see cli.CellCache): cells are
    keyed by their full configuration, so interrupted sweeps resume.
    """
    from .policies import ExplorationFunction  # cycle-free; local for clarity

    gammas = [float(g) for g in gammas]
    Ts = [int(T) for T in Ts]
    cells = []
    for gi, gamma in enumerate(gammas):
        spec = PolicySpec(kind="ucbf", f=ExplorationFunction(a=1.0, gamma=gamma, beta=1.0))
        for ti, T in enumerate(Ts):
            grid = default_delta_grid(T) if delta_grid is None else np.asarray(delta_grid, dtype=np.float64)
            cell_seed = split_seed(master_seed, (gi << 16) | ti)
            key = {
                "gamma": gamma, "T": T, "deltas": [float(d) for d in grid],
                "n_trials": n_trials, "cell_seed": int(cell_seed),
            }
            sweep = checkpoint.get(key) if checkpoint is not None else None
            if sweep is None:
                sweep = sweep_delta(spec, T, grid, n_trials, cell_seed, threads=threads)
                if checkpoint is not None:
                    checkpoint.put(key, sweep)
            if progress is not None:
                progress(gamma, T, sweep)
            cells.append(ParetoCell(gamma=gamma, T=T, sweep=sweep))

    frontier = [
        FrontierRow(
            gamma=c.gamma, T=c.T,
            worst_R=c.sweep.worst_R, worst_S=c.sweep.worst_S,
            worst_sd_regret=c.sweep.worst_sd_regret,
            argmax_R_delta=c.sweep.argmax_R_delta, argmax_S_delta=c.sweep.argmax_S_delta,
        )
        for c in cells
    ]
    slopes = []
    for gamma in gammas:
        rows = [f for f in frontier if f.gamma == gamma]
        lt = np.log([f.T for f in rows])
        lr = np.log([f.worst_R for f in rows])
        ls = np.log([f.worst_S for f in rows])
        lv = np.log([f.worst_sd_regret for f in rows])
        slopes.append(SlopeRow(
            gamma=gamma,
            slope_R=_ols_slope(lt, lr),
            slope_S=_ols_slope(lt, ls),
            slope_product=_ols_slope(lt, lr + ls),
            slope_sd_regret=_ols_slope(lt, lv),
        ))
    return ParetoResult(cells=tuple(cells), frontier=tuple(frontier), slopes=tuple(slopes))


def platform_objective(stats: AllocationStats, rho: float) -> float:
    """Per-instance platform loss R_T + S_T^rho (worst case taken by caller)."""
    if rho < 0:
        raise ParameterError(f"rho must be >= 0, got {rho}")
    return float(stats.R_T_hat + stats.S_T_hat**rho)
