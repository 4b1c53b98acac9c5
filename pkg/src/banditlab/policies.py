"""Bandit policies behind a uniform select/update interface.

The tunable UCB policy scores arm i at round t by

    mean_i + f(t) / sqrt(N_i)

where f is a parametric exploration function f(t) = a * t^gamma * (ln t)^beta.
Faster-growing f trades regret for steadier pull allocation. Baselines:
directly coded UCB1, Thompson sampling (Bernoulli and Gaussian), round-robin,
explore-then-commit, greedy, and a hybrid that runs the UCB policy and
switches to round-robin for the final ~T^(1/2+alpha) rounds.

Stream-consumption protocol (shared with the vectorized engine; any change
here must be mirrored there):
  round t <= K            initialization sweep, pulls arm t, no draws
  round-robin rounds      no draws
  score-based selection   1 uniform iff two or more arms tie at the max score
  thompson selection      K uniforms (arm order) for the posterior draws,
                          then the tie rule
Rewards are drawn after selection by env.sample (2 uniforms Gaussian,
1 uniform Bernoulli). Posterior draws use inverse-CDF transforms so each
round consumes a fixed number of uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaincinv, ndtri

from .env import ParameterError
from .rng import Stream

KINDS = ("ucbf", "ucb1", "ts_bernoulli", "ts_gaussian", "round_robin", "etc", "greedy", "hybrid")


class StateError(RuntimeError):
    """Policy state used outside its contract."""


@dataclass(frozen=True)
class ExplorationFunction:
    """f(t) = a * t^gamma * (ln t)^beta, clamped to f(2) for t < 2.

    The clamp only guards misuse: selection never evaluates f before round
    K+1 >= 3. Validity (see validate_exploration_function) requires
    gamma in [0, 1/2] so that sqrt(t)/f(t) does not eventually decay.
    """

    a: float = 1.0
    gamma: float = 0.0
    beta: float = 0.0

    def __call__(self, t):
        tt = np.maximum(np.asarray(t, dtype=np.float64), 2.0)
        return self.a * tt**self.gamma * np.log(tt) ** self.beta

    def values(self, T: int) -> np.ndarray:
        """f(1..T) as a lookup table indexed by t-1."""
        return self(np.arange(1, T + 1))


def ucb1_exploration() -> ExplorationFunction:
    """Parameters reproducing the classic sqrt(2 ln t) bonus."""
    return ExplorationFunction(a=math.sqrt(2.0), gamma=0.0, beta=0.5)


def validate_exploration_function(f: ExplorationFunction) -> list[str]:
    """Report violated exploration-function conditions (empty iff valid).

    On the parametric family the two monotonicity requirements reduce to
    exponent checks: sqrt(t)/f(t) eventually decreases iff gamma > 1/2 (or
    gamma = 1/2 with a surviving log factor), and a negative gamma makes
    f(t)/log t decay. The classic sqrt(2 ln t) choice (gamma=0, beta=1/2)
    is valid.
    """
    out = []
    if not (f.a > 0):
        out.append("multiplier a must be > 0")
    if f.beta < 0:
        out.append("log exponent beta must be >= 0")
    if f.gamma < 0:
        out.append("f(t)/log t decreasing (gamma < 0)")
    if f.gamma > 0.5 or (f.gamma == 0.5 and f.beta > 0):
        out.append("sqrt(t)/f(t) decreasing (gamma exceeds 1/2)")
    return out


@dataclass(frozen=True)
class PolicySpec:
    """Which policy to run, plus its kind-specific parameters."""

    kind: str
    f: ExplorationFunction | None = None
    explore_rounds: int | None = None
    switch_alpha: float | None = None

    def violations(self) -> list[str]:
        out = []
        if self.kind not in KINDS:
            out.append(f"unknown policy kind {self.kind!r}")
            return out
        needs_f = self.kind in ("ucbf", "hybrid")
        if needs_f and self.f is None:
            out.append(f"{self.kind} requires an exploration function")
        if not needs_f and self.f is not None:
            out.append(f"{self.kind} does not take an exploration function")
        if self.f is not None:
            out.extend(validate_exploration_function(self.f))
        if self.kind == "etc":
            if self.explore_rounds is None or self.explore_rounds < 1:
                out.append("etc requires explore_rounds >= 1")
        elif self.explore_rounds is not None:
            out.append(f"{self.kind} does not take explore_rounds")
        if self.kind == "hybrid":
            if self.switch_alpha is None or not (0.0 < self.switch_alpha < 0.5):
                out.append("hybrid requires switch_alpha in (0, 1/2)")
        elif self.switch_alpha is not None:
            out.append(f"{self.kind} does not take switch_alpha")
        return out


def validate_policy_spec(spec: PolicySpec) -> list[str]:
    return spec.violations()


def hybrid_switch_time(T: int, alpha: float) -> int:
    """Last round of the UCB phase: T - ceil(T^(1/2+alpha))."""
    return T - math.ceil(T ** (0.5 + alpha))


@dataclass
class PolicyState:
    """Single-trial mutable state; one instance per trial, never shared."""

    kind: str
    K: int
    T: int
    t: int = 1
    counts: np.ndarray = None
    sums: np.ndarray = None
    means: np.ndarray = None
    f: ExplorationFunction | None = None
    commit_t: int | None = None       # etc: last exploration round
    committed: int | None = None      # etc: arm committed to
    t_switch: int | None = None       # hybrid: last UCB round
    ts_succ: np.ndarray = None        # ts_bernoulli posterior Beta(1+succ, 1+fail)
    ts_fail: np.ndarray = None

    def initialized(self) -> bool:
        return self.counts is not None


def init_state(spec: PolicySpec, K: int, T: int) -> PolicyState:
    bad = spec.violations()
    if bad:
        raise ParameterError("; ".join(bad))
    if K < 2:
        raise ParameterError("need at least 2 arms")
    if T < K:
        raise ParameterError(f"horizon T = {T} shorter than K = {K}")
    st = PolicyState(kind=spec.kind, K=K, T=T)
    st.counts = np.zeros(K, dtype=np.int64)
    st.sums = np.zeros(K, dtype=np.float64)
    st.means = np.zeros(K, dtype=np.float64)
    st.f = spec.f
    if spec.kind == "etc":
        st.commit_t = spec.explore_rounds * K
    if spec.kind == "hybrid":
        st.t_switch = hybrid_switch_time(T, spec.switch_alpha)
    if spec.kind == "ts_bernoulli":
        st.ts_succ = np.zeros(K, dtype=np.int64)
        st.ts_fail = np.zeros(K, dtype=np.int64)
    return st


def _tiebreak_argmax(scores: np.ndarray, stream: Stream) -> int:
    """Argmax with exact ties broken uniformly at random.

    Consumes one uniform iff there is a tie, so deterministic near-misses
    cost nothing from the stream.
    """
    m = scores.max()
    tied = np.flatnonzero(scores == m)
    if tied.size == 1:
        return int(tied[0])
    u = stream.uniform()
    return int(tied[int(u * tied.size)])


def select_arm(state: PolicyState, stream: Stream) -> int:
    """Choose the arm for round state.t (0-based index)."""
    if not state.initialized():
        raise StateError("policy state not initialized")
    t, K = state.t, state.K
    if t > state.T:
        raise StateError(f"round {t} beyond horizon {state.T}")
    if t <= K:
        return t - 1
    kind = state.kind
    if kind == "round_robin":
        return (t - 1) % K
    if kind == "etc":
        if t <= state.commit_t:
            return (t - 1) % K
        if state.committed is None:
            state.committed = _tiebreak_argmax(state.means, stream)
        return state.committed
    if kind == "hybrid" and t > state.t_switch:
        return (t - state.t_switch - 1) % K
    # score arithmetic is written in the exact shape the batch engine uses
    # (bonus * reciprocal sqrt) so traces replay bit-identically there
    if kind in ("ucbf", "hybrid"):
        scores = state.means + state.f(t) * (1.0 / np.sqrt(state.counts))
    elif kind == "ucb1":
        scores = state.means + np.sqrt(2.0 * np.log(t)) * (1.0 / np.sqrt(state.counts))
    elif kind == "greedy":
        scores = state.means
    elif kind == "ts_bernoulli":
        u = stream.uniform_block(K)
        scores = betaincinv(1.0 + state.ts_succ, 1.0 + state.ts_fail, u)
    elif kind == "ts_gaussian":
        # flat-prior posterior N(mean_i, 1/N_i); unit reward scale assumed
        u = stream.uniform_block(K)
        scores = state.means + ndtri(u) * (1.0 / np.sqrt(state.counts))
    else:
        raise StateError(f"unhandled kind {kind!r}")
    return _tiebreak_argmax(scores, stream)


def update(state: PolicyState, arm: int, reward: float) -> PolicyState:
    """Record the reward for the arm just played; advances the round counter."""
    if not 0 <= arm < state.K:
        raise ParameterError(f"arm index {arm} out of range for K = {state.K}")
    state.counts[arm] += 1
    state.sums[arm] += reward
    state.means[arm] = state.sums[arm] / state.counts[arm]
    if state.kind == "ts_bernoulli":
        if reward == 1.0:
            state.ts_succ[arm] += 1
        elif reward == 0.0:
            state.ts_fail[arm] += 1
        else:
            raise ParameterError("ts_bernoulli requires 0/1 rewards")
    state.t += 1
    return state


def policy_from_config(cfg: dict) -> PolicySpec:
    """Build a PolicySpec from its config-file form.

    e.g. {"kind": "ucbf", "f": {"a": 1.0, "gamma": 0.25, "beta": 1.0}},
    {"kind": "ts_bernoulli"}, {"kind": "hybrid", "f": {...}, "switch_alpha": 0.25}.
    """
    kind = cfg["kind"].lower()
    f = None
    if "f" in cfg and cfg["f"] is not None:
        fc = cfg["f"]
        f = ExplorationFunction(float(fc.get("a", 1.0)), float(fc.get("gamma", 0.0)), float(fc.get("beta", 0.0)))
    spec = PolicySpec(
        kind=kind,
        f=f,
        explore_rounds=int(cfg["explore_rounds"]) if "explore_rounds" in cfg else None,
        switch_alpha=float(cfg["switch_alpha"]) if "switch_alpha" in cfg else None,
    )
    bad = spec.violations()
    if bad:
        raise ParameterError("; ".join(bad))
    return spec


def policy_to_config(spec: PolicySpec) -> dict:
    cfg: dict = {"kind": spec.kind}
    if spec.f is not None:
        cfg["f"] = {"a": spec.f.a, "gamma": spec.f.gamma, "beta": spec.f.beta}
    if spec.explore_rounds is not None:
        cfg["explore_rounds"] = spec.explore_rounds
    if spec.switch_alpha is not None:
        cfg["switch_alpha"] = spec.switch_alpha
    return cfg
