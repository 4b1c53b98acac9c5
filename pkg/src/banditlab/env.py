"""Bandit instances and reward sampling.

Arms are Gaussian or Bernoulli reward laws; an instance is an ordered tuple
of arms plus the class parameters (M, sigma, Kbar) bounding means, the
sub-Gaussian constant, and the number of arms. The canonical two-armed
Gaussian gap family used throughout the sweep experiments is
make_gap_instance(delta) = {N(0,1), N(-delta,1)}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Stream

DEFAULT_M = 2.0
DEFAULT_SIGMA = 1.0
DEFAULT_KBAR = 16

_TWO_PI = 2.0 * np.pi


class ParameterError(ValueError):
    """Invalid argument to a simulation primitive."""


@dataclass(frozen=True)
class ArmDistribution:
    """A single arm's reward law.

    kind "gaussian": N(mean, scale^2), scale-sub-Gaussian.
    kind "bernoulli": P(X=1)=p with mean==p, rewards 0.0/1.0, (1/2)-sub-Gaussian.
    """

    kind: str
    mean: float
    scale: float = 1.0
    p: float | None = None

    def sub_gaussian_param(self) -> float:
        return self.scale if self.kind == "gaussian" else 0.5

    def violations(self) -> list[str]:
        out = []
        if self.kind == "gaussian":
            if not np.isfinite(self.mean):
                out.append("gaussian mean not finite")
            if not (self.scale > 0):
                out.append("gaussian scale must be > 0")
        elif self.kind == "bernoulli":
            if self.p is None or not (0.0 <= self.p <= 1.0):
                out.append("bernoulli p outside [0, 1]")
            elif self.mean != self.p:
                out.append("bernoulli mean must equal p")
        else:
            out.append(f"unknown arm kind {self.kind!r}")
        return out


def gaussian_arm(mean: float, scale: float = 1.0) -> ArmDistribution:
    return ArmDistribution("gaussian", float(mean), float(scale))


def bernoulli_arm(p: float) -> ArmDistribution:
    return ArmDistribution("bernoulli", float(p), p=float(p))


def gaussian_from_uniforms(u1, u2, mean, scale):
    """Deterministic N(mean, scale^2) draw from two uniforms.

    Paired (Box-Muller, cosine branch) transform; inverse-free by design so
    reward streams replay bit-exactly. 1-u1 keeps the log argument in (0, 1].
    Works elementwise on arrays; the scalar sampler and the batch engine both
    route through this function so their outputs are bit-identical.
    """
    return mean + scale * np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(_TWO_PI * u2)


def sample(arm: ArmDistribution, stream: Stream) -> float:
    """Draw one reward, advancing the stream.

    Consumes exactly 2 uniforms for a Gaussian arm and 1 for a Bernoulli arm;
    the batch engine relies on this fixed consumption pattern.
    """
    bad = arm.violations()
    if bad:
        raise ParameterError("; ".join(bad))
    if arm.kind == "gaussian":
        u1 = stream.uniform()
        u2 = stream.uniform()
        return float(gaussian_from_uniforms(u1, u2, arm.mean, arm.scale))
    return 1.0 if stream.uniform() < arm.p else 0.0


@dataclass(frozen=True)
class BanditInstance:
    """Ordered list of arms with the instance-class parameters."""

    arms: tuple[ArmDistribution, ...]
    class_M: float = DEFAULT_M
    class_sigma: float = DEFAULT_SIGMA
    class_Kbar: int = DEFAULT_KBAR

    @property
    def K(self) -> int:
        return len(self.arms)

    def means(self) -> np.ndarray:
        return np.array([a.mean for a in self.arms], dtype=np.float64)

    def gaps(self) -> np.ndarray:
        m = self.means()
        return m.max() - m


def make_instance(arms, M=DEFAULT_M, sigma=DEFAULT_SIGMA, Kbar=DEFAULT_KBAR) -> BanditInstance:
    return BanditInstance(tuple(arms), float(M), float(sigma), int(Kbar))


def make_gap_instance(delta: float, M=DEFAULT_M, sigma=DEFAULT_SIGMA, Kbar=DEFAULT_KBAR) -> BanditInstance:
    """Two-armed Gaussian gap-family instance {N(0,1), N(-delta,1)}."""
    if delta < 0:
        raise ParameterError(f"gap delta must be >= 0, got {delta}")
    if delta > 2.0 * M:
        raise ParameterError(f"gap delta {delta} exceeds 2*M = {2.0 * M}")
    return make_instance([gaussian_arm(0.0, 1.0), gaussian_arm(-delta, 1.0)], M, sigma, Kbar)


def validate_instance(inst: BanditInstance) -> list[str]:
    """Report every violated instance-class invariant (empty iff valid)."""
    out = []
    if inst.K < 2:
        out.append("K < 2")
    if inst.K > inst.class_Kbar:
        out.append(f"K = {inst.K} exceeds Kbar = {inst.class_Kbar}")
    for i, arm in enumerate(inst.arms, start=1):
        for v in arm.violations():
            out.append(f"arm {i}: {v}")
        if abs(arm.mean) > inst.class_M:
            out.append(f"arm {i}: mean outside [-M, M]")
        if arm.sub_gaussian_param() > inst.class_sigma:
            out.append(f"arm {i}: sub-Gaussian parameter exceeds sigma = {inst.class_sigma}")
    return out


def instance_from_config(cfg: dict) -> BanditInstance:
    """Build an instance from its config-file form.

    Either {"arms": [{"kind": "gaussian", "mean": 0.0, "scale": 1.0}, ...],
    "M": 2.0, "sigma": 1.0, "Kbar": 16} or the gap-family shorthand
    {"gap_family": {"delta": 0.02}}.
    """
    M = float(cfg.get("M", DEFAULT_M))
    sigma = float(cfg.get("sigma", DEFAULT_SIGMA))
    Kbar = int(cfg.get("Kbar", DEFAULT_KBAR))
    if "gap_family" in cfg:
        return make_gap_instance(float(cfg["gap_family"]["delta"]), M, sigma, Kbar)
    arms = []
    for spec in cfg["arms"]:
        kind = spec["kind"].lower()
        if kind == "gaussian":
            arms.append(gaussian_arm(spec["mean"], spec.get("scale", 1.0)))
        elif kind == "bernoulli":
            arms.append(bernoulli_arm(spec["p"]))
        else:
            raise ParameterError(f"unknown arm kind {spec['kind']!r}")
    return make_instance(arms, M, sigma, Kbar)


def instance_to_config(inst: BanditInstance) -> dict:
    arms = []
    for a in inst.arms:
        if a.kind == "gaussian":
            arms.append({"kind": "gaussian", "mean": a.mean, "scale": a.scale})
        else:
            arms.append({"kind": "bernoulli", "p": a.p})
    return {"arms": arms, "M": inst.class_M, "sigma": inst.class_sigma, "Kbar": inst.class_Kbar}
