"""Numerically stable streaming moments with exact parallel merging.

Partial results are accumulated per chunk of trials and merged pairwise in
fixed chunk order (Chan/Welford combine step), so the aggregate is
bit-identical no matter how many workers computed the chunks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Moments:
    """Running count, mean, and sum of squared deviations per component."""

    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def from_batch(cls, x: np.ndarray) -> "Moments":
        """Moments of one chunk; x has shape (n_obs, dim)."""
        x = np.asarray(x, dtype=np.float64)
        mean = x.mean(axis=0)
        m2 = np.sum((x - mean) ** 2, axis=0)
        return cls(n=x.shape[0], mean=mean, m2=m2)

    def merge(self, other: "Moments") -> "Moments":
        """Combine with the moments of a disjoint chunk (self first)."""
        n = self.n + other.n
        delta = other.mean - self.mean
        frac = other.n / n
        mean = self.mean + delta * frac
        m2 = self.m2 + other.m2 + delta * delta * self.n * frac
        return Moments(n=n, mean=mean, m2=m2)

    def variance(self, ddof: int = 1) -> np.ndarray:
        if self.n <= ddof:
            raise ValueError(f"need more than {ddof} observations")
        return self.m2 / (self.n - ddof)

    def sd(self, ddof: int = 1) -> np.ndarray:
        return np.sqrt(self.variance(ddof))


def merge_in_order(parts: list[Moments]) -> Moments:
    """Fold chunk moments left-to-right (chunk index order)."""
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)
    return acc
