"""Discrete completion-time distributions on an integer grid.

Time is measured in whole computation units t = 0, 1, 2, ...; a distribution
stores its probability mass densely over [0, support_max]. Deadlines come in
two flavours: a full distribution (unknown deadline) or a :class:`KnownDeadline`
whose CDF is a unit step at d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PMF_TOLERANCE = 1e-9


class DiscreteDistribution:
    """Probability mass function over integer times 0..support_max."""

    __slots__ = ("probs",)

    def __init__(self, probs) -> None:
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("pmf must be a non-empty 1-d array")
        if np.any(arr < -PMF_TOLERANCE):
            raise ValueError("pmf has negative mass")
        total = float(arr.sum())
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"pmf sums to {total!r}, not 1")
        # values are kept exactly as given so build -> serialize -> build is
        # the identity; in-tolerance deviation from 1 is harmless downstream
        self.probs = np.clip(arr, 0.0, None)

    # -- constructors ------------------------------------------------------

    @classmethod
    def delta(cls, t: int) -> "DiscreteDistribution":
        """Point mass at integer time t >= 0."""
        if t < 0:
            raise ValueError("delta time must be >= 0")
        probs = np.zeros(t + 1)
        probs[t] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, times) -> "DiscreteDistribution":
        """Equal mass on each distinct time in `times`."""
        times = sorted(set(int(t) for t in times))
        if not times or times[0] < 0:
            raise ValueError("uniform needs a non-empty set of times >= 0")
        probs = np.zeros(times[-1] + 1)
        probs[times] = 1.0 / len(times)
        return cls(probs)

    @classmethod
    def from_pairs(cls, pairs) -> "DiscreteDistribution":
        """Build from sparse (t, probability) pairs; repeated t accumulate."""
        pairs = list(pairs)
        if not pairs:
            raise ValueError("no (t, probability) pairs given")
        tmax = max(int(t) for t, _ in pairs)
        probs = np.zeros(tmax + 1)
        for t, p in pairs:
            if t < 0:
                raise ValueError("time must be >= 0")
            probs[int(t)] += float(p)
        return cls(probs)

    # -- queries -----------------------------------------------------------

    @property
    def support_max(self) -> int:
        return len(self.probs) - 1

    def pmf(self, t: int) -> float:
        if t < 0 or t > self.support_max:
            return 0.0
        return float(self.probs[t])

    def cdf(self, t: int) -> float:
        """P(T <= t); clamps to [0, 1] outside the support."""
        if t < 0:
            return 0.0
        if t >= self.support_max:
            return 1.0
        return float(self.probs[: t + 1].sum())

    def mean(self) -> float:
        return float(np.dot(self.probs, np.arange(len(self.probs))))

    def pairs(self) -> list[tuple[int, float]]:
        """Sparse (t, probability) view, ascending t, zero atoms dropped."""
        return [(int(t), float(p)) for t, p in enumerate(self.probs) if p > 0.0]

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return rng.choice(len(self.probs), size=n, p=self.probs)

    def shift_condition(self, elapsed: int) -> "DiscreteDistribution":
        """Remaining-time distribution given T >= elapsed, re-indexed from 0.

        Conditioning mass is P(T >= elapsed); raises if that mass is zero.
        """
        if elapsed < 0:
            raise ValueError("elapsed must be >= 0")
        if elapsed == 0:
            return DiscreteDistribution(self.probs.copy())
        tail = self.probs[elapsed:]
        mass = float(tail.sum())
        if mass <= 0.0:
            raise ValueError(f"no mass at or after t={elapsed}")
        return DiscreteDistribution(tail / mass)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        n = max(len(self.probs), len(other.probs))
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.probs)] = self.probs
        b[: len(other.probs)] = other.probs
        return bool(np.allclose(a, b, atol=PMF_TOLERANCE, rtol=0.0))

    def __repr__(self) -> str:
        return f"DiscreteDistribution({self.pairs()!r})"


@dataclass(frozen=True)
class KnownDeadline:
    """Deterministic deadline at integer time d; CDF is a unit step at d.

    Completion at exactly d fails: the survival factor 1 - D(t) is 1 iff t < d.
    """

    d: int

    def __post_init__(self) -> None:
        if self.d < 0:
            raise ValueError("deadline must be >= 0")

    def cdf(self, t: int) -> float:
        return 1.0 if t >= self.d else 0.0

    def survival(self, t: int) -> float:
        """1 - CDF(t): probability the deadline lies strictly after t."""
        return 1.0 if t < self.d else 0.0


def deadline_survival(deadline, t: int) -> float:
    """1 - D(t) for either a KnownDeadline or a DiscreteDistribution."""
    if isinstance(deadline, KnownDeadline):
        return deadline.survival(t)
    return 1.0 - deadline.cdf(t)
