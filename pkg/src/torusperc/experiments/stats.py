"""Estimates with standard errors and the pass/fail rule shared by every experiment."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

SE_MULTIPLIER = 3.0


@dataclass(frozen=True)
class Estimate:
    name: str
    value: float
    se: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundCheck:
    """Claim ``lhs <= rhs`` judged with ``SE_MULTIPLIER`` standard errors of slack.

    A ``strict`` check demands the claim hold by that margin instead.
    """
    name: str
    lhs: float
    rhs: float
    se: float
    strict: bool = False

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def verdict(self) -> bool:
        if self.strict:
            return bool(self.lhs < self.rhs - SE_MULTIPLIER * self.se)
        return bool(self.lhs <= self.rhs + SE_MULTIPLIER * self.se)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(slack=self.slack, verdict="pass" if self.verdict else "fail")
        return out


def binomial(name: str, hits) -> Estimate:
    hits = np.asarray(hits, dtype=bool)
    n = hits.size
    p = float(np.count_nonzero(hits)) / n
    return Estimate(name, p, math.sqrt(p * (1.0 - p) / n), n)


def jackknife_variance(name: str, x) -> Estimate:
    """Unbiased sample variance with its delete-one jackknife standard error."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("jackknife variance needs at least three samples")
    # center first so the leave-one-out sums stay well conditioned
    x = x - x.mean()
    s1, s2 = x.sum(), np.dot(x, x)
    var = (s2 - s1 * s1 / n) / (n - 1)
    loo = ((s2 - x * x) - (s1 - x) ** 2 / (n - 1)) / (n - 2)
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return Estimate(name, float(var), se, n)


def covariance_of_indicators(a, b) -> tuple[float, float]:
    """``P(A and B) - P(A) P(B)`` and its standard error from the influence function."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    pa, pb = a.mean(), b.mean()
    c = float(np.mean(a * b) - pa * pb)
    psi = (a - pa) * (b - pb) - c
    return c, float(psi.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def chebyshev_bound(a: float, level: float) -> float:
    """``4 a^2 / level^2``: bound on ``P[X >= level]`` when Var X = a^2 and P[X <= 0] = t^2."""
    return 4.0 * a * a / (level * level)


def chebyshev_applies(a: float, t: float, level: float) -> bool:
    return t > 0 and level > 2.0 * a / t


def phi(p: float, N: float) -> float:
    """``1 - (1 - p)^(1/N)``."""
    _check_prob(p)
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    return 1.0 - (1.0 - p) ** (1.0 / N)


def psi(p: float, L: float) -> float:
    """``1 - (1 - p)^(1/(16 L^2))``."""
    _check_prob(p)
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    return 1.0 - (1.0 - p) ** (1.0 / (16.0 * L * L))


def phi_psi(p: float, variant: str, k: float) -> float:
    if variant == "phi":
        return phi(p, k)
    if variant == "psi":
        return psi(p, k)
    raise ValueError(f"variant must be 'phi' or 'psi', got {variant!r}")


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
