"""Polya-urn pheromone bookkeeping and its exact/limit laws.

A pheromone table is an urn: path intensities are ball counts, a deposit adds
`deposit_quantum` more of the drawn color, and proportional selection is a
draw. The closed forms below (count-vector law, Stirling form, Dirichlet
limit) are the verifiable analytics for that process; the routing layer only
uses `select_path`/`deposit` on the data path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class EmptyTableError(ValueError):
    """Selection requested from a table with no paths."""


@dataclass
class PheromoneTable:
    """Per-path intensities plus the fixed reinforcement quantum.

    `intensities` maps path id -> intensity; dict insertion order defines the
    path order used by the vector-valued laws below.
    """

    intensities: dict
    deposit_quantum: float = 1.0

    def __post_init__(self):
        if self.deposit_quantum <= 0:
            raise ValueError(f"deposit quantum must be positive, got {self.deposit_quantum}")
        for path, c in self.intensities.items():
            if c <= 0:
                raise ValueError(f"intensity for path {path!r} must be positive, got {c}")

    def total(self) -> float:
        return sum(self.intensities.values())


@dataclass(frozen=True)
class CountVector:
    """Per-path draw tallies; `total` is the number of draws so far."""

    counts: tuple

    def __post_init__(self):
        for a in self.counts:
            if a < 0 or a != int(a):
                raise ValueError(f"counts must be non-negative integers, got {self.counts}")

    @property
    def total(self) -> int:
        return sum(self.counts)


def select_path(table: PheromoneTable, rng):
    """Draw a path id with probability proportional to its intensity."""
    if not table.intensities:
        raise EmptyTableError("cannot select from an empty pheromone table")
    u = rng.random() * table.total()
    acc = 0.0
    last = None
    for path, c in table.intensities.items():
        acc += c
        last = path
        if u < acc:
            return path
    return last  # float roundoff tail


def deposit(table: PheromoneTable, path) -> PheromoneTable:
    """Reinforce one path by the table's deposit quantum; other paths unchanged."""
    if path not in table.intensities:
        raise KeyError(f"unknown path {path!r}")
    bumped = dict(table.intensities)
    bumped[path] += table.deposit_quantum
    return PheromoneTable(bumped, table.deposit_quantum)


def urn_probability(initial: PheromoneTable, counts: CountVector) -> float:
    """Probability that b = total draws split across the paths as `counts`.

    Exchangeability makes every draw order with the same tallies equally
    likely, so the count-vector law is the per-sequence Gamma-ratio product
    times the multinomial coefficient. Evaluated in log space via lgamma so
    large b cannot overflow.
    """
    cs = list(initial.intensities.values())
    if len(cs) != len(counts.counts):
        raise ValueError(f"count vector has {len(counts.counts)} entries for {len(cs)} paths")
    t = initial.deposit_quantum
    alphas = [c / t for c in cs]
    s = sum(alphas)
    b = counts.total
    logp = math.lgamma(s) - math.lgamma(b + s) + math.lgamma(b + 1)
    for a, alpha in zip(counts.counts, alphas):
        logp += math.lgamma(a + alpha) - math.lgamma(alpha) - math.lgamma(a + 1)
    return math.exp(logp)


def stirling_gamma(b: float) -> float:
    """Stirling-form approximation of Gamma(b): sqrt(2*pi*(b-1)) * ((b-1)/e)**(b-1)."""
    if b <= 1:
        raise ValueError(f"stirling form needs b > 1, got {b}")
    m = b - 1.0
    return math.sqrt(2.0 * math.pi * m) * math.exp(m * (math.log(m) - 1.0))


def limiting_density(shares, initial: PheromoneTable) -> float:
    """Density of the long-run path shares: Dirichlet(C_1/t, ..., C_n/t).

    For two paths this is the Beta density in the first share. `shares` must
    be strictly positive and sum to 1 (within 1e-9).
    """
    cs = list(initial.intensities.values())
    if len(shares) != len(cs):
        raise ValueError(f"{len(shares)} shares for {len(cs)} paths")
    if any(x <= 0 or x >= 1 for x in shares):
        raise ValueError(f"shares must lie strictly inside (0, 1), got {shares}")
    if abs(sum(shares) - 1.0) > 1e-9:
        raise ValueError(f"shares must sum to 1, got {sum(shares)}")
    t = initial.deposit_quantum
    alphas = [c / t for c in cs]
    logf = math.lgamma(sum(alphas))
    for x, alpha in zip(shares, alphas):
        logf += (alpha - 1.0) * math.log(x) - math.lgamma(alpha)
    return math.exp(logf)
