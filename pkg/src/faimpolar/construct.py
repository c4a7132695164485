"""Code designs and polarization summaries built from per-index statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import check_rate
from .exceptions import BudgetExceeded, InvalidParameter
from .model import FaimModel
from .oracle import DEFAULT_BUDGET as ORACLE_BUDGET
from .oracle import block_entropies, largest_feasible_n

CRITERIA = ("Z", "H", "Khat_complement")


def _badness(stat, criterion):
    if criterion == "Z":
        return stat.Z
    if criterion == "H":
        return stat.H
    if criterion == "Khat_complement":
        return 1.0 - stat.K_hat
    raise InvalidParameter(f"unknown criterion {criterion!r}; choose from {CRITERIA}")


def rank_indices(stats, criterion: str = "Z") -> list:
    """1-based indices from most to least reliable; ties go to the smaller index."""
    return [s.index for s in sorted(stats, key=lambda s: (_badness(s, criterion), s.index))]


@dataclass
class CodeDesign:
    """A block length, its frozen index set (1-based, sorted) and the stats it came from."""

    N: int
    frozen: list
    criterion: str
    rate: float
    stats: list = field(default_factory=list, repr=False)

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, bool)
        mask[np.asarray(self.frozen, dtype=int) - 1] = True
        return mask

    @property
    def info_indices(self) -> np.ndarray:
        """0-based positions of the information bits."""
        return np.flatnonzero(~self.frozen_mask)

    @property
    def num_info(self) -> int:
        return self.N - len(self.frozen)


def info_size(N: int, rate: float) -> int:
    # rounding guards against rate * N landing a hair above an integer
    return min(N, math.ceil(round(rate * N, 9)))


def frozen_set(stats, rate: float, criterion: str = "Z") -> CodeDesign:
    rate = check_rate(rate)
    stats = list(stats)
    N = len(stats)
    order = rank_indices(stats, criterion)
    k = info_size(N, rate)
    return CodeDesign(N=N, frozen=sorted(order[k:]), criterion=criterion, rate=rate, stats=stats)


@dataclass(frozen=True)
class Fractions:
    """Exact fractions (so the three always sum to one) and the threshold used."""

    low: Fraction
    high: Fraction
    middle: Fraction
    threshold: float


def polarization_fractions(stats, beta: float, strict: bool = False, param: str = "Z") -> Fractions:
    """Fractions of indices with ``param < 2^-N^beta``, ``param > 1 - 2^-N^beta``, and neither.

    In strict mode an index only counts as polarized when its estimate clears
    the threshold by two standard errors.
    """
    if beta <= 0:
        raise InvalidParameter("beta must be positive")
    stats = list(stats)
    N = len(stats)
    thr = 2.0 ** (-(N**beta))
    vals = np.array([s.get(param) for s in stats])
    errs = np.array([s.err(param) for s in stats]) if strict else np.zeros(N)
    low = int(np.sum(vals + 2 * errs < thr))
    high = int(np.sum(vals - 2 * errs > 1 - thr))
    return Fractions(Fraction(low, N), Fraction(high, N), Fraction(N - low - high, N), thr)


@dataclass(frozen=True)
class EntropyRate:
    """Conditional entropy rate bracket from one block length.

    ``lower = H(X^N | Y^N, S_0, S_N) / N`` and ``upper = H(X^N | Y^N) / N``;
    ``increment`` is ``H(X^N|Y^N) - H(X^{N-1}|Y^{N-1})``, usually a much
    tighter point estimate.
    """

    N: int
    lower: float
    upper: float
    increment: float

    @property
    def estimate(self) -> float:
        return self.upper

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def entropy_rate_estimate(model: FaimModel, N_max: int | None = None, budget: int = ORACLE_BUDGET) -> EntropyRate:
    N = largest_feasible_n(model, budget, limit=N_max or 64)
    if N < 2:
        raise BudgetExceeded("no block length N >= 2 fits the oracle budget", largest_feasible=N)
    h_plain, h_states = block_entropies(model, N, budget)
    prev, _ = block_entropies(model, N - 1, budget)
    return EntropyRate(N=N, lower=h_states / N, upper=h_plain / N, increment=h_plain - prev)

