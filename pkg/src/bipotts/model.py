"""Core data types and elementary quantities of the bipartite Potts model.

Conventions: spins are 0-based integers in {0, ..., q-1} (one-hot vectors are
never materialized), a configuration is a pair of length-n spin sequences
(left, right), and the energy couples the two sides only:

    energy(left, right) = -(1/n) * sum_{i,j} [left_i == right_j]
                        = -n * <counts(left)/n, counts(right)/n>

The inner-product form is the one implementations use; it is exact integer
arithmetic divided by n, so an exact rational variant is exposed for
small-instance oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

PROB_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModelParams:
    """Ensemble parameters: spin-state count q, side size n, inverse temperature beta."""

    q: int
    n: int
    beta: float

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise ValueError(f"q must be an integer >= 2, got {self.q}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError(f"beta must be a finite real >= 0, got {self.beta}")


@dataclass(frozen=True)
class SpinConfig:
    """Spin assignment of one side: integers in {0,...,q-1}, length n."""

    spins: np.ndarray
    q: int

    def __post_init__(self):
        spins = np.asarray(self.spins, dtype=np.int64)
        if spins.ndim != 1 or spins.size == 0:
            raise ValueError("spins must be a nonempty 1-d sequence")
        if self.q < 2:
            raise ValueError(f"q must be >= 2, got {self.q}")
        if spins.min() < 0 or spins.max() >= self.q:
            raise ValueError("spin values must lie in {0,...,q-1}")
        object.__setattr__(self, "spins", _frozen(spins))

    @property
    def n(self) -> int:
        return self.spins.size

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpinConfig)
            and self.q == other.q
            and np.array_equal(self.spins, other.spins)
        )

    def __hash__(self) -> int:
        return hash((self.q, self.spins.tobytes()))


@dataclass(frozen=True)
class BipartiteConfig:
    """Microstate of the model: spin configurations on the left and right sides."""

    left: SpinConfig
    right: SpinConfig

    def __post_init__(self):
        if self.left.n != self.right.n:
            raise ValueError(
                f"sides must have equal length, got {self.left.n} and {self.right.n}"
            )
        if self.left.q != self.right.q:
            raise ValueError("sides must share the same q")

    @property
    def n(self) -> int:
        return self.left.n

    @property
    def q(self) -> int:
        return self.left.q


@dataclass(frozen=True)
class ProbVector:
    """Point of the probability simplex over q spin values.

    Inputs off the simplex by at most ``PROB_TOL`` (in l1 deviation of the sum)
    are renormalized; anything farther is rejected so silent drift surfaces
    early.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("weights must be a 1-d sequence of length >= 2")
        if np.any(w < 0):
            if np.min(w) < -PROB_TOL:
                raise ValueError(f"negative weight {np.min(w)}")
            w = np.clip(w, 0.0, None)
        s = w.sum()
        if abs(s - 1.0) > PROB_TOL:
            raise ValueError(f"weights sum to {s!r}, outside 1 +/- {PROB_TOL}")
        object.__setattr__(self, "weights", _frozen(w / s))

    @property
    def q(self) -> int:
        return self.weights.size

    def __eq__(self, other) -> bool:
        return isinstance(other, ProbVector) and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())


def uniform_prob(q: int) -> ProbVector:
    """The barycenter (1/q, ..., 1/q)."""
    return ProbVector(np.full(q, 1.0 / q))


def basis_prob(k: int, q: int) -> ProbVector:
    """The simplex vertex putting all mass on spin k."""
    w = np.zeros(q)
    w[k] = 1.0
    return ProbVector(w)


@dataclass(frozen=True)
class LatticePoint:
    """Lattice simplex point: nonnegative integer spin counts summing to n."""

    counts: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("counts must be a 1-d sequence of length >= 2")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", _frozen(c))
        object.__setattr__(self, "n", int(c.sum()))

    @property
    def q(self) -> int:
        return self.counts.size

    def as_prob(self) -> ProbVector:
        return ProbVector(self.counts / self.n)

    def __eq__(self, other) -> bool:
        return isinstance(other, LatticePoint) and np.array_equal(
            self.counts, other.counts
        )

    def __hash__(self) -> int:
        return hash(self.counts.tobytes())


@dataclass(frozen=True)
class MagnetizationPair:
    """Joint magnetization of a configuration: one lattice point per side."""

    left: LatticePoint
    right: LatticePoint

    def __post_init__(self):
        if self.left.n != self.right.n:
            raise ValueError(
                f"sides must be built from the same n, got {self.left.n} and {self.right.n}"
            )


def magnetization(cfg: SpinConfig) -> LatticePoint:
    """Spin counts of a configuration; counts/n is the empirical spin measure."""
    return LatticePoint(np.bincount(cfg.spins, minlength=cfg.q))


def hamiltonian(cfg: BipartiteConfig) -> float:
    """Energy of a configuration via the O(n + q) inner-product form."""
    a = np.bincount(cfg.left.spins, minlength=cfg.q)
    b = np.bincount(cfg.right.spins, minlength=cfg.q)
    return -float(a @ b) / cfg.n


def hamiltonian_exact(cfg: BipartiteConfig) -> Fraction:
    """Energy as an exact rational, for small-instance oracles."""
    a = np.bincount(cfg.left.spins, minlength=cfg.q)
    b = np.bincount(cfg.right.spins, minlength=cfg.q)
    return Fraction(-int(a @ b), cfg.n)


def interaction_energy(x: ProbVector | np.ndarray, y: ProbVector | np.ndarray) -> float:
    """Per-site interaction energy -<x, y> of two magnetization vectors."""
    xw = x.weights if isinstance(x, ProbVector) else np.asarray(x, dtype=np.float64)
    yw = y.weights if isinstance(y, ProbVector) else np.asarray(y, dtype=np.float64)
    if xw.shape != yw.shape:
        raise ValueError(f"shape mismatch: {xw.shape} vs {yw.shape}")
    return -float(xw @ yw)


def config_distance(a: BipartiteConfig, b: BipartiteConfig) -> int:
    """Number of sites (across both sides) where two configurations disagree."""
    if a.n != b.n or a.q != b.q:
        raise ValueError(
            f"configurations have mismatched dimensions: "
            f"(n={a.n}, q={a.q}) vs (n={b.n}, q={b.q})"
        )
    return int(
        np.count_nonzero(a.left.spins != b.left.spins)
        + np.count_nonzero(a.right.spins != b.right.spins)
    )


def config_from_spins(left: Sequence[int], right: Sequence[int], q: int) -> BipartiteConfig:
    return BipartiteConfig(SpinConfig(np.asarray(left), q), SpinConfig(np.asarray(right), q))


def lattice_count_vectors(q: int, n: int) -> np.ndarray:
    """All count vectors of the lattice simplex (q parts summing to n), lexicographic.

    Shape (binom(n+q-1, q-1), q).
    """
    if q == 1:
        return np.array([[n]], dtype=np.int64)
    rows = []
    for first in range(n + 1):
        tail = lattice_count_vectors(q - 1, n - first)
        block = np.empty((tail.shape[0], q), dtype=np.int64)
        block[:, 0] = first
        block[:, 1:] = tail
        rows.append(block)
    return np.vstack(rows)
