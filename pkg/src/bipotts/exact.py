"""Brute-force oracle for small instances.

Everything here enumerates the full configuration space (q^{2n} states) and is
meant as ground truth for the fast path: exact partition function, Gibbs
probabilities, the exact single-site heat-bath kernel built from conditional
Gibbs weights (no softmax shortcut), and the exact law of the magnetization
pair. Energies enter only through spin counts, so sums are organized over the
two sides' count tables and accumulated in log space; states are indexed in
mixed-radix order and never materialized as a list when only reductions are
needed.

Results are deterministic for fixed parallelism (the implementation is
sequential with a fixed block order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import (
    BipartiteConfig,
    LatticePoint,
    MagnetizationPair,
    ModelParams,
    SpinConfig,
    lattice_count_vectors,
)

DEFAULT_ENUM_CAP = 10_000_000
DEFAULT_KERNEL_CAP = 4096
_BLOCK = 256


class EnumerationCapError(ValueError):
    """Instance too large for brute-force enumeration."""

    def __init__(self, params: ModelParams, states: int, cap: int):
        super().__init__(
            f"q^(2n) = {states} configurations for (q={params.q}, n={params.n}) "
            f"exceeds the enumeration cap {cap}"
        )


def _check_cap(params: ModelParams, cap: int) -> int:
    states = params.q ** (2 * params.n)
    if states > cap:
        raise EnumerationCapError(params, states, cap)
    return states


def side_index(spins: np.ndarray, q: int) -> int:
    """Mixed-radix rank of one side's spins (site 0 is the least significant digit)."""
    idx = 0
    for i in range(spins.size - 1, -1, -1):
        idx = idx * q + int(spins[i])
    return idx


def config_index(cfg: BipartiteConfig) -> int:
    """Rank of a configuration: left index major, right index minor."""
    return side_index(cfg.left.spins, cfg.q) * cfg.q**cfg.n + side_index(
        cfg.right.spins, cfg.q
    )


def index_to_sides(idx: int, q: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    left_idx, right_idx = divmod(idx, q**n)
    return _decode_side(left_idx, q, n), _decode_side(right_idx, q, n)


def index_to_config(idx: int, q: int, n: int) -> BipartiteConfig:
    left, right = index_to_sides(idx, q, n)
    return BipartiteConfig(SpinConfig(left, q), SpinConfig(right, q))


def _decode_side(idx: int, q: int, n: int) -> np.ndarray:
    spins = np.empty(n, dtype=np.int64)
    for i in range(n):
        idx, spins[i] = divmod(idx, q)
    return spins


def side_count_table(q: int, n: int) -> np.ndarray:
    """Spin counts for every single-side index, shape (q^n, q)."""
    m = q**n
    idx = np.arange(m)
    counts = np.zeros((m, q), dtype=np.int64)
    for _ in range(n):
        idx, digit = np.divmod(idx, q)
        np.add.at(counts, (np.arange(m), digit), 1)
    return counts


@dataclass(frozen=True)
class ExactEnsemble:
    """Exact Gibbs law over all configurations of a small instance."""

    params: ModelParams
    log_z: float
    probs: np.ndarray  # indexed by config_index

    @property
    def z(self) -> float:
        return float(np.exp(self.log_z))

    def prob_of(self, cfg: BipartiteConfig) -> float:
        if cfg.n != self.params.n or cfg.q != self.params.q:
            raise ValueError(
                f"configuration dimensions (q={cfg.q}, n={cfg.n}) do not match "
                f"ensemble (q={self.params.q}, n={self.params.n})"
            )
        return float(self.probs[config_index(cfg)])


def _log_weight_rows(params: ModelParams, counts: np.ndarray, lo: int, hi: int) -> np.ndarray:
    # log of exp(-beta*H) = beta * <a, b> / n for a block of left indices
    return params.beta * (counts[lo:hi] @ counts.T) / params.n


def log_partition_function(params: ModelParams, cap: int = DEFAULT_ENUM_CAP) -> float:
    """log Z where Z averages exp(-beta*H) over the uniform product measure."""
    _check_cap(params, cap)
    counts = side_count_table(params.q, params.n)
    m = counts.shape[0]
    block_logs = [
        logsumexp(_log_weight_rows(params, counts, lo, min(lo + _BLOCK, m)))
        for lo in range(0, m, _BLOCK)
    ]
    return float(logsumexp(block_logs)) - 2 * params.n * np.log(params.q)


def partition_function(params: ModelParams, cap: int = DEFAULT_ENUM_CAP) -> float:
    return float(np.exp(log_partition_function(params, cap)))


def build_ensemble(params: ModelParams, cap: int = DEFAULT_ENUM_CAP) -> ExactEnsemble:
    _check_cap(params, cap)
    counts = side_count_table(params.q, params.n)
    logw = params.beta * (counts @ counts.T) / params.n
    total = float(logsumexp(logw))
    probs = np.exp(logw - total).ravel()  # row-major: left major, right minor
    log_z = total - 2 * params.n * np.log(params.q)
    return ExactEnsemble(params=params, log_z=log_z, probs=probs)


def gibbs_prob(ens: ExactEnsemble, cfg: BipartiteConfig) -> float:
    return ens.prob_of(cfg)


def exact_glauber_kernel(params: ModelParams, cap: int = DEFAULT_KERNEL_CAP) -> np.ndarray:
    """Row-stochastic single-step kernel of the heat-bath dynamics, dense.

    A step selects one of the 2n vertices uniformly and resamples its spin from
    the Gibbs law conditioned on all other spins. The conditional weights are
    computed from full energy evaluations of the q candidate configurations,
    independently of the softmax form used by the production chain.
    """
    states = _check_cap(params, cap)
    q, n, beta = params.q, params.n, params.beta
    m = q**n
    counts = side_count_table(q, n)
    qpow = q ** np.arange(n)
    kernel = np.zeros((states, states))

    for idx in range(states):
        left, right = index_to_sides(idx, q, n)
        a = counts[idx // m]
        b = counts[idx % m]
        for i in range(n):
            # left vertex i: candidate energies from scratch
            logw = np.empty(q)
            for k in range(q):
                a_mod = a.copy()
                a_mod[left[i]] -= 1
                a_mod[k] += 1
                logw[k] = beta * float(a_mod @ b) / n
            w = np.exp(logw - logw.max())
            w /= w.sum()
            base = idx - left[i] * qpow[i] * m
            for k in range(q):
                kernel[idx, base + k * qpow[i] * m] += w[k] / (2 * n)
        for j in range(n):
            logw = np.empty(q)
            for k in range(q):
                b_mod = b.copy()
                b_mod[right[j]] -= 1
                b_mod[k] += 1
                logw[k] = beta * float(a @ b_mod) / n
            w = np.exp(logw - logw.max())
            w /= w.sum()
            base = idx - right[j] * qpow[j]
            for k in range(q):
                kernel[idx, base + k * qpow[j]] += w[k] / (2 * n)
    return kernel


@dataclass(frozen=True)
class PushforwardTable:
    """Exact law of the magnetization pair under the Gibbs measure."""

    params: ModelParams
    points: tuple[LatticePoint, ...]
    probs: np.ndarray  # probs[i, j] = P(left counts = points[i], right counts = points[j])

    def prob_of(self, pair: MagnetizationPair) -> float:
        i = self.index_of(pair.left)
        j = self.index_of(pair.right)
        return float(self.probs[i, j])

    def index_of(self, point: LatticePoint) -> int:
        key = tuple(point.counts.tolist())
        try:
            return self._index[key]
        except AttributeError:
            index = {tuple(p.counts.tolist()): i for i, p in enumerate(self.points)}
            object.__setattr__(self, "_index", index)
            return self._index[key]


def magnetization_pushforward(
    ens: ExactEnsemble, cap: int = DEFAULT_ENUM_CAP
) -> PushforwardTable:
    params = ens.params
    _check_cap(params, cap)
    q, n = params.q, params.n
    counts = side_count_table(q, n)
    vecs = lattice_count_vectors(q, n)
    lut = {tuple(v): i for i, v in enumerate(vecs.tolist())}
    side_to_point = np.array([lut[tuple(row)] for row in counts.tolist()])
    m = counts.shape[0]
    membership = np.zeros((m, len(vecs)))
    membership[np.arange(m), side_to_point] = 1.0
    probs = membership.T @ ens.probs.reshape(m, m) @ membership
    points = tuple(LatticePoint(v) for v in vecs)
    return PushforwardTable(params=params, points=points, probs=probs)
