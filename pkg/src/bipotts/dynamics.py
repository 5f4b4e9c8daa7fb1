"""Single-site heat-bath dynamics on the bipartite graph.

A step selects one of the 2n vertices uniformly and resamples its spin from
the Gibbs conditional given everything else. Because the energy is bilinear in
the two sides' magnetizations, that conditional is exactly the softmax map

    g_k(z) = exp(beta*z_k) / sum_j exp(beta*z_j)

applied to the *opposite* side's magnetization: a left vertex updates from
g(L(right)) and a right vertex from g(L(left)), with no finite-n correction.
Magnetization counts are maintained incrementally, so a step costs O(q).

One vertex update is one time step; sweeps (2n steps) appear only in
reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, exact
from .model import (
    BipartiteConfig,
    LatticePoint,
    MagnetizationPair,
    ModelParams,
    ProbVector,
    SpinConfig,
)
from .rng import RngSpec


def g_map(z: ProbVector | np.ndarray, beta: float) -> ProbVector:
    """Softmax of beta*z: the limiting single-site update law and mean-field drift map."""
    zw = z.weights if isinstance(z, ProbVector) else np.asarray(z, dtype=np.float64)
    e = np.exp(beta * (zw - zw.max()))
    return ProbVector(e / e.sum())


def g_weights(z: np.ndarray, beta: float) -> np.ndarray:
    """Raw softmax weights (plain ndarray), for hot analysis loops."""
    e = np.exp(beta * (z - z.max()))
    return e / e.sum()


def g_jacobian(z: ProbVector | np.ndarray, beta: float) -> np.ndarray:
    """Jacobian of the softmax map: entry (k, j) = beta * g_k * (delta_kj - g_j)."""
    g = g_map(z, beta).weights
    return beta * (np.diag(g) - np.outer(g, g))


@dataclass
class ChainState:
    """Mutable state of one chain; single-owner, not safe to share across threads.

    `mags` (the count vectors) are maintained incrementally and checked against
    a recount after every Python-level step when assertions are enabled.
    """

    params: ModelParams
    left: np.ndarray
    right: np.ndarray
    lcounts: np.ndarray
    rcounts: np.ndarray
    step: int = 0

    @classmethod
    def from_config(cls, params: ModelParams, cfg: BipartiteConfig, step: int = 0) -> "ChainState":
        if cfg.n != params.n or cfg.q != params.q:
            raise ValueError("configuration does not match params")
        left = np.array(cfg.left.spins, dtype=np.int64)
        right = np.array(cfg.right.spins, dtype=np.int64)
        return cls(
            params=params,
            left=left,
            right=right,
            lcounts=np.bincount(left, minlength=params.q),
            rcounts=np.bincount(right, minlength=params.q),
            step=step,
        )

    @classmethod
    def ordered(cls, params: ModelParams, spin: int = 0) -> "ChainState":
        """All vertices on both sides set to the given spin."""
        if not (0 <= spin < params.q):
            raise ValueError(f"spin {spin} out of range for q={params.q}")
        cfg = BipartiteConfig(
            SpinConfig(np.full(params.n, spin), params.q),
            SpinConfig(np.full(params.n, spin), params.q),
        )
        return cls.from_config(params, cfg)

    @classmethod
    def random_uniform(cls, params: ModelParams, rng: RngSpec) -> "ChainState":
        """Independent uniform spins, drawn from the stream's init salts."""
        left = np.empty(params.n, dtype=np.int64)
        right = np.empty(params.n, dtype=np.int64)
        _kernels.init_uniform(left, params.q, rng.key, _kernels.SALT_INIT_LEFT)
        _kernels.init_uniform(right, params.q, rng.key, _kernels.SALT_INIT_RIGHT)
        return cls(
            params=params,
            left=left,
            right=right,
            lcounts=np.bincount(left, minlength=params.q),
            rcounts=np.bincount(right, minlength=params.q),
        )

    @property
    def config(self) -> BipartiteConfig:
        return BipartiteConfig(
            SpinConfig(self.left.copy(), self.params.q),
            SpinConfig(self.right.copy(), self.params.q),
        )

    @property
    def mags(self) -> MagnetizationPair:
        return MagnetizationPair(LatticePoint(self.lcounts), LatticePoint(self.rcounts))

    def copy(self) -> "ChainState":
        return ChainState(
            params=self.params,
            left=self.left.copy(),
            right=self.right.copy(),
            lcounts=self.lcounts.copy(),
            rcounts=self.rcounts.copy(),
            step=self.step,
        )

    def _counts_consistent(self) -> bool:
        return np.array_equal(
            self.lcounts, np.bincount(self.left, minlength=self.params.q)
        ) and np.array_equal(self.rcounts, np.bincount(self.right, minlength=self.params.q))


def update_distribution(state: ChainState, side: str, vertex: int) -> ProbVector:
    """Law of the resampled spin at the given vertex: softmax of the opposite side."""
    if not (0 <= vertex < state.params.n):
        raise IndexError(f"vertex {vertex} out of range for n={state.params.n}")
    if side == "left":
        opposite = state.rcounts
    elif side == "right":
        opposite = state.lcounts
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return g_map(opposite / state.params.n, state.params.beta)


def step(state: ChainState, rng: RngSpec) -> ChainState:
    """Advance one vertex update in place; returns the same state object."""
    _kernels.chain_step(
        state.left,
        state.right,
        state.lcounts,
        state.rcounts,
        state.params.beta,
        rng.key,
        state.step,
    )
    state.step += 1
    assert state._counts_consistent()
    return state


def run(
    initial: ChainState, steps: int, record_every: int, rng: RngSpec
) -> list[tuple[int, MagnetizationPair]]:
    """Evolve a copy of `initial`, recording the magnetization pair periodically.

    The trajectory has 1 + steps // record_every entries and is a pure function
    of (initial, steps, record_every, rng).
    """
    offsets, rec = run_counts(initial, steps, record_every, rng)
    out = []
    for i, off in enumerate(offsets):
        q = initial.params.q
        pair = MagnetizationPair(LatticePoint(rec[i, :q]), LatticePoint(rec[i, q:]))
        out.append((initial.step + int(off), pair))
    return out


def run_counts(
    initial: ChainState, steps: int, record_every: int, rng: RngSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Bulk form of `run`: (step offsets, raw count snapshots of shape (k, 2q))."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    state = initial.copy()
    nrec = 1 + steps // record_every
    rec = np.empty((nrec, 2 * state.params.q), dtype=np.int64)
    _kernels.run_chain(
        state.left,
        state.right,
        state.lcounts,
        state.rcounts,
        state.params.beta,
        rng.key,
        state.step,
        steps,
        record_every,
        rec,
    )
    offsets = np.arange(nrec, dtype=np.int64) * record_every
    return offsets, rec


def assembled_kernel(params: ModelParams, cap: int = exact.DEFAULT_KERNEL_CAP) -> np.ndarray:
    """Single-step kernel over all configurations, built from the softmax update law.

    Companion to exact.exact_glauber_kernel (which renormalizes raw conditional
    Gibbs weights); the two must agree to floating-point accuracy.
    """
    states = params.q ** (2 * params.n)
    if states > cap:
        raise exact.EnumerationCapError(params, states, cap)
    q, n = params.q, params.n
    m = q**n
    qpow = q ** np.arange(n)
    kernel = np.zeros((states, states))
    for idx in range(states):
        left, right = exact.index_to_sides(idx, q, n)
        a = np.bincount(left, minlength=q)
        b = np.bincount(right, minlength=q)
        g_left = g_weights(b / n, params.beta)  # law for left vertices
        g_right = g_weights(a / n, params.beta)
        for i in range(n):
            base = idx - left[i] * qpow[i] * m
            for k in range(q):
                kernel[idx, base + k * qpow[i] * m] += g_left[k] / (2 * n)
        for j in range(n):
            base = idx - right[j] * qpow[j]
            for k in range(q):
                kernel[idx, base + k * qpow[j]] += g_right[k] / (2 * n)
    return kernel
