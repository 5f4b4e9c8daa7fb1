"""Greedy (maximal per-site) coupling of two heat-bath chains.

Both chains update the same uniformly chosen vertex each step. The new spins
agree with the largest possible probability: diagonal mass is the
coordinatewise minimum of the two update laws, residual mass is drawn
independently, so the per-vertex mismatch probability is exactly the total
variation distance between the two laws. Identical laws couple identically
(the residual formula is 0/0 there and the identity coupling is its limit).

Distance bookkeeping is incremental: only the updated site can change the
discrepancy count, by at most one. Coalescence is absorbing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import ChainState, g_weights
from .model import ProbVector
from .rng import RngSpec

RESIDUAL_TOL = 1e-14


def coupled_update_dist(px: ProbVector | np.ndarray, py: ProbVector | np.ndarray) -> np.ndarray:
    """Joint law of the two new spins at a shared vertex, as a q x q matrix.

    Marginals reproduce px and py; the diagonal carries min(px_k, py_k); the
    mismatch mass 1 - sum_k min(px_k, py_k) equals the TV distance of the two
    laws. For (numerically) identical laws this degenerates to the identity
    coupling.
    """
    pxw = px.weights if isinstance(px, ProbVector) else np.asarray(px, dtype=np.float64)
    pyw = py.weights if isinstance(py, ProbVector) else np.asarray(py, dtype=np.float64)
    if pxw.shape != pyw.shape:
        raise ValueError("update distributions must have equal length")
    pmin = np.minimum(pxw, pyw)
    stay = pmin.sum()
    joint = np.diag(pmin)
    if stay < 1.0 - RESIDUAL_TOL:
        rx = pxw - pmin
        ry = pyw - pmin
        joint = joint + np.outer(rx, ry) / (1.0 - stay)
    return joint


@dataclass
class CouplingState:
    """A pair of chains evolved jointly; single-owner like its components."""

    x: ChainState
    y: ChainState
    distance: int
    coalesced_at: int | None = None

    @classmethod
    def from_states(cls, x: ChainState, y: ChainState) -> "CouplingState":
        if x.params != y.params:
            raise ValueError("coupled chains must share (q, n, beta)")
        if x.step != y.step:
            raise ValueError("coupled chains must be synchronized in time")
        d = int(
            np.count_nonzero(x.left != y.left) + np.count_nonzero(x.right != y.right)
        )
        return cls(x=x, y=y, distance=d, coalesced_at=0 if d == 0 else None)

    @property
    def step(self) -> int:
        return self.x.step

    def _distance_consistent(self) -> bool:
        return self.distance == int(
            np.count_nonzero(self.x.left != self.y.left)
            + np.count_nonzero(self.x.right != self.y.right)
        )


def coupled_step(cs: CouplingState, rng: RngSpec) -> CouplingState:
    """One shared-vertex greedy update of both chains, in place."""
    d = _kernels.coupled_step(
        cs.x.left,
        cs.x.right,
        cs.y.left,
        cs.y.right,
        cs.x.lcounts,
        cs.x.rcounts,
        cs.y.lcounts,
        cs.y.rcounts,
        cs.x.params.beta,
        rng.key,
        cs.step,
        cs.distance,
    )
    cs.x.step += 1
    cs.y.step += 1
    cs.distance = int(d)
    if cs.distance == 0 and cs.coalesced_at is None:
        cs.coalesced_at = cs.step
    assert cs._distance_consistent()
    return cs


def _side_tvs(cs: CouplingState) -> tuple[float, float]:
    n = cs.x.params.n
    beta = cs.x.params.beta
    g_xl = g_weights(cs.x.rcounts / n, beta)  # law of a left update in chain X
    g_yl = g_weights(cs.y.rcounts / n, beta)
    g_xr = g_weights(cs.x.lcounts / n, beta)
    g_yr = g_weights(cs.y.lcounts / n, beta)
    tv_left = 0.5 * float(np.abs(g_yl - g_xl).sum())
    tv_right = 0.5 * float(np.abs(g_yr - g_xr).sum())
    return tv_left, tv_right


def kappa_parts(cs: CouplingState) -> tuple[float, float]:
    """Per-side mismatch probabilities: TV of the left-update laws and of the right-update laws."""
    return _side_tvs(cs)


def kappa(cs: CouplingState) -> float:
    """Total mismatch weight: sum of the two sides' update-law TV distances.

    Exact for this model (the update laws are exactly the softmax of the
    opposite magnetization, with no finite-n residue).
    """
    tv_left, tv_right = _side_tvs(cs)
    return tv_left + tv_right


def one_step_expected_distance(cs: CouplingState) -> float:
    """Exact mean distance after one coupled step, by enumerating the 2n vertex choices.

    At each vertex the updated site's mismatch probability is the off-diagonal
    mass of the joint update law for that side.
    """
    n = cs.x.params.n
    beta = cs.x.params.beta
    j_left = coupled_update_dist(
        g_weights(cs.x.rcounts / n, beta), g_weights(cs.y.rcounts / n, beta)
    )
    j_right = coupled_update_dist(
        g_weights(cs.x.lcounts / n, beta), g_weights(cs.y.lcounts / n, beta)
    )
    mismatch_left = 1.0 - float(np.trace(j_left))
    mismatch_right = 1.0 - float(np.trace(j_right))
    d = cs.distance
    total = 0.0
    for v in range(n):
        disc = 1.0 if cs.x.left[v] != cs.y.left[v] else 0.0
        total += d - disc + mismatch_left
    for v in range(n):
        disc = 1.0 if cs.x.right[v] != cs.y.right[v] else 0.0
        total += d - disc + mismatch_right
    return total / (2 * n)


@dataclass(frozen=True)
class CouplingResult:
    coupling_time: int | None  # None on timeout
    timed_out: bool
    trace: np.ndarray = field(repr=False)  # recorded distances, slot 0 = initial
    trace_stride: int = 0

    @property
    def trace_steps(self) -> np.ndarray:
        return np.arange(self.trace.size, dtype=np.int64) * max(self.trace_stride, 1)


def run_coupling(
    x0: ChainState,
    y0: ChainState,
    t_max: int,
    rng: RngSpec,
    trace_stride: int = 0,
) -> CouplingResult:
    """Evolve copies of (x0, y0) under the greedy coupling until they meet or t_max.

    Deterministic given `rng`. If `trace_stride` > 0, the distance is recorded
    every that many steps, starting with the initial distance.
    """
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    cs = CouplingState.from_states(x0.copy(), y0.copy())
    if trace_stride > 0:
        trace = np.full(1 + t_max // trace_stride, -1, dtype=np.int64)
    else:
        trace = np.empty(0, dtype=np.int64)
    tau, final_d = _kernels.run_coupled(
        cs.x.left,
        cs.x.right,
        cs.y.left,
        cs.y.right,
        cs.x.lcounts,
        cs.x.rcounts,
        cs.y.lcounts,
        cs.y.rcounts,
        cs.x.params.beta,
        rng.key,
        cs.step,
        t_max,
        cs.distance,
        trace_stride,
        trace,
    )
    if trace_stride > 0:
        trace = trace[trace >= 0]
    if tau < 0:
        return CouplingResult(None, True, trace, trace_stride)
    return CouplingResult(int(tau), False, trace, trace_stride)
