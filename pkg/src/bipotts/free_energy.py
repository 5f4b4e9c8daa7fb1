"""Entropy, rate-function, and free-energy functionals on the simplex.

The variational score of a magnetization pair is

    alpha(gamma, nu) = beta*<gamma, nu> - R(gamma|rho) - R(nu|rho),

with R the relative entropy against the uniform vector rho. Its maximizers are
the equilibrium macrostates; the rate function of the pair empirical measure
is sup(alpha) - alpha. The score decomposes along the diagonal as

    alpha(gamma, nu) = alpha_diag(gamma) + alpha_diag(nu) - (beta/2)*||gamma - nu||^2,

which is why all maxima sit on gamma = nu. The dual side is the free-energy
functional G(x, y) = beta*<x,y> - log-mean-exp(beta*x) - log-mean-exp(beta*y)
over unconstrained vectors; restricted to the diagonal its infimum mirrors the
alpha supremum with opposite sign (the unrestricted infimum over x != y is
-infinity for this bilinear interaction, so the diagonal restriction is the
meaningful one and `duality_gap` reports |sup alpha + inf_x G(x,x)|).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .model import ProbVector


class OptimizerDiagnosticError(RuntimeError):
    """Descent failed to converge; carries the per-start iterate trace."""

    def __init__(self, message: str, trace: list):
        super().__init__(f"{message}; trace: {trace}")
        self.trace = trace


def _as_weights(v) -> np.ndarray:
    return v.weights if isinstance(v, ProbVector) else np.asarray(v, dtype=np.float64)


def relative_entropy(nu, reference) -> float:
    """KL divergence sum nu_k log(nu_k / ref_k), with 0*log(0) = 0.

    Mass of nu on a zero coordinate of the reference gives +inf (a value, not
    an exception).
    """
    nw = _as_weights(nu)
    rw = _as_weights(reference)
    if nw.shape != rw.shape:
        raise ValueError(f"shape mismatch: {nw.shape} vs {rw.shape}")
    pos = nw > 0
    if np.any(rw[pos] == 0):
        return float("inf")
    return float(np.sum(nw[pos] * np.log(nw[pos] / rw[pos])))


def alpha(beta: float, gamma, nu) -> float:
    """Variational score of a magnetization pair (energy minus entropy cost)."""
    gw = _as_weights(gamma)
    nw = _as_weights(nu)
    q = gw.size
    rho = np.full(q, 1.0 / q)
    return float(beta * (gw @ nw)) - relative_entropy(gw, rho) - relative_entropy(nw, rho)


def alpha_diag(beta: float, gamma) -> float:
    """Single-vector score (beta/2)*<gamma,gamma> - R(gamma|rho); alpha on the diagonal is twice this."""
    gw = _as_weights(gamma)
    q = gw.size
    rho = np.full(q, 1.0 / q)
    return float(0.5 * beta * (gw @ gw)) - relative_entropy(gw, rho)


def rate_function(beta: float, gamma, nu, sup_alpha: float, tol: float = 1e-9) -> float:
    """Large-deviations rate of a magnetization pair: sup(alpha) - alpha(gamma, nu).

    `sup_alpha` must be the global maximum (see phase.sup_alpha); a sampled
    score exceeding it by more than `tol` means the maximizer is stale and is
    reported as an error rather than returning a negative rate.
    """
    a = alpha(beta, gamma, nu)
    if a > sup_alpha + tol:
        raise ValueError(
            f"alpha({a}) exceeds the supplied supremum ({sup_alpha}); stale maximizer"
        )
    return max(sup_alpha - a, 0.0)


def lmgf(x, y) -> float:
    """Logarithmic moment generating function: log-mean-exp(x) + log-mean-exp(y)."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    return float(
        logsumexp(xa) - np.log(xa.size) + logsumexp(ya) - np.log(ya.size)
    )


def free_energy_functional(beta: float, x, y) -> float:
    """G(x, y) = beta*<x,y> - log-mean-exp(beta*x) - log-mean-exp(beta*y), over R^q x R^q."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    return float(beta * (xa @ ya)) - lmgf(beta * xa, beta * ya)


def free_energy_single(beta: float, x) -> float:
    """Split form G(x) = (beta/2)*<x,x> - log-mean-exp(beta*x); G(x,y) = G(x)+G(y)-(beta/2)||x-y||^2."""
    xa = np.asarray(x, dtype=np.float64)
    return float(0.5 * beta * (xa @ xa)) - float(logsumexp(beta * xa) - np.log(xa.size))


def diag_free_energy_gradient(beta: float, x) -> np.ndarray:
    """Gradient of x -> G(x, x) = 2*G(x): equals 2*beta*(x - softmax(beta*x))."""
    xa = np.asarray(x, dtype=np.float64)
    e = np.exp(beta * (xa - xa.max()))
    return 2.0 * beta * (xa - e / e.sum())


def duality_gap(q: int, beta: float, tol: float = 1e-8) -> float:
    """|sup alpha + inf_x G(x, x)|, the diagonal-restricted duality defect.

    The supremum comes from the phase module's closed-form maximizer scan; the
    infimum from multi-start gradient descent over R^q restricted to the
    diagonal, so the two sides are computed by independent routes.
    """
    import warnings

    from . import phase  # local import: phase depends on this module

    sup_a = phase.sup_alpha(q, beta)

    starts = [np.full(q, 1.0 / q)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = phase.solve_s(beta, q)
    if s > 0:
        base = phase.phi(s, q).weights
        for i in range(q):
            w = base.copy()
            w[0], w[i] = w[i], w[0]
            starts.append(w)
    rng = np.random.default_rng(7)
    starts.extend(rng.dirichlet(np.ones(q)) for _ in range(4))

    trace = []
    best = np.inf
    for x0 in starts:
        res = minimize(
            lambda x: 2.0 * free_energy_single(beta, x),
            x0,
            jac=lambda x: diag_free_energy_gradient(beta, x),
            method="BFGS",
            options={"gtol": tol * 1e-2, "maxiter": 500},
        )
        trace.append((x0.round(6).tolist(), res.status, float(res.fun)))
        if res.success or np.linalg.norm(res.jac) < tol:
            best = min(best, float(res.fun))
    if not np.isfinite(best):
        raise OptimizerDiagnosticError("no descent start converged", trace)
    return abs(sup_a + best)


def free_energy(beta: float, q: int) -> float:
    """Thermodynamic free energy psi(beta) = -sup(alpha)/beta, defined for beta > 0."""
    if beta <= 0:
        raise ValueError("free energy is defined for beta > 0")
    from . import phase

    return -phase.sup_alpha(q, beta) / beta
