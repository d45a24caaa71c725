"""Discrete optimal transport: ground costs, marginals, Sinkhorn and an exact oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 2000
DEFAULT_TOL = 1e-6
DEFAULT_EPSILON_SCALE = 0.01
EXACT_SIZE_LIMIT = 10_000
MIN_DISTANCE_CLAMP = 1e-6
DEGENERATE_PERCENTILE = 99.0
# used when no non-degenerate entry exists to take a percentile from
DEGENERATE_FALLBACK_COST = 1.0


class SolverError(RuntimeError):
    """Raised when a transport solve produces non-finite values."""


@dataclass(frozen=True)
class Coupling:
    plan: np.ndarray
    wd: float
    iterations_used: int = 0
    converged: bool = True

    @property
    def shape(self) -> tuple[int, int]:
        return self.plan.shape


def as_cost_matrix(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] == 0 or C.shape[1] == 0:
        raise ValueError(f"cost matrix must be a nonempty 2-D array, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix has non-finite entries")
    if np.any(C < 0):
        raise ValueError("cost matrix has negative entries")
    return C


def as_marginal(weights, size: int | None = None, atol: float = 1e-9) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("marginal must be a nonempty 1-D array")
    if size is not None and w.size != size:
        raise ValueError(f"marginal has {w.size} weights, expected {size}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("marginal weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > atol:
        raise ValueError(f"marginal weights sum to {w.sum()!r}, not 1")
    return w


def euclidean_cost(X, Y, x_degenerate=None, y_degenerate=None) -> np.ndarray:
    """Pairwise Euclidean distances between the rows of ``X`` and ``Y``.

    Rows flagged in ``x_degenerate``/``y_degenerate`` (all-OOV labels whose
    embedding is a placeholder zero vector) get a penalty cost instead of
    their geometric distance: the 99th percentile of the non-degenerate
    entries.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or len(X) == 0 or len(Y) == 0:
        raise ValueError("euclidean_cost needs two nonempty lists of vectors")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    C = cdist(X, Y, metric="euclidean")
    if x_degenerate is None and y_degenerate is None:
        return C
    bad = np.zeros(C.shape, dtype=bool)
    if x_degenerate is not None:
        bad |= np.asarray(x_degenerate, dtype=bool)[:, None]
    if y_degenerate is not None:
        bad |= np.asarray(y_degenerate, dtype=bool)[None, :]
    if bad.any():
        C[bad] = degenerate_penalty(C[~bad])
    return C


def degenerate_penalty(valid_costs) -> float:
    valid_costs = np.asarray(valid_costs, dtype=float)
    if valid_costs.size == 0:
        return DEGENERATE_FALLBACK_COST
    return float(np.percentile(valid_costs, DEGENERATE_PERCENTILE))


def uniform_marginal(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("uniform marginal needs n >= 1")
    return np.full(n, 1.0 / n)


def inverse_min_distance_marginal(C, side: str = "source") -> np.ndarray:
    """Weights inversely proportional to each point's shortest cross-side distance.

    ``side="source"`` uses row minima, ``side="target"`` column minima. Zero
    minima (exact label matches) are clamped to 1e-6 before inversion.
    """
    C = as_cost_matrix(C)
    if side == "source":
        d = C.min(axis=1)
    elif side == "target":
        d = C.min(axis=0)
    else:
        raise ValueError(f"side must be 'source' or 'target', got {side!r}")
    inv = 1.0 / np.maximum(d, MIN_DISTANCE_CLAMP)
    return inv / inv.sum()


def marginal_from_minima(minima) -> np.ndarray:
    """Same weighting as :func:`inverse_min_distance_marginal`, from given minima."""
    d = np.asarray(minima, dtype=float)
    inv = 1.0 / np.maximum(d, MIN_DISTANCE_CLAMP)
    return inv / inv.sum()


def default_epsilon(C) -> float:
    mean = float(np.mean(C))
    if mean <= 0.0:
        return DEFAULT_EPSILON_SCALE
    return DEFAULT_EPSILON_SCALE * mean


def wasserstein_distance(C, T) -> float:
    """Frobenius inner product <C, T>."""
    plan = T.plan if isinstance(T, Coupling) else np.asarray(T, dtype=float)
    C = np.asarray(C, dtype=float)
    if C.shape != plan.shape:
        raise ValueError(f"dimension mismatch: cost {C.shape} vs plan {plan.shape}")
    return float(np.sum(C * plan))


def _safe_log(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(w)


# scalings beyond this magnitude are absorbed into the log-domain potentials
_ABSORB_THRESHOLD = 1e30


def _sinkhorn_stage(C, mu, nu, f, g, epsilon, max_iter, tol, check_every):
    """Scaling iterations at a fixed epsilon with log-domain absorption.

    The kernel is built relative to the current potentials, so its entries
    stay O(1) near the optimum; the multiplicative scalings ``u``/``v`` are
    folded back into ``f``/``g`` whenever they grow large.
    Returns (f, g, iterations, row error).
    """
    K = np.exp((f[:, None] + g[None, :] - C) / epsilon)
    u = np.ones_like(mu)
    v = np.ones_like(nu)
    err = np.inf
    it = 0
    while it < max_iter:
        it += 1
        Kv = K @ v
        u = np.divide(mu, Kv, out=np.zeros_like(mu), where=Kv > 0)
        KTu = K.T @ u
        v = np.divide(nu, KTu, out=np.zeros_like(nu), where=KTu > 0)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SolverError(f"sinkhorn produced non-finite scalings at iteration {it}")
        if u.max() > _ABSORB_THRESHOLD or v.max() > _ABSORB_THRESHOLD:
            f, g = _absorb(f, g, u, v, epsilon)
            K = np.exp((f[:, None] + g[None, :] - C) / epsilon)
            u = np.ones_like(mu)
            v = np.ones_like(nu)
        if it % check_every and it < max_iter:
            continue
        err = float(np.max(np.abs(u * (K @ v) - mu)))
        if err <= tol:
            break
    f, g = _absorb(f, g, u, v, epsilon)
    if not (np.all(np.isfinite(f[mu > 0])) and np.all(np.isfinite(g[nu > 0]))):
        raise SolverError(f"sinkhorn produced non-finite potentials at iteration {it}")
    return f, g, it, err


def _absorb(f, g, u, v, epsilon):
    with np.errstate(divide="ignore"):
        return f + epsilon * np.log(u), g + epsilon * np.log(v)


def _soft_update(C, log_mu, log_nu, f, g, epsilon):
    """One exact log-sum-exp sweep; re-anchors potentials before a new stage."""
    f = epsilon * (log_mu - logsumexp((g[None, :] - C) / epsilon, axis=1))
    g = epsilon * (log_nu - logsumexp((f[:, None] - C) / epsilon, axis=0))
    return f, g


def round_to_feasible(plan, mu, nu) -> np.ndarray:
    """Project a nearly feasible plan onto the transport polytope.

    Rows and columns carrying excess mass are scaled down, then the missing
    mass is restored with a rank-one correction. The result satisfies both
    marginals up to floating point while moving at most O(violation) mass.
    """
    plan = np.asarray(plan, dtype=float)
    rows = plan.sum(axis=1)
    x = np.minimum(1.0, np.divide(mu, rows, out=np.ones_like(mu), where=rows > 0))
    plan = plan * x[:, None]
    cols = plan.sum(axis=0)
    y = np.minimum(1.0, np.divide(nu, cols, out=np.ones_like(nu), where=cols > 0))
    plan = plan * y[None, :]
    err_r = mu - plan.sum(axis=1)
    err_c = nu - plan.sum(axis=0)
    total = err_r.sum()
    if total > 0:
        plan = plan + np.outer(err_r, err_c) / total
    return np.maximum(plan, 0.0)


def sinkhorn(
    C,
    mu,
    nu,
    epsilon: float | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    check_every: int = 5,
    round_feasible: bool = True,
) -> Coupling:
    """Entropic OT via log-stabilized Sinkhorn iterations.

    Mass is tracked through dual potentials ``f`` and ``g``; the Gibbs kernel
    is always formed relative to them (log-sum-exp re-anchoring plus
    absorption of large scalings), so small ``epsilon`` does not underflow.
    After each column update the column marginals hold exactly; the loop
    stops once the row marginal violation (L-inf) drops to ``tol``.

    Small regularizations are reached by epsilon scaling: the potentials are
    first solved loosely at a coarse epsilon, which is then halved down to the
    requested value, warm starting every stage. The fixed point at the target
    epsilon is unchanged, only reached in far fewer iterations. ``max_iter``
    bounds the total across all stages.

    With ``round_feasible`` the final plan is projected onto the transport
    polytope (:func:`round_to_feasible`), so its marginals hold to floating
    point even when the iteration budget ran out.
    """
    C = as_cost_matrix(C)
    n, m = C.shape
    mu = as_marginal(mu, n)
    nu = as_marginal(nu, m)
    if epsilon is None:
        epsilon = default_epsilon(C)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    log_mu = _safe_log(mu)
    log_nu = _safe_log(nu)
    f = np.zeros(n)
    g = np.zeros(m)

    schedule = []
    eps = max(float(C.max()), epsilon)
    while eps > epsilon:
        schedule.append(eps)
        eps /= 2.0
    schedule.append(epsilon)

    used = 0
    for eps in schedule[:-1]:
        # coarse stages stop loosely and always leave budget for the final one
        budget = min(100, max_iter - used - 1)
        if budget <= 0:
            break
        f, g = _soft_update(C, log_mu, log_nu, f, g, eps)
        f, g, it, _ = _sinkhorn_stage(C, mu, nu, f, g, eps, budget, max(tol, 1e-3), check_every)
        used += it
    f, g = _soft_update(C, log_mu, log_nu, f, g, epsilon)
    f, g, it, err = _sinkhorn_stage(C, mu, nu, f, g, epsilon, max_iter - used, tol, check_every)
    used += it

    plan = np.exp((f[:, None] + g[None, :] - C) / epsilon)
    if not np.all(np.isfinite(plan)):
        raise SolverError(f"sinkhorn produced a non-finite plan at iteration {used}")
    converged = err <= tol
    if not converged:
        logger.warning(
            "sinkhorn did not converge in %d iterations (row violation %.3g, tol %.3g)",
            max_iter, err, tol,
        )
    if round_feasible:
        plan = round_to_feasible(plan, mu, nu)
    return Coupling(plan=plan, wd=wasserstein_distance(C, plan), iterations_used=used, converged=converged)


def _is_uniform(w: np.ndarray) -> bool:
    return bool(np.allclose(w, 1.0 / w.size, rtol=0, atol=1e-12))


def exact_ot(C, mu, nu) -> Coupling:
    """Unregularized OT optimum, used as a test and small-problem oracle.

    Equal-size uniform problems reduce to a linear assignment; anything else
    is solved as a transportation LP with HiGHS.
    """
    C = as_cost_matrix(C)
    n, m = C.shape
    if n * m > EXACT_SIZE_LIMIT:
        raise ValueError(f"exact_ot size guard: {n}x{m} exceeds {EXACT_SIZE_LIMIT} cells")
    mu = as_marginal(mu, n)
    nu = as_marginal(nu, m)

    if n == m and _is_uniform(mu) and _is_uniform(nu):
        rows, cols = linear_sum_assignment(C)
        plan = np.zeros((n, m))
        plan[rows, cols] = 1.0 / n
        return Coupling(plan=plan, wd=wasserstein_distance(C, plan))

    # variable x[i*m + j] = T[i, j]
    row_sum = sparse.kron(sparse.eye(n), np.ones((1, m)))
    col_sum = sparse.kron(np.ones((1, n)), sparse.eye(m))
    A_eq = sparse.vstack([row_sum, col_sum]).tocsr()
    b_eq = np.concatenate([mu, nu])
    # HiGHS tolerances are absolute, so solve on a unit-scale cost
    scale = float(C.max()) or 1.0
    res = linprog(
        (C / scale).ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise SolverError(f"exact OT linear program failed: {res.message}")
    plan = np.maximum(res.x.reshape(n, m), 0.0)
    return Coupling(plan=plan, wd=wasserstein_distance(C, plan))


def solve(C, mu, nu, method: str = "sinkhorn", **solver_kwargs) -> Coupling:
    if method == "sinkhorn":
        return sinkhorn(C, mu, nu, **solver_kwargs)
    if method == "exact":
        return exact_ot(C, mu, nu)
    raise ValueError(f"unknown solver method {method!r}")
