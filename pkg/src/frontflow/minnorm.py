"""Minimal-norm convex combinations of objective gradients.

Finds the weights ``alpha`` on the probability simplex minimizing
``||sum_i alpha_i grad f_i||^2``.  The optimal combination ``g_dagger`` is
the common-descent direction; its norm vanishes exactly at local Pareto
stationary points.  Two objectives admit a closed form; three or more use
Frank-Wolfe with away steps and exact line search on the (m, m) Gram
matrix, which keeps all iterations in objective space (d >> m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError


@dataclass(frozen=True)
class MinNormSolution:
    """Solution record: simplex weights, combined gradient, and its norm."""

    alpha: np.ndarray
    g_dagger: np.ndarray
    norm_sq: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MinNormBatch:
    """Column-stacked solutions for a batch of Jacobians."""

    alpha: np.ndarray      # (N, m)
    g_dagger: np.ndarray   # (N, d)
    norm_sq: np.ndarray    # (N,)
    iterations: np.ndarray
    converged: np.ndarray

    def __len__(self) -> int:
        return len(self.norm_sq)

    def __getitem__(self, k: int) -> MinNormSolution:
        return MinNormSolution(
            alpha=self.alpha[k].copy(),
            g_dagger=self.g_dagger[k].copy(),
            norm_sq=float(self.norm_sq[k]),
            iterations=int(self.iterations[k]),
            converged=bool(self.converged[k]),
        )


def _two_point_alpha(g1: np.ndarray, g2: np.ndarray) -> float:
    """Closed-form weight on g1: clip of (g2 - g1).g2 / ||g1 - g2||^2."""
    diff = g1 - g2
    denom = float(diff @ diff)
    if denom <= 0.0:
        return 0.5  # identical rows: any weight gives the same combination
    return float(np.clip((g2 - g1) @ g2 / denom, 0.0, 1.0))


def _afw(G: np.ndarray, tol: float, max_iter: int, history: list | None = None):
    """Away-step Frank-Wolfe for min_{alpha in simplex} alpha^T G alpha.

    Returns (alpha, iterations, converged).  The duality gap certifies
    primal suboptimality, so stopping at gap <= tol meets the tolerance
    contract.  Ties break on the lowest index, making the fixed point
    deterministic for degenerate Gram matrices.
    """
    m = G.shape[0]
    alpha = np.zeros(m)
    alpha[int(np.argmin(np.diag(G)))] = 1.0
    iterations = 0
    converged = False
    for it in range(1, max_iter + 1):
        iterations = it
        if history is not None:
            history.append(float(alpha @ G @ alpha))
        grad = 2.0 * (G @ alpha)
        s = int(np.argmin(grad))
        fw_gap = float(grad @ alpha - grad[s])
        if fw_gap <= tol:
            converged = True
            break
        active = np.flatnonzero(alpha > 0.0)
        a = int(active[np.argmax(grad[active])])
        away_gap = float(grad[a] - grad @ alpha)
        if fw_gap >= away_gap:
            direction = -alpha.copy()
            direction[s] += 1.0
            gamma_max = 1.0
        else:
            direction = alpha.copy()
            direction[a] -= 1.0
            gamma_max = alpha[a] / (1.0 - alpha[a]) if alpha[a] < 1.0 else 1.0
        Gd = G @ direction
        curv = float(direction @ Gd)
        if curv <= 0.0:
            gamma = gamma_max
        else:
            gamma = float(np.clip(-(alpha @ Gd) / curv, 0.0, gamma_max))
        alpha = alpha + gamma * direction
        np.clip(alpha, 0.0, None, out=alpha)
        alpha /= alpha.sum()
    if history is not None:
        history.append(float(alpha @ G @ alpha))
    return alpha, iterations, converged


def min_norm_point(jac: np.ndarray, tol: float = 1e-10, max_iter: int = 200) -> MinNormSolution:
    """Minimize ``||alpha^T jac||^2`` over the simplex.

    Parameters
    ----------
    jac : ndarray, shape (m, d)
        Row i is the gradient of objective i.
    tol : float
        Target gap between the returned and true minimal squared norm.
    max_iter : int
        Frank-Wolfe iteration cap (m >= 3 only).
    """
    jac = np.asarray(jac, dtype=float)
    if jac.ndim != 2:
        raise ValueError("jac must be a 2-D (m, d) array")
    if not np.all(np.isfinite(jac)):
        raise NumericError("Jacobian contains non-finite entries")
    m = jac.shape[0]
    if m == 1:
        alpha = np.ones(1)
        iterations, converged = 0, True
    elif m == 2:
        t = _two_point_alpha(jac[0], jac[1])
        alpha = np.array([t, 1.0 - t])
        iterations, converged = 0, True
    else:
        G = jac @ jac.T
        alpha, iterations, converged = _afw(G, tol, max_iter)
    g = alpha @ jac
    return MinNormSolution(
        alpha=alpha,
        g_dagger=g,
        norm_sq=float(g @ g),
        iterations=iterations,
        converged=converged,
    )


def objective_term_drift(sol: MinNormSolution) -> np.ndarray:
    """Drift used for the stationarity term: ``2 g_dagger``.

    This is the identity-preconditioner approximation of the gradient of
    ``||g_dagger(x)||^2`` (the exact gradient would need objective
    Hessians).
    """
    return 2.0 * sol.g_dagger


# ---------------------------------------------------------------------------
# Batched solver used by the dynamics hot loop.
# ---------------------------------------------------------------------------

def _afw_batch(G: np.ndarray, tol: float, max_iter: int):
    n, m, _ = G.shape
    rows = np.arange(n)
    alpha = np.zeros((n, m))
    alpha[rows, np.argmin(np.diagonal(G, axis1=1, axis2=2), axis=1)] = 1.0
    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        if converged.all():
            break
        grad = 2.0 * np.einsum("nij,nj->ni", G, alpha)
        ga = np.einsum("ni,ni->n", grad, alpha)
        s = np.argmin(grad, axis=1)
        fw_gap = ga - grad[rows, s]
        newly = ~converged & (fw_gap <= tol)
        converged |= newly
        live = ~converged
        iterations[live] += 1
        if not live.any():
            break
        masked = np.where(alpha > 0.0, grad, -np.inf)
        a = np.argmax(masked, axis=1)
        away_gap = grad[rows, a] - ga
        use_fw = fw_gap >= away_gap
        direction = np.where(use_fw[:, None], -alpha, alpha)
        bump = np.where(use_fw, 1.0, -1.0)
        idx = np.where(use_fw, s, a)
        direction[rows, idx] += bump
        alpha_a = alpha[rows, a]
        away_max = np.divide(
            alpha_a, 1.0 - alpha_a, out=np.ones(n), where=alpha_a < 1.0
        )
        gamma_max = np.where(use_fw, 1.0, away_max)
        Gd = np.einsum("nij,nj->ni", G, direction)
        curv = np.einsum("ni,ni->n", direction, Gd)
        lin = np.einsum("ni,ni->n", alpha, Gd)
        gamma = np.where(
            curv > 0.0,
            np.clip(np.divide(-lin, curv, out=np.zeros(n), where=curv > 0.0), 0.0, gamma_max),
            gamma_max,
        )
        gamma = np.where(live, gamma, 0.0)
        alpha = alpha + gamma[:, None] * direction
        np.clip(alpha, 0.0, None, out=alpha)
        alpha /= alpha.sum(axis=1, keepdims=True)
    return alpha, iterations, converged


def min_norm_batch(jacs: np.ndarray, tol: float = 1e-10, max_iter: int = 200) -> MinNormBatch:
    """Vectorized :func:`min_norm_point` over a stack of Jacobians (N, m, d)."""
    jacs = np.asarray(jacs, dtype=float)
    if not np.all(np.isfinite(jacs)):
        raise NumericError("Jacobian batch contains non-finite entries")
    n, m, _ = jacs.shape
    if m == 1:
        alpha = np.ones((n, 1))
        iterations = np.zeros(n, dtype=int)
        converged = np.ones(n, dtype=bool)
    elif m == 2:
        diff = jacs[:, 0, :] - jacs[:, 1, :]
        denom = np.einsum("nd,nd->n", diff, diff)
        num = np.einsum("nd,nd->n", -diff, jacs[:, 1, :])
        t = np.where(denom > 0.0, np.clip(np.divide(num, denom, out=np.full(n, 0.5), where=denom > 0.0), 0.0, 1.0), 0.5)
        alpha = np.stack([t, 1.0 - t], axis=1)
        iterations = np.zeros(n, dtype=int)
        converged = np.ones(n, dtype=bool)
    else:
        G = np.einsum("nid,njd->nij", jacs, jacs)
        alpha, iterations, converged = _afw_batch(G, tol, max_iter)
    g = np.einsum("ni,nid->nd", alpha, jacs)
    return MinNormBatch(
        alpha=alpha,
        g_dagger=g,
        norm_sq=np.einsum("nd,nd->n", g, g),
        iterations=iterations,
        converged=converged,
    )
