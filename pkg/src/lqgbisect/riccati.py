"""Backward Riccati recursion for the price-weighted combined cost.

For a fixed multiplier ``lam >= 0`` the objective and constraint weights are
combined into ``Q_k + lam*Qt_k`` (state), ``R_k + lam*Rt_k`` (input), and
``Qf + lam*Qft`` (terminal), and the standard finite-horizon Riccati
recursion yields the cost-to-go matrices ``X_k`` and the optimal linear
state-feedback gains ``F_k`` for that multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .problem import LqgProblem

# Absolute floor on the smallest eigenvalue of the inner block
# R_k + lam*Rt_k + B' X_{k+1} B before it is inverted.
INV_TOL = 1e-12


class InnerBlockNotPD(RuntimeError):
    """The input-weight block to be inverted is not positive definite."""


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Cost-to-go matrices and gains for one multiplier value.

    ``X`` has shape ``(N+1, n, n)`` with ``X[N] = Qf + lam*Qft``; ``F`` has
    shape ``(N, m, n)``.  ``min_inner_eig`` is the smallest eigenvalue seen
    in any inverted inner block, a conditioning diagnostic.
    """

    lam: float
    X: np.ndarray
    F: np.ndarray
    min_inner_eig: float


def _sym(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2.0


def riccati_backward(p: LqgProblem, lam: float) -> RiccatiSolution:
    """Run the backward pass at multiplier ``lam``.

    Every stored ``X_k`` is symmetrized after assembly.  Raises
    :class:`InnerBlockNotPD` (reporting the step and the offending
    eigenvalue) if an inner block has an eigenvalue below ``INV_TOL``, and
    ``ValueError`` for ``lam < 0``.
    """
    if lam < 0:
        raise ValueError(f"multiplier must be nonnegative, got {lam}")
    n, m, N = p.n, p.m, p.N
    A, B = p.A, p.B

    X = np.empty((N + 1, n, n))
    F = np.empty((N, m, n))
    X[N] = _sym(p.Qf + lam * p.Qft)
    min_inner_eig = np.inf

    for k in range(N - 1, -1, -1):
        XB = X[k + 1] @ B                       # (n, m)
        G = _sym(p.R[k] + lam * p.Rt[k] + B.T @ XB)
        eig_min = float(np.linalg.eigvalsh(G).min())
        min_inner_eig = min(min_inner_eig, eig_min)
        if eig_min <= INV_TOL:
            raise InnerBlockNotPD(
                f"inner block at step {k} (lam={lam}) has eigenvalue "
                f"{eig_min:.3e} <= {INV_TOL:.0e}"
            )
        factor = cho_factor(G)
        XA = X[k + 1] @ A                       # (n, n)
        F[k] = -cho_solve(factor, XB.T @ A)
        X[k] = _sym(A.T @ XA + (XB.T @ A).T @ F[k] + p.Q[k] + lam * p.Qt[k])

    return RiccatiSolution(lam=lam, X=X, F=F, min_inner_eig=float(min_inner_eig))


def riccati_residual(p: LqgProblem, sol: RiccatiSolution) -> float:
    """Max relative defect of the recursion over all steps.

    Recomputes each right-hand side from ``sol.X[k+1]`` through a general
    linear solve (a different code path than the construction) and returns

        max_k ||rhs_k - X_k||_F / (1 + ||X_k||_F).
    """
    A, B, lam = p.A, p.B, sol.lam
    worst = 0.0
    for k in range(p.N):
        X1 = sol.X[k + 1]
        G = p.R[k] + lam * p.Rt[k] + B.T @ X1 @ B
        rhs = (
            A.T @ X1 @ A
            - A.T @ X1 @ B @ np.linalg.solve(G, B.T @ X1 @ A)
            + p.Q[k]
            + lam * p.Qt[k]
        )
        defect = np.linalg.norm(rhs - sol.X[k], "fro")
        worst = max(worst, defect / (1.0 + np.linalg.norm(sol.X[k], "fro")))
    return worst
