"""Bisection on the constraint gap, plus KKT verification and sweeps.

The scalar map ``f(lam) = C(lam) - gamma`` -- constraint cost of the
lam-priced optimal gains minus the budget -- is monotone non-increasing, so
the complementary-slackness point is found by bisection.  ``f(0) <= 0`` means
the budget is slack at the unconstrained optimum and no search is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .moments import CostPair, MomentTrajectory, costs, moment_forward
from .problem import LqgProblem
from .riccati import RiccatiSolution, riccati_backward

# Early-exit threshold on |f|, scaled by the budget magnitude.
F_TOL_SCALE = 1e-12
# Cap on bracket doublings before giving up on finding f(lambda_bar) < 0.
MAX_DOUBLINGS = 60


class BracketFailure(RuntimeError):
    """No sign change found: f stayed positive up to the largest multiplier tried."""


@dataclass(frozen=True, eq=False)
class GapEvaluation:
    """One evaluation of the constraint gap ``f(lam)`` with its by-products."""

    value: float
    riccati: RiccatiSolution
    moments: MomentTrajectory
    cost: CostPair


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solution returned by :func:`solve`.

    ``f_residual`` is ``C - gamma`` at the returned multiplier and
    ``gamma_effective = gamma + f_residual`` is the budget for which the
    returned gains are exactly optimal -- bookkeeping that makes the
    bisection accuracy explicit.  ``scenario`` is ``"inactive"`` when
    ``f(0) <= 0`` (the budget never binds) and ``"active"`` otherwise.
    ``feval_count`` counts every gap evaluation including the bracket
    endpoints; ``lambda_bar_final`` is the upper bracket actually used.
    """

    lambda_star: float
    F: np.ndarray
    Jp: float
    C: float
    f_residual: float
    iterations: int
    scenario: str
    gamma_effective: float
    feval_count: int
    lambda_bar_final: float


@dataclass(frozen=True)
class KktReport:
    """Residuals of the first-order optimality conditions at a solution.

    ``stationarity_resid`` is the largest Frobenius norm of
    ``P12' + P22 F_k`` over all steps, where ``P`` is the priced stage
    Hessian assembled from a fresh backward pass; ``p_norm`` scales it.
    ``slackness_resid`` is ``|lambda* (C - gamma)|`` and
    ``slackness_effective_resid`` the same against ``gamma_effective``
    (exactly zero by construction).  ``primal_feasibility_resid`` is the
    worst defect of the moment recursion plus any budget overshoot.
    """

    stationarity_resid: float
    primal_feasibility_resid: float
    slackness_resid: float
    slackness_effective_resid: float
    dual_feasibility: bool
    p_norm: float


@dataclass(frozen=True, eq=False)
class SweepTable:
    """Gap curve on a multiplier grid: ``f``, ``Jp``, ``C`` per grid point."""

    lambdas: np.ndarray
    f: np.ndarray
    Jp: np.ndarray
    C: np.ndarray
    grid_spec: str


def constraint_gap(p: LqgProblem, lam: float) -> GapEvaluation:
    """Evaluate ``f(lam) = C(lam) - gamma`` via one backward+forward pass."""
    ric = riccati_backward(p, lam)
    traj = moment_forward(p, ric.F, lam=lam)
    cost = costs(p, traj)
    return GapEvaluation(value=cost.C - p.gamma, riccati=ric, moments=traj, cost=cost)


def solve(
    p: LqgProblem,
    eps: float = 1e-6,
    lambda_bar: float = 100.0,
    auto_bracket: bool = True,
) -> SolveResult:
    """Find the smallest multiplier whose gains satisfy the budget.

    Bisects ``f`` on ``[0, lambda_bar]`` to half-width ``eps``, doubling the
    upper end (up to 60 times) when ``f(lambda_bar) >= 0`` and
    ``auto_bracket`` is on.  Exactly one gap evaluation is spent per
    bisection iteration; an iteration whose ``|f|`` falls below
    ``1e-12 * (1 + |gamma|)`` exits early.  A midpoint with ``f = 0`` is
    treated as satisfying the budget (the search moves left).

    Raises :class:`BracketFailure` when no sign change can be bracketed.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if lambda_bar <= 0:
        raise ValueError(f"lambda_bar must be positive, got {lambda_bar}")

    ev0 = constraint_gap(p, 0.0)
    fevals = 1
    if ev0.value <= 0.0:
        return SolveResult(
            lambda_star=0.0,
            F=ev0.riccati.F,
            Jp=ev0.cost.Jp,
            C=ev0.cost.C,
            f_residual=ev0.value,
            iterations=0,
            scenario="inactive",
            gamma_effective=p.gamma + ev0.value,
            feval_count=fevals,
            lambda_bar_final=lambda_bar,
        )

    a = 0.0
    b = lambda_bar
    ev_b = constraint_gap(p, b)
    fevals += 1
    doublings = 0
    while ev_b.value >= 0.0:
        if not auto_bracket:
            raise BracketFailure(
                f"f({b}) = {ev_b.value:.6g} >= 0 and auto-bracketing is disabled"
            )
        if doublings >= MAX_DOUBLINGS:
            raise BracketFailure(
                f"f still nonnegative after {MAX_DOUBLINGS} doublings "
                f"(last multiplier {b:.6g}, f = {ev_b.value:.6g}); "
                "the budget may be infeasible for any linear feedback"
            )
        a = b                                   # f(a) >= 0 keeps the bracket tight
        b *= 2.0
        ev_b = constraint_gap(p, b)
        fevals += 1
        doublings += 1

    lambda_bar_final = b
    f_tol = F_TOL_SCALE * (1.0 + abs(p.gamma))
    iterations = 0
    while True:
        c = (a + b) / 2.0
        ev_c = constraint_gap(p, c)
        fevals += 1
        iterations += 1
        if abs(ev_c.value) <= f_tol or (b - a) / 2.0 <= eps:
            break
        if ev_c.value > 0.0:
            a = c
        else:
            b = c

    return SolveResult(
        lambda_star=c,
        F=ev_c.riccati.F,
        Jp=ev_c.cost.Jp,
        C=ev_c.cost.C,
        f_residual=ev_c.value,
        iterations=iterations,
        scenario="active",
        gamma_effective=p.gamma + ev_c.value,
        feval_count=fevals,
        lambda_bar_final=lambda_bar_final,
    )


def lambda_sweep(p: LqgProblem, grid, grid_spec: str = "") -> SweepTable:
    """Evaluate the gap curve on an explicit multiplier grid.

    The grid must be nonempty, nonnegative, and strictly increasing.  Any
    numeric failure during an evaluation is re-raised annotated with the
    multiplier at which it occurred.  ``grid_spec`` is carried through as
    provenance (e.g. the command-line grid string).
    """
    lambdas = np.asarray(grid, dtype=np.float64)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("grid must be a nonempty 1-D sequence of multipliers")
    if lambdas[0] < 0:
        raise ValueError(f"grid multipliers must be nonnegative, got {lambdas[0]}")
    if lambdas.size > 1 and not (np.diff(lambdas) > 0).all():
        raise ValueError("grid multipliers must be strictly increasing")

    f = np.empty_like(lambdas)
    jp = np.empty_like(lambdas)
    c = np.empty_like(lambdas)
    for i, lam in enumerate(lambdas):
        try:
            ev = constraint_gap(p, float(lam))
        except RuntimeError as exc:
            raise type(exc)(f"at grid multiplier {lam}: {exc}") from exc
        f[i] = ev.value
        jp[i] = ev.cost.Jp
        c[i] = ev.cost.C
    return SweepTable(lambdas=lambdas, f=f, Jp=jp, C=c, grid_spec=grid_spec)


def kkt_residuals(p: LqgProblem, result: SolveResult) -> KktReport:
    """First-order optimality residuals for a solve result.

    Runs a fresh backward pass at ``result.lambda_star`` to assemble the
    priced stage Hessians, rebuilds the moment trajectory from
    ``result.F``, and measures stationarity, primal feasibility,
    complementary slackness (both against ``gamma`` and against
    ``gamma_effective``), and dual feasibility.
    """
    lam = result.lambda_star
    n, m, N = p.n, p.m, p.N
    A, B = p.A, p.B
    ric = riccati_backward(p, lam)
    traj = moment_forward(p, result.F, lam=lam)
    cost = costs(p, traj)

    stationarity = 0.0
    p_norm = 0.0
    for k in range(N):
        X1 = ric.X[k + 1]
        XA = X1 @ A
        XB = X1 @ B
        P11 = p.Q[k] + lam * p.Qt[k] + A.T @ XA
        P12 = A.T @ XB
        P22 = p.R[k] + lam * p.Rt[k] + B.T @ XB
        P = np.block([[P11, P12], [P12.T, P22]])
        p_norm = max(p_norm, float(np.linalg.norm(P, "fro")))
        stationarity = max(
            stationarity, float(np.linalg.norm(P12.T + P22 @ result.F[k], "fro"))
        )

    AB = np.hstack([A, B])
    primal = 0.0
    for k in range(N):
        if k == 0:
            M = p.V + np.outer(p.z, p.z)
        else:
            M = AB @ traj.S[k - 1] @ AB.T + p.W
        stack = np.vstack([np.eye(n), result.F[k]])
        defect = stack @ M @ stack.T - traj.S[k]
        primal = max(primal, float(np.linalg.norm(defect, "fro")))
    primal += max(0.0, cost.C - p.gamma)

    return KktReport(
        stationarity_resid=stationarity,
        primal_feasibility_resid=primal,
        slackness_resid=abs(lam * (cost.C - p.gamma)),
        slackness_effective_resid=abs(lam * (cost.C - result.gamma_effective)),
        dual_feasibility=lam >= 0.0,
        p_norm=p_norm,
    )
