"""Forward second-moment propagation and exact expected costs.

Under linear feedback ``u(k) = F_k x(k)`` the joint second moment of the
state-input pair ``(x(k), u(k))`` evolves by a linear recursion; both the
objective and the constraint are traces of weights against those moments, so
expected costs are computed exactly -- no sampling involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import LqgProblem

# Absolute gap below which an empirical mean is flagged as an exact match of
# the analytic value (only attainable in the deterministic V = W = 0 case).
EXACT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MomentTrajectory:
    """Stacked joint second moments ``S[k] = E[(x(k),u(k)) (x(k),u(k))']``.

    Shape ``(N, n+m, n+m)``; each slice is symmetric PSD.  ``lam`` records
    which multiplier generated the gains (provenance only, ``nan`` when the
    gains did not come from a priced backward pass).
    """

    S: np.ndarray
    lam: float


@dataclass(frozen=True)
class CostPair:
    """Exact expected objective ``Jp`` and constraint cost ``C``."""

    Jp: float
    C: float


@dataclass(frozen=True)
class GapReport:
    """Analytic-vs-empirical comparison in standard-error units.

    ``z`` values are ``(empirical mean - analytic) / SE``; with ``SE == 0``
    (deterministic problem) they are 0 when the gap is below ``EXACT_TOL``
    and ``inf`` otherwise.  The ``exact`` flags mark gaps below ``EXACT_TOL``.
    """

    objective_z: float
    constraint_z: float
    objective_exact: bool
    constraint_exact: bool


def _lift(M: np.ndarray, Fk: np.ndarray) -> np.ndarray:
    """Joint moment of (x, F x) given the state moment M = E[x x']."""
    Ms = (M + M.T) / 2.0
    FM = Fk @ Ms
    out = np.block([[Ms, FM.T], [FM, FM @ Fk.T]])
    return (out + out.T) / 2.0


def moment_forward(p: LqgProblem, F: np.ndarray, lam: float = math.nan) -> MomentTrajectory:
    """Propagate joint second moments forward under the gains ``F``.

    ``S[0]`` lifts the initial moment ``V + z z'``; each later step maps the
    previous moment through the closed-loop dynamics and adds the noise
    covariance before lifting with that step's gain.
    """
    n, m, N = p.n, p.m, p.N
    if F.shape != (N, m, n):
        raise ValueError(f"gains: expected shape {(N, m, n)}, got {F.shape}")
    AB = np.hstack([p.A, p.B])                  # (n, n+m)

    S = np.empty((N, n + m, n + m))
    S[0] = _lift(p.V + np.outer(p.z, p.z), F[0])
    for k in range(1, N):
        M = AB @ S[k - 1] @ AB.T + p.W
        S[k] = _lift(M, F[k])
    return MomentTrajectory(S=S, lam=lam)


def costs(p: LqgProblem, traj: MomentTrajectory) -> CostPair:
    """Exact expected objective and constraint cost for a moment trajectory.

    Stage terms are trace products against the per-step weights; the terminal
    term uses the moment of ``x(N)`` obtained by pushing ``S[N-1]`` through
    the dynamics once more.  Accumulation runs in extended precision, in
    ascending step order.
    """
    n, N = p.n, p.N
    S = traj.S
    jp = np.longdouble(0.0)
    c = np.longdouble(0.0)
    for k in range(N):
        Sxx = S[k][:n, :n]
        Suu = S[k][n:, n:]
        jp += np.einsum("ij,ji->", p.Q[k], Sxx)
        jp += np.einsum("ij,ji->", p.R[k], Suu)
        c += np.einsum("ij,ji->", p.Qt[k], Sxx)
        c += np.einsum("ij,ji->", p.Rt[k], Suu)
    AB = np.hstack([p.A, p.B])
    M_terminal = AB @ S[N - 1] @ AB.T + p.W
    jp += np.einsum("ij,ji->", p.Qf, M_terminal)
    c += np.einsum("ij,ji->", p.Qft, M_terminal)
    return CostPair(Jp=float(jp), C=float(c))


def _z_score(gap: float, se: float) -> float:
    if se > 0.0:
        return gap / se
    return 0.0 if abs(gap) <= EXACT_TOL else math.inf


def analytic_vs_empirical_gap(cost: CostPair, stats) -> GapReport:
    """Compare analytic costs against Monte Carlo estimates.

    ``stats`` is an :class:`~lqgbisect.simulate.EmpiricalStats`.  Gaps are
    reported in standard-error units; see :class:`GapReport` for the
    deterministic (zero-SE) convention.
    """
    obj_gap = stats.objective_mean - cost.Jp
    con_gap = stats.constraint_mean - cost.C
    return GapReport(
        objective_z=_z_score(obj_gap, stats.objective_se),
        constraint_z=_z_score(con_gap, stats.constraint_se),
        objective_exact=abs(obj_gap) <= EXACT_TOL,
        constraint_exact=abs(con_gap) <= EXACT_TOL,
    )
