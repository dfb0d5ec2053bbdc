"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's internal code paths:
``textbook_lqr`` is a plain inverse-based Riccati pass, and the scalar grid
searches brute-force over gains/multipliers instead of bisecting.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from lqgbisect import (
    LqgProblem,
    constraint_gap,
    example_path,
    load_problem,
    load_problem_file,
    solve,
)


def building_dict(**overrides) -> dict:
    """Parsed building example with selected top-level fields replaced."""
    data = json.loads(example_path("building").read_text())
    data.update(overrides)
    return data


@pytest.fixture(scope="session")
def building() -> LqgProblem:
    return load_problem_file(example_path("building"))


@pytest.fixture(scope="session")
def building_fixed_ref() -> LqgProblem:
    return load_problem_file(example_path("building_fixed_ref"))


@pytest.fixture(scope="session")
def _building_solve_timed(building):
    import time

    t0 = time.perf_counter()
    result = solve(building)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def building_solved(_building_solve_timed):
    """Solve of the bundled building problem (budget 25000), shared."""
    return _building_solve_timed[0]


@pytest.fixture(scope="session")
def building_solve_seconds(_building_solve_timed):
    return _building_solve_timed[1]


@pytest.fixture(scope="session")
def building_10000() -> LqgProblem:
    return load_problem(building_dict(gamma=10000.0))


@pytest.fixture(scope="session")
def building_10000_solved(building_10000):
    return solve(building_10000)


# -- randomized instances ------------------------------------------------------

def random_psd(rng, d, scale=1.0) -> np.ndarray:
    M = rng.standard_normal((d, d))
    return scale * (M @ M.T) / d


def random_stable(rng, d) -> np.ndarray:
    A = rng.standard_normal((d, d))
    radius = max(abs(np.linalg.eigvals(A)))
    return 0.95 * A / max(radius, 1e-6)


def random_problem(rng, n=None, m=None, N=None, noisy=True) -> LqgProblem:
    """A tame random instance with general PSD weights (budget untuned)."""
    n = int(rng.integers(1, 5)) if n is None else n
    m = int(rng.integers(1, 5)) if m is None else m
    N = int(rng.integers(1, 51)) if N is None else N
    zeros = np.zeros((n, n))
    data = {
        "n": n, "m": m, "N": N, "gamma": 1.0,
        "A": random_stable(rng, n).tolist(),
        "B": rng.standard_normal((n, m)).tolist(),
        "Q": random_psd(rng, n).tolist(),
        "R": (random_psd(rng, m) + 0.3 * np.eye(m)).tolist(),
        "Qf": random_psd(rng, n).tolist(),
        "Qt": random_psd(rng, n, scale=0.5).tolist(),
        "Rt": random_psd(rng, m, scale=0.5).tolist(),
        "Qft": random_psd(rng, n, scale=0.5).tolist(),
        "z": rng.standard_normal(n).tolist(),
        "V": (random_psd(rng, n, scale=0.5) if noisy else zeros).tolist(),
        "W": (random_psd(rng, n, scale=0.2) if noisy else zeros).tolist(),
    }
    return load_problem(data)


def random_active_problem(rng) -> LqgProblem:
    """Random instance whose budget provably binds.

    The constraint is pure input energy (state weights zero), so zero gains
    are strictly feasible, and the budget is a fraction of the unconstrained
    constraint cost, so the unconstrained optimum violates it.
    """
    while True:
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 3))
        N = int(rng.integers(2, 30))
        zeros = np.zeros((n, n))
        data = {
            "n": n, "m": m, "N": N, "gamma": 1.0,
            "A": random_stable(rng, n).tolist(),
            "B": rng.standard_normal((n, m)).tolist(),
            "Q": random_psd(rng, n).tolist(),
            "R": (random_psd(rng, m) * 0.2).tolist(),
            "Qf": random_psd(rng, n).tolist(),
            "Qt": zeros.tolist(),
            "Rt": (random_psd(rng, m) + 0.5 * np.eye(m)).tolist(),
            "Qft": zeros.tolist(),
            "z": rng.uniform(0.5, 1.5, n).tolist(),
            "V": (random_psd(rng, n, scale=0.3)).tolist(),
            "W": (random_psd(rng, n, scale=0.2)).tolist(),
        }
        c0 = constraint_gap(load_problem(data), 0.0).cost.C
        if c0 < 1e-3:
            continue
        data["gamma"] = float(rng.uniform(0.3, 0.8)) * c0
        return load_problem(data)


def scalar_problem(**overrides) -> LqgProblem:
    """Hand-checkable one-step scalar instance.

    With all data at 1 except the budget: the priced inner block at zero
    price is 2, the gain is -1/2, the joint moment is [[1, -1/2], [-1/2, 1/4]],
    the objective is 3/2, the constraint cost 1/4, and the gap 0.15.
    """
    data = {
        "n": 1, "m": 1, "N": 1, "gamma": 0.1,
        "A": [[1.0]], "B": [[1.0]],
        "Q": [[1.0]], "R": [[1.0]], "Qf": [[1.0]],
        "Qt": [[0.0]], "Rt": [[1.0]], "Qft": [[0.0]],
        "z": [1.0], "V": [[0.0]], "W": [[0.0]],
    }
    data.update(overrides)
    return load_problem(data)


# -- independent oracles ---------------------------------------------------------

def textbook_lqr(A, B, Q, R, Qf):
    """Plain finite-horizon LQR backward pass, inverse-based.

    Independent of the package implementation (no symmetrization, no
    Cholesky); returns (X, F) with X of shape (N+1, n, n).
    """
    N = Q.shape[0]
    n, m = B.shape
    X = np.empty((N + 1, n, n))
    F = np.empty((N, m, n))
    X[N] = Qf
    for k in range(N - 1, -1, -1):
        G = R[k] + B.T @ X[k + 1] @ B
        Gi = np.linalg.inv(G)
        F[k] = -Gi @ B.T @ X[k + 1] @ A
        X[k] = (
            A.T @ X[k + 1] @ A
            - A.T @ X[k + 1] @ B @ Gi @ B.T @ X[k + 1] @ A
            + Q[k]
        )
    return X, F


def scalar_grid_costs(p: LqgProblem, gain_axes):
    """Objective and constraint cost over a broadcastable scalar-gain grid.

    Direct recursion on the scalar second moment s_k, independent of the
    package's lifted-moment implementation.
    """
    a = float(p.A[0, 0])
    b = float(p.B[0, 0])
    s = float(p.V[0, 0] + p.z[0] ** 2)
    Jp = 0.0
    C = 0.0
    for k in range(p.N):
        Fk = gain_axes[k]
        Jp = Jp + (p.Q[k, 0, 0] + p.R[k, 0, 0] * Fk**2) * s
        C = C + (p.Qt[k, 0, 0] + p.Rt[k, 0, 0] * Fk**2) * s
        s = (a + b * Fk) ** 2 * s + float(p.W[0, 0])
    return Jp + p.Qf[0, 0] * s, C + p.Qft[0, 0] * s


def scalar_grid_search(p: LqgProblem, lo=-3.0, hi=3.0) -> float:
    """Best feasible objective by brute force over a scalar gain grid.

    Coarse pass at step 0.05 on [lo, hi]^N, then one refinement pass at step
    1e-3 around the coarse argmin (window one coarse cell each side).
    """

    def search(centers, half_width, pts):
        axes = []
        for k in range(p.N):
            g = np.linspace(centers[k] - half_width, centers[k] + half_width, pts)
            shape = [1] * p.N
            shape[k] = pts
            axes.append(g.reshape(shape))
        Jp, C = scalar_grid_costs(p, axes)
        Jp, C = np.broadcast_arrays(Jp, C)
        masked = np.where(C <= p.gamma, Jp, np.inf)
        idx = np.unravel_index(int(np.argmin(masked)), masked.shape)
        best = [float(np.ravel(axes[k])[idx[k]]) for k in range(p.N)]
        return float(masked[idx]), best

    coarse_step = (hi - lo) / 120
    jp_coarse, centers = search([(lo + hi) / 2] * p.N, (hi - lo) / 2, 121)
    refine_pts = int(round(2 * coarse_step / 1e-3)) + 1
    jp_refined, _ = search(centers, coarse_step, refine_pts)
    return min(jp_coarse, jp_refined)


def scalar_lagrangian_grid_argmin(p: LqgProblem, lam: float, lo=-3.0, hi=3.0):
    """Gains minimizing Jp + lam*C by brute force on a scalar gain grid."""

    def search(centers, half_width, pts):
        axes = []
        for k in range(p.N):
            g = np.linspace(centers[k] - half_width, centers[k] + half_width, pts)
            shape = [1] * p.N
            shape[k] = pts
            axes.append(g.reshape(shape))
        Jp, C = scalar_grid_costs(p, axes)
        L = np.broadcast_arrays(Jp + lam * C, Jp)[0]
        idx = np.unravel_index(int(np.argmin(L)), L.shape)
        return [float(np.ravel(axes[k])[idx[k]]) for k in range(p.N)]

    coarse_step = (hi - lo) / 120
    centers = search([(lo + hi) / 2] * p.N, (hi - lo) / 2, 121)
    refine_pts = int(round(2 * coarse_step / 1e-3)) + 1
    return search(centers, coarse_step, refine_pts)


def lambda_star_by_grid(p: LqgProblem, hi: float, levels=4, points=101) -> float:
    """Zero crossing of the constraint gap by progressive grid refinement.

    Four levels of a 101-point grid give resolution hi * 1e-8, well inside
    the 2*eps window for the default bisection eps.
    """
    lo = 0.0
    for _ in range(levels):
        lam = np.linspace(lo, hi, points)
        vals = np.array([constraint_gap(p, float(x)).value for x in lam])
        if vals[0] <= 0:
            return float(lam[0])
        above = np.nonzero(vals > 0)[0]
        i = int(above[-1])
        assert i < points - 1, "no sign change on the multiplier grid"
        lo, hi = float(lam[i]), float(lam[i + 1])
    return (lo + hi) / 2.0


def random_scalar_active(rng):
    """Random strictly feasible scalar instance with a binding budget.

    Strict feasibility holds by construction: the constraint is pure input
    energy, so zero gains give constraint cost 0 < gamma.  Instances whose
    optimal gains stray outside [-2.5, 2.5] are redrawn so the +/-3 grid of
    the brute-force oracle always contains the optimum.
    """
    while True:
        N = int(rng.integers(1, 4))
        data = {
            "n": 1, "m": 1, "N": N,
            "A": [[float(rng.uniform(0.6, 1.3))]],
            "B": [[float(rng.uniform(0.5, 1.5))]],
            "Q": [[float(rng.uniform(0.2, 2.0))]],
            "R": [[float(rng.uniform(0.0, 0.8))]],
            "Qf": [[float(rng.uniform(0.2, 2.0))]],
            "Qt": [[0.0]],
            "Rt": [[float(rng.uniform(0.5, 2.0))]],
            "Qft": [[0.0]],
            "z": [float(rng.uniform(0.6, 2.0))],
            "V": [[float(rng.uniform(0.0, 0.4))]],
            "W": [[float(rng.uniform(0.0, 0.4))]],
            "gamma": 1.0,
        }
        c0 = constraint_gap(load_problem(data), 0.0).cost.C
        if c0 < 1e-3:
            continue
        data["gamma"] = float(rng.uniform(0.3, 0.8)) * c0
        p = load_problem(data)
        result = solve(p)
        if result.scenario != "active" or np.abs(result.F).max() > 2.5:
            continue
        return p, result
