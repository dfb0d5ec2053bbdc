"""Monte Carlo validation: sampled rollouts under fixed feedback gains.

Sampling is reproducible and independent of batching: sample ``i`` always
draws from ``SeedSequence(seed, spawn_key=(i,))``, first the initial-state
normals (``n`` values), then the process-noise normals (``N x n`` values), so
the same (seed, i) pair yields the same rollout regardless of how many
samples are requested or how they are chunked internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import SYM_TOL, LqgProblem

# Samples propagated per vectorized batch.
_CHUNK = 256


class FactorizationFailure(RuntimeError):
    """A covariance could not be factored (eigenvalue below -sym_tol * norm)."""


@dataclass(frozen=True, eq=False)
class EmpiricalStats:
    """Per-sample costs and their summary statistics.

    ``objective_se`` / ``constraint_se`` are standard errors of the mean
    (sample standard deviation with ``ddof=1`` over ``sqrt(samples)``), zero
    when fewer than two samples were drawn or all samples coincide.
    """

    samples: int
    seed: int
    objective_samples: np.ndarray
    constraint_samples: np.ndarray
    objective_mean: float
    objective_se: float
    constraint_mean: float
    constraint_se: float


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One seeded rollout: states ``(N+1, n)``, inputs ``(N, m)``.

    ``seed`` is ``None`` for records read back from disk.
    """

    states: np.ndarray
    inputs: np.ndarray
    seed: int | None


def _psd_factor(M: np.ndarray, name: str) -> np.ndarray:
    """Factor a PSD covariance as ``L L' = M``, tolerating singular M.

    Uses a symmetric eigendecomposition and clamps round-off-negative
    eigenvalues to zero, so rank-deficient covariances (V = 0, zeroed noise
    channels) factor cleanly.  Raises :class:`FactorizationFailure` when an
    eigenvalue is genuinely negative relative to the matrix norm.
    """
    Ms = (M + M.T) / 2.0
    w, U = np.linalg.eigh(Ms)
    scale = float(np.abs(Ms).max()) if Ms.size else 0.0
    if w.min() < -SYM_TOL * scale:
        raise FactorizationFailure(
            f"{name} has eigenvalue {w.min():.3e} below -{SYM_TOL:.0e} * max-norm"
        )
    return U * np.sqrt(np.clip(w, 0.0, None))


def _quad(xs: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Row-wise quadratic form x' M x for a batch of row vectors."""
    return np.einsum("si,ij,sj->s", xs, M, xs)


def _sample_normals(seed: int, index: int, n: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return rng.standard_normal(n), rng.standard_normal((N, n))


def simulate(p: LqgProblem, F: np.ndarray, samples: int, seed: int) -> EmpiricalStats:
    """Estimate expected objective and constraint cost from sampled rollouts.

    Each sample rolls the closed loop ``x(k+1) = (A + B F_k) x(k) + w(k)``
    forward and accumulates both quadratic costs, including the terminal
    terms.  Propagation is vectorized over batches of samples; draws are
    per-sample (see module docstring), so results are bitwise reproducible
    for a given ``(samples, seed)``.
    """
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    n, m, N = p.n, p.m, p.N
    if F.shape != (N, m, n):
        raise ValueError(f"gains: expected shape {(N, m, n)}, got {F.shape}")
    Lv = _psd_factor(p.V, "V")
    Lw = _psd_factor(p.W, "W")

    objective = np.empty(samples)
    constraint = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        stop = min(start + _CHUNK, samples)
        batch = stop - start
        xi0 = np.empty((batch, n))
        noise = np.empty((batch, N, n))
        for j in range(batch):
            xi0[j], noise[j] = _sample_normals(seed, start + j, n, N)

        x = p.z + xi0 @ Lv.T
        w_seq = noise @ Lw.T
        obj = np.zeros(batch)
        con = np.zeros(batch)
        for k in range(N):
            u = x @ F[k].T
            obj += _quad(x, p.Q[k]) + _quad(u, p.R[k])
            con += _quad(x, p.Qt[k]) + _quad(u, p.Rt[k])
            x = x @ p.A.T + u @ p.B.T + w_seq[:, k, :]
        obj += _quad(x, p.Qf)
        con += _quad(x, p.Qft)
        objective[start:stop] = obj
        constraint[start:stop] = con

    def summarize(arr: np.ndarray) -> tuple[float, float]:
        # identical samples (deterministic problems) must report the sample
        # value and a zero standard error; np.mean alone can round away from
        # the common value and manufacture a spurious ddof=1 spread
        if np.ptp(arr) == 0.0:
            return float(arr[0]), 0.0
        if samples < 2:
            return float(arr[0]), 0.0
        return float(arr.mean()), float(np.std(arr, ddof=1) / np.sqrt(samples))

    obj_mean, obj_se = summarize(objective)
    con_mean, con_se = summarize(constraint)
    return EmpiricalStats(
        samples=samples,
        seed=seed,
        objective_samples=objective,
        constraint_samples=constraint,
        objective_mean=obj_mean,
        objective_se=obj_se,
        constraint_mean=con_mean,
        constraint_se=con_se,
    )


def trajectory(p: LqgProblem, F: np.ndarray, seed: int) -> TrajectoryRecord:
    """Roll out one seeded realization and record states and inputs.

    Draw order matches :func:`simulate`: initial-state normals first, then
    the full process-noise block, from ``SeedSequence(seed)``.
    """
    n, m, N = p.n, p.m, p.N
    if F.shape != (N, m, n):
        raise ValueError(f"gains: expected shape {(N, m, n)}, got {F.shape}")
    Lv = _psd_factor(p.V, "V")
    Lw = _psd_factor(p.W, "W")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    xi0 = rng.standard_normal(n)
    noise = rng.standard_normal((N, n))

    states = np.empty((N + 1, n))
    inputs = np.empty((N, m))
    states[0] = p.z + Lv @ xi0
    for k in range(N):
        inputs[k] = F[k] @ states[k]
        states[k + 1] = p.A @ states[k] + p.B @ inputs[k] + Lw @ noise[k]
    return TrajectoryRecord(states=states, inputs=inputs, seed=seed)
