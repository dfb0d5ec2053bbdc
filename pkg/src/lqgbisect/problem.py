"""Problem definition, validation, and JSON file I/O.

A problem instance describes the linear system ``x(k+1) = A x(k) + B u(k) + w(k)``
with Gaussian initial state ``x(0) ~ N(z, V)`` and process noise
``w(k) ~ N(0, W)``, a quadratic objective with weights ``(Q, R, Qf)``, and a
single quadratic energy constraint with weights ``(Qt, Rt, Qft)`` and budget
``gamma``.  Per-step weights are stored as stacked ``(N, d, d)`` arrays; the
file format accepts either a single matrix (broadcast over all steps) or an
explicit list of N matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

# Symmetry / positive-semidefiniteness tolerance, relative to the matrix
# max-norm.  File round trips and products introduce asymmetry at round-off
# level, so absolute checks would be too strict for large-magnitude weights.
SYM_TOL = 1e-9


class ProblemFormatError(ValueError):
    """A problem file or dict could not be parsed into a valid instance."""


@dataclass(frozen=True, eq=False)
class LqgProblem:
    """One finite-horizon LQG instance with an energy budget.

    All arrays are float64 and read-only.  ``Q``, ``R``, ``Qt``, ``Rt`` are
    stacked per-step weights of shape ``(N, n, n)`` / ``(N, m, m)``; when the
    source file supplied a single matrix, every slice is the same object's
    data (broadcast at load time).
    """

    n: int
    m: int
    N: int
    A: np.ndarray       # (n, n) state transition
    B: np.ndarray       # (n, m) input map
    Q: np.ndarray       # (N, n, n) objective state weights
    R: np.ndarray       # (N, m, m) objective input weights
    Qf: np.ndarray      # (n, n) objective terminal weight
    Qt: np.ndarray      # (N, n, n) constraint state weights
    Rt: np.ndarray      # (N, m, m) constraint input weights
    Qft: np.ndarray     # (n, n) constraint terminal weight
    gamma: float        # constraint budget
    z: np.ndarray       # (n,) initial state mean
    V: np.ndarray       # (n, n) initial state covariance
    W: np.ndarray       # (n, n) process noise covariance


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`.

    ``violations`` holds ``(field, check, measured)`` triples, e.g.
    ``("Q[0]", "positive semidefinite", -0.1)``.  ``warnings`` are
    informational notes on a still-usable instance (singular covariances).
    """

    ok: bool
    violations: list[tuple[str, str, object]]
    warnings: list[str]


def _symmetrized(a: np.ndarray) -> np.ndarray:
    """Average a (stack of) square matrices with its transpose."""
    if a.ndim == 3:
        return (a + a.transpose(0, 2, 1)) / 2.0
    return (a + a.T) / 2.0


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.flags.writeable = False
    return out


def _require(data: dict, name: str):
    if name not in data:
        raise ProblemFormatError(f"missing required field '{name}'")
    return data[name]


def _as_int(data: dict, name: str) -> int:
    raw = _require(data, name)
    if not isinstance(raw, int) or isinstance(raw, bool) or raw < 1:
        raise ProblemFormatError(f"field '{name}': expected a positive integer, got {raw!r}")
    return raw


def _as_matrix(data: dict, name: str, shape: tuple[int, int]) -> np.ndarray:
    raw = _require(data, name)
    try:
        arr = np.array(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field '{name}': not a numeric matrix ({exc})") from exc
    if arr.shape != shape:
        raise ProblemFormatError(f"field '{name}': expected shape {shape}, got {arr.shape}")
    return arr


def _as_vector(data: dict, name: str, length: int) -> np.ndarray:
    raw = _require(data, name)
    try:
        arr = np.array(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field '{name}': not a numeric vector ({exc})") from exc
    if arr.shape != (length,):
        raise ProblemFormatError(f"field '{name}': expected shape ({length},), got {arr.shape}")
    return arr


def _as_weight_sequence(data: dict, name: str, N: int, dim: int) -> np.ndarray:
    """Read a weight field that is either one matrix or a list of N matrices."""
    raw = _require(data, name)
    try:
        arr = np.array(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field '{name}': not numeric ({exc})") from exc
    if arr.ndim == 2:
        if arr.shape != (dim, dim):
            raise ProblemFormatError(
                f"field '{name}': expected shape ({dim}, {dim}) or ({N}, {dim}, {dim}), got {arr.shape}"
            )
        return np.broadcast_to(arr, (N, dim, dim)).copy()
    if arr.ndim == 3:
        if arr.shape != (N, dim, dim):
            raise ProblemFormatError(
                f"field '{name}': expected shape ({N}, {dim}, {dim}), got {arr.shape}"
            )
        return arr
    raise ProblemFormatError(
        f"field '{name}': expected a matrix or a list of {N} matrices, got ndim={arr.ndim}"
    )


def load_problem(source) -> LqgProblem:
    """Build an :class:`LqgProblem` from JSON text, bytes, or a parsed dict.

    Symmetric-by-contract fields (weights and covariances) are symmetrized on
    load so that file round trips cannot accumulate asymmetry.  Raises
    :class:`ProblemFormatError` naming the offending field on any shape or
    type mismatch.
    """
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"invalid JSON: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise ProblemFormatError(f"expected a JSON object, got {type(data).__name__}")

    n = _as_int(data, "n")
    m = _as_int(data, "m")
    N = _as_int(data, "N")

    gamma_raw = _require(data, "gamma")
    if not isinstance(gamma_raw, (int, float)) or isinstance(gamma_raw, bool):
        raise ProblemFormatError(f"field 'gamma': expected a number, got {gamma_raw!r}")
    gamma = float(gamma_raw)

    A = _as_matrix(data, "A", (n, n))
    B = _as_matrix(data, "B", (n, m))
    Qf = _symmetrized(_as_matrix(data, "Qf", (n, n)))
    Qft = _symmetrized(_as_matrix(data, "Qft", (n, n)))
    z = _as_vector(data, "z", n)
    V = _symmetrized(_as_matrix(data, "V", (n, n)))
    W = _symmetrized(_as_matrix(data, "W", (n, n)))
    Q = _symmetrized(_as_weight_sequence(data, "Q", N, n))
    R = _symmetrized(_as_weight_sequence(data, "R", N, m))
    Qt = _symmetrized(_as_weight_sequence(data, "Qt", N, n))
    Rt = _symmetrized(_as_weight_sequence(data, "Rt", N, m))

    return LqgProblem(
        n=n, m=m, N=N,
        A=_freeze(A), B=_freeze(B),
        Q=_freeze(Q), R=_freeze(R), Qf=_freeze(Qf),
        Qt=_freeze(Qt), Rt=_freeze(Rt), Qft=_freeze(Qft),
        gamma=gamma, z=_freeze(z), V=_freeze(V), W=_freeze(W),
    )


def load_problem_file(path) -> LqgProblem:
    """Load a problem from a JSON file on disk."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFormatError(f"cannot read problem file {path}: {exc}") from exc
    return load_problem(text)


def _weight_to_json(seq: np.ndarray):
    """Collapse a stacked weight back to one matrix when all steps agree."""
    if seq.shape[0] > 0 and (seq == seq[0]).all():
        return seq[0].tolist()
    return seq.tolist()


def problem_to_json(p: LqgProblem) -> str:
    """Serialize a problem to JSON text (round-trips through load_problem)."""
    data = {
        "n": p.n,
        "m": p.m,
        "N": p.N,
        "gamma": p.gamma,
        "A": p.A.tolist(),
        "B": p.B.tolist(),
        "Q": _weight_to_json(p.Q),
        "R": _weight_to_json(p.R),
        "Qf": p.Qf.tolist(),
        "Qt": _weight_to_json(p.Qt),
        "Rt": _weight_to_json(p.Rt),
        "Qft": p.Qft.tolist(),
        "z": p.z.tolist(),
        "V": p.V.tolist(),
        "W": p.W.tolist(),
    }
    return json.dumps(data, indent=2)


def save_problem(p: LqgProblem, path) -> None:
    Path(path).write_text(problem_to_json(p) + "\n")


def _check_symmetric_psd(name: str, M: np.ndarray, violations: list) -> float:
    """Append symmetry/PSD violations for M; return its smallest eigenvalue."""
    scale = float(np.abs(M).max()) if M.size else 0.0
    asym = float(np.abs(M - M.T).max())
    if asym > SYM_TOL * scale:
        violations.append((name, "symmetric", asym))
    eig_min = float(np.linalg.eigvalsh(_symmetrized(M)).min())
    if eig_min < -SYM_TOL * scale:
        violations.append((name, "positive semidefinite", eig_min))
    return eig_min


def validate(p: LqgProblem) -> ValidationReport:
    """Check dimensions, symmetry, positive semidefiniteness, and finiteness.

    Collects every violation rather than stopping at the first.  Singular
    covariances are legal (the deterministic case has V = 0) and produce a
    warning, not a violation.
    """
    violations: list[tuple[str, str, object]] = []
    warnings: list[str] = []

    if p.n < 1:
        violations.append(("n", "positive", p.n))
    if p.m < 1:
        violations.append(("m", "positive", p.m))
    if p.N < 1:
        violations.append(("N", "positive", p.N))

    expected_shapes = [
        ("A", p.A, (p.n, p.n)),
        ("B", p.B, (p.n, p.m)),
        ("Qf", p.Qf, (p.n, p.n)),
        ("Qft", p.Qft, (p.n, p.n)),
        ("z", p.z, (p.n,)),
        ("V", p.V, (p.n, p.n)),
        ("W", p.W, (p.n, p.n)),
        ("Q", p.Q, (p.N, p.n, p.n)),
        ("R", p.R, (p.N, p.m, p.m)),
        ("Qt", p.Qt, (p.N, p.n, p.n)),
        ("Rt", p.Rt, (p.N, p.m, p.m)),
    ]
    shapes_ok = True
    for name, arr, shape in expected_shapes:
        if arr.shape != shape:
            violations.append((name, "shape", f"{arr.shape} != {shape}"))
            shapes_ok = False

    for name, arr, _ in expected_shapes:
        if not np.isfinite(arr).all():
            violations.append((name, "finite", float(np.abs(arr[~np.isfinite(arr)][0]))))
            shapes_ok = False
    if not np.isfinite(p.gamma):
        violations.append(("gamma", "finite", p.gamma))

    if not shapes_ok:
        return ValidationReport(ok=False, violations=violations, warnings=warnings)

    for name, M in [("Qf", p.Qf), ("Qft", p.Qft)]:
        _check_symmetric_psd(name, M, violations)
    for name, seq in [("Q", p.Q), ("R", p.R), ("Qt", p.Qt), ("Rt", p.Rt)]:
        for k in range(p.N):
            _check_symmetric_psd(f"{name}[{k}]", seq[k], violations)
    for name, M in [("V", p.V), ("W", p.W)]:
        eig_min = _check_symmetric_psd(name, M, violations)
        scale = float(np.abs(M).max()) if M.size else 0.0
        if eig_min <= SYM_TOL * scale:
            if name == "V":
                warnings.append("V singular -- deterministic-case relaxation active")
            else:
                warnings.append("W singular -- some noise channels are exactly zero")

    return ValidationReport(ok=not violations, violations=violations, warnings=warnings)


def example_path(name: str) -> Path:
    """Path to a bundled example problem file, e.g. ``example_path("building")``."""
    fname = name if name.endswith(".json") else f"{name}.json"
    return Path(str(resources.files("lqgbisect").joinpath("data", fname)))
