"""Result/report file formats: JSON results, CSV tables, and their loaders.

Every writer here has a matching loader so downstream tooling (and the test
suite) can round-trip files without touching the solver.  Floats in CSV are
written with 17 significant digits, which round-trips float64 exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .simulate import EmpiricalStats, TrajectoryRecord
from .solver import KktReport, SolveResult, SweepTable


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# -- result.json --------------------------------------------------------------

def write_result(path, result: SolveResult, kkt: KktReport | None = None,
                 wall_clock_seconds: float | None = None) -> None:
    """Write a solve result (and optional KKT report / timing) as JSON."""
    data = {
        "lambda_star": result.lambda_star,
        "scenario": result.scenario,
        "Jp": result.Jp,
        "C": result.C,
        "f_residual": result.f_residual,
        "gamma_effective": result.gamma_effective,
        "iterations": result.iterations,
        "feval_count": result.feval_count,
        "lambda_bar_final": result.lambda_bar_final,
        "F": result.F.tolist(),
    }
    if wall_clock_seconds is not None:
        data["wall_clock_seconds"] = wall_clock_seconds
    if kkt is not None:
        data["kkt"] = {
            "stationarity_resid": kkt.stationarity_resid,
            "primal_feasibility_resid": kkt.primal_feasibility_resid,
            "slackness_resid": kkt.slackness_resid,
            "slackness_effective_resid": kkt.slackness_effective_resid,
            "dual_feasibility": kkt.dual_feasibility,
            "p_norm": kkt.p_norm,
        }
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def load_result(path) -> tuple[SolveResult, KktReport | None, float | None]:
    """Read back a result.json; returns (result, kkt or None, wall clock or None)."""
    data = json.loads(Path(path).read_text())
    result = SolveResult(
        lambda_star=data["lambda_star"],
        F=np.array(data["F"], dtype=np.float64),
        Jp=data["Jp"],
        C=data["C"],
        f_residual=data["f_residual"],
        iterations=data["iterations"],
        scenario=data["scenario"],
        gamma_effective=data["gamma_effective"],
        feval_count=data["feval_count"],
        lambda_bar_final=data["lambda_bar_final"],
    )
    kkt = None
    if "kkt" in data:
        k = data["kkt"]
        kkt = KktReport(
            stationarity_resid=k["stationarity_resid"],
            primal_feasibility_resid=k["primal_feasibility_resid"],
            slackness_resid=k["slackness_resid"],
            slackness_effective_resid=k["slackness_effective_resid"],
            dual_feasibility=k["dual_feasibility"],
            p_norm=k["p_norm"],
        )
    return result, kkt, data.get("wall_clock_seconds")


# -- sweep.csv -----------------------------------------------------------------

def write_sweep_csv(path, table: SweepTable) -> None:
    """Write the gap curve as CSV with columns lambda, f, Jp, C."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "f", "Jp", "C"])
        for lam, f, jp, c in zip(table.lambdas, table.f, table.Jp, table.C):
            writer.writerow([_fmt(lam), _fmt(f), _fmt(jp), _fmt(c)])


def load_sweep_csv(path) -> SweepTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["lambda", "f", "Jp", "C"]:
            raise ValueError(f"unexpected sweep header {header}")
        rows = [[float(v) for v in row] for row in reader]
    arr = np.array(rows, dtype=np.float64).reshape(-1, 4)
    return SweepTable(lambdas=arr[:, 0], f=arr[:, 1], Jp=arr[:, 2], C=arr[:, 3],
                      grid_spec=f"file:{path}")


# -- trajectory.csv ------------------------------------------------------------

def write_trajectory_csv(path, record: TrajectoryRecord) -> None:
    """Write one rollout as CSV: k, x_1..x_n, u_1..u_m.

    Rows run k = 0..N; the terminal row has no input, so its u-columns hold
    ``nan``.
    """
    n = record.states.shape[1]
    m = record.inputs.shape[1]
    N = record.inputs.shape[0]
    header = ["k"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{j + 1}" for j in range(m)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(N + 1):
            row = [str(k)] + [_fmt(v) for v in record.states[k]]
            if k < N:
                row += [_fmt(v) for v in record.inputs[k]]
            else:
                row += ["nan"] * m
            writer.writerow(row)


def load_trajectory_csv(path) -> TrajectoryRecord:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = sum(1 for name in header if name.startswith("x_"))
        m = sum(1 for name in header if name.startswith("u_"))
        if header != ["k"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{j + 1}" for j in range(m)]:
            raise ValueError(f"unexpected trajectory header {header}")
        rows = [[float(v) for v in row[1:]] for row in reader]
    arr = np.array(rows, dtype=np.float64)
    return TrajectoryRecord(states=arr[:, :n], inputs=arr[:-1, n:], seed=None)


# -- histogram.csv -------------------------------------------------------------

def write_histogram_csv(path, stats: EmpiricalStats) -> None:
    """Write per-sample costs as CSV: sample, objective, constraint."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "objective", "constraint"])
        for i in range(stats.samples):
            writer.writerow([
                str(i),
                _fmt(stats.objective_samples[i]),
                _fmt(stats.constraint_samples[i]),
            ])


def load_histogram_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back per-sample (objective, constraint) cost arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["sample", "objective", "constraint"]:
            raise ValueError(f"unexpected histogram header {header}")
        rows = [(float(row[1]), float(row[2])) for row in reader]
    arr = np.array(rows, dtype=np.float64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]
