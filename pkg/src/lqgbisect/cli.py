"""Command-line frontend: solve, sweep, simulate, verify.

Exit codes: 0 success; 2 solver failure (no bracket, non-PD inner block,
covariance factorization); 3 invalid input (unreadable or malformed problem
file, validation violations, bad flag values); `verify` exits 1 when an
optimality check fails.  Success paths write only to stdout.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import report
from .moments import costs, moment_forward
from .outputs import (
    load_result,
    write_histogram_csv,
    write_result,
    write_sweep_csv,
    write_trajectory_csv,
)
from .problem import LqgProblem, ProblemFormatError, load_problem_file, validate
from .riccati import InnerBlockNotPD, riccati_backward, riccati_residual
from .simulate import FactorizationFailure, simulate, trajectory
from .solver import BracketFailure, SolveResult, kkt_residuals, lambda_sweep, solve

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_SOLVER_FAILURE = 2
EXIT_INVALID_INPUT = 3


@dataclass(frozen=True)
class RunConfig:
    """Parsed command-line options for one invocation."""

    command: str
    problem: Path
    out: Path
    eps: float = 1e-6
    lambda_bar: float = 100.0
    auto_bracket: bool = True
    figures: bool = True
    grid: str = ""
    samples: int = 3000
    seed: int = 0
    result: Path | None = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            command=args.command,
            problem=Path(args.problem),
            out=Path(args.out),
            eps=getattr(args, "eps", 1e-6),
            lambda_bar=getattr(args, "lambda_bar", 100.0),
            auto_bracket=not getattr(args, "no_auto_bracket", False),
            figures=not getattr(args, "no_figures", False),
            grid=getattr(args, "grid", ""),
            samples=getattr(args, "samples", 3000),
            seed=getattr(args, "seed", 0),
            result=Path(args.result) if getattr(args, "result", None) else None,
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqgbisect",
        description="Finite-horizon LQG control under an energy budget, "
                    "solved by bisection on the constraint multiplier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--problem", required=True, help="problem JSON file")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--no-figures", action="store_true",
                        help="skip rendering PNG figures next to the data files")

    def add_solve_opts(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--eps", type=float, default=1e-6,
                        help="bisection half-width stop (default: 1e-6)")
        sp.add_argument("--lambda-bar", type=float, default=100.0,
                        help="initial upper bracket for the multiplier (default: 100)")
        sp.add_argument("--no-auto-bracket", action="store_true",
                        help="fail instead of doubling when f(lambda-bar) >= 0")

    sp = sub.add_parser("solve", help="solve one instance, write result.json")
    add_common(sp)
    add_solve_opts(sp)

    sp = sub.add_parser("sweep", help="tabulate the constraint gap on a multiplier grid")
    add_common(sp)
    sp.add_argument("--grid", required=True, metavar="START:STEP:END",
                    help="inclusive multiplier grid, e.g. 0:0.05:5")

    sp = sub.add_parser("simulate", help="roll out gains, write trajectory and histogram CSVs")
    add_common(sp)
    add_solve_opts(sp)
    sp.add_argument("--samples", type=int, default=3000,
                    help="Monte Carlo sample count (default: 3000)")
    sp.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    sp.add_argument("--result", default=None,
                    help="reuse gains from an existing result.json instead of solving")

    sp = sub.add_parser("verify", help="solve, then check first-order optimality residuals")
    add_common(sp)
    add_solve_opts(sp)

    return parser


def parse_grid(spec: str) -> np.ndarray:
    """Parse START:STEP:END into an inclusive, strictly increasing grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like START:STEP:END, got {spec!r}")
    try:
        start, step, end = (float(s) for s in parts)
    except ValueError as exc:
        raise ValueError(f"grid {spec!r}: {exc}") from exc
    if start < 0:
        raise ValueError(f"grid start must be nonnegative, got {start}")
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    if end < start:
        raise ValueError(f"grid end must be >= start, got {spec!r}")
    count = int(round((end - start) / step)) + 1
    grid = np.linspace(start, end, count)
    return grid


def _load_validated(cfg: RunConfig) -> LqgProblem | None:
    """Load and validate the problem; print violations and return None on failure."""
    p = load_problem_file(cfg.problem)
    rep = validate(p)
    for note in rep.warnings:
        print(f"note: {note}")
    if not rep.ok:
        for field, check, measured in rep.violations:
            print(f"validation: {field}: failed {check} (measured {measured})",
                  file=sys.stderr)
        return None
    return p


def _solve_timed(cfg: RunConfig, p: LqgProblem) -> tuple[SolveResult, float]:
    t0 = time.perf_counter()
    result = solve(p, eps=cfg.eps, lambda_bar=cfg.lambda_bar, auto_bracket=cfg.auto_bracket)
    return result, time.perf_counter() - t0


def run_solve(cfg: RunConfig) -> int:
    p = _load_validated(cfg)
    if p is None:
        return EXIT_INVALID_INPUT
    result, elapsed = _solve_timed(cfg, p)
    kkt = kkt_residuals(p, result)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_result(cfg.out / "result.json", result, kkt=kkt, wall_clock_seconds=elapsed)
    print(f"scenario        {result.scenario}")
    print(f"lambda_star     {result.lambda_star:.12g}")
    print(f"Jp              {result.Jp:.12g}")
    print(f"C               {result.C:.12g}")
    print(f"f_residual      {result.f_residual:.6g}")
    print(f"iterations      {result.iterations} ({result.feval_count} gap evaluations)")
    print(f"wall_clock      {elapsed:.3f} s")
    print(f"wrote {cfg.out / 'result.json'}")
    return EXIT_OK


def run_sweep(cfg: RunConfig) -> int:
    p = _load_validated(cfg)
    if p is None:
        return EXIT_INVALID_INPUT
    try:
        grid = parse_grid(cfg.grid)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    table = lambda_sweep(p, grid, grid_spec=cfg.grid)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(cfg.out / "sweep.csv", table)
    print(f"swept {len(grid)} multipliers on [{grid[0]:g}, {grid[-1]:g}]")
    print(f"wrote {cfg.out / 'sweep.csv'}")
    if cfg.figures:
        report.sweep_figure(table, cfg.out / "sweep.png")
        print(f"wrote {cfg.out / 'sweep.png'}")
    return EXIT_OK


def _gains_for_simulate(cfg: RunConfig, p: LqgProblem) -> SolveResult:
    """Gains source for `simulate`: --result file, cached result.json, or a solve."""
    if cfg.result is not None:
        result, _, _ = load_result(cfg.result)
        return result
    cached = cfg.out / "result.json"
    if cached.exists():
        result, _, _ = load_result(cached)
        return result
    result, elapsed = _solve_timed(cfg, p)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_result(cached, result, kkt=kkt_residuals(p, result), wall_clock_seconds=elapsed)
    return result


def run_simulate(cfg: RunConfig) -> int:
    p = _load_validated(cfg)
    if p is None:
        return EXIT_INVALID_INPUT
    result = _gains_for_simulate(cfg, p)
    if result.F.shape != (p.N, p.m, p.n):
        print(f"error: gains shape {result.F.shape} does not match problem "
              f"{(p.N, p.m, p.n)}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    record = trajectory(p, result.F, cfg.seed)
    stats = simulate(p, result.F, cfg.samples, cfg.seed)
    analytic = costs(p, moment_forward(p, result.F, lam=result.lambda_star))
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(cfg.out / "trajectory.csv", record)
    write_histogram_csv(cfg.out / "histogram.csv", stats)
    print(f"samples          {stats.samples} (seed {stats.seed})")
    print(f"objective mean   {stats.objective_mean:.12g} (SE {stats.objective_se:.6g}, "
          f"analytic {analytic.Jp:.12g})")
    print(f"constraint mean  {stats.constraint_mean:.12g} (SE {stats.constraint_se:.6g}, "
          f"analytic {analytic.C:.12g})")
    print(f"wrote {cfg.out / 'trajectory.csv'}")
    print(f"wrote {cfg.out / 'histogram.csv'}")
    if cfg.figures:
        report.trajectory_figure(record, cfg.out / "trajectory.png")
        report.histogram_figure(stats, cfg.out / "histogram.png", analytic=analytic)
        print(f"wrote {cfg.out / 'trajectory.png'}")
        print(f"wrote {cfg.out / 'histogram.png'}")
    return EXIT_OK


def run_verify(cfg: RunConfig) -> int:
    p = _load_validated(cfg)
    if p is None:
        return EXIT_INVALID_INPUT
    result, elapsed = _solve_timed(cfg, p)
    kkt = kkt_residuals(p, result)
    ric_resid = riccati_residual(p, riccati_backward(p, result.lambda_star))

    checks = [
        ("stationarity", kkt.stationarity_resid,
         kkt.stationarity_resid <= 1e-8 * (1.0 + kkt.p_norm)),
        ("primal_feasibility", kkt.primal_feasibility_resid,
         kkt.primal_feasibility_resid
         <= max(0.0, result.f_residual) + 1e-9),
        ("slackness", kkt.slackness_resid,
         kkt.slackness_resid
         <= abs(result.lambda_star) * abs(result.f_residual) + 1e-12),
        ("slackness_effective", kkt.slackness_effective_resid,
         kkt.slackness_effective_resid == 0.0),
        ("dual_feasibility", float(result.lambda_star),
         kkt.dual_feasibility),
        ("riccati_residual", ric_resid, ric_resid <= 1e-10),
    ]
    ok = True
    for name, value, passed in checks:
        status = "PASS" if passed else "FAIL"
        print(f"{status}  {name:<22} {value:.6e}")
        ok = ok and passed
    print(f"scenario {result.scenario}, lambda_star {result.lambda_star:.12g}, "
          f"solved in {elapsed:.3f} s")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


_COMMANDS = {
    "solve": run_solve,
    "sweep": run_sweep,
    "simulate": run_simulate,
    "verify": run_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig.from_args(args)
    if cfg.eps <= 0:
        print(f"error: --eps must be positive, got {cfg.eps}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    if cfg.lambda_bar <= 0:
        print(f"error: --lambda-bar must be positive, got {cfg.lambda_bar}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    if cfg.command == "simulate" and cfg.samples < 1:
        print(f"error: --samples must be positive, got {cfg.samples}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    try:
        return _COMMANDS[cfg.command](cfg)
    except ProblemFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except BracketFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    except (InnerBlockNotPD, FactorizationFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
