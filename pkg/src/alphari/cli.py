"""Command line interface.

Subcommands:
  solve PROBLEM          solve one problem, print a summary, optionally
                         write the solution (and a figure) to --out
  curve KIND PROBLEM     trace a curve (ucc, ipc, elasticity, or
                         consideration) over a grid, one series per alpha
  check PROBLEM          solve and verify optimality against the
                         certificate, the support test, and an oracle;
                         with --verify-solution FILE, re-certify a
                         stored solution instead

Exit codes: 0 success, 1 verification failure, 2 input error, 3 solver
failure (including a non-certified solve without --allow-uncertified).
All numbers are printed with 12 significant digits. Repeated runs with
the same inputs produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analysis
from .errors import (AlphaIsOne, BoundarySupport, DimensionMismatch,
                     DualBoundViolation, GridTooCoarse,
                     MaxIterationsExceeded, NewtonDiverged,
                     NonDifferentiablePoint, NonPositiveAlpha,
                     NonPositiveKappa, NonStochasticPrior, NotConverged,
                     NotSymmetric, OutOfRange, WrongDimensions)
from .oracle import grid_solve_2x2, projected_gradient_solve
from .plotting import figure_path, render_curve_figure, \
    render_solution_figure
from .problem import (DecisionProblem, SymmetricTrackingProblem,
                      build_problem, load_problem, utility_bounds)
from .serialize import Curve, read_solution, recertify, write_curve, \
    write_solution
from .solver import CERT_TOL, DELTA_TOL, SolverOptions, Solution, solve

_INPUT_ERRORS = (OSError, ValueError, KeyError, NonStochasticPrior,
                 NonPositiveKappa, NonPositiveAlpha, DimensionMismatch,
                 OutOfRange, WrongDimensions, GridTooCoarse)
_SOLVER_ERRORS = (NewtonDiverged, MaxIterationsExceeded,
                  DualBoundViolation, NotConverged, BoundarySupport,
                  NonDifferentiablePoint, AlphaIsOne, NotSymmetric)

_CURVE_XLABELS = {
    "ucc": "expected_utility",
    "ipc": "payoff_scale",
    "elasticity": "stakes_over_kappa",
    "consideration": "prior_top",
}


@dataclass
class RunConfig:
    command: str
    problem_path: str | None = None
    curve_kind: str | None = None
    alphas: tuple[float, ...] | None = None
    kappa: float | None = None
    grid: tuple[float, ...] | None = None
    fmt: str | None = None
    out: str | None = None
    tol: float | None = None
    max_iters: int | None = None
    allow_uncertified: bool = False
    verify_solution: str | None = None
    no_plot: bool = False
    threads: int = 1


def _parse_grid(text: str) -> tuple[float, ...]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid range must look like lo:hi:count")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("grid count must be at least 1")
        return tuple(float(v) for v in np.linspace(lo, hi, n))
    return tuple(float(v) for v in text.split(","))


def _parse_alphas(text: str) -> tuple[float, ...]:
    vals = tuple(float(v) for v in text.split(","))
    if not vals:
        raise ValueError("empty alpha list")
    return vals


def _thread_count() -> int:
    raw = os.environ.get("ALPHA_RI_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError("ALPHA_RI_THREADS must be a positive integer")
    return n


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alphari",
        description="Solver for costly-information decision problems "
                    "with order-alpha information costs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, curve=False):
        p.add_argument("--alpha", default=None,
                       help="override the problem's alpha"
                            + (" (comma-separated list)" if curve else ""))
        p.add_argument("--kappa", type=float, default=None,
                       help="override the problem's cost scale")
        p.add_argument("--tol", type=float, default=None,
                       help="barycenter convergence tolerance")
        p.add_argument("--max-iters", type=int, default=None,
                       help="iteration cap for the fixed-point loop")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       default=None, help="output file format")
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--allow-uncertified", action="store_true",
                       help="report results even without a clean "
                            "optimality certificate")
        p.add_argument("--no-plot", action="store_true",
                       help="skip the figure next to --out")

    p_solve = sub.add_parser("solve", help="solve one problem")
    p_solve.add_argument("problem", help="problem JSON file")
    common(p_solve)

    p_curve = sub.add_parser("curve", help="trace a curve")
    p_curve.add_argument("kind",
                         choices=("ucc", "ipc", "elasticity",
                                  "consideration"))
    p_curve.add_argument("problem", help="problem JSON file")
    p_curve.add_argument("--grid", default=None,
                         help="abscissa grid, lo:hi:count or a comma list")
    common(p_curve, curve=True)

    p_check = sub.add_parser("check", help="verify a solve or a stored "
                                           "solution")
    p_check.add_argument("problem", nargs="?", default=None,
                         help="problem JSON file")
    p_check.add_argument("--verify-solution", default=None,
                         metavar="FILE",
                         help="re-certify a stored solution file")
    common(p_check)
    return parser


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    alphas = None
    if getattr(ns, "alpha", None) is not None:
        alphas = _parse_alphas(ns.alpha)
        if ns.command != "curve" and len(alphas) != 1:
            raise ValueError("%s takes a single alpha" % ns.command)
    grid = None
    if getattr(ns, "grid", None) is not None:
        grid = _parse_grid(ns.grid)
    return RunConfig(
        command=ns.command,
        problem_path=getattr(ns, "problem", None),
        curve_kind=getattr(ns, "kind", None),
        alphas=alphas,
        kappa=getattr(ns, "kappa", None),
        grid=grid,
        fmt=getattr(ns, "fmt", None),
        out=getattr(ns, "out", None),
        tol=getattr(ns, "tol", None),
        max_iters=getattr(ns, "max_iters", None),
        allow_uncertified=getattr(ns, "allow_uncertified", False),
        verify_solution=getattr(ns, "verify_solution", None),
        no_plot=getattr(ns, "no_plot", False),
        threads=_thread_count(),
    )


def _load_with_overrides(config: RunConfig,
                         alpha: float | None = None) -> DecisionProblem:
    problem = load_problem(config.problem_path)
    new_alpha = alpha
    if new_alpha is None and config.alphas is not None:
        new_alpha = config.alphas[0]
    if new_alpha is None and config.kappa is None:
        return problem
    return build_problem(
        payoff=problem.payoff,
        prior=problem.prior,
        kappa=config.kappa if config.kappa is not None else problem.kappa,
        alpha=new_alpha if new_alpha is not None else problem.alpha,
        states=problem.states,
        actions=problem.actions,
    )


def _solver_options(config: RunConfig) -> SolverOptions:
    kwargs = {}
    if config.tol is not None:
        kwargs["tol_q"] = config.tol
    if config.max_iters is not None:
        kwargs["max_iters"] = config.max_iters
    return SolverOptions(**kwargs)


def _format_for(config: RunConfig, default: str) -> str:
    if config.fmt is not None:
        return config.fmt
    if config.out is not None:
        if config.out.endswith(".json"):
            return "json"
        if config.out.endswith(".csv"):
            return "csv"
    return default


def _g(x: float) -> str:
    return "%.12g" % x


def _print_solution_summary(sol: Solution) -> None:
    problem = sol.problem
    print("problem: %d states, %d actions, alpha=%s, kappa=%s"
          % (problem.n_states, problem.n_actions, _g(problem.alpha),
             _g(problem.kappa)))
    print("converged: %s (%d iterations)   certified: %s"
          % ("yes" if sol.converged else "no", sol.iterations,
             "yes" if sol.certified else "no"))
    print("objective (net utility): %s" % _g(sol.objective_net_utility))
    print("information cost (nats): %s" % _g(sol.cost_nats))
    print("signal marginal: "
          + "  ".join("%s=%s" % (a, _g(w))
                      for a, w in zip(problem.actions, sol.marginal)))
    for label, row in zip(problem.states, sol.experiment.kernel):
        print("kernel %-8s " % label
              + " ".join(_g(float(v)) for v in row))
    cert = sol.certificate
    print("certificate: stationarity=%s primal=%s complementarity=%s "
          "psi_residual=%s"
          % (_g(cert.stationarity_residual), _g(cert.primal_residual),
             _g(cert.complementarity_residual), _g(cert.psi_residual)))


def cmd_solve(config: RunConfig) -> int:
    problem = _load_with_overrides(config)
    sol = solve(problem, _solver_options(config))
    if not sol.certified and not config.allow_uncertified:
        _print_solution_summary(sol)
        print("refusing to report an uncertified solution "
              "(use --allow-uncertified to override)")
        return 3
    _print_solution_summary(sol)
    if config.out:
        fmt = _format_for(config, "json")
        write_solution(sol, config.out, fmt)
        print("wrote %s" % config.out)
        if not config.no_plot:
            fig = figure_path(config.out)
            render_solution_figure(sol, fig)
            print("wrote %s" % fig)
    return 0


def _default_grid(kind: str,
                  problem: DecisionProblem) -> tuple[float, ...]:
    if kind == "ucc":
        lo, hi = utility_bounds(problem)
        return tuple(float(v) for v in np.linspace(lo, hi, 50))
    if kind == "ipc":
        return tuple(float(v) for v in np.linspace(0.25, 4.0, 16))
    if kind == "elasticity":
        return tuple(float(v) for v in np.linspace(0.2, 5.0, 25))
    return tuple(float(v) for v in np.linspace(0.5, 0.98, 25))


def _curve_series(kind: str, problem: DecisionProblem,
                  xs: tuple[float, ...],
                  opts: SolverOptions) -> np.ndarray:
    if kind == "ucc":
        pts = analysis.ucc_general(problem, xs)
        return np.array([p.y for p in pts])
    if kind == "ipc":
        pts = analysis.ipc(problem, xs)
        return np.array([p.y for p in pts])
    if kind == "elasticity":
        tracking = analysis._as_tracking(problem)
        ys = []
        for x in xs:
            stakes = SymmetricTrackingProblem(
                n=tracking.n, h=x * problem.kappa, l=0.0,
                kappa=problem.kappa, alpha=problem.alpha,
            )
            ys.append(analysis.attention_elasticity_symmetric(stakes)
                      .elasticity)
        return np.array(ys)
    # consideration: sweep the first state's prior weight on a
    # two-state problem and record the leading signal's weight.
    if problem.n_states != 2:
        raise OutOfRange(
            "consideration curves need a two-state problem"
        )
    ys = []
    for x in xs:
        if not 0.0 < x < 1.0:
            raise OutOfRange("prior weights must lie strictly in (0, 1)")
        shifted = build_problem(
            payoff=problem.payoff,
            prior=(x, 1.0 - x),
            kappa=problem.kappa,
            alpha=problem.alpha,
            states=problem.states,
            actions=problem.actions,
        )
        sol = solve(shifted, opts)
        if not sol.converged:
            raise MaxIterationsExceeded(
                "sweep solve at prior=%.6g did not converge" % x
            )
        ys.append(float(sol.marginal[0]))
    return np.array(ys)


def cmd_curve(config: RunConfig) -> int:
    # Alpha overrides are applied per series, so only kappa is folded
    # into the base problem here.
    base = load_problem(config.problem_path)
    if config.kappa is not None:
        base = build_problem(base.payoff, base.prior, config.kappa,
                             base.alpha, states=base.states,
                             actions=base.actions)
    alphas = config.alphas if config.alphas is not None else (base.alpha,)
    kind = config.curve_kind
    xs = config.grid if config.grid is not None \
        else _default_grid(kind, base)
    opts = _solver_options(config)

    def one(alpha: float) -> np.ndarray:
        problem = build_problem(base.payoff, base.prior, base.kappa,
                                alpha, states=base.states,
                                actions=base.actions)
        return _curve_series(kind, problem, xs, opts)

    if config.threads > 1 and len(alphas) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            columns = list(pool.map(one, alphas))
    else:
        columns = [one(a) for a in alphas]

    curve = Curve(
        kind=kind,
        xlabel=_CURVE_XLABELS[kind],
        x=np.array(xs, dtype=float),
        series={a: ys for a, ys in zip(alphas, columns)},
    )
    print("%s curve: %d points, alpha in {%s}"
          % (kind, len(xs), ", ".join("%g" % a for a in alphas)))
    for a, ys in curve.series.items():
        print("  alpha=%g: first=%s last=%s"
              % (a, _g(float(ys[0])), _g(float(ys[-1]))))
    if config.out:
        fmt = _format_for(config, "csv")
        write_curve(curve, config.out, fmt)
        print("wrote %s" % config.out)
        if not config.no_plot:
            fig = figure_path(config.out)
            render_curve_figure(curve, fig)
            print("wrote %s" % fig)
    return 0


def _check_line(name: str, value: float, ok: bool) -> bool:
    print("  %-28s %-14s %s" % (name, _g(value), "PASS" if ok else "FAIL"))
    return ok


def _cmd_verify_stored(config: RunConfig) -> int:
    data = read_solution(config.verify_solution)
    ok_match, mismatches = recertify(data, tol=1e-12)
    cert = data["certificate"]
    print("stored solution: %s" % config.verify_solution)
    checks = []
    checks.append(_check_line("recertification match",
                              0.0 if ok_match else
                              max(m[3] for m in mismatches), ok_match))
    for m in mismatches:
        print("    mismatch %s: stored %s recomputed %s"
              % (m[0], _g(m[1]), _g(m[2])))
    for name in ("stationarity_residual", "primal_residual",
                 "complementarity_residual", "psi_residual"):
        val = float(cert[name])
        checks.append(_check_line(name, val, val <= CERT_TOL))
    delta_min = float(np.min(cert["delta"])) if cert["delta"] else 0.0
    checks.append(_check_line("delta_min", delta_min,
                              delta_min >= -DELTA_TOL))
    if all(checks):
        print("stored solution verified")
        return 0
    print("stored solution FAILED verification")
    return 1


def cmd_check(config: RunConfig) -> int:
    if config.verify_solution is not None:
        return _cmd_verify_stored(config)
    if config.problem_path is None:
        raise ValueError("check needs a problem file or --verify-solution")
    problem = _load_with_overrides(config)
    sol = solve(problem, _solver_options(config))
    if not sol.converged and not config.allow_uncertified:
        print("solve did not converge within the iteration budget")
        return 3
    cert = sol.certificate
    print("optimality check, alpha=%s kappa=%s"
          % (_g(problem.alpha), _g(problem.kappa)))
    checks = []
    checks.append(_check_line("stationarity_residual",
                              cert.stationarity_residual,
                              cert.stationarity_residual <= CERT_TOL))
    checks.append(_check_line("primal_residual", cert.primal_residual,
                              cert.primal_residual <= CERT_TOL))
    checks.append(_check_line("complementarity_residual",
                              cert.complementarity_residual,
                              cert.complementarity_residual <= CERT_TOL))
    delta_min = float(np.min(cert.delta)) if cert.delta.size else 0.0
    checks.append(_check_line("delta_min", delta_min,
                              delta_min >= -DELTA_TOL))
    psi_gap = abs(cert.psi - math.exp(-sol.cost_nats))
    checks.append(_check_line("psi vs exp(-cost)", psi_gap,
                              psi_gap <= CERT_TOL))
    checks.append(_check_line("psi_residual", cert.psi_residual,
                              cert.psi_residual <= CERT_TOL))

    report = analysis.consideration_set(sol, problem)
    worst_over = max((r - 1.0 for r in report.ratios.values()),
                     default=0.0)
    checks.append(_check_line("support ratio excess", worst_over,
                              worst_over <= 1e-8))
    on_support = max((abs(report.ratios[a] - 1.0)
                      for a in report.support), default=0.0)
    checks.append(_check_line("support ratio gap", on_support,
                              on_support <= 1e-8))

    if problem.n_states == 2 and problem.n_actions == 2:
        oracle = grid_solve_2x2(problem)
        gap = abs(sol.objective_net_utility
                  - oracle.objective_net_utility)
        checks.append(_check_line("grid oracle gap", gap, gap <= 1e-6))
    elif problem.n_states <= 4 and problem.n_actions <= 4:
        try:
            oracle = projected_gradient_solve(problem)
        except NotConverged:
            print("  %-28s %-14s %s"
                  % ("gradient oracle gap", "n/a",
                     "SKIP (oracle did not converge)"))
        else:
            gap = abs(sol.objective_net_utility
                      - oracle.objective_net_utility)
            checks.append(_check_line("gradient oracle gap", gap,
                                      gap <= 1e-5))
    else:
        print("  %-28s %-14s %s"
              % ("oracle gap", "n/a", "SKIP (problem too large)"))

    if all(checks):
        print("all checks passed")
        return 0
    print("CHECK FAILED")
    return 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        config = _config_from_args(ns)
        if ns.command == "solve":
            return cmd_solve(config)
        if ns.command == "curve":
            return cmd_curve(config)
        return cmd_check(config)
    except _SOLVER_ERRORS as exc:
        print("solver error: %s" % exc)
        return 3
    except _INPUT_ERRORS as exc:
        print("input error: %s" % exc)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
