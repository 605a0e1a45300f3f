"""Serialization of solutions and curves to JSON and CSV.

JSON stores floats with Python's shortest round-trip repr, so a value
read back compares exactly. CSV uses %.17g for the same reason. Both
formats are written with fixed field order and a fixed line terminator,
so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .infomeasures import Barycenter
from .problem import DecisionProblem, build_problem, problem_to_dict
from .problem import Experiment, Posterior
from .solver import DualVariables, KktCertificate, Solution, certify

_CERT_FIELDS = (
    "stationarity_residual",
    "primal_residual",
    "complementarity_residual",
    "psi",
    "psi_residual",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def solution_to_dict(solution: Solution) -> dict:
    cert = solution.certificate
    return {
        "problem": problem_to_dict(solution.problem),
        "experiment": {
            "signals": list(solution.problem.actions),
            "kernel": [[float(v) for v in row]
                       for row in solution.experiment.kernel],
        },
        "barycenter": [float(v) for v in solution.barycenter.q],
        "duals": [float(v) for v in solution.duals.lam],
        "marginal": [float(v) for v in solution.marginal],
        "posteriors": [
            {
                "signal": p.signal,
                "weight": float(p.weight),
                "gamma": [float(v) for v in p.gamma],
            }
            for p in solution.posteriors
        ],
        "cost_nats": float(solution.cost_nats),
        "objective_net_utility": float(solution.objective_net_utility),
        "iterations": int(solution.iterations),
        "converged": bool(solution.converged),
        "certified": bool(solution.certified),
        "certificate": {
            "stationarity_residual": float(cert.stationarity_residual),
            "primal_residual": float(cert.primal_residual),
            "complementarity_residual": float(cert.complementarity_residual),
            "psi": float(cert.psi),
            "psi_residual": float(cert.psi_residual),
            "delta": [[float(v) for v in row] for row in cert.delta],
        },
    }


def solution_from_dict(data: dict) -> Solution:
    prob = data["problem"]
    problem = build_problem(
        payoff=prob["payoff"],
        prior=prob["prior"],
        kappa=prob["kappa"],
        alpha=prob["alpha"],
        states=prob.get("states"),
        actions=prob.get("actions"),
    )
    P = np.array(data["experiment"]["kernel"], dtype=float)
    if P.shape != (problem.n_states, problem.n_actions):
        raise DimensionMismatch(
            "stored kernel shape %s does not match problem %s"
            % (P.shape, (problem.n_states, problem.n_actions))
        )
    lam = np.array(data["duals"], dtype=float)
    certd = data["certificate"]
    cert = KktCertificate(
        stationarity_residual=float(certd["stationarity_residual"]),
        primal_residual=float(certd["primal_residual"]),
        delta=np.array(certd["delta"], dtype=float),
        complementarity_residual=float(certd["complementarity_residual"]),
        psi=float(certd["psi"]),
        psi_residual=float(certd["psi_residual"]),
    )
    mu = np.asarray(problem.prior)
    tilt = np.asarray(problem.payoff) / problem.kappa \
        - (lam / mu)[:, None]
    return Solution(
        problem=problem,
        experiment=Experiment(P),
        barycenter=Barycenter(
            q=np.array(data["barycenter"], dtype=float),
            alpha=problem.alpha,
        ),
        duals=DualVariables(lam=lam),
        marginal=np.array(data["marginal"], dtype=float),
        posteriors=tuple(
            Posterior(
                signal=p["signal"],
                gamma=np.array(p["gamma"], dtype=float),
                weight=float(p["weight"]),
            )
            for p in data["posteriors"]
        ),
        objective_net_utility=float(data["objective_net_utility"]),
        cost_nats=float(data["cost_nats"]),
        iterations=int(data["iterations"]),
        certificate=cert,
        tilt=tilt,
        converged=bool(data["converged"]),
        history=(),
    )


def _solution_rows(data: dict):
    rows = [("section", "key", "col", "value")]
    prob = data["problem"]
    for i, s in enumerate(prob["states"]):
        rows.append(("problem", "states", str(i), s))
    for i, a in enumerate(prob["actions"]):
        rows.append(("problem", "actions", str(i), a))
    for i, row in enumerate(prob["payoff"]):
        for j, v in enumerate(row):
            rows.append(("problem", "payoff", "r%dc%d" % (i, j), _fmt(v)))
    for i, v in enumerate(prob["prior"]):
        rows.append(("problem", "prior", str(i), _fmt(v)))
    rows.append(("problem", "kappa", "", _fmt(prob["kappa"])))
    rows.append(("problem", "alpha", "", _fmt(prob["alpha"])))
    for i, s in enumerate(data["experiment"]["signals"]):
        rows.append(("experiment", "signals", str(i), s))
    for i, row in enumerate(data["experiment"]["kernel"]):
        for j, v in enumerate(row):
            rows.append(("experiment", "kernel", "r%dc%d" % (i, j), _fmt(v)))
    for name in ("barycenter", "duals", "marginal"):
        for i, v in enumerate(data[name]):
            rows.append(("solution", name, str(i), _fmt(v)))
    for name in ("cost_nats", "objective_net_utility", "iterations",
                 "converged", "certified"):
        rows.append(("solution", name, "", _fmt(data[name])))
    for k, post in enumerate(data["posteriors"]):
        rows.append(("posterior", str(k), "signal", post["signal"]))
        rows.append(("posterior", str(k), "weight", _fmt(post["weight"])))
        for i, v in enumerate(post["gamma"]):
            rows.append(("posterior", str(k), str(i), _fmt(v)))
    cert = data["certificate"]
    for name in _CERT_FIELDS:
        rows.append(("certificate", name, "", _fmt(cert[name])))
    for i, row in enumerate(cert["delta"]):
        for j, v in enumerate(row):
            rows.append(("certificate", "delta", "r%dc%d" % (i, j), _fmt(v)))
    return rows


def _rows_to_solution_dict(rows) -> dict:
    cells = {}
    for section, key, col, value in rows:
        cells.setdefault(section, {}).setdefault(key, {})[col] = value

    def vector(section, key, conv=float):
        d = cells[section][key]
        return [conv(d[str(i)]) for i in range(len(d))]

    def matrix(section, key):
        d = cells[section][key]
        n = 1 + max(int(m.group(1)) for c in d
                    if (m := re.match(r"r(\d+)c(\d+)$", c)))
        m_ = 1 + max(int(re.match(r"r(\d+)c(\d+)$", c).group(2)) for c in d)
        out = [[0.0] * m_ for _ in range(n)]
        for c, v in d.items():
            g = re.match(r"r(\d+)c(\d+)$", c)
            out[int(g.group(1))][int(g.group(2))] = float(v)
        return out

    def scalar(section, key, conv=float):
        return conv(cells[section][key][""])

    posteriors = []
    for k in range(len(cells.get("posterior", {}))):
        d = cells["posterior"][str(k)]
        gamma = [float(d[str(i)]) for i in range(len(d) - 2)]
        posteriors.append({
            "signal": d["signal"],
            "weight": float(d["weight"]),
            "gamma": gamma,
        })
    return {
        "problem": {
            "states": vector("problem", "states", str),
            "actions": vector("problem", "actions", str),
            "payoff": matrix("problem", "payoff"),
            "prior": vector("problem", "prior"),
            "kappa": scalar("problem", "kappa"),
            "alpha": scalar("problem", "alpha"),
        },
        "experiment": {
            "signals": vector("experiment", "signals", str),
            "kernel": matrix("experiment", "kernel"),
        },
        "barycenter": vector("solution", "barycenter"),
        "duals": vector("solution", "duals"),
        "marginal": vector("solution", "marginal"),
        "posteriors": posteriors,
        "cost_nats": scalar("solution", "cost_nats"),
        "objective_net_utility": scalar("solution", "objective_net_utility"),
        "iterations": scalar("solution", "iterations", int),
        "converged": scalar("solution", "converged", lambda s: s == "true"),
        "certified": scalar("solution", "certified", lambda s: s == "true"),
        "certificate": {
            **{name: scalar("certificate", name) for name in _CERT_FIELDS},
            "delta": matrix("certificate", "delta"),
        },
    }


def write_solution(solution: Solution, path: str, fmt: str) -> None:
    data = solution_to_dict(solution)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerows(_solution_rows(data))
    else:
        raise ValueError("unknown format %r" % (fmt,))


def read_solution(path: str) -> dict:
    """Read a stored solution (either format) back into the JSON-shaped
    dictionary."""
    if path.endswith(".csv"):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        return _rows_to_solution_dict(rows[1:])
    with open(path) as fh:
        return json.load(fh)


@dataclass(frozen=True, eq=False)
class Curve:
    kind: str
    xlabel: str
    x: np.ndarray
    series: dict  # alpha -> values, insertion ordered


def _alpha_header(alpha: float) -> str:
    return "alpha=%g" % alpha


def write_curve(curve: Curve, path: str, fmt: str) -> None:
    if fmt == "json":
        data = {
            "kind": curve.kind,
            "xlabel": curve.xlabel,
            "x": [float(v) for v in curve.x],
            "series": {
                "%g" % a: [float(v) for v in ys]
                for a, ys in curve.series.items()
            },
        }
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    elif fmt == "csv":
        # Curves are display data, so 12 significant digits; solution
        # payloads keep full %.17g precision for round-trip use.
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([curve.xlabel]
                            + [_alpha_header(a) for a in curve.series])
            cols = list(curve.series.values())
            for i, x in enumerate(curve.x):
                writer.writerow(["%.12g" % float(x)]
                                + ["%.12g" % float(ys[i]) for ys in cols])
    else:
        raise ValueError("unknown format %r" % (fmt,))


def read_curve(path: str) -> Curve:
    if path.endswith(".json"):
        with open(path) as fh:
            data = json.load(fh)
        return Curve(
            kind=data["kind"],
            xlabel=data["xlabel"],
            x=np.array(data["x"], dtype=float),
            series={float(a): np.array(ys, dtype=float)
                    for a, ys in data["series"].items()},
        )
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    x = np.array([float(r[0]) for r in body])
    series = {}
    for j, name in enumerate(header[1:], start=1):
        alpha = float(name.split("=", 1)[1])
        series[alpha] = np.array([float(r[j]) for r in body])
    return Curve(kind="", xlabel=header[0], x=x, series=series)


def recertify(data: dict, tol: float = 1e-12):
    """Rebuild the problem and kernel from a stored solution, recompute
    the optimality certificate from scratch, and compare it with the
    stored one. Returns (ok, mismatches) where mismatches lists
    (field, stored, recomputed, difference)."""
    solution = solution_from_dict(data)
    fresh = certify(solution, solution.problem)
    stored = data["certificate"]
    mismatches = []
    for name in _CERT_FIELDS:
        a = float(stored[name])
        b = float(getattr(fresh, name))
        if abs(a - b) > tol:
            mismatches.append((name, a, b, abs(a - b)))
    delta_stored = np.array(stored["delta"], dtype=float)
    gap = float(np.max(np.abs(delta_stored - fresh.delta))) \
        if delta_stored.size else 0.0
    if gap > tol:
        mismatches.append(("delta", float(np.max(delta_stored)),
                           float(np.max(fresh.delta)), gap))
    return (not mismatches), mismatches
