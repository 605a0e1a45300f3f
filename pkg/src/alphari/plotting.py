"""Figure rendering for solutions and curves.

Figures are written next to the delimited output with the same stem and
a .png suffix. The Agg backend keeps this headless-safe, and stripping
the writer metadata keeps repeated renders byte-identical.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .serialize import Curve  # noqa: E402
from .solver import Solution  # noqa: E402

_YLABELS = {
    "ucc": "information cost (nats)",
    "ipc": "expected utility",
    "elasticity": "attention elasticity",
    "consideration": "leading signal weight",
}


def figure_path(out_path: str) -> str:
    stem = out_path.rsplit(".", 1)[0] if "." in out_path.rsplit("/", 1)[-1] \
        else out_path
    return stem + ".png"


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)


def render_curve_figure(curve: Curve, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for alpha, ys in curve.series.items():
        ax.plot(curve.x, ys, marker=".", markersize=4,
                label="alpha = %g" % alpha)
    ax.set_xlabel(curve.xlabel)
    ax.set_ylabel(_YLABELS.get(curve.kind, "value"))
    ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def render_solution_figure(solution: Solution, path: str) -> None:
    problem = solution.problem
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    im = ax1.imshow(solution.experiment.kernel, cmap="viridis",
                    vmin=0.0, vmax=1.0, aspect="auto")
    ax1.set_xticks(range(problem.n_actions))
    ax1.set_xticklabels(problem.actions, rotation=45, ha="right")
    ax1.set_yticks(range(problem.n_states))
    ax1.set_yticklabels(problem.states)
    ax1.set_xlabel("signal")
    ax1.set_ylabel("state")
    ax1.set_title("signal kernel")
    fig.colorbar(im, ax=ax1, fraction=0.046)

    idx = range(len(solution.marginal))
    ax2.bar(idx, solution.marginal, color="tab:blue", alpha=0.8)
    ax2.set_xticks(list(idx))
    ax2.set_xticklabels(problem.actions, rotation=45, ha="right")
    ax2.set_ylabel("signal weight")
    ax2.set_title("alpha = %g, cost = %.6g nats"
                  % (problem.alpha, solution.cost_nats))
    fig.tight_layout()
    _save(fig, path)
