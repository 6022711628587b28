"""Figure construction from the experiment CSVs.

Three kinds: ``heatmap`` (bound-comparison grid with the three dominance
regions), ``panels`` (per-horizon exit probability vs level-set expansion),
and ``trajectories`` (planar walker paths around the obstacle plus the
per-cell bound/frequency summary).  Rendering is read-only over its inputs
and produces fixed-size images for a fixed spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Patch

from .schemas import SchemaError, read_table, sibling_metadata

__all__ = ["FigureSpec", "render", "REGION_LABELS"]

KINDS = ("heatmap", "panels", "trajectories")

#: The three regions of the bound-comparison figure.
REGION_LABELS = (
    "Ville bound stronger",
    "kernel bound stronger, conditions fail",
    "dominance conditions hold",
)
REGION_COLORS = ("#c23b22", "#3b6fc2", "#2e9e4f")

DIST_COLORS = {
    "uniform": "#e377c2",      # pink
    "truncgauss": "#2ca02c",   # green
    "categorical": "#bcbd22",  # yellow
}


@dataclass(frozen=True)
class FigureSpec:
    """One render job: inputs, figure kind, output path, style options."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; known: {KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input file is required")


def _save(fig, spec: FigureSpec) -> str:
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=fig.dpi)
    plt.close(fig)
    return str(out)


def _build_heatmap(spec: FigureSpec):
    rows = read_table(spec.inputs[0], "bound_grid")
    lams = sorted({r["lambda"] for r in rows})
    sigmas = sorted({r["sigma"] for r in rows})
    li = {v: i for i, v in enumerate(lams)}
    si = {v: i for i, v in enumerate(sigmas)}
    region = np.zeros((len(sigmas), len(lams)))
    for r in rows:
        if r["cond1"] and r["cond2"]:
            cat = 2
        elif r["freedman"] <= r["ville"]:
            cat = 1
        else:
            cat = 0
        region[si[r["sigma"]], li[r["lambda"]]] = cat
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=100)
    cmap = matplotlib.colors.ListedColormap(REGION_COLORS)
    ax.imshow(
        region,
        origin="lower",
        aspect="auto",
        cmap=cmap,
        vmin=-0.5,
        vmax=2.5,
        extent=(min(lams), max(lams), min(sigmas), max(sigmas)),
        interpolation="nearest",
    )
    ax.set_xlabel(spec.options.get("xlabel", "threshold lambda"))
    ax.set_ylabel(spec.options.get("ylabel", "conditional std bound sigma"))
    ax.set_title("which exit-probability bound is stronger")
    handles = [
        Patch(color=c, label=lab) for c, lab in zip(REGION_COLORS, REGION_LABELS)
    ]
    ax.legend(handles=handles, loc="upper right", fontsize=8, framealpha=0.9)
    return fig


def _build_panels(spec: FigureSpec):
    rows = read_table(spec.inputs[0], "issf_compare")
    k_values = sorted({r["K"] for r in rows})
    distributions = sorted({r["distribution"] for r in rows})
    n = len(k_values)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4), dpi=100, squeeze=False)
    log_y = bool(spec.options.get("log_y", False))
    for ax, k in zip(axes[0], k_values):
        sub = sorted((r for r in rows if r["K"] == k), key=lambda r: r["epsilon"])
        eps = np.array([r["epsilon"] for r in sub])
        first = {r["epsilon"]: r for r in sub}
        bound = np.array([first[e]["bound"] for e in eps])
        indicator = np.array([first[e]["issf_indicator"] for e in eps])
        x = -eps  # level-set expansion axis, matching the table's convention
        ax.plot(x, bound, color="#1f77b4", label="kernel bound")
        ax.step(x, indicator, color="#c23b22", where="mid", label="worst-case indicator")
        for dist in distributions:
            drows = sorted(
                (r for r in rows if r["K"] == k and r["distribution"] == dist),
                key=lambda r: r["epsilon"],
            )
            p = np.array([r["p_hat"] for r in drows])
            lo = np.array([r["ci_lo"] for r in drows])
            hi = np.array([r["ci_hi"] for r in drows])
            color = DIST_COLORS.get(dist, "#777777")
            ax.errorbar(
                -np.array([r["epsilon"] for r in drows]),
                p,
                yerr=np.vstack([p - lo, hi - p]),
                fmt="o",
                ms=3,
                lw=1,
                color=color,
                label=dist,
            )
        ax.set_title(f"K = {k}")
        ax.set_xlabel("level-set expansion -epsilon")
        if log_y:
            ax.set_yscale("log")
    axes[0][0].set_ylabel("exit probability")
    axes[0][-1].legend(fontsize=7, loc="upper left")
    fig.tight_layout()
    return fig


def _build_trajectories(spec: FigureSpec):
    if len(spec.inputs) < 2:
        raise SchemaError(
            "trajectories figure needs the summary CSV and the trajectories CSV"
        )
    summary = read_table(spec.inputs[0], "hlip_case")
    paths = read_table(spec.inputs[1], "hlip_trajectories")
    meta = sibling_metadata(spec.inputs[0])
    rho = spec.options.get("obstacle_rho", meta.get("obstacle_rho"))
    r_obs = spec.options.get("obstacle_r", meta.get("obstacle_r"))

    fig, (ax_path, ax_prob) = plt.subplots(
        1, 2, figsize=(9.6, 4.2), dpi=100,
        gridspec_kw={"width_ratios": [1.1, 1.0]},
    )
    d_values = sorted({r["d_max"] for r in paths})
    cmap = plt.get_cmap("viridis")
    shade = {d: cmap(i / max(1, len(d_values) - 1)) for i, d in enumerate(d_values)}
    by_path: dict = {}
    for r in paths:
        by_path.setdefault((r["d_max"], r["alpha"], r["trial"]), []).append(
            (r["step"], r["px"], r["py"])
        )
    for (d, _a, _t), pts in by_path.items():
        pts.sort()
        xs = [p[1] for p in pts]
        ys = [p[2] for p in pts]
        ax_path.plot(xs, ys, lw=0.7, alpha=0.6, color=shade[d])
    if rho is not None and r_obs is not None:
        ax_path.add_patch(Circle(rho, r_obs, color="black", zorder=5))
    handles = [Patch(color=shade[d], label=f"d_max = {d:g}") for d in d_values]
    ax_path.legend(handles=handles, fontsize=8, loc="upper left")
    ax_path.set_xlabel("x [m]")
    ax_path.set_ylabel("y [m]")
    ax_path.set_aspect("equal", adjustable="datalim")
    ax_path.set_title("walker paths")

    alphas = sorted({r["alpha"] for r in summary})
    ax_steps = ax_prob.twinx()
    for i, a in enumerate(alphas):
        sub = sorted((r for r in summary if r["alpha"] == a), key=lambda r: r["d_max"])
        d = [r["d_max"] for r in sub]
        color = plt.get_cmap("tab10")(i)
        ax_prob.plot(d, [r["bound"] for r in sub], "--", color=color,
                     label=f"bound, alpha={a:g}")
        ax_prob.plot(d, [r["p_hat"] for r in sub], "-", marker="o", ms=4,
                     color=color, label=f"empirical, alpha={a:g}")
        steps = [
            (r["first_violation_step"] if r["first_violation_step"] >= 0 else np.nan)
            for r in sub
        ]
        ax_steps.plot(d, steps, ":", color=color, label=f"first violation, alpha={a:g}")
    ax_prob.set_xlabel("d_max [m]")
    ax_prob.set_ylabel("exit probability")
    ax_steps.set_ylabel("worst-case first-violation step")
    ax_prob.set_ylim(-0.05, 1.05)
    ax_prob.legend(fontsize=7, loc="upper left")
    ax_prob.set_title("bound vs sampled frequency")
    fig.tight_layout()
    return fig


_BUILDERS = {
    "heatmap": _build_heatmap,
    "panels": _build_panels,
    "trajectories": _build_trajectories,
}


def build_figure(spec: FigureSpec):
    """Construct (but do not save) the matplotlib figure for a spec."""
    return _BUILDERS[spec.kind](spec)


def render(spec: FigureSpec) -> str:
    """Render the spec to its output image; returns the written path."""
    return _save(build_figure(spec), spec)
