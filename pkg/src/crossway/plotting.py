"""Trajectory figures rendered next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .geometry import build_path  # noqa: E402

_KIND_COLORS = {
    "angelic": "tab:green",
    "intermediate": "tab:blue",
    "demonic": "tab:purple",
    "irrational": "tab:red",
}


def _draw_layout(ax, layout) -> None:
    half, reach = layout.box_half_width, layout.box_half_width + layout.arm_length
    road = layout.box_half_width
    for lo, hi in ((-reach, -half), (half, reach)):
        ax.fill_between([lo, hi], -road, road, color="0.92", zorder=0)
        ax.fill_betweenx([lo, hi], -road, road, color="0.92", zorder=0)
    ax.fill_between([-half, half], -half, half, color="mistyrose", zorder=1)
    ax.add_patch(plt.Rectangle((-half, -half), 2 * half, 2 * half,
                               fill=False, color="firebrick", lw=1.0,
                               zorder=3))
    for axis in ("x", "y"):
        for side in (-1, 1):
            lo, hi = side * half, side * reach
            if axis == "x":
                ax.plot([lo, hi], [0, 0], color="w", lw=1.0, ls=(0, (6, 6)),
                        zorder=2)
            else:
                ax.plot([0, 0], [lo, hi], color="w", lw=1.0, ls=(0, (6, 6)),
                        zorder=2)


def render_run_figure(setup, result, settings, path: str | Path) -> Path:
    """One run's routes and per-step positions, coloured by vehicle kind."""
    layout = settings.layout
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    _draw_layout(ax, layout)

    for spec in setup.vehicles:
        nav = build_path(spec.arm, spec.maneuver, layout)
        ss = np.linspace(0.0, nav.total_length, 200)
        pts = np.array([nav.pose(s)[:2] for s in ss])
        color = _KIND_COLORS[spec.kind.value]
        ax.plot(pts[:, 0], pts[:, 1], color=color, lw=0.8, alpha=0.35,
                zorder=4)

    by_vehicle: dict[int, list[tuple[float, float]]] = {}
    collisions: list[tuple[float, float]] = []
    for row in result.trace:
        by_vehicle.setdefault(row["id"], []).append((row["x"], row["y"]))
        if "collision" in row["events"]:
            collisions.append((row["x"], row["y"]))
    kinds = {spec.vid: spec.kind.value for spec in setup.vehicles}
    for vid, pts_list in sorted(by_vehicle.items()):
        pts = np.array(pts_list)
        color = _KIND_COLORS[kinds[vid]]
        ax.plot(pts[:, 0], pts[:, 1], color=color, lw=1.6, zorder=5)
        ax.scatter(pts[::5, 0], pts[::5, 1], s=8, color=color, zorder=6)
        ax.scatter(*pts[0], marker="s", s=30, color=color, zorder=7,
                   label=f"vehicle {vid} ({kinds[vid]})")
    if collisions:
        pts = np.array(collisions)
        ax.scatter(pts[:, 0], pts[:, 1], marker="x", s=80, color="k",
                   zorder=8, label="collision")

    reach = layout.box_half_width + layout.arm_length + 2.0
    ax.set_xlim(-reach, reach)
    ax.set_ylim(-reach, reach)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"case {setup.case}, run {setup.run_index}, "
                 f"seed {setup.master_seed}")
    ax.legend(loc="upper right", fontsize=8)
    out = Path(path)
    fig.savefig(out, bbox_inches="tight")
    plt.close(fig)
    return out
