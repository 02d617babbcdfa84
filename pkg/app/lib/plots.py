"""SVG figures for run directories.

Figures are built on bare `Figure` objects so nothing touches pyplot state;
the rcParams below keep the SVG output byte-stable across reruns.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure

from app.domain.models import DensityProfile, FloatArray, ModelParams

PLOT_STYLE: dict[str, object] = {
    "svg.fonttype": "path",
    "svg.hashsalt": "nnlif",
    "path.simplify": False,
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
mpl.rcParams.update(PLOT_STYLE)

# Longer traces are thinned to about this many points before plotting.
MAX_TRACE_POINTS = 10_000


def decimate_trace(
    times: FloatArray, values: FloatArray, max_points: int = MAX_TRACE_POINTS
) -> tuple[FloatArray, FloatArray]:
    """Every n-th sample so at most `max_points` remain, last sample always kept."""
    if max_points < 2:
        raise ValueError("max_points must be at least 2")
    if times.size <= max_points:
        return times, values
    stride = -(-(times.size - 1) // (max_points - 1))
    index = np.arange(0, times.size, stride)
    if index[-1] != times.size - 1:
        index = np.append(index, times.size - 1)
    return times[index], values[index]


def plot_firing_rates(traces: Mapping[str, tuple[FloatArray, FloatArray]], *, title: str = "") -> Figure:
    figure = Figure()
    ax = figure.add_subplot()
    for label, (times, rates) in traces.items():
        ax.plot(*decimate_trace(times, rates), label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("N(t)")
    if title:
        ax.set_title(title)
    if len(traces) > 1:
        ax.legend()
    figure.tight_layout()
    return figure


def plot_profiles(profiles: Mapping[str, DensityProfile], *, title: str = "") -> Figure:
    figure = Figure()
    ax = figure.add_subplot()
    for label, profile in profiles.items():
        ax.plot(profile.grid.nodes, profile.values, label=label)
    if profiles:
        grid = next(iter(profiles.values())).grid
        ax.axvline(grid.v_reset, color="0.5", linestyle=":", linewidth=0.8)
        ax.axvline(grid.v_fire, color="0.5", linestyle=":", linewidth=0.8)
    ax.set_xlabel("v")
    ax.set_ylabel("p(v)")
    if title:
        ax.set_title(title)
    ax.legend()
    figure.tight_layout()
    return figure


def plot_cobweb(
    rate_map: Callable[[float], float],
    values: Sequence[float],
    *,
    n_max: float | None = None,
    samples: int = 400,
    title: str = "",
) -> Figure:
    """Map curve, diagonal and the staircase of `values` under it."""
    upper = n_max if n_max is not None else 1.2 * max(max(values), 1e-3)
    xs = np.linspace(0.0, upper, samples)
    ys = np.array([rate_map(float(x)) for x in xs])

    figure = Figure(figsize=(4.8, 4.8))
    ax = figure.add_subplot()
    ax.plot(xs, ys, color="k", label="f(N)")
    ax.plot(xs, xs, color="0.5", linestyle="--", linewidth=0.8)
    if len(values) > 1:
        path_x, path_y = [values[0]], [0.0]
        for current, following in zip(values, values[1:]):
            path_x += [current, following]
            path_y += [following, following]
        ax.plot(path_x, path_y, color="tab:red", linewidth=0.8)
    ax.set_xlim(0.0, upper)
    ax.set_ylim(0.0, max(upper, float(np.nanmax(ys)) if ys.size else upper))
    ax.set_xlabel("N_k")
    ax.set_ylabel("N_{k+1}")
    if title:
        ax.set_title(title)
    figure.tight_layout()
    return figure


def plot_maps(
    curves: Mapping[float, tuple[FloatArray, FloatArray, FloatArray]],
    params: ModelParams,
) -> Figure:
    """f and F = f(f) against the diagonal, one panel pair per coupling b."""
    figure = Figure(figsize=(8.0, 3.2 * max(len(curves), 1)))
    for row, (b, (xs, f_values, ff_values)) in enumerate(curves.items()):
        for column, (values, name) in enumerate(((f_values, "f"), (ff_values, "F"))):
            ax = figure.add_subplot(len(curves), 2, 2 * row + column + 1)
            ax.plot(xs, values, color="k")
            ax.plot(xs, xs, color="0.5", linestyle="--", linewidth=0.8)
            ax.set_title(f"{name}(N), b={b:g}, V_R={params.v_reset:g}, V_F={params.v_fire:g}")
            ax.set_xlabel("N")
    figure.tight_layout()
    return figure
