"""Static voltage/current figures rendered from traces to image files."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simulator import TraceSet
from .traceio import MeasuredTrace

_STYLE = {
    "figure.figsize": (9.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
}


def _new_axes(title: str):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
    ax.set_xlabel("Time [s]")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_voltage(trace: TraceSet, path: str, title: str = "Voltage",
                 measured: MeasuredTrace | None = None) -> None:
    fig, ax = _new_axes(title)
    ax.plot(trace.time, trace.u_mag, label="simulated")
    if measured is not None:
        ax.plot(measured.time, measured.u_mag, "--", label="measured")
        ax.legend()
    ax.set_ylabel("Voltage [p.u.]")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_current(trace: TraceSet, path: str, title: str = "Current",
                 i_max: float | None = None,
                 measured: MeasuredTrace | None = None) -> None:
    fig, ax = _new_axes(title)
    ax.plot(trace.time, trace.i_mag, label="simulated")
    if measured is not None:
        ax.plot(measured.time, measured.i_mag, "--", label="measured")
    if i_max is not None and trace.limiting.any():
        ax.axhline(i_max, color="tab:red", linestyle=":", alpha=0.7, label="current limit")
    if measured is not None or (i_max is not None and trace.limiting.any()):
        ax.legend()
    ax.set_ylabel("Current [p.u.]")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_trace_plots(
    trace: TraceSet,
    out_dir: str,
    stem: str,
    i_max: float | None = None,
    measured: MeasuredTrace | None = None,
) -> list[str]:
    """Write the voltage and current figures for a trace; returns the paths."""
    paths = []
    for kind, fn in (("voltage", plot_voltage), ("current", plot_current)):
        path = os.path.join(out_dir, f"{stem}_{kind}.png")
        if kind == "voltage":
            fn(trace, path, title=f"{stem}: Voltage [p.u.]", measured=measured)
        else:
            fn(trace, path, title=f"{stem}: Current [p.u.]", i_max=i_max, measured=measured)
        paths.append(path)
    return paths
