"""Report writers: delimited series, matplotlib figures and pass/fail summaries.

Every writer is deterministic. CSV floats use the shortest round-trip
representation, and figures are saved as SVG with a fixed hash salt and no
creation date, so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dynamics import EstimateSeries  # noqa: E402

__all__ = ["Line", "PlotSpec", "Check", "format_number", "series_to_csv", "write_csv", "render_figure", "summary_text"]

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.5,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.0, 3.6),
    "svg.fonttype": "none",
    "svg.hashsalt": "mourrelab",
}

# pyplot and rc_context are process-global
_PLOT_LOCK = threading.Lock()


@dataclass
class Line:
    x: np.ndarray
    y: np.ndarray
    label: str | None = None
    style: str = "-"
    color: str | None = None


@dataclass
class PlotSpec:
    lines: list[Line]
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    xscale: str = "linear"
    yscale: str = "linear"
    vlines: list[tuple[float, str]] = field(default_factory=list)
    hlines: list[tuple[float, str]] = field(default_factory=list)
    square: bool = False
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    ticks: tuple[list[float], list[str]] | None = None


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def format_number(x) -> str:
    """Shortest round-trip decimal for floats; ints stay ints."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _meta_value(v) -> str:
    if isinstance(v, (float, np.floating, int, np.integer, bool, np.bool_)):
        return format_number(v)
    return str(v).replace("\n", " ")


def series_to_csv(series: EstimateSeries) -> str:
    lines = [f"# kind: {series.kind}"]
    for key, value in series.metadata.items():
        lines.append(f"# {key}: {_meta_value(value)}")
    header = [series.param, series.value_name]
    cols = [series.grid, series.values.real if series.is_complex else series.values]
    if series.is_complex:
        header.append(f"{series.value_name}_im")
        cols.append(series.values.imag)
    for name, col in series.columns.items():
        header.append(name)
        cols.append(np.asarray(col))
    lines.append(",".join(header))
    for row in zip(*cols):
        lines.append(",".join(format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(series: EstimateSeries, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(series_to_csv(series), encoding="utf-8")
    return path


def render_figure(spec: PlotSpec, path: str | Path) -> Path:
    path = Path(path)
    with _PLOT_LOCK, plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.6, 4.6) if spec.square else None)
        try:
            for ln in spec.lines:
                ax.plot(ln.x, ln.y, ln.style, label=ln.label, color=ln.color)
            for x, label in spec.vlines:
                ax.axvline(x, color="0.4", ls="--", lw=0.8, label=label)
            for y, label in spec.hlines:
                ax.axhline(y, color="0.4", ls=":", lw=0.8, label=label)
            ax.set_xscale(spec.xscale)
            ax.set_yscale(spec.yscale)
            ax.set_xlabel(spec.xlabel)
            ax.set_ylabel(spec.ylabel)
            if spec.title:
                ax.set_title(spec.title)
            if spec.xlim:
                ax.set_xlim(*spec.xlim)
            if spec.ylim:
                ax.set_ylim(*spec.ylim)
            if spec.ticks:
                ax.set_xticks(spec.ticks[0], spec.ticks[1])
                ax.set_yticks(spec.ticks[0], spec.ticks[1])
            if spec.square:
                ax.set_aspect("equal")
            if any(ln.label for ln in spec.lines) or spec.vlines or spec.hlines:
                ax.legend(loc="best", frameon=False)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path


def summary_text(name: str, kind: str, checks: list[Check], notes: dict | None = None) -> str:
    lines = [f"experiment: {name}", f"kind: {kind}"]
    for key, value in (notes or {}).items():
        lines.append(f"{key}: {_meta_value(value)}")
    lines.extend(c.line() for c in checks)
    status = "PASS" if all(c.passed for c in checks) else "FAIL"
    lines.append(f"result: {status}")
    return "\n".join(lines) + "\n"
