"""Static figures written next to the CSV reports.

Uses the non-interactive Agg backend and strips the software tag from
PNG metadata so identical data give byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import SnapshotError  # noqa: E402

_STYLE = {"figure.figsize": (5.5, 4.0), "figure.dpi": 100, "axes.grid": True, "grid.alpha": 0.3}


def _save(fig, path):
    try:
        fig.savefig(path, metadata={"Software": None})
    except OSError as exc:
        raise SnapshotError(f"cannot write figure {path}: {exc}") from exc
    finally:
        plt.close(fig)


def line_plot(path, x, series: dict, xlabel: str, ylabel: str, logx=False, logy=False,
              title: str | None = None, markers=True, reference=None):
    """One or more curves against a shared abscissa.

    ``logy`` plots magnitudes.  ``reference`` is ``(slope, label)`` and adds a
    dashed power law anchored at the first curve's last point.
    """
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        x = np.asarray(x, dtype=float)
        first = None
        for label, y in series.items():
            y = np.asarray(y, dtype=float)
            if logy:
                y = np.abs(y)
            ax.plot(x, y, marker="o" if markers else None, ms=3, label=label)
            if first is None:
                first = y
        if reference is not None and first is not None and x.size:
            slope, label = reference
            ax.plot(x, first[-1] * (x / x[-1]) ** slope, "k--", lw=1, label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1 or reference is not None:
            ax.legend()
        fig.tight_layout()
        _save(fig, path)


def energy_plot(path, series):
    t = np.asarray(series.t)
    e0 = series.E_total[0] if series.E_total and series.E_total[0] else 1.0
    line_plot(path, t, {"E_total / E(0)": np.asarray(series.E_total) / e0,
                        "E_u / E(0)": np.asarray(series.E_u) / e0,
                        "E_Z / E(0)": np.asarray(series.E_Z) / e0},
              "t", "energy", markers=False, title="energy history")


def table_plot(path, rows, x_col: int, y_cols: dict, xlabel, ylabel, **kw):
    rows = list(rows)
    if not rows:
        return
    x = [r[x_col] for r in rows]
    series = {name: [r[c] for r in rows] for name, c in y_cols.items()}
    line_plot(path, x, series, xlabel, ylabel, **kw)
