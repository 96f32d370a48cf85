"""PNG rendering of harness CSVs (Agg backend, written next to the CSV)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {"figure.figsize": (5.0, 3.6), "axes.grid": True, "grid.alpha": 0.3, "font.size": 9,
         "savefig.dpi": 120, "axes.spines.top": False, "axes.spines.right": False}


def _read(path):
    import csv

    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def render_csv(path, spec):
    """Render one CSV according to spec {kind, x, y, title}; returns the PNG path."""
    path = Path(path)
    header, rows = _read(path)
    col = {h: i for i, h in enumerate(header)}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if spec["kind"] == "bars":
            labels = [r[col[spec["x"]]] for r in rows]
            for name in spec["y"]:
                ax.bar(labels, [float(r[col[name]]) for r in rows], label=name)
            ax.tick_params(axis="x", labelrotation=30)
        else:
            x = np.array([float(r[col[spec["x"]]]) for r in rows])
            for name in spec["y"]:
                y = np.array([float(r[col[name]]) for r in rows])
                if spec["kind"] == "loglog":
                    keep = (x > 0) & (y > 0)
                    ax.loglog(x[keep], y[keep], "o-", ms=3, label=name)
                else:
                    ax.plot(x, y, lw=1.2, label=name)
        ax.set_xlabel(spec["x"])
        ax.set_title(spec.get("title", path.stem))
        if len(spec["y"]) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        png = path.with_suffix(".png")
        fig.savefig(png)
        plt.close(fig)
    return png


def guess_spec(path):
    """Plot spec for a CSV without one: first column against the rest."""
    header, rows = _read(path)
    numeric = True
    try:
        [float(r[0]) for r in rows]
    except ValueError:
        numeric = False
    if not numeric:
        return {"kind": "bars", "x": header[0], "y": header[1:2], "title": Path(path).stem}
    x = np.array([float(r[0]) for r in rows]) if rows else np.array([])
    log = x.size > 2 and np.all(x > 0) and x.max() / x.min() > 100
    return {"kind": "loglog" if log else "lines", "x": header[0], "y": header[1:], "title": Path(path).stem}
