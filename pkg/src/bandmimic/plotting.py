"""Deterministic SVG figures: the (a, B) region map and pair-correlation overlays."""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

from .errors import IoFailure  # noqa: E402
from .mimicry import MIMICABLE, NOT_MIMICABLE, UNKNOWN, RegionPoint  # noqa: E402

REGION_COLORS = {MIMICABLE: "#4daf4a", NOT_MIMICABLE: "#e41a1c", UNKNOWN: "#ffffff"}
_RC = {
    "svg.hashsalt": "bandmimic",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    try:
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)


def emit_region_svg(points: Sequence[RegionPoint], path, process: Optional[str] = None,
                    a_max: float = 2.0, B_max: float = 3.0) -> None:
    """Colour each grid cell by verdict and overlay the theoretical boundaries."""
    if process is None and points:
        process = points[0].process
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        ax.set_xlim(0.0, a_max)
        ax.set_ylim(0.0, B_max)
        ax.set_xlabel("a")
        ax.set_ylabel("B")
        if points:
            a_vals = np.unique([p.a for p in points])
            b_vals = np.unique([p.B for p in points])
            codes = {MIMICABLE: 0, NOT_MIMICABLE: 1, UNKNOWN: 2}
            grid = np.full((b_vals.size, a_vals.size), 2, dtype=int)
            ia = {v: i for i, v in enumerate(a_vals)}
            ib = {v: i for i, v in enumerate(b_vals)}
            for p in points:
                grid[ib[p.B], ia[p.a]] = codes[p.verdict]
            cmap = ListedColormap([REGION_COLORS[MIMICABLE], REGION_COLORS[NOT_MIMICABLE], REGION_COLORS[UNKNOWN]])
            da = a_vals[1] - a_vals[0] if a_vals.size > 1 else a_max
            db = b_vals[1] - b_vals[0] if b_vals.size > 1 else B_max
            extent = (a_vals[0] - da / 2, a_vals[-1] + da / 2, b_vals[0] - db / 2, b_vals[-1] + db / 2)
            ax.imshow(grid, origin="lower", extent=extent, cmap=cmap, vmin=0, vmax=2, aspect="auto",
                      interpolation="nearest")
            a = np.linspace(a_max / 400, a_max, 400)
            if process == "poisson":
                ax.plot(a, 1.0 / a, color="k", lw=1.0, label="B = 1/a")
            elif process == "sine":
                a1 = a[a <= 1.0]
                ax.plot(a1, (1.0 - a1) / a1, color="k", lw=1.0, label="B = (1-a)/a")
                ax.plot(a, 0.5 / a, color="k", lw=1.0, ls="--", label="B = 1/(2a)")
            ax.legend(loc="upper right", frameon=False)
            ax.set_xlim(0.0, a_max)
            ax.set_ylim(0.0, B_max)
        if process:
            ax.set_title(f"{process} process")
        fig.tight_layout()
        _save(fig, path)


def emit_paircorr_svg(centers, rate, stderr, path, theory=None, xlabel: str = "separation") -> None:
    """Histogram with 3-SE bars; ``theory`` is an optional callable drawn as a line."""
    centers = np.asarray(centers, dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        ax.errorbar(centers, rate, yerr=3.0 * np.asarray(stderr), fmt="o", ms=2.5, lw=0.8, color="#377eb8",
                    label="empirical")
        if theory is not None and centers.size:
            x = np.linspace(centers.min(), centers.max(), 801)
            ax.plot(x, theory(x), color="k", lw=1.0, label="analytic")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("pair rate")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
