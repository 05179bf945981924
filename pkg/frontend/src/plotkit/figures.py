"""The four figure kinds rendered from an adiabat output directory.

render() is a pure function of its input files: fixed figure geometry, no
timestamps, PNG metadata stripped, so re-rendering is pixel-identical.
It never recomputes physics; annotated values (like the scaling-fit
slope) are read from the CSVs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import PlotkitError, SchemaError, decode_slug, read_table, require_columns  # noqa: E402

FIGURE_KINDS = ("snapshots", "entropy_trace", "scaling_loglog", "fluctuation_compare")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input_dir: Path
    output: Path
    title: Optional[str] = None
    xlim: Optional[tuple] = None
    ylim: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotkitError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}")


def _new_axes(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _finish(fig, ax, spec: FigureSpec):
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    fig.tight_layout()
    Path(spec.output).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, metadata={"Software": None})
    plt.close(fig)


def _snapshots(spec: FigureSpec) -> dict:
    paths = sorted(Path(spec.input_dir).glob("distribution_*.csv"))
    if not paths:
        raise PlotkitError(f"no distribution_<a>.csv files in {spec.input_dir}")
    fig, ax = _new_axes(spec)
    drawn = []
    for path in paths:
        table = read_table(path)
        require_columns(table, path, ("epsilon", "G", "w"))
        a_tag = decode_slug(path.stem.split("_", 1)[1])
        ax.semilogy(table["epsilon"], table["w"], lw=1.2, label=f"a = {a_tag:g}")
        if "w_zp" in table:
            ax.semilogy(table["epsilon"], table["w_zp"], lw=1.0, ls="--",
                        label=f"a = {a_tag:g} (canonical)")
        drawn.append(a_tag)
    ax.set_xlabel("energy")
    ax.set_ylabel("per-state probability w")
    ax.legend(fontsize=8)
    _finish(fig, ax, spec)
    return {"kind": spec.kind, "checkpoints": drawn}


def _entropy_trace(spec: FigureSpec) -> dict:
    path = Path(spec.input_dir) / "trajectory.csv"
    table = read_table(path)
    require_columns(table, path, ("a", "S"))
    fig, ax = _new_axes(spec)
    ax.plot(table["a"], table["S"], marker="o", ms=3, lw=1.2)
    ax.set_xlabel("external parameter a")
    ax.set_ylabel("entropy S")
    _finish(fig, ax, spec)
    return {"kind": spec.kind, "n_points": len(table["a"]),
            "s_first": table["S"][0], "s_last": table["S"][-1]}


def _scaling_loglog(spec: FigureSpec) -> dict:
    path = Path(spec.input_dir) / "scaling.csv"
    table = read_table(path)
    if "spacing" in table:
        require_columns(table, path, ("spacing", "total_delta_s", "fitted_slope"))
        x, y = table["spacing"], table["total_delta_s"]
        labels = ("level spacing", "total entropy production")
    else:
        require_columns(table, path, ("n", "rel_energy_gap", "fitted_slope"))
        x, y = table["n"], table["rel_energy_gap"]
        labels = ("size N", "relative mean-energy gap")
    slope = table["fitted_slope"][0]
    fig, ax = _new_axes(spec)
    ax.loglog(x, y, marker="s", ms=4, lw=1.2)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.annotate(f"fitted slope: {slope:.6f}", xy=(0.05, 0.08),
                xycoords="axes fraction")
    _finish(fig, ax, spec)
    print(f"fitted slope: {slope!r}")
    return {"kind": spec.kind, "slope": slope}


def _fluctuation_compare(spec: FigureSpec) -> dict:
    path = Path(spec.input_dir) / "comparison.csv"
    table = read_table(path)
    needed = ("a", "dE_zp_measured", "dE_zp_predicted",
              "dE_ad_measured", "dE_ad_predicted")
    require_columns(table, path, needed)
    fig, ax = _new_axes(spec)
    styles = {
        "dE_zp_measured": dict(marker="o", ms=4, lw=0.0),
        "dE_zp_predicted": dict(lw=1.2, ls="-"),
        "dE_ad_measured": dict(marker="^", ms=4, lw=0.0),
        "dE_ad_predicted": dict(lw=1.2, ls="--"),
    }
    for column, style in styles.items():
        ax.plot(table["a"], table[column], label=column, **style)
    ax.set_xlabel("external parameter a")
    ax.set_ylabel("energy fluctuation dE")
    ax.legend(fontsize=8)
    _finish(fig, ax, spec)
    return {"kind": spec.kind, "n_points": len(table["a"])}


_RENDERERS = {
    "snapshots": _snapshots,
    "entropy_trace": _entropy_trace,
    "scaling_loglog": _scaling_loglog,
    "fluctuation_compare": _fluctuation_compare,
}


def render(spec: FigureSpec) -> dict:
    """Write the figure and return what was drawn (annotation values)."""
    return _RENDERERS[spec.kind](spec)
