"""Render the three benchmark figures from summary CSVs.

The input is the aggregated summary produced by the benchmark harness
(one row per grid cell and metric, with median/q25/q75 columns); raw trial
CSVs are deliberately not accepted, so the numerical pipeline stays fully
testable without this package.  Rendering is a pure function of the CSV
contents: the same input yields byte-identical image files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("sweetspot", "kappa", "poles")

REQUIRED_COLUMNS = ("experiment", "nbar", "p", "f", "weighting",
                    "realization", "metric", "count", "failures", "median",
                    "q25", "q75")

QUARTER_LEVEL = 0.25  # robustness-condition reference line


class FigureError(ValueError):
    """Raised for schema problems or empty inputs; no file is written."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    in_path: str
    out_path: str
    log_x: bool = True  # applies to sample-count sweeps only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; "
                              f"choose from {KINDS}")


@dataclass
class SummaryTable:
    rows: list[dict] = field(default_factory=list)

    def filter(self, **kw) -> "SummaryTable":
        keep = [r for r in self.rows
                if all(r[k] == v for k, v in kw.items())]
        return SummaryTable(rows=keep)

    def unique(self, column: str) -> list:
        seen = []
        for r in self.rows:
            if r[column] not in seen:
                seen.append(r[column])
        return seen

    def series(self, x_column: str, **kw) -> tuple[list, list]:
        rows = self.filter(**kw).rows
        rows.sort(key=lambda r: r[x_column])
        return ([r[x_column] for r in rows], [r["median"] for r in rows])


def load_summary(path) -> SummaryTable:
    """Read and validate a summary CSV.

    Raises:
        FigureError: missing columns (all listed) or no data rows.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in names]
        if missing:
            raise FigureError(f"summary CSV is missing columns: "
                              f"{', '.join(missing)}")
        rows = []
        for rec in reader:
            rows.append({
                **rec,
                "nbar": int(rec["nbar"]),
                "p": int(rec["p"]),
                "f": int(rec["f"]),
                "count": int(rec["count"]),
                "failures": int(rec["failures"]),
                "median": float(rec["median"]),
                "q25": float(rec["q25"]),
                "q75": float(rec["q75"]),
            })
    if not rows:
        raise FigureError("summary CSV has no data rows")
    return SummaryTable(rows=rows)


def _style_axes(ax, spec: FigureSpec, xlabel: str, ylabel: str, title: str):
    if spec.log_x and xlabel != "past horizon p":
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)


def _render_sweetspot(table: SummaryTable, spec: FigureSpec, fig):
    data = table.filter(metric="pole_error")
    realizations = data.unique("realization")
    nbars = sorted(data.unique("nbar"))
    if not realizations or not nbars:
        raise FigureError("no pole_error rows for the sweet-spot figure")
    axes = fig.subplots(1, len(realizations), squeeze=False)[0]
    for ax, rk in zip(axes, realizations):
        for nbar in nbars:
            xs, ys = data.series("p", realization=rk, nbar=nbar)
            ax.plot(xs, ys, marker="o", label=f"samples {nbar}")
        _style_axes(ax, spec, "past horizon p", "median pole error",
                    f"{rk} realization")
        ax.legend()


def _render_kappa(table: SummaryTable, spec: FigureSpec, fig):
    data = table.filter(metric="kappa")
    weightings = data.unique("weighting")
    if not weightings:
        raise FigureError("no kappa rows for the robustness figure")
    ax = fig.subplots()
    # one curve per weighting; realization does not affect kappa, so any
    # single realization's rows are used
    realization = data.unique("realization")[0]
    for wk in weightings:
        xs, ys = data.series("nbar", weighting=wk, realization=realization)
        ax.plot(xs, ys, marker="o", label=wk)
    ax.axhline(QUARTER_LEVEL, color="k", linestyle="--", linewidth=1,
               label="1/4 threshold")
    _style_axes(ax, spec, "samples", "median robustness ratio",
                "robustness condition")
    ax.legend()


def _render_poles(table: SummaryTable, spec: FigureSpec, fig):
    data = table.filter(metric="pole_error")
    realizations = data.unique("realization")
    weightings = data.unique("weighting")
    if not realizations or not weightings:
        raise FigureError("no pole_error rows for the pole-error figure")
    axes = fig.subplots(1, len(realizations), squeeze=False)[0]
    for ax, rk in zip(axes, realizations):
        for wk in weightings:
            xs, ys = data.series("nbar", realization=rk, weighting=wk)
            ax.plot(xs, ys, marker="o", label=wk)
        _style_axes(ax, spec, "samples", "median pole error",
                    f"{rk} realization")
        ax.legend()


_RENDERERS = {
    "sweetspot": _render_sweetspot,
    "kappa": _render_kappa,
    "poles": _render_poles,
}


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path.

    The summary is validated before any drawing happens, so schema errors
    never leave a partial file behind.
    """
    table = load_summary(spec.in_path)
    fig = plt.figure(figsize=(9, 4), dpi=120)
    try:
        _RENDERERS[spec.kind](table, spec, fig)
        fig.savefig(spec.out_path, format="png",
                    metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.out_path
