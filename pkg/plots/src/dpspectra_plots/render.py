"""Render harness CSVs into line plots and grouped boxplots.

A figure spec is a small JSON document:

    {
      "input": "results/S1a_summary.csv",   # CSV path, relative to the CWD
      "kind": "line",                       # "line" (summary CSV) or "box" (results CSV)
      "x": "param_value",
      "group": "method",
      "metric": "subspace_fro",
      "logx": true, "logy": true,
      "title": "...", "xlabel": "n",
      "out": "figures/out/S1a.png"
    }

Line plots read the summary schema (mean with sd error bars); boxplots read
the raw results schema (one box per group and x from the replication
values).  The renderer keeps every selected cell as the exact string read
from the CSV; the debug dump re-emits those strings so a dump can be diffed
bit-for-bit against the input.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

RESULTS_COLUMNS = ["setting", "method", "param_name", "param_value", "rep", "seed", "metric", "value", "ms"]
SUMMARY_COLUMNS = ["setting", "method", "param_name", "param_value", "metric", "count", "mean", "sd", "se", "q1", "median", "q3"]


class FigureSpecError(ValueError):
    """Raised for malformed specs, schema mismatches or empty selections."""


@dataclass(frozen=True)
class FigureSpec:
    input: str
    kind: str  # "line" or "box"
    metric: str
    out: str
    x: str = "param_value"
    group: str = "method"
    logx: bool = False
    logy: bool = False
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in ("line", "box"):
            raise FigureSpecError(f"kind must be 'line' or 'box', got {self.kind!r}")

    @classmethod
    def load(cls, path) -> "FigureSpec":
        doc = json.loads(Path(path).read_text())
        unknown = set(doc) - {f.name for f in _spec_fields()}
        if unknown:
            raise FigureSpecError(f"unknown spec keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise FigureSpecError(f"bad figure spec {path}: {exc}") from None


def _spec_fields():
    import dataclasses

    return dataclasses.fields(FigureSpec)


def _read_csv(path) -> tuple[list[str], list[dict]]:
    path = Path(path)
    if not path.exists():
        raise FigureSpecError(f"input CSV {path} does not exist")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureSpecError(f"input CSV {path} is empty") from None
        rows = [dict(zip(header, line)) for line in reader if line]
    if not rows:
        raise FigureSpecError(f"input CSV {path} has a header but no data rows")
    return header, rows


@dataclass
class PlottedSeries:
    """The exact strings that went into the figure, per group."""

    kind: str
    columns: list[str]
    rows: list[list[str]] = field(default_factory=list)

    def dump(self, path) -> None:
        lines = [",".join(self.columns)]
        lines += [",".join(r) for r in self.rows]
        Path(path).write_text("\n".join(lines) + "\n")


def _select(spec: FigureSpec, header: list[str], rows: list[dict], needed: list[str]) -> list[dict]:
    for col in needed:
        if col not in header:
            raise FigureSpecError(
                f"column {col!r} missing from {spec.input} (found {header})"
            )
    picked = [r for r in rows if r["metric"] == spec.metric]
    if not picked:
        raise FigureSpecError(f"no rows with metric {spec.metric!r} in {spec.input}")
    return picked


def render(spec: FigureSpec, out_override: str | None = None) -> PlottedSeries:
    """Render one figure; returns the plotted series for the debug dump."""
    header, rows = _read_csv(spec.input)
    out = Path(out_override or spec.out)

    if spec.kind == "line":
        needed = [spec.group, spec.x, "metric", "mean", "sd"]
        picked = _select(spec, header, rows, needed)
        series = PlottedSeries(kind="line", columns=[spec.group, spec.x, "mean", "sd"])
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        groups = _ordered_groups(picked, spec.group)
        for g in groups:
            block = [r for r in picked if r[spec.group] == g]
            block.sort(key=lambda r: float(r[spec.x]))
            xs = [float(r[spec.x]) for r in block]
            ys = [float(r["mean"]) for r in block]
            es = [float(r["sd"]) for r in block]
            ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=g)
            series.rows += [[r[spec.group], r[spec.x], r["mean"], r["sd"]] for r in block]
        ax.legend()
    else:
        needed = [spec.group, spec.x, "metric", "value"]
        picked = _select(spec, header, rows, needed)
        series = PlottedSeries(kind="box", columns=[spec.group, spec.x, "value"])
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        groups = _ordered_groups(picked, spec.group)
        xs = sorted({float(r[spec.x]) for r in picked})
        width = 0.8 / len(groups)
        for gi, g in enumerate(groups):
            data, positions = [], []
            for xi, x in enumerate(xs):
                vals = [
                    r for r in picked
                    if r[spec.group] == g and float(r[spec.x]) == x
                ]
                if not vals:
                    continue
                data.append([float(r["value"]) for r in vals])
                positions.append(xi + (gi - (len(groups) - 1) / 2) * width)
                series.rows += [[r[spec.group], r[spec.x], r["value"]] for r in vals]
            if data:
                box = ax.boxplot(data, positions=positions, widths=width * 0.9, patch_artist=True)
                color = f"C{gi}"
                for patch in box["boxes"]:
                    patch.set_facecolor(color)
                ax.plot([], [], color=color, label=g)
        ax.set_xticks(range(len(xs)))
        ax.set_xticklabels([_tick_label(x) for x in xs])
        ax.legend()

    if spec.logx and spec.kind == "line":
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    ax.set_title(spec.title or f"{spec.metric} ({spec.input})")
    ax.set_xlabel(spec.xlabel or spec.x)
    ax.set_ylabel(spec.ylabel or spec.metric)
    fig.tight_layout()
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return series


def _ordered_groups(rows: list[dict], key: str) -> list[str]:
    seen = []
    for r in rows:
        if r[key] not in seen:
            seen.append(r[key])
    return seen


def _tick_label(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:g}"
