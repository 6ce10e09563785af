"""Render sbpq CSV outputs as figures.

This package does no statistics of its own: every number it draws was
computed upstream and stored in a documented CSV schema.  Input problems
(missing file or column, empty data, zoom outside the data range) raise
ChartError before any output file is touched.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


class ChartError(Exception):
    """Bad chart inputs: missing file/column, empty data, bad zoom window."""


@dataclass(frozen=True)
class ChartSpec:
    """One render request: inputs, chart kind, optional zooms, output path."""

    kind: str                       # histogram-overlay | convergence | ranking
    csv_path: Path
    out_path: Path
    head_window: int | None = None  # histogram head zoom, in queue-length units
    tail_quantile: float = 0.9      # start of the tail zoom (reference mass)


def _read_csv(path: Path, required: list[str]) -> list[dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise ChartError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ChartError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ChartError(f"{path}: no data rows")
    return rows


def render(spec: ChartSpec) -> Path:
    """Draw one chart; returns the output path."""
    if spec.kind == "histogram-overlay":
        fig = _histogram_overlay(spec)
    elif spec.kind == "convergence":
        fig = _convergence(spec)
    elif spec.kind == "ranking":
        fig = _ranking(spec)
    else:
        raise ChartError(f"unknown chart kind {spec.kind!r}")
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _histogram_overlay(spec: ChartSpec):
    """Three panels: full support, head zoom, tail zoom.

    Input schema: hist_<class>.csv with columns value, probability,
    geom_reference (the matched geometric pmf; may be empty for classes
    without an analytic mean).
    """
    rows = _read_csv(spec.csv_path, ["value", "probability", "geom_reference"])
    values = [int(float(r["value"])) for r in rows]
    emp = [float(r["probability"]) for r in rows]
    has_ref = all(r["geom_reference"] not in ("", "nan") for r in rows)
    ref = [float(r["geom_reference"]) for r in rows] if has_ref else None

    # trim the trailing all-zero plateau so the panels focus on the support
    last = max((i for i, p in enumerate(emp) if p > 0), default=0)
    hi = min(len(values) - 1, int(last * 1.05) + 1)

    mass = 0.0
    tail_start = hi
    basis = ref if ref is not None else emp
    for i, p in enumerate(basis):
        mass += p
        if mass >= spec.tail_quantile:
            tail_start = i
            break
    if tail_start >= hi:
        tail_start = max(hi * 9 // 10, 1)
    head_end = spec.head_window if spec.head_window is not None \
        else max(10, hi // 10)
    if head_end > values[-1]:
        raise ChartError(
            f"head window {head_end} outside data range 0..{values[-1]}")

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    windows = [("overall", 0, hi), ("head", 0, head_end),
               ("tail", tail_start, hi)]
    for ax, (title, lo, up) in zip(axes, windows):
        sl = slice(lo, up + 1)
        if ref is not None:
            ax.bar(values[sl], ref[sl], width=1.0, color="tab:orange",
                   alpha=0.7, label="geometric reference")
        ax.plot(values[sl], emp[sl], color="tab:red", lw=1.2,
                label="empirical")
        ax.set_title(f"{title} [{lo}, {up}]")
        ax.set_xlabel("queue length")
        ax.set_ylabel("probability")
        if title == "tail":
            ax.set_yscale("log")
        ax.legend(fontsize=8)
    fig.suptitle(Path(spec.csv_path).stem)
    fig.tight_layout()
    return fig


def _convergence(spec: ChartSpec):
    """Simulated vs approximated means along a scale sweep.

    Input schema: a column `r` plus paired columns `sim_<label>` /
    `approx_<label>` (the demo sweep writes this layout).
    """
    rows = _read_csv(spec.csv_path, ["r"])
    header = rows[0].keys()
    labels = sorted(c[4:] for c in header if c.startswith("sim_"))
    if not labels:
        raise ChartError(f"{spec.csv_path}: no sim_<label> columns")
    r = [float(row["r"]) for row in rows]
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for lab in labels:
        sim = [float(row[f"sim_{lab}"]) for row in rows]
        ax.plot(r, sim, "o-", label=f"class {lab} simulated")
        if f"approx_{lab}" in header:
            approx = [float(row[f"approx_{lab}"]) for row in rows]
            ax.plot(r, approx, "s--", label=f"class {lab} approximation")
    ax.set_xlabel("scale parameter r")
    ax.set_ylabel("mean queue length")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.invert_xaxis()
    ax.legend(fontsize=8)
    ax.set_title("mean queue length along the scale family")
    fig.tight_layout()
    return fig


def _ranking(spec: ChartSpec):
    """Bar chart of per-policy estimates, ascending, tags skipped.

    Input schema: ranking.csv with columns policy, estimate_or_tag, group_id.
    """
    rows = _read_csv(spec.csv_path, ["policy", "estimate_or_tag", "group_id"])
    bars = []
    for row in rows:
        try:
            bars.append((row["policy"], float(row["estimate_or_tag"]),
                         row["group_id"]))
        except ValueError:
            continue                      # assumption-failure tag
    if not bars:
        raise ChartError(f"{spec.csv_path}: no numeric estimates to draw")
    bars.sort(key=lambda b: b[1])
    groups = sorted({b[2] for b in bars})
    cmap = plt.get_cmap("tab10")
    colors = {g: cmap(i % 10) for i, g in enumerate(groups)}
    fig, ax = plt.subplots(figsize=(max(6, 0.75 * len(bars)), 4.2))
    ax.bar(range(len(bars)), [b[1] for b in bars],
           color=[colors[b[2]] for b in bars])
    ax.set_xticks(range(len(bars)))
    ax.set_xticklabels([b[0] for b in bars], rotation=45, ha="right",
                       fontsize=7)
    ax.set_ylabel("cycle-time estimate")
    ax.set_title("policy ranking (color = degeneracy group)")
    lo = min(b[1] for b in bars)
    hi = max(b[1] for b in bars)
    ax.set_ylim(lo * 0.9, hi * 1.05)
    fig.tight_layout()
    return fig
