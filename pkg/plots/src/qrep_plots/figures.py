"""Figure construction from the documented sweep CSV dialects.

Each figure kind corresponds to one CSV table produced by the simulation CLI.
The reader is strict about the columns it needs and indifferent to any extras,
so the tables can grow without breaking older plot scripts.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

#: required columns and their types, keyed by figure kind
_TABLE_COLUMNS: Mapping[str, Mapping[str, type]] = {
    "fidelity": {"epsilon_l": float, "strategy": str, "fidelity": float},
    "brightness": {
        "regime": str,
        "d_km": float,
        "q": float,
        "lambda": float,
        "r_key": float,
    },
    "partition": {"n_temp": int, "n_freq": int, "d_km": float, "r_key": float},
    "keyrate": {
        "arch": str,
        "hops": int,
        "regime": str,
        "d_km": float,
        "r_rep": float,
        "fidelity": float,
        "r_key": float,
    },
    "edr": {
        "arch": str,
        "hops": int,
        "regime": str,
        "d_km": float,
        "r_rep": float,
        "fidelity": float,
        "r_edr": float,
    },
}

FIGURE_KINDS = tuple(_TABLE_COLUMNS)

#: architecture encoding pinned by the figure convention
ARCH_STYLES = {"atom": "--", "hybrid": "-"}

_HOP_MARKERS = {0: "o", 1: "s", 2: "^"}

_IMAGE_SUFFIXES = (".png", ".svg")


class PlotDataError(Exception):
    """A CSV input that cannot be turned into the requested figure."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: which table, which kind, where the image goes."""

    csv_path: str
    kind: str
    out_path: str

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; known: {', '.join(FIGURE_KINDS)}"
            )
        suffix = os.path.splitext(self.out_path)[1].lower()
        if suffix not in _IMAGE_SUFFIXES:
            raise ValueError(
                f"output must be one of {', '.join(_IMAGE_SUFFIXES)}, got {suffix!r}"
            )


def read_table(csv_path: str, kind: str) -> list[dict[str, Any]]:
    """Parse one sweep CSV, typed per the documented dialect for ``kind``.

    Raises
    ------
    PlotDataError
        If the file is missing, lacks any required column (named in the
        message), has no data rows, or holds an unparseable value.
    """
    columns = _TABLE_COLUMNS[kind]
    try:
        with open(csv_path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            if header is None:
                raise PlotDataError(f"{csv_path} is empty; expected a header row")
            missing = [name for name in columns if name not in header]
            if missing:
                raise PlotDataError(
                    f"{csv_path} is missing column(s) {', '.join(missing)} "
                    f"required for a {kind} figure"
                )
            rows = []
            for line_no, raw in enumerate(reader, start=2):
                row = {}
                for name, convert in columns.items():
                    try:
                        row[name] = convert(raw[name])
                    except (TypeError, ValueError) as exc:
                        raise PlotDataError(
                            f"{csv_path} line {line_no}: column {name} has "
                            f"unparseable value {raw[name]!r}"
                        ) from exc
                rows.append(row)
    except OSError as exc:
        raise PlotDataError(f"cannot read {csv_path}: {exc}") from exc
    if not rows:
        raise PlotDataError(f"{csv_path} has no data rows")
    return rows


def _grouped(rows: Sequence[dict], key_fields: Sequence[str]) -> dict[tuple, list[dict]]:
    """Group rows by a key tuple, preserving first-appearance order."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[f] for f in key_fields), []).append(row)
    return groups


def _arch_style(arch: str) -> str:
    try:
        return ARCH_STYLES[arch]
    except KeyError:
        known = ", ".join(ARCH_STYLES)
        raise PlotDataError(f"unknown architecture {arch!r}; known: {known}") from None


def _fidelity_figure(rows: Sequence[dict]) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.0, 4.2), layout="constrained")
    for (strategy,), points in _grouped(rows, ("strategy",)).items():
        points = sorted(points, key=lambda r: r["epsilon_l"])
        ax.plot(
            [p["epsilon_l"] for p in points],
            [p["fidelity"] for p in points],
            marker=".",
            label=strategy,
        )
    ax.set_xlabel("local loss")
    ax.set_ylabel("fidelity")
    ax.grid(alpha=0.3)
    ax.legend(fontsize="small")
    return fig


def _brightness_figure(rows: Sequence[dict]) -> plt.Figure:
    groups = _grouped(rows, ("regime", "d_km"))
    n = len(groups)
    ncols = min(3, n)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(
        nrows,
        ncols,
        figsize=(4.0 * ncols, 3.4 * nrows),
        layout="constrained",
        squeeze=False,
    )
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    for ax, ((regime, d_km), points) in zip(axes.flat, groups.items()):
        q_values = sorted({p["q"] for p in points})
        lam_values = sorted({p["lambda"] for p in points})
        q_index = {v: i for i, v in enumerate(q_values)}
        lam_index = {v: i for i, v in enumerate(lam_values)}
        grid = np.full((len(lam_values), len(q_values)), np.nan)
        for p in points:
            grid[lam_index[p["lambda"]], q_index[p["q"]]] = p["r_key"]
        mesh = ax.pcolormesh(q_values, lam_values, grid, shading="nearest")
        fig.colorbar(mesh, ax=ax, label="key rate [1/s]")
        ax.set_xlabel("emitter brightness q")
        ax.set_ylabel("source brightness")
        ax.set_title(f"{regime}, {d_km:g} km", fontsize="medium")
    return fig


def _masked_log_plot(ax, x, y, **plot_kwargs) -> bool:
    """Plot only the positive-rate points; returns whether anything was drawn."""
    pairs = [(xi, yi) for xi, yi in zip(x, y) if yi > 0.0]
    if not pairs:
        return False
    ax.plot([p[0] for p in pairs], [p[1] for p in pairs], **plot_kwargs)
    return True


def _partition_figure(rows: Sequence[dict]) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.0, 4.2), layout="constrained")
    drew = False
    for (d_km,), points in _grouped(rows, ("d_km",)).items():
        points = sorted(points, key=lambda r: r["n_temp"])
        drew |= _masked_log_plot(
            ax,
            [p["n_temp"] for p in points],
            [p["r_key"] for p in points],
            marker="o",
            label=f"{d_km:g} km",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("temporal modes")
    ax.set_ylabel("key rate [1/s]")
    ax.grid(alpha=0.3, which="both")
    if drew:
        ax.legend(fontsize="small")
    else:
        ax.text(0.5, 0.5, "all rates are zero", ha="center", transform=ax.transAxes)
    return fig


def _rate_figure(rows: Sequence[dict], rate_column: str) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.0, 4.2), layout="constrained")
    drew = False
    for (arch, hops, regime), points in _grouped(
        rows, ("arch", "hops", "regime")
    ).items():
        style = _arch_style(arch)
        points = sorted(points, key=lambda r: r["d_km"])
        drew |= _masked_log_plot(
            ax,
            [p["d_km"] for p in points],
            [p[rate_column] for p in points],
            linestyle=style,
            marker=_HOP_MARKERS.get(hops),
            markersize=4,
            label=f"{arch}, {hops} hops, {regime}",
        )
    ax.set_yscale("log")
    ax.set_xlabel("end-to-end distance [km]")
    ax.set_ylabel("secret-key rate [1/s]" if rate_column == "r_key" else "distribution rate [1/s]")
    ax.grid(alpha=0.3, which="both")
    if drew:
        ax.legend(fontsize="small")
    else:
        ax.text(0.5, 0.5, "all rates are zero", ha="center", transform=ax.transAxes)
    return fig


def build_figure(spec: FigureSpec) -> plt.Figure:
    """Read the CSV behind ``spec`` and build its figure in memory."""
    rows = read_table(spec.csv_path, spec.kind)
    if spec.kind == "fidelity":
        return _fidelity_figure(rows)
    if spec.kind == "brightness":
        return _brightness_figure(rows)
    if spec.kind == "partition":
        return _partition_figure(rows)
    rate_column = "r_key" if spec.kind == "keyrate" else "r_edr"
    return _rate_figure(rows, rate_column)


def render(spec: FigureSpec) -> str:
    """Build the figure and write the image file; returns the output path."""
    fig = build_figure(spec)
    try:
        out_dir = os.path.dirname(spec.out_path)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        fig.savefig(spec.out_path)
    finally:
        plt.close(fig)
    return spec.out_path
