"""Render experiment sweep CSVs into the standard mutual-information figures.

Three figure kinds, keyed to the sweep CSV schemas:

* fig2 -- per-particle and per-second MI against the horizon T, one curve
  per labeling (unique labels j=1, pair labels j=2), log-scaled T axis;
* fig3 -- bits per second against the release probability p, one curve per
  interval width tau;
* fig4 -- bits per particle against p, one curve per tau.

Every curve carries error bars at +/-2 standard errors: the values are
Monte-Carlo estimates and are not drawn without their uncertainty.  Output is
a vector image (SVG or PDF, by extension).  Rendering embeds no timestamp by
default, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["FigureSpec", "RenderError", "REQUIRED_COLUMNS", "render", "main"]

REQUIRED_COLUMNS = {
    "fig2": ("T",
             "bits_per_particle_j1", "bits_per_particle_per_second_j1",
             "bits_per_particle_j2", "bits_per_particle_per_second_j2",
             "std_error_j1", "std_error_per_second_j1",
             "std_error_j2", "std_error_per_second_j2"),
    "fig3": ("tau", "p", "bits_per_second", "std_error_per_second"),
    "fig4": ("tau", "p", "bits_per_particle", "std_error_per_particle"),
}

_DEFAULT_XSCALE = {"fig2": "log", "fig3": "linear", "fig4": "linear"}


class RenderError(Exception):
    """Input or output problem; the message names the offending piece."""


@dataclass(frozen=True)
class FigureSpec:
    """What to read, which figure to draw, and where to write it."""

    csv_path: str
    kind: str
    out_path: str
    xscale: str | None = None   # None: kind-appropriate default
    yscale: str = "linear"
    embed_timestamp: bool = False

    def __post_init__(self) -> None:
        if self.kind not in REQUIRED_COLUMNS:
            raise RenderError(
                f"unknown figure kind {self.kind!r}; "
                f"expected one of {sorted(REQUIRED_COLUMNS)}")
        for name, scale in (("xscale", self.xscale), ("yscale", self.yscale)):
            if scale is not None and scale not in ("log", "linear"):
                raise RenderError(f"{name} must be 'log' or 'linear', "
                                  f"got {scale!r}")

    @property
    def effective_xscale(self) -> str:
        return self.xscale or _DEFAULT_XSCALE[self.kind]


def load_table(csv_path: str, kind: str) -> dict:
    """Parse the CSV and check it carries every column the figure needs."""
    try:
        with open(csv_path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise RenderError(f"empty CSV {csv_path!r}: no header row")
            rows = [row for row in reader if row]
    except OSError as exc:
        raise RenderError(f"cannot read CSV {csv_path!r}: {exc}") from exc
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
    if missing:
        raise RenderError(
            f"CSV {csv_path!r} is missing column(s) {', '.join(missing)} "
            f"required for {kind}")
    if not rows:
        raise RenderError(f"empty CSV {csv_path!r}: header but no data rows")
    index = {c: header.index(c) for c in REQUIRED_COLUMNS[kind]}
    table = {}
    for col, i in index.items():
        try:
            table[col] = np.array([float(row[i]) for row in rows])
        except (ValueError, IndexError) as exc:
            raise RenderError(
                f"CSV {csv_path!r}: column {col!r} has a non-numeric or "
                f"missing entry ({exc})") from exc
    return table


def _draw_fig2(ax, table) -> None:
    T = table["T"]
    series = (
        ("bits_per_particle_j1", "std_error_j1", "per particle, unique labels"),
        ("bits_per_particle_j2", "std_error_j2", "per particle, pair labels"),
        ("bits_per_particle_per_second_j1", "std_error_per_second_j1",
         "per particle per second, unique labels"),
        ("bits_per_particle_per_second_j2", "std_error_per_second_j2",
         "per particle per second, pair labels"),
    )
    for value_col, err_col, label in series:
        ax.errorbar(T, table[value_col], yerr=2.0 * table[err_col],
                    marker="o", markersize=3, capsize=2, label=label)
    ax.set_xlabel("horizon T (seconds)")
    ax.set_ylabel("mutual information (bits)")
    ax.set_title("Rate-unlimited labeled channel")


def _draw_by_tau(ax, table, value_col, err_col, ylabel, title) -> None:
    taus = np.unique(table["tau"])
    for tau in taus:
        mask = table["tau"] == tau
        order = np.argsort(table["p"][mask])
        ax.errorbar(table["p"][mask][order], table[value_col][mask][order],
                    yerr=2.0 * table[err_col][mask][order],
                    marker="o", markersize=3, capsize=2,
                    label=f"tau = {tau:g}")
    ax.set_xlabel("release probability p")
    ax.set_ylabel(ylabel)
    ax.set_title(title)


def render(spec: FigureSpec) -> None:
    """Read the CSV, draw the requested figure, and write the vector image."""
    table = load_table(spec.csv_path, spec.kind)
    plt.rcParams["svg.hashsalt"] = "figrender"
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        if spec.kind == "fig2":
            _draw_fig2(ax, table)
        elif spec.kind == "fig3":
            _draw_by_tau(ax, table, "bits_per_second", "std_error_per_second",
                         "mutual information (bits/second)",
                         "Discrete-channel lower bound per second")
        else:
            _draw_by_tau(ax, table, "bits_per_particle",
                         "std_error_per_particle",
                         "mutual information (bits/particle)",
                         "Discrete-channel lower bound per particle")
        ax.set_xscale(spec.effective_xscale)
        ax.set_yscale(spec.yscale)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        metadata = None if spec.embed_timestamp else {"Date": None}
        try:
            fig.savefig(spec.out_path, metadata=metadata)
        except OSError as exc:
            raise RenderError(
                f"cannot write image {spec.out_path!r}: {exc}") from exc
    finally:
        plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a sweep CSV into one of the standard MI figures.")
    parser.add_argument("--kind", required=True,
                        choices=sorted(REQUIRED_COLUMNS),
                        help="which figure layout to draw")
    parser.add_argument("--in", dest="csv_path", required=True,
                        help="input sweep CSV")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image path (.svg or .pdf)")
    parser.add_argument("--xscale", choices=("log", "linear"), default=None)
    parser.add_argument("--yscale", choices=("log", "linear"),
                        default="linear")
    parser.add_argument("--embed-timestamp", action="store_true",
                        help="embed the creation date in the image metadata")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(csv_path=args.csv_path, kind=args.kind,
                          out_path=args.out_path, xscale=args.xscale,
                          yscale=args.yscale,
                          embed_timestamp=args.embed_timestamp))
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
