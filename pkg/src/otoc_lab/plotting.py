"""Static SVG figures rendered from the experiment CSV files."""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .qpd import NonclassicalitySeries, extract_timescales  # noqa: E402

PLOT_KINDS = ("otoc", "qpd", "nonclassicality", "ratio")

_RC = {
    "svg.hashsalt": "otoc-lab",
    "svg.fonttype": "path",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class PlotError(ValueError):
    pass


def read_table(csv_path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a CSV; empty cells become NaN."""
    try:
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise PlotError(f"cannot read {csv_path}: {exc.strerror}") from None
    if not rows:
        raise PlotError(f"{csv_path} is empty")
    header, body = rows[0], rows[1:]
    if not body:
        raise PlotError(f"{csv_path} has a header but no data rows")
    for lineno, row in enumerate(body, 2):
        if len(row) != len(header):
            raise PlotError(f"{csv_path}:{lineno}: {len(row)} cells for a {len(header)}-column header")
    try:
        data = np.array([[float(x) if x != "" else np.nan for x in row] for row in body])
    except ValueError as exc:
        raise PlotError(f"{csv_path}: non-numeric cell ({exc})") from None
    return header, data


def _column(header, data, name, path):
    try:
        return data[:, header.index(name)]
    except ValueError:
        raise PlotError(f"{path}: missing column {name!r}") from None


def _plot_otoc(ax, header, data, path):
    t = _column(header, data, "t_us", path)
    names = [h[len("re_F_"):] for h in header if h.startswith("re_F_")]
    if not names:
        raise PlotError(f"{path}: no re_F_* columns")
    for name in names:
        ax.plot(t, _column(header, data, f"re_F_{name}", path), label=name, gid=f"curve-{name}", lw=1)
    ax.set_xlabel("t (μs)")
    ax.set_ylabel("Re F(t)")
    ax.legend(loc="best", fontsize=8)


def _plot_qpd(ax, header, data, path):
    t = _column(header, data, "t_us", path)
    labels = [h[len("re_p_"):] for h in header if h.startswith("re_p_")]
    if len(labels) != 16:
        raise PlotError(f"{path}: expected 16 re_p_* columns, found {len(labels)}")
    re = np.column_stack([_column(header, data, f"re_p_{lab}", path) for lab in labels])
    lo, hi = min(-0.05, np.nanmin(re)), max(1.05, np.nanmax(re))
    ax.axhspan(lo, 0, color="0.85", gid="nonclassical-below", zorder=0)
    ax.axhspan(1, hi, color="0.85", gid="nonclassical-above", zorder=0)
    for k, lab in enumerate(labels):
        ax.plot(t, re[:, k], lw=0.8, label=lab, gid=f"curve-{lab}")
    ax.set_ylim(lo, hi)
    ax.set_xlabel("t (μs)")
    ax.set_ylabel("Re p(v1, w2, v2, w3)")
    ax.legend(loc="upper right", fontsize=6, ncol=4)


def _plot_nonclassicality(ax, header, data, path):
    t = _column(header, data, "t_us", path)
    n = _column(header, data, "n_tilde", path)
    ax.plot(t, n, lw=1, color="k", gid="curve-n_tilde")
    if len(t) > 1:
        report = extract_timescales(NonclassicalitySeries(t, n))
        if report.t_m is not None and report.t_z is not None:
            ax.axvspan(report.t_m, report.t_z, color="tab:orange", alpha=0.3, gid="tm-tz-band")
    ax.set_xlabel("t (μs)")
    ax.set_ylabel("total nonclassicality")


def _plot_ratio(ax, header, data, path):
    h = _column(header, data, "h_over_j", path)
    ratio = _column(header, data, "ratio", path)
    ok = np.isfinite(ratio) & (ratio > 0)
    ax.plot(h[ok], ratio[ok], "o-", gid="curve-ratio")
    if ok.any():
        ax.set_yscale("log")
    ax.set_xlabel("h/J")
    ax.set_ylabel("(t_z - t_m)/(t_m - t_star)")


_DRAW = {
    "otoc": _plot_otoc,
    "qpd": _plot_qpd,
    "nonclassicality": _plot_nonclassicality,
    "ratio": _plot_ratio,
}


def emit_plot(csv_path, kind: str, svg_path=None) -> Path:
    """Render ``csv_path`` as an SVG next to it (or at ``svg_path``); nothing is written on error."""
    if kind not in _DRAW:
        raise PlotError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")
    csv_path = Path(csv_path)
    header, data = read_table(csv_path)
    svg_path = Path(svg_path) if svg_path is not None else csv_path.with_suffix(".svg")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        try:
            _DRAW[kind](ax, header, data, csv_path)
            fig.tight_layout()
            fig.savefig(svg_path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return svg_path
