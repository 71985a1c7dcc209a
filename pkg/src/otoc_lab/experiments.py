"""
Experiment orchestration and the CSV/manifest file formats.

Every grid point runs its own folded protocol, so points can be fanned out
to worker processes; rows are always aggregated in grid order and written
by this process alone.
"""

import csv
import json
import os
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .dynamics import FoldedEvolver
from .operators import hermitian_eigendecompose
from .parallel import ordered_map
from .protocols import ProtocolKind, ideal_otoc, protocol_otoc
from .qpd import (
    QPD_LABELS,
    QpdTask,
    SweepCell,
    extract_timescales,
    initial_state,
    make_grid,
    NonclassicalitySeries,
    total_nonclassicality,
    QPD,
)
from .spin_model import SpinChainParams, build_hamiltonian, build_noise_model, butterfly_operators

TIMESCALE_COLUMNS = (
    "h_over_j",
    "t_star_us",
    "t_m_us",
    "t_z_us",
    "ratio",
    "censored_star",
    "censored_m",
    "censored_z",
)


def fmt(x) -> str:
    """Shortest round-trip decimal for a float; empty cell for None."""
    if x is None:
        return ""
    return repr(float(x))


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def otoc_header(protocols) -> list[str]:
    header = ["t_us"]
    for p in protocols:
        header += [f"re_F_{p}", f"im_F_{p}"]
    return header


def qpd_header() -> list[str]:
    header = ["t_us"]
    for label in QPD_LABELS:
        header += [f"re_p_{label}", f"im_p_{label}"]
    return header


def timescale_row(report) -> list[str]:
    return [
        fmt(report.h_over_j),
        fmt(report.t_star),
        fmt(report.t_m),
        fmt(report.t_z),
        fmt(report.ratio),
        str(int(report.censored_star)),
        str(int(report.censored_m)),
        str(int(report.censored_z)),
    ]


class _Setup:
    """Hamiltonian, operators, state and noise derived from a RunConfig."""

    def __init__(self, cfg: RunConfig, h_over_j: float | None = None):
        self.params = SpinChainParams(
            cfg.n_qubits, cfg.h_over_j if h_over_j is None else h_over_j, cfg.g_over_j, cfg.j_coupling
        )
        self.H = build_hamiltonian(self.params)
        self.eig = hermitian_eigendecompose(self.H)
        self.w, self.v = butterfly_operators(self.params)
        self.rho = initial_state(self.H, self.params, cfg.temperature_over_j)
        self.noise = build_noise_model(cfg.t2_star_us, cfg.n_qubits) if cfg.t2_star_us is not None else None


class OtocTask:
    """All selected protocols at one time point; picklable for worker processes."""

    def __init__(self, setup: _Setup, protocols, dt: float, method: str):
        self.setup = setup
        self.protocols = tuple(protocols)
        self.dt = dt
        self.method = method
        self._evolver = None

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_evolver"] = None
        return state

    def __call__(self, t: float) -> list[complex]:
        s = self.setup
        if self._evolver is None:
            self._evolver = FoldedEvolver(s.eig, s.noise, self.dt, self.method)
        out = []
        for p in self.protocols:
            if p == ProtocolKind.IDEAL.value:
                out.append(ideal_otoc(s.eig, s.w, s.v, s.rho, t))
            else:
                out.append(protocol_otoc(p, s.w, s.v, s.rho, s.eig, t, evolver=self._evolver).value)
        return out


def run_otoc(cfg: RunConfig, out_dir: Path) -> list[Path]:
    setup = _Setup(cfg)
    grid = make_grid(cfg.t_max_us, cfg.dt_grid_us)
    task = OtocTask(setup, cfg.protocols, cfg.dt_integration_us, cfg.method)
    values = ordered_map(task, [float(t) for t in grid], cfg.worker_count)
    rows = []
    for t, vals in zip(grid, values):
        row = [fmt(t)]
        for z in vals:
            row += [fmt(z.real), fmt(z.imag)]
        rows.append(row)
    return [write_csv(out_dir / "otoc.csv", otoc_header(cfg.protocols), rows)]


def _qpd_grid(cfg: RunConfig):
    setup = _Setup(cfg)
    grid = make_grid(cfg.t_max_us, cfg.dt_grid_us)
    task = QpdTask(setup.rho, setup.w, setup.v, setup.eig, setup.noise, cfg.dt_integration_us, cfg.method)
    values = ordered_map(task, [float(t) for t in grid], cfg.worker_count)
    return grid, [QPD(v, float(t), setup.noise is not None) for t, v in zip(grid, values)]


def run_qpd(cfg: RunConfig, out_dir: Path) -> list[Path]:
    grid, qpds = _qpd_grid(cfg)
    rows = []
    for t, q in zip(grid, qpds):
        row = [fmt(t)]
        for z in q.values:
            row += [fmt(z.real), fmt(z.imag)]
        rows.append(row)
    return [write_csv(out_dir / "qpd.csv", qpd_header(), rows)]


def run_nonclassicality(cfg: RunConfig, out_dir: Path) -> list[Path]:
    grid, qpds = _qpd_grid(cfg)
    series = NonclassicalitySeries(grid, np.array([total_nonclassicality(q) for q in qpds]))
    report = extract_timescales(series, h_over_j=cfg.h_over_j)
    rows = [[fmt(t), fmt(n)] for t, n in zip(series.times, series.values)]
    return [
        write_csv(out_dir / "nonclassicality.csv", ["t_us", "n_tilde"], rows),
        write_csv(out_dir / "timescales.csv", TIMESCALE_COLUMNS, [timescale_row(report)]),
    ]


def sweep_values(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.sweep_h_min, cfg.sweep_h_max, cfg.sweep_points)


def run_sweep(cfg: RunConfig, out_dir: Path) -> list[Path]:
    grid = tuple(float(t) for t in make_grid(cfg.t_max_us, cfg.dt_grid_us))
    cells = [
        SweepCell(
            SpinChainParams(cfg.n_qubits, float(h), cfg.g_over_j, cfg.j_coupling),
            cfg.t2_star_us,
            cfg.temperature_over_j,
            grid,
            cfg.dt_integration_us,
            cfg.method,
        )
        for h in sweep_values(cfg)
    ]
    results = ordered_map(_run_cell, cells, cfg.worker_count)
    rows = [timescale_row(report) for report, _ in results]
    return [write_csv(out_dir / "timescales.csv", TIMESCALE_COLUMNS, rows)]


def _run_cell(cell):
    return cell.run()


RUNNERS = {
    "otoc": run_otoc,
    "qpd": run_qpd,
    "nonclassicality": run_nonclassicality,
    "sweep": run_sweep,
}

PLOT_KIND = {
    "otoc.csv": "otoc",
    "qpd.csv": "qpd",
    "nonclassicality.csv": "nonclassicality",
    "timescales.csv": "ratio",
}


def write_manifest(cfg: RunConfig, out_dir: Path, files) -> Path:
    manifest = {
        "package": "otoc_lab",
        "version": __version__,
        "numpy_version": np.__version__,
        "config": cfg.to_manifest(),
        "files": sorted(Path(f).name for f in files),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_experiment(cfg: RunConfig) -> list[Path]:
    """Run the configured experiment; returns the written files (data, figures, manifest).

    Raises OSError if the output directory cannot be created or written.
    """
    cfg = cfg.resolved()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"output directory {out_dir} is not writable")
    files = RUNNERS[cfg.experiment](cfg, out_dir)
    if cfg.plot:
        from .plotting import emit_plot

        figures = []
        for f in files:
            kind = PLOT_KIND[f.name]
            # a single-row timescale table has nothing to plot against h/J
            if kind == "ratio" and cfg.experiment != "sweep":
                continue
            figures.append(emit_plot(f, kind))
        files = files + figures
    files.append(write_manifest(cfg, out_dir, files))
    return files
