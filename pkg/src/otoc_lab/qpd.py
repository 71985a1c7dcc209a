"""
Coarse-grained Kirkwood-Dirac quasiprobabilities behind the OTOC.

The 16 values are indexed by ``(v1, w2, v2, w3)`` in {+1, -1}^4 and ordered by
the binary label ``abcd`` with ``v1 = (-1)**a`` etc., i.e. 0000 ... 1111.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .dynamics import DEFAULT_DT_US, FoldedEvolver
from .operators import EigenDecomposition, eigen_projector, hermitian_eigendecompose
from .parallel import ordered_map
from .protocols import heisenberg
from .spin_model import (
    SpinChainParams,
    build_hamiltonian,
    build_noise_model,
    butterfly_operators,
    gibbs_state,
    infinite_temperature_state,
)
from .tolerances import TOL

QPD_LABELS = tuple("".join(bits) for bits in product("01", repeat=4))
QPD_KEYS = tuple(tuple(1 - 2 * int(b) for b in label) for label in QPD_LABELS)
_SIGNS = (1, -1)


@dataclass(frozen=True, eq=False)
class QPD:
    """Quasiprobabilities p(v1, w2, v2, w3) at time ``t`` as a length-16 array in label order."""

    values: np.ndarray
    t: float = 0.0
    decoherent: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if vals.shape != (16,):
            raise ValueError(f"a QPD has 16 entries, got {vals.shape[0]}")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, key) -> complex:
        if isinstance(key, str):
            return complex(self.values[QPD_LABELS.index(key)])
        return complex(self.values[QPD_KEYS.index(tuple(key))])

    def as_dict(self) -> dict:
        return {k: complex(x) for k, x in zip(QPD_KEYS, self.values)}

    @property
    def total(self) -> complex:
        return complex(self.values.sum())


def _projectors(w, v):
    return (
        np.stack([eigen_projector(w, s) for s in _SIGNS]),
        np.stack([eigen_projector(v, s) for s in _SIGNS]),
    )


def _qpd_values(rho, w, v, ev: FoldedEvolver, t: float) -> np.ndarray:
    pw, pv = _projectors(w, v)
    # carried matrices branch 2 -> 4 -> 8 over (v1), (v1, w2), (v1, w2, v2)
    m = pv @ rho
    m = ev.leg(m, t, (1,))
    m = pw[None] @ m[:, None]
    m = ev.leg(m, t, (-1,))
    m = pv[None, None] @ m[:, :, None]
    m = ev.leg(m, t, (1,))
    vals = np.einsum("wij,abcji->abcw", pw, m)
    return vals.reshape(16)


def compute_qpd(
    rho: np.ndarray,
    w: np.ndarray,
    v: np.ndarray,
    eig: EigenDecomposition,
    t: float,
    noise=None,
    dt: float = DEFAULT_DT_US,
    evolver: FoldedEvolver | None = None,
) -> QPD:
    """QPD from the weak-measurement protocol with projector insertions.

    The four projector branches share their common prefixes, so the 16
    traces cost 2 + 4 + 8 carried-matrix legs per time point.
    """
    ev = evolver if evolver is not None else FoldedEvolver(eig, noise, dt)
    return QPD(_qpd_values(rho, w, v, ev, t), t, ev.decoherent)


def direct_qpd(rho: np.ndarray, w: np.ndarray, v: np.ndarray, eig: EigenDecomposition, t: float) -> QPD:
    """Closed-system QPD from Heisenberg-evolved W projectors and an explicit 5-factor trace."""
    pw, pv = _projectors(w, v)
    pwt = [heisenberg(p, eig, t) for p in pw]
    vals = []
    for a, b, c, d in product(range(2), repeat=4):
        vals.append(np.trace(pwt[d] @ pv[c] @ pwt[b] @ pv[a] @ rho))
    return QPD(np.array(vals), t, False)


def otoc_from_qpd(qpd: QPD) -> complex:
    """F = sum v1 w2 v2* w3* p(v1, w2, v2, w3)."""
    signs = np.array([np.prod(k) for k in QPD_KEYS])
    return complex(np.sum(signs * qpd.values))


def total_nonclassicality(qpd: QPD) -> float:
    """sum |p| - 1, not clipped at zero."""
    return float(np.sum(np.abs(qpd.values)) - 1.0)


@dataclass(frozen=True, eq=False)
class NonclassicalitySeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self) -> float:
        return grid_spacing(self.times)

    def integrated(self) -> float:
        """Trapezoid-rule area under the series."""
        if len(self.times) < 2:
            return 0.0
        return float(np.trapezoid(self.values, self.times))


def grid_spacing(times: Sequence[float]) -> float:
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("need at least two grid points to define a spacing")
    steps = np.diff(times)
    dt = steps.mean()
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(times[-1])):
        raise ValueError("time grid must be ascending with uniform spacing")
    return float(dt)


def make_grid(t_max: float, spacing: float) -> np.ndarray:
    """0, spacing, ..., t_max with exact multiples of ``spacing``."""
    n = int(round(t_max / spacing))
    if abs(n * spacing - t_max) > 1e-9:
        raise ValueError(f"t_max {t_max} is not a multiple of the grid spacing {spacing}")
    return np.round(np.arange(n + 1) * spacing, 12)


class QpdTask:
    """Picklable per-time-point QPD evaluation; builds its evolver lazily in each process."""

    def __init__(self, rho, w, v, eig, noise=None, dt=DEFAULT_DT_US, method="spectral"):
        self.rho, self.w, self.v, self.eig = rho, w, v, eig
        self.noise, self.dt, self.method = noise, dt, method
        self._evolver = None

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_evolver"] = None
        return state

    @property
    def evolver(self) -> FoldedEvolver:
        if self._evolver is None:
            self._evolver = FoldedEvolver(self.eig, self.noise, self.dt, self.method)
        return self._evolver

    def __call__(self, t: float) -> np.ndarray:
        return _qpd_values(self.rho, self.w, self.v, self.evolver, float(t))


def qpd_series(rho, w, v, eig, grid, noise=None, dt=DEFAULT_DT_US, method="spectral", workers=1) -> list[QPD]:
    """QPD at every grid time; each point runs its own full folded protocol."""
    task = QpdTask(rho, w, v, eig, noise, dt, method)
    rows = ordered_map(task, [float(t) for t in grid], workers)
    return [QPD(vals, float(t), noise is not None) for t, vals in zip(grid, rows)]


def nonclassicality_series(
    rho, w, v, eig, grid, noise=None, dt=DEFAULT_DT_US, method="spectral", workers=1
) -> NonclassicalitySeries:
    grid = np.asarray(grid, dtype=float)
    grid_spacing(grid)
    qpds = qpd_series(rho, w, v, eig, grid, noise, dt, method, workers)
    return NonclassicalitySeries(grid, np.array([total_nonclassicality(q) for q in qpds]))


@dataclass(frozen=True)
class TimescaleReport:
    """Onset, first maximum and return-to-zero of the total nonclassicality.

    ``None`` marks an event that did not occur before the end of the series.
    """

    t_star: float | None
    t_m: float | None
    t_z: float | None
    threshold: float
    h_over_j: float = float("nan")
    t2_star: float | None = None
    temperature_over_j: float | None = None
    integrated_n_tilde: float = float("nan")

    @property
    def ratio(self) -> float | None:
        if None in (self.t_star, self.t_m, self.t_z) or self.t_m == self.t_star:
            return None
        return (self.t_z - self.t_m) / (self.t_m - self.t_star)

    @property
    def censored_star(self) -> bool:
        return self.t_star is None

    @property
    def censored_m(self) -> bool:
        return self.t_m is None

    @property
    def censored_z(self) -> bool:
        return self.t_z is None


def _first_local_max(y: np.ndarray, start: int) -> int | None:
    n = len(y)
    k = max(start, 1)
    while k < n - 1:
        if y[k] > y[k - 1]:
            j = k + 1
            while j < n and y[j] == y[k]:
                j += 1
            if j < n and y[j] < y[k]:
                return k
            k = j
        else:
            k += 1
    return None


def extract_timescales(series: NonclassicalitySeries, threshold: float | None = None, **context) -> TimescaleReport:
    """Scan a series for its onset, first local maximum and subsequent zero.

    The default threshold is the square of the grid spacing. A plateau that
    forms a maximum is reported at its earliest index.
    """
    y = series.values
    if y.size == 0:
        raise ValueError("empty nonclassicality series")
    if threshold is None:
        threshold = series.spacing ** 2
    times = series.times
    above = np.flatnonzero(y > threshold)
    t_star = t_m = t_z = None
    if above.size:
        i_star = int(above[0])
        t_star = float(times[i_star])
        i_m = _first_local_max(y, i_star)
        if i_m is not None:
            t_m = float(times[i_m])
            below = np.flatnonzero(y[i_m + 1 :] <= threshold)
            if below.size:
                t_z = float(times[i_m + 1 + below[0]])
    return TimescaleReport(
        t_star, t_m, t_z, float(threshold), integrated_n_tilde=series.integrated() if y.size > 1 else 0.0, **context
    )


@dataclass(frozen=True)
class SweepCell:
    """One (h/J, T2*, initial state) combination of a sweep; picklable."""

    params: SpinChainParams
    t2_star: float | None
    temperature_over_j: float | None
    grid: tuple = field(repr=False)
    dt: float = DEFAULT_DT_US
    method: str = "spectral"

    def run(self) -> tuple[TimescaleReport, NonclassicalitySeries]:
        H = build_hamiltonian(self.params)
        eig = hermitian_eigendecompose(H)
        w, v = butterfly_operators(self.params)
        rho = initial_state(H, self.params, self.temperature_over_j)
        noise = build_noise_model(self.t2_star, self.params.n_qubits) if self.t2_star is not None else None
        series = nonclassicality_series(rho, w, v, eig, np.array(self.grid), noise, self.dt, self.method)
        report = extract_timescales(
            series,
            h_over_j=self.params.h_over_j,
            t2_star=self.t2_star,
            temperature_over_j=self.temperature_over_j,
        )
        return report, series


def initial_state(H: np.ndarray, params: SpinChainParams, temperature_over_j: float | None) -> np.ndarray:
    """Gibbs state at T = temperature_over_j * J, or I/2^N when ``temperature_over_j`` is None."""
    if temperature_over_j is None:
        return infinite_temperature_state(params.n_qubits)
    return gibbs_state(H, temperature_over_j * params.j_coupling)


def _run_cell(cell: SweepCell):
    return cell.run()


def sweep_h_over_j(
    base: SpinChainParams,
    values: Sequence[float],
    noise_configs: Sequence[float | None] = (None,),
    grid: Sequence[float] = (),
    initial_states: Sequence[float | None] = (1.0,),
    dt: float = DEFAULT_DT_US,
    method: str = "spectral",
    workers: int = 1,
    return_series: bool = False,
):
    """Timescale reports for every (h/J, T2*, initial state) cell, ordered by h/J first.

    ``noise_configs`` holds T2* values (None = closed system) and
    ``initial_states`` holds T/J values (None = infinite temperature).
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one h/J value")
    grid = tuple(float(t) for t in grid)
    grid_spacing(grid)
    cells = [
        SweepCell(
            SpinChainParams(base.n_qubits, float(h), base.g_over_j, base.j_coupling), t2, temp, grid, dt, method
        )
        for h in values
        for t2 in noise_configs
        for temp in initial_states
    ]
    results = ordered_map(_run_cell, cells, workers)
    if return_series:
        return results
    return [r for r, _ in results]


def check_normalization(qpd: QPD, tol: float = TOL.qpd_normalization) -> bool:
    return abs(qpd.total - 1) < tol
