"""
Ideal OTOC and its three measurement protocols.

All protocol operators are passed in the Schroedinger picture; the time
dependence of ``W(t) = U(t)^+ W U(t)`` comes from the evolution legs.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import DEFAULT_DT_US, FoldedEvolver
from .operators import EigenDecomposition, pauli, propagator
from .spin_model import NoiseModel

_KET0 = np.array([[1, 0], [0, 0]], dtype=complex)
_KET1 = np.array([[0, 0], [0, 1]], dtype=complex)
_PLUS = np.full((2, 2), 0.5, dtype=complex)


class ProtocolKind(str, Enum):
    IDEAL = "ideal"
    WEAK = "weak"
    INTERFEROMETRIC = "interferometric"
    CLOCK = "clock"

    @property
    def lab_time_factor(self) -> int | None:
        """Lab time elapsed per unit of OTOC time t (None for the ideal value)."""
        return _LAB_TIME[self]


_LAB_TIME = {
    ProtocolKind.IDEAL: None,
    ProtocolKind.WEAK: 3,
    ProtocolKind.INTERFEROMETRIC: 2,
    ProtocolKind.CLOCK: 4,
}


@dataclass(frozen=True)
class OtocPoint:
    t: float
    value: complex
    protocol: ProtocolKind
    decoherent: bool


def _check_dims(*mats):
    dims = {np.shape(m)[-1] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among operators: {sorted(dims)}")


def _evolver(eig, noise, dt, evolver):
    if evolver is not None:
        if evolver.eig is not eig and evolver.eig.dim != eig.dim:
            raise ValueError("evolver was built for a different Hamiltonian dimension")
        return evolver
    return FoldedEvolver(eig, noise, dt)


def heisenberg(op: np.ndarray, eig: EigenDecomposition, t: float) -> np.ndarray:
    """``U(t)^+ op U(t)``."""
    U = propagator(eig, t)
    return U.conj().T @ op @ U


def ideal_otoc(eig: EigenDecomposition, w: np.ndarray, v: np.ndarray, rho: np.ndarray, t: float) -> complex:
    """F(t) = Tr(W(t)^+ V^+ W(t) V rho) from the exact propagator."""
    _check_dims(w, v, rho, np.empty((eig.dim, eig.dim)))
    wt = heisenberg(w, eig, t)
    return complex(np.trace(wt.conj().T @ v.conj().T @ wt @ v @ rho))


def commutator_square(eig: EigenDecomposition, w: np.ndarray, v: np.ndarray, rho: np.ndarray, t: float) -> float:
    """C(t) = <[W(t),V]^+ [W(t),V]> / 4."""
    wt = heisenberg(w, eig, t)
    comm = wt @ v - v @ wt
    return float(np.trace(comm.conj().T @ comm @ rho).real / 4)


def weak_protocol_trace(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    d: np.ndarray,
    rho: np.ndarray,
    eig: EigenDecomposition,
    t: float,
    noise: NoiseModel | None = None,
    dt: float = DEFAULT_DT_US,
    evolver: FoldedEvolver | None = None,
) -> complex:
    """Sequential weak-measurement estimate of Tr(A B C D rho).

    Left-multiplications act directly on the carried matrix (no explicit
    measurement ancillas), so only the system qubits dephase. Lab time 3t.
    With ``A = W^+, B = V^+, C = W, D = V`` this returns F(t).
    """
    _check_dims(a, b, c, d, rho, np.empty((eig.dim, eig.dim)))
    ev = _evolver(eig, noise, dt, evolver)
    m = d @ rho
    m = ev.leg(m, t, (1,))
    m = c @ m
    m = ev.leg(m, t, (-1,))
    m = b @ m
    m = ev.leg(m, t, (1,))
    return complex(np.trace(a @ m))


def _controlled(on0: np.ndarray, on1: np.ndarray) -> np.ndarray:
    return np.kron(on0, _KET0) + np.kron(on1, _KET1)


def _conjugate(g: np.ndarray, m: np.ndarray) -> np.ndarray:
    return g @ m @ g.conj().T


def _ancilla_readout(m: np.ndarray) -> tuple[float, float]:
    dim = m.shape[-1] // 2
    eye = np.eye(dim)
    sx = np.trace(np.kron(eye, pauli("x")) @ m).real
    sy = np.trace(np.kron(eye, pauli("y")) @ m).real
    return float(sx), float(sy)


def interferometric_otoc(
    w: np.ndarray,
    v: np.ndarray,
    rho: np.ndarray,
    eig: EigenDecomposition,
    t: float,
    noise: NoiseModel | None = None,
    dt: float = DEFAULT_DT_US,
    evolver: FoldedEvolver | None = None,
) -> complex:
    """Ancilla-interferometer OTOC: Re F = <sigma_x>, Im F = <sigma_y> on the ancilla. Lab time 2t."""
    _check_dims(w, v, rho, np.empty((eig.dim, eig.dim)))
    ev = _evolver(eig, noise, dt, evolver)
    eye = np.eye(eig.dim, dtype=complex)
    m = np.kron(rho, _PLUS)
    m = _conjugate(_controlled(eye, v), m)
    m = ev.leg(m, t, (1, 1))
    m = _conjugate(np.kron(w, np.eye(2)), m)
    m = ev.leg(m, t, (-1, -1))
    m = _conjugate(_controlled(v, eye), m)
    re, im = _ancilla_readout(m)
    return complex(re, im)


def clock_propagator(eig: EigenDecomposition, t: float) -> np.ndarray:
    """U_T(t) = U(t) (x) |0><0| + U(-t) (x) |1><1|, generated by H (x) sigma_z."""
    return _controlled(propagator(eig, t), propagator(eig, -t))


def clock_otoc(
    w: np.ndarray,
    v: np.ndarray,
    rho: np.ndarray,
    eig: EigenDecomposition,
    t: float,
    noise: NoiseModel | None = None,
    dt: float = DEFAULT_DT_US,
    evolver: FoldedEvolver | None = None,
) -> complex:
    """Quantum-clock OTOC; the clock qubit sets the direction of time. Lab time 4t.

    With the clock unitary above, branch 0 runs forward first, so the two
    branches end in ``V W(-t) psi`` and ``W(-t) V psi``. The ancilla
    coherence is then conj F(t) for real H, W, V and rho, and the sigma_y
    readout enters with a minus sign.
    """
    _check_dims(w, v, rho, np.empty((eig.dim, eig.dim)))
    ev = _evolver(eig, noise, dt, evolver)
    eye = np.eye(eig.dim, dtype=complex)
    flip = np.kron(eye, pauli("x"))
    clock = (1, -1)
    m = np.kron(rho, _PLUS)
    m = _conjugate(_controlled(eye, v), m)
    m = ev.leg(m, t, clock)
    m = _conjugate(_controlled(eye, w), m)
    m = _conjugate(flip, m)
    m = ev.leg(m, 2 * t, clock)
    m = _conjugate(flip, m)
    m = _conjugate(_controlled(w, eye), m)
    m = ev.leg(m, t, clock)
    m = _conjugate(_controlled(v, eye), m)
    re, im = _ancilla_readout(m)
    return complex(re, -im)


PROTOCOLS = {
    ProtocolKind.WEAK: lambda w, v, rho, eig, t, noise=None, dt=DEFAULT_DT_US, evolver=None: weak_protocol_trace(
        w.conj().T, v.conj().T, w, v, rho, eig, t, noise, dt, evolver
    ),
    ProtocolKind.INTERFEROMETRIC: interferometric_otoc,
    ProtocolKind.CLOCK: clock_otoc,
}


def protocol_otoc(
    kind: ProtocolKind | str,
    w: np.ndarray,
    v: np.ndarray,
    rho: np.ndarray,
    eig: EigenDecomposition,
    t: float,
    noise: NoiseModel | None = None,
    dt: float = DEFAULT_DT_US,
    evolver: FoldedEvolver | None = None,
) -> OtocPoint:
    kind = ProtocolKind(kind)
    if kind is ProtocolKind.IDEAL:
        return OtocPoint(t, ideal_otoc(eig, w, v, rho, t), kind, False)
    value = PROTOCOLS[kind](w, v, rho, eig, t, noise, dt, evolver)
    decoherent = evolver.decoherent if evolver is not None else noise is not None
    return OtocPoint(t, value, kind, decoherent)
