"""
Dense multi-qubit operator primitives.

Operators are plain complex ``numpy`` arrays of shape ``(2**k, 2**k)``.
Site 1 is the leftmost (most significant) tensor factor; ancillas are
appended as the least significant factors.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .tolerances import TOL

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` in {'x', 'y', 'z'}."""
    try:
        return _PAULI[axis.lower()].copy()
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def qubit_count(op: np.ndarray) -> int:
    """Number of qubits spanned by a square operator; raises if dim is not 2**k."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    dim = op.shape[0]
    k = dim.bit_length() - 1
    if dim < 2 or (1 << k) != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return k


def is_hermitian(op: np.ndarray, tol: float = TOL.hermitian) -> bool:
    return bool(np.max(np.abs(op - op.conj().T)) <= tol)


def is_unitary(op: np.ndarray, tol: float = TOL.unitary) -> bool:
    op = np.asarray(op)
    return bool(np.linalg.norm(op @ op.conj().T - np.eye(op.shape[0])) <= tol)


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product; the first argument is the most significant factor."""
    if not ops:
        raise ValueError("tensor() needs at least one operator")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def embed_at_site(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Place a single-qubit ``op`` on ``site`` (1-based) of an ``n``-qubit register."""
    if not 1 <= site <= n:
        raise ValueError(f"site {site} out of range 1..{n}")
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"expected a 2x2 operator, got shape {op.shape}")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def eigen_projector(op: np.ndarray, eigenvalue: int) -> np.ndarray:
    """Projector (I +- op)/2 onto the +-1 eigenspace of an involutive Hermitian ``op``."""
    if eigenvalue not in (1, -1):
        raise ValueError(f"eigenvalue must be +1 or -1, got {eigenvalue!r}")
    op = np.asarray(op, dtype=complex)
    qubit_count(op)
    if not is_hermitian(op, TOL.projector_spectrum):
        raise ValueError("operator is not Hermitian")
    eye = np.eye(op.shape[0], dtype=complex)
    if np.max(np.abs(op @ op - eye)) > TOL.projector_spectrum:
        raise ValueError("operator spectrum is not contained in {+1, -1}")
    return 0.5 * (eye + eigenvalue * op)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Spectral decomposition ``H = V diag(eigenvalues) V^dagger``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        vecs = self.eigenvectors
        return (vecs * self.eigenvalues) @ vecs.conj().T

    @property
    def is_real(self) -> bool:
        """True when the decomposed operator is real-symmetric (U(-t) = conj U(t))."""
        return not np.iscomplexobj(self.eigenvectors) or not np.any(self.eigenvectors.imag)


def hermitian_eigendecompose(op: np.ndarray) -> EigenDecomposition:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    if not is_hermitian(op, TOL.hermitian * max(1.0, float(np.max(np.abs(op), initial=0.0)))):
        raise ValueError("operator is not Hermitian")
    if np.iscomplexobj(op) and not np.any(op.imag):
        op = op.real
    evals, evecs = np.linalg.eigh(op)
    return EigenDecomposition(evals, evecs)


def propagator(eig: EigenDecomposition, t: float) -> np.ndarray:
    """Exact ``exp(-i H t)``; negative ``t`` gives the backward propagator."""
    vecs = eig.eigenvectors
    return (vecs * np.exp(-1j * eig.eigenvalues * t)) @ vecs.conj().T


def extend_eigendecomposition(eig: EigenDecomposition, ancilla_diag) -> EigenDecomposition:
    """Decomposition of ``H (x) diag(ancilla_diag)`` with the ancilla as last factor.

    ``ancilla_diag=(1, 1)`` gives ``H (x) I``; ``(1, -1)`` gives the clock
    Hamiltonian ``H (x) sigma_z``.
    """
    diag = np.asarray(ancilla_diag, dtype=float)
    evals = np.kron(eig.eigenvalues, diag)
    evecs = np.kron(eig.eigenvectors, np.eye(diag.shape[0]))
    order = np.argsort(evals, kind="stable")
    return EigenDecomposition(evals[order], evecs[:, order])
