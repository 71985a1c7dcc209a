"""Ising-chain Hamiltonian, butterfly operators, initial states and dephasing model.

Times are in microseconds. The coupling is fixed by ``2*pi/J = 1 us``, so
``J = 2*pi`` rad/us and energies/temperatures are in the same units.
"""

from dataclasses import dataclass, field

import numpy as np

from .operators import embed_at_site, hermitian_eigendecompose, pauli

J_COUPLING = 2 * np.pi
DEFAULT_T2_STAR_US = 130.0
DEFAULT_G_OVER_J = 1.05


@dataclass(frozen=True)
class SpinChainParams:
    n_qubits: int = 5
    h_over_j: float = 0.0
    g_over_j: float = DEFAULT_G_OVER_J
    j_coupling: float = J_COUPLING

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        if self.j_coupling <= 0:
            raise ValueError(f"j_coupling must be positive, got {self.j_coupling}")

    @property
    def h(self) -> float:
        return self.h_over_j * self.j_coupling

    @property
    def g(self) -> float:
        return self.g_over_j * self.j_coupling

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


def build_hamiltonian(params: SpinChainParams) -> np.ndarray:
    """Open-boundary mixed-field Ising chain.

    H = -J sum_i z_i z_{i+1} - h sum_i z_i - g sum_i x_i
    """
    n = params.n_qubits
    sz, sx = pauli("z"), pauli("x")
    zs = [embed_at_site(sz, i, n) for i in range(1, n + 1)]
    H = np.zeros((params.dim, params.dim), dtype=complex)
    for i in range(n - 1):
        H -= params.j_coupling * zs[i] @ zs[i + 1]
    for i in range(n):
        H -= params.h * zs[i]
        H -= params.g * embed_at_site(sx, i + 1, n)
    return H


def gibbs_state(h: np.ndarray, temperature: float) -> np.ndarray:
    """Thermal state exp(-H/T)/Z, with ``temperature`` in the units of ``h``."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    eig = hermitian_eigendecompose(h)
    # shift by the ground energy so the largest weight is exactly 1
    weights = np.exp(-(eig.eigenvalues - eig.eigenvalues[0]) / temperature)
    weights /= weights.sum()
    vecs = eig.eigenvectors
    rho = (vecs * weights) @ vecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho.astype(complex)


def infinite_temperature_state(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"qubit count must be positive, got {n}")
    dim = 2 ** n
    return np.eye(dim, dtype=complex) / dim


def butterfly_operators(params: SpinChainParams) -> tuple[np.ndarray, np.ndarray]:
    """W = sigma^z on site 1 and V = sigma^z on site N."""
    n = params.n_qubits
    if n < 2:
        raise ValueError("butterfly operators need at least two qubits")
    sz = pauli("z")
    return embed_at_site(sz, 1, n), embed_at_site(sz, n, n)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Uniform single-qubit dephasing, L_i = sigma^z_i at rate 1/(2 T2*)."""

    t2_star: float
    n_system: int
    n_ancilla: int = 0
    lindblad_ops: list = field(init=False, repr=False)

    def __post_init__(self):
        if not self.t2_star > 0:
            raise ValueError(f"t2_star must be positive, got {self.t2_star}")
        n_total = self.n_system + self.n_ancilla
        sz = pauli("z")
        ops = [embed_at_site(sz, site, n_total) for site in self.dephasing_sites]
        object.__setattr__(self, "lindblad_ops", ops)

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 * self.t2_star)

    @property
    def rates(self) -> np.ndarray:
        return np.full(len(self.dephasing_sites), self.gamma)

    @property
    def dephasing_sites(self) -> list[int]:
        return list(range(1, self.n_system + self.n_ancilla + 1))

    @property
    def dim(self) -> int:
        return 2 ** (self.n_system + self.n_ancilla)

    def with_ancillas(self, n_ancilla: int) -> "NoiseModel":
        if n_ancilla == self.n_ancilla:
            return self
        return NoiseModel(self.t2_star, self.n_system, n_ancilla)


def build_noise_model(t2_star: float, n_system: int, n_ancilla: int = 0) -> NoiseModel | None:
    """Dephasing on every system and ancilla qubit; ``t2_star=inf`` returns None (closed system)."""
    if t2_star is None or np.isinf(t2_star):
        return None
    return NoiseModel(float(t2_star), n_system, n_ancilla)
