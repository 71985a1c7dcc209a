"""
Closed and dephasing time evolution of density matrices and protocol carriers.

The open-system map advances a (possibly non-Hermitian) matrix ``m`` by one
step ``dt`` as

    m -> dt * sum_i gamma_i L_i U m U^+ L_i^+  +  L_0 U m U^+ L_0^+,
    L_0 = sqrt(I - dt * sum_i gamma_i L_i^+ L_i),

with ``U = exp(-/+ i H dt)``. Reversing time flips only the sign inside
``U``; the dephasing terms keep acting, so decoherence accrues on every leg.
"""

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .operators import (
    EigenDecomposition,
    extend_eigendecomposition,
    propagator,
)
from .spin_model import NoiseModel
from .tolerances import TOL

DEFAULT_DT_US = 0.005


def steps_for(duration: float, dt: float) -> int:
    """Number of ``dt`` steps in ``duration``; raises unless it is an integer multiple."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    n = int(round(duration / dt))
    if abs(n * dt - duration) > TOL.duration_multiple:
        raise ValueError(f"duration {duration} is not an integer multiple of dt {dt}")
    return n


@dataclass(frozen=True)
class EvolutionConfig:
    dt_integration: float = DEFAULT_DT_US
    direction: Literal["forward", "backward"] = "forward"
    duration: float = 0.0

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"direction must be 'forward' or 'backward', got {self.direction!r}")
        steps_for(self.duration, self.dt_integration)

    @property
    def sign(self) -> int:
        return 1 if self.direction == "forward" else -1

    @property
    def n_steps(self) -> int:
        return steps_for(self.duration, self.dt_integration)


def no_jump_operator(noise: NoiseModel, dt: float) -> np.ndarray:
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    eye = np.eye(noise.dim, dtype=complex)
    arg = eye - dt * sum(g * L.conj().T @ L for g, L in zip(noise.rates, noise.lindblad_ops))
    evals, evecs = np.linalg.eigh(0.5 * (arg + arg.conj().T))
    if evals.min() < 0:
        raise ValueError(f"dt={dt} too large: I - dt*sum(gamma L^+L) is not positive semidefinite")
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def decoherent_step(m: np.ndarray, u_dt: np.ndarray, noise: NoiseModel, dt: float) -> np.ndarray:
    """One jump/no-jump step applied to ``m`` (any square matrix, or a stack of them)."""
    m = np.asarray(m)
    if m.shape[-1] != noise.dim or u_dt.shape != (noise.dim, noise.dim):
        raise ValueError(
            f"dimension mismatch: carrier {m.shape[-2:]}, propagator {u_dt.shape}, noise dim {noise.dim}"
        )
    x = u_dt @ m @ u_dt.conj().T
    L0 = no_jump_operator(noise, dt)
    out = L0 @ x @ L0.conj().T
    for g, L in zip(noise.rates, noise.lindblad_ops):
        out = out + dt * g * (L @ x @ L.conj().T)
    return out


def dephasing_mask(noise: NoiseModel, dt: float) -> np.ndarray | None:
    """Elementwise form of the dissipative part of the step, or None if some L_i is not diagonal.

    For diagonal ``L_i = diag(l_i)`` the step equals ``mask * (U m U^+)`` with
    ``mask = l0 l0^* + dt sum_i gamma_i l_i l_i^*`` (outer products).
    """
    diags = []
    for L in noise.lindblad_ops:
        d = np.diag(L)
        if np.any(L - np.diag(d)):
            return None
        diags.append(d)
    l0 = np.diag(no_jump_operator(noise, dt))
    mask = np.outer(l0, l0.conj())
    for g, d in zip(noise.rates, diags):
        mask = mask + dt * g * np.outer(d, d.conj())
    if not np.any(mask.imag):
        mask = mask.real
    return mask


def evolve(
    m: np.ndarray,
    eig: EigenDecomposition,
    config: EvolutionConfig,
    noise: NoiseModel | None = None,
) -> np.ndarray:
    """Evolve ``m`` for ``config.duration`` in ``config.direction``.

    Without noise a single exact propagator covers the whole leg. With noise
    the jump/no-jump step is repeated ``duration/dt`` times.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape[-1] != eig.dim or m.shape[-2] != eig.dim:
        raise ValueError(f"carrier shape {m.shape} does not match Hamiltonian dim {eig.dim}")
    n = config.n_steps
    if n == 0:
        return m.copy()
    sign = config.sign
    if noise is None:
        U = propagator(eig, sign * config.duration)
        return U @ m @ U.conj().T
    dt = config.dt_integration
    U = propagator(eig, sign * dt)
    Uh = U.conj().T
    mask = dephasing_mask(noise, dt)
    if mask is None:
        for _ in range(n):
            m = decoherent_step(m, U, noise, dt)
        return m
    if mask.shape != (eig.dim, eig.dim):
        raise ValueError(f"noise dim {noise.dim} does not match Hamiltonian dim {eig.dim}")
    for _ in range(n):
        m = mask * (U @ m @ Uh)
    return m


def convergence_probe(
    state: np.ndarray,
    eig: EigenDecomposition,
    noise: NoiseModel | None,
    t: float,
    dt: float,
) -> float:
    """Max entrywise change of a forward evolution over ``t`` when ``dt`` is halved."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    coarse = evolve(state, eig, EvolutionConfig(dt, "forward", t), noise)
    fine = evolve(state, eig, EvolutionConfig(dt / 2, "forward", t), noise)
    return float(np.max(np.abs(coarse - fine)))


class ChannelPower:
    """n-fold power of the step ``X -> mask * (U_l X U_r^+)`` on d x d matrices.

    The d^2 x d^2 step map is diagonalized once; applying n steps then costs
    two matrix products regardless of n. Only intended for d <= 32.
    """

    def __init__(self, u_left: np.ndarray, u_right: np.ndarray, mask: np.ndarray):
        d = u_left.shape[0]
        self.d = d
        step = mask.reshape(-1)[:, None] * np.kron(u_left, u_right.conj())
        mu, right = np.linalg.eig(step)
        self._mu = mu
        self._right_t = right.T.copy()
        self._left_t = np.linalg.inv(right).T.copy()

    def apply(self, x: np.ndarray, n: int) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        shape = x.shape
        coeffs = x.reshape(shape[:-2] + (self.d * self.d,)) @ self._left_t
        coeffs *= self._mu ** n
        return (coeffs @ self._right_t).reshape(shape)


class FoldedEvolver:
    """Applies the timed legs of an OTOC protocol.

    Carriers are matrices on the system register, optionally followed by
    ancilla qubits (as least significant factors). A leg is described by one
    direction sign per ancilla basis state: ``(+1,)`` is a forward system leg,
    ``(-1, -1)`` a backward leg of ``H (x) I``, and ``(+1, -1)`` the clock
    evolution under ``H (x) sigma_z``.

    ``method='step'`` integrates every leg step by step with :func:`evolve`.
    ``method='spectral'`` applies the identical step map through
    :class:`ChannelPower`, block by block over the ancilla branches. Nothing
    is cached between legs except the Hamiltonian and step-map spectra.
    """

    def __init__(
        self,
        eig: EigenDecomposition,
        noise: NoiseModel | None = None,
        dt: float = DEFAULT_DT_US,
        method: Literal["step", "spectral"] = "step",
    ):
        if method not in ("step", "spectral"):
            raise ValueError(f"unknown evolution method {method!r}")
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.eig = eig
        self.noise = noise
        self.dt = dt
        self.method = method
        self.n_system = eig.dim.bit_length() - 1
        self._kernels: dict = {}
        self._masks: dict = {}
        self._step_u: dict = {}

    @property
    def decoherent(self) -> bool:
        return self.noise is not None

    def noise_for(self, n_ancilla: int) -> NoiseModel | None:
        if self.noise is None:
            return None
        return self.noise.with_ancillas(n_ancilla)

    def leg(self, m: np.ndarray, duration: float, branches: Sequence[int] = (1,)) -> np.ndarray:
        branches = tuple(int(s) for s in branches)
        nb = len(branches)
        if nb & (nb - 1) or any(s not in (1, -1) for s in branches):
            raise ValueError(f"invalid branch directions {branches}")
        d = self.eig.dim
        m = np.asarray(m, dtype=complex)
        if m.shape[-1] != d * nb or m.shape[-2] != d * nb:
            raise ValueError(f"carrier shape {m.shape} does not match {nb} branch(es) of dim {d}")
        if duration < 0:
            raise ValueError(f"leg duration must be non-negative, got {duration}")
        n = steps_for(duration, self.dt) if self.noise is not None else None
        if duration == 0 or n == 0:
            return m.copy()
        if self.noise is None:
            us = {s: propagator(self.eig, s * duration) for s in set(branches)}
            return self._blockwise(m, branches, lambda x, a, b: us[a] @ x @ us[b].conj().T)
        if self.method == "step":
            return self._step_leg(m, n, branches)
        masks = self._block_masks(nb)
        return self._blockwise(
            m, branches, lambda x, a, b, i, j: self._kernel(a, b, masks[i][j]).apply(x, n), with_index=True
        )

    def _blockwise(self, m, branches, fn, with_index=False):
        nb = len(branches)
        d = self.eig.dim
        if nb == 1:
            return fn(m, branches[0], branches[0], 0, 0) if with_index else fn(m, branches[0], branches[0])
        lead = m.shape[:-2]
        blocks = m.reshape(lead + (d, nb, d, nb))
        out = np.empty_like(blocks)
        for i, a in enumerate(branches):
            for j, b in enumerate(branches):
                x = blocks[..., :, i, :, j]
                out[..., :, i, :, j] = fn(x, a, b, i, j) if with_index else fn(x, a, b)
        return out.reshape(m.shape)

    def _step_leg(self, m, n, branches):
        n_anc = len(branches).bit_length() - 1
        key = branches
        if key not in self._step_u:
            if n_anc == 0:
                u = propagator(self.eig, branches[0] * self.dt)
            else:
                u = propagator(extend_eigendecomposition(self.eig, branches), self.dt)
            self._step_u[key] = (u, u.conj().T)
        u, uh = self._step_u[key]
        noise = self.noise_for(n_anc)
        mask = self._full_mask(n_anc)
        if mask is None:
            for _ in range(n):
                m = decoherent_step(m, u, noise, self.dt)
            return m
        for _ in range(n):
            m = mask * (u @ m @ uh)
        return m

    def _full_mask(self, n_anc):
        if n_anc not in self._masks:
            self._masks[n_anc] = dephasing_mask(self.noise_for(n_anc), self.dt)
        return self._masks[n_anc]

    def _block_masks(self, nb):
        n_anc = nb.bit_length() - 1
        mask = self._full_mask(n_anc)
        if mask is None:
            raise ValueError("spectral evolution needs diagonal Lindblad operators")
        d = self.eig.dim
        m4 = mask.reshape(d, nb, d, nb)
        return [[np.ascontiguousarray(m4[:, i, :, j]) for j in range(nb)] for i in range(nb)]

    def _kernel(self, a, b, mask):
        # backward-left kernels are complex conjugates of forward ones for real H and mask
        conj = a == -1 and self.eig.is_real and not np.iscomplexobj(mask)
        la, lb = (-a, -b) if conj else (a, b)
        key = (la, lb, mask.tobytes())
        kern = self._kernels.get(key)
        if kern is None:
            ul = propagator(self.eig, la * self.dt)
            ur = propagator(self.eig, lb * self.dt)
            kern = self._kernels[key] = ChannelPower(ul, ur, mask)
        if not conj:
            return kern
        return _Conjugated(kern)


class _Conjugated:
    def __init__(self, kernel: ChannelPower):
        self._kernel = kernel

    def apply(self, x, n):
        return self._kernel.apply(np.conj(x), n).conj()
