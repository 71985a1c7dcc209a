import numpy as np
import pytest

from otoc_lab.dynamics import (
    ChannelPower,
    EvolutionConfig,
    FoldedEvolver,
    convergence_probe,
    decoherent_step,
    dephasing_mask,
    evolve,
    no_jump_operator,
    steps_for,
)
from otoc_lab.operators import extend_eigendecomposition, hermitian_eigendecompose, propagator
from otoc_lab.spin_model import NoiseModel, build_noise_model

from conftest import chain, random_density, INTEGRABLE, NONINTEGRABLE

NOISE5 = build_noise_model(130.0, 5)


def test_no_jump_operator():
    noise = build_noise_model(130.0, 5, 1)
    assert np.abs(no_jump_operator(noise, 0.0) - np.eye(64)).max() == 0
    L0 = no_jump_operator(noise, 0.005)
    assert np.abs(L0 - np.sqrt(1 - 0.005 * 6 / 260) * np.eye(64)).max() < 1e-15
    total = L0.conj().T @ L0 + 0.005 * sum(g * L.conj().T @ L for g, L in zip(noise.rates, noise.lindblad_ops))
    assert np.abs(total - np.eye(64)).max() < 1e-15


def test_no_jump_operator_rejects_large_step():
    with pytest.raises(ValueError):
        no_jump_operator(build_noise_model(0.01, 5), 1.0)
    with pytest.raises(ValueError):
        no_jump_operator(NOISE5, -0.1)


def test_step_is_unitary_when_rates_vanish(rng):
    eig = chain(NONINTEGRABLE).eig
    U = propagator(eig, 0.005)
    m = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    out = decoherent_step(m, U, NoiseModel(1e300, 5), 0.005)
    assert np.abs(out - U @ m @ U.conj().T).max() < 1e-12


def test_mask_form_equals_literal_step(rng):
    eig = chain(NONINTEGRABLE).eig
    U = propagator(eig, 0.005)
    m = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    mask = dephasing_mask(NOISE5, 0.005)
    literal = decoherent_step(m, U, NOISE5, 0.005)
    assert np.abs(mask * (U @ m @ U.conj().T) - literal).max() < 1e-14


def test_step_dimension_mismatch():
    with pytest.raises(ValueError):
        decoherent_step(np.eye(16), np.eye(32), NOISE5, 0.005)


def test_trace_preserved_per_step(rng):
    eig = chain(NONINTEGRABLE).eig
    U = propagator(eig, 0.005)
    rho = random_density(rng, 32)
    m = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    for x in (rho, m):
        for _ in range(20):
            y = decoherent_step(x, U, NOISE5, 0.005)
            assert abs(np.trace(y) - np.trace(x)) < 1e-12
            x = y


def test_single_qubit_dephasing_rate():
    # H = 0: the coherence decays as exp(-t / T2*)
    eig = hermitian_eigendecompose(np.zeros((2, 2)))
    noise = NoiseModel(130.0, 1)
    rho = np.full((2, 2), 0.5, dtype=complex)
    times = np.arange(0, 201, 20.0)
    coh = []
    for t in times:
        out = evolve(rho, eig, EvolutionConfig(0.005, "forward", t), noise)
        coh.append(abs(out[0, 1]) / 0.5)
    slope = np.polyfit(times, np.log(coh), 1)[0]
    assert abs(-1 / slope - 130.0) / 130.0 < 0.02
    # the pointwise values too, at 1% for dt <= 0.01
    assert np.abs(np.array(coh) / np.exp(-times / 130.0) - 1).max() < 0.01


@pytest.mark.parametrize("params", [INTEGRABLE, NONINTEGRABLE], ids=["integrable", "nonintegrable"])
def test_positivity_and_hermiticity(params):
    c = chain(params)
    rho = c.rho
    for t in (10.0, 40.0, 50.0):
        rho = evolve(rho, c.eig, EvolutionConfig(0.01, "forward", t), NOISE5)
        assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -1e-8
        assert np.abs(rho - rho.conj().T).max() < 1e-10
        assert abs(np.trace(rho) - 1) < 1e-10


def test_closed_forward_backward_identity(rng):
    eig = chain(NONINTEGRABLE).eig
    m = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    fwd = evolve(m, eig, EvolutionConfig(0.005, "forward", 7.3))
    back = evolve(fwd, eig, EvolutionConfig(0.005, "backward", 7.3))
    assert np.abs(back - m).max() < 1e-10


def test_noisy_round_trip_loses_purity():
    eig = chain(NONINTEGRABLE).eig
    psi = np.zeros(32)
    psi[0] = 1
    rho = np.outer(psi, psi).astype(complex)
    fwd = evolve(rho, eig, EvolutionConfig(0.005, "forward", 2.0), NOISE5)
    back = evolve(fwd, eig, EvolutionConfig(0.005, "backward", 2.0), NOISE5)
    purity = np.trace(back @ back).real
    assert purity < 1 - 1e-3
    # dephasing accrues on both legs: the return trip is worse than the outbound one
    assert purity < np.trace(fwd @ fwd).real


def test_zero_duration_leaves_state():
    eig = chain(INTEGRABLE).eig
    rho = chain(INTEGRABLE).rho
    assert np.abs(evolve(rho, eig, EvolutionConfig(0.005, "forward", 0.0), NOISE5) - rho).max() == 0


def test_evolution_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(0.005, "sideways", 1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(0.005, "forward", 0.0123)
    with pytest.raises(ValueError):
        EvolutionConfig(0.0, "forward", 1.0)
    assert EvolutionConfig(0.005, "backward", 1.0).n_steps == 200
    assert steps_for(60.0, 0.005) == 12000


def test_open_converges_to_closed_linearly():
    c = chain(NONINTEGRABLE)
    closed = evolve(c.rho, c.eig, EvolutionConfig(0.005, "forward", 3.0))
    errs = []
    for t2 in (1e4, 2e4, 4e4):
        out = evolve(c.rho, c.eig, EvolutionConfig(0.005, "forward", 3.0), build_noise_model(t2, 5))
        errs.append(np.abs(out - closed).max())
    assert abs(errs[0] / errs[1] - 2) < 0.05
    assert abs(errs[1] / errs[2] - 2) < 0.05


def test_convergence_probe():
    c = chain(NONINTEGRABLE)
    assert convergence_probe(c.rho, c.eig, None, 10.0, 0.01) < 1e-12
    coarse = convergence_probe(c.rho, c.eig, NOISE5, 10.0, 0.01)
    fine = convergence_probe(c.rho, c.eig, NOISE5, 10.0, 0.005)
    assert coarse < 1e-4
    # first-order map: halving dt halves the self-convergence error
    assert 1.6 < coarse / fine < 2.4
    with pytest.raises(ValueError):
        convergence_probe(c.rho, c.eig, NOISE5, 0.0, 0.01)


def test_channel_power_matches_repeated_steps(rng):
    eig = chain(NONINTEGRABLE).eig
    ul, ur = propagator(eig, 0.005), propagator(eig, -0.005)
    mask = dephasing_mask(NOISE5, 0.005)
    kern = ChannelPower(ul, ur, mask)
    x = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    y = x.copy()
    for _ in range(300):
        y = mask * (ul @ y @ ur.conj().T)
    assert np.abs(kern.apply(x, 300) - y).max() < 1e-10
    stack = np.stack([x, 2 * x])
    assert np.abs(kern.apply(stack, 300)[1] - 2 * y).max() < 1e-10


@pytest.mark.parametrize("branches", [(1,), (-1,), (1, 1), (-1, -1), (1, -1)])
def test_spectral_matches_step(rng, branches):
    eig = chain(NONINTEGRABLE).eig
    d = 32 * len(branches)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    step = FoldedEvolver(eig, NOISE5, 0.005, "step").leg(m, 1.5, branches)
    spectral = FoldedEvolver(eig, NOISE5, 0.005, "spectral").leg(m, 1.5, branches)
    assert np.abs(step - spectral).max() < 1e-10


def test_folded_leg_matches_evolve_with_ancilla(rng):
    # one ancilla, backward leg of H (x) I: compare with explicit evolution on the enlarged space
    eig = chain(INTEGRABLE).eig
    big = extend_eigendecomposition(eig, (1, 1))
    m = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    ref = evolve(m, big, EvolutionConfig(0.005, "backward", 0.5), build_noise_model(130.0, 5, 1))
    out = FoldedEvolver(eig, NOISE5, 0.005, "spectral").leg(m, 0.5, (-1, -1))
    assert np.abs(out - ref).max() < 1e-10


def test_folded_leg_closed_is_exact(rng):
    eig = chain(INTEGRABLE).eig
    m = rng.normal(size=(32, 32)) + 0j
    U = propagator(eig, -0.7)
    out = FoldedEvolver(eig).leg(m, 0.7, (-1,))
    assert np.abs(out - U @ m @ U.conj().T).max() < 1e-12


def test_folded_leg_validation():
    ev = FoldedEvolver(chain(INTEGRABLE).eig, NOISE5)
    with pytest.raises(ValueError):
        ev.leg(np.eye(32), -1.0)
    with pytest.raises(ValueError):
        ev.leg(np.eye(32), 1.0, (1, -1))
    with pytest.raises(ValueError):
        ev.leg(np.eye(96), 1.0, (1, 1, 1))
    with pytest.raises(ValueError):
        FoldedEvolver(chain(INTEGRABLE).eig, method="rk4")
