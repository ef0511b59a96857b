import numpy as np
import pytest

from aqec import fock, lindblad, states
from aqec.errors import SteadyStateError


def random_density(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def test_noise_model_validation():
    with pytest.raises(ValueError):
        lindblad.NoiseModel(photon_loss_rate=-1.0)
    with pytest.raises(ValueError):
        lindblad.NoiseModel(qubit_t1=1e-6, qubit_t2=3e-6)  # T2 > 2 T1
    nm = lindblad.NoiseModel(qubit_t1=100e-6, qubit_t2=100e-6)
    assert abs(nm.qubit_pure_dephasing_rate - 5000.0) < 1e-9
    assert lindblad.NoiseModel().is_trivial
    assert not nm.is_trivial
    assert len(nm.joint_jumps(8)) == 2
    assert len(lindblad.NoiseModel(photon_loss_rate=1.0).mode_jumps(8)) == 1


def test_vectorization_convention_pinned():
    # The column-stacking dissipator matrix must reproduce the elementwise
    # definition D[L]rho = L rho L^dag - {L^dag L, rho}/2 on random states.
    rng = np.random.default_rng(7)
    d = 6
    op = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = random_density(rng, d)
    elementwise = op @ rho @ op.conj().T - 0.5 * (
        op.conj().T @ op @ rho + rho @ op.conj().T @ op)
    via_matrix = lindblad.unvec(lindblad.dissipator_matrix(op)
                                @ lindblad.vec(rho))
    assert np.abs(elementwise - via_matrix).max() < 1e-12
    h = rng.standard_normal((d, d))
    h = h + h.T
    comm = -1j * (h @ rho - rho @ h)
    via_h = lindblad.unvec(lindblad.hamiltonian_matrix(h) @ lindblad.vec(rho))
    assert np.abs(comm - via_h).max() < 1e-12


def test_empty_liouvillian_rejected():
    with pytest.raises(ValueError):
        lindblad.build_liouvillian(None, [])
    with pytest.raises(ValueError):
        lindblad.build_liouvillian(None, [(-0.5, np.eye(3))])
    with pytest.raises(ValueError):
        lindblad.build_liouvillian(np.eye(3), [(1.0, np.eye(4))])


def test_zero_jump_hamiltonian_free_is_zero_superoperator():
    liouv = lindblad.build_liouvillian(np.zeros((4, 4)), [])
    assert np.abs(liouv.matrix).max() == 0.0


def test_amplitude_damping_closed_form():
    d, kappa = 20, 2.0
    liouv = lindblad.build_liouvillian(None, [(kappa, fock.annihilation(d))])
    rho0 = states.density(fock.fock_state(d, 1))
    for t in (0.05, 0.4, 1.0):
        rho = lindblad.evolve(rho0, liouv, t)
        nbar = np.trace(fock.number(d) @ rho).real
        assert abs(nbar - np.exp(-kappa * t)) < 1e-9


def test_dephasing_closed_form_matrix_elements():
    d, kappa, t = 16, 1.3, 0.45
    liouv = lindblad.build_liouvillian(None, [(kappa, fock.number(d))])
    rho0 = states.density(states.coherent(d, 1.1))
    rho = lindblad.evolve(rho0, liouv, t)
    n = np.arange(d)
    expected = rho0 * np.exp(-0.5 * kappa * t * (n[:, None] - n[None, :]) ** 2)
    assert np.abs(rho - expected).max() < 1e-9
    assert np.abs(lindblad.dephasing_map(rho0, kappa * t) - expected).max() < 1e-14


def test_dephasing_map_level_relabeling():
    rho = states.density(states.build_state(states.cat(1.5, +1), 24))
    even = np.arange(0, 24, 2)
    full = lindblad.dephasing_map(rho, 0.37)[np.ix_(even, even)]
    sub = lindblad.dephasing_map(rho[np.ix_(even, even)], 0.37, levels=even)
    assert np.abs(full - sub).max() < 1e-15


def test_trace_preservation_functional():
    d = 12
    liouv = lindblad.build_liouvillian(
        fock.number(d).real, [(0.7, fock.annihilation(d)),
                              (0.2, fock.number(d))])
    functional = lindblad.vec(np.eye(d)).conj() @ liouv.matrix
    assert np.linalg.norm(functional) < 1e-10


def test_evolve_linearity():
    rng = np.random.default_rng(3)
    d = 10
    liouv = lindblad.build_liouvillian(None, [(1.0, fock.annihilation(d))])
    r1, r2 = random_density(rng, d), random_density(rng, d)
    a, b = 0.3, 0.7
    lhs = lindblad.evolve(a * r1 + b * r2, liouv, 0.5)
    rhs = a * lindblad.evolve(r1, liouv, 0.5, check_trace=False) \
        + b * lindblad.evolve(r2, liouv, 0.5, check_trace=False)
    assert np.abs(lhs - rhs).max() < 1e-9


def test_rk_vs_expm_dual_path():
    d = 20
    liouv = lindblad.build_liouvillian(
        0.5 * fock.number(d).real, [(0.8, fock.annihilation(d))])
    rho0 = states.density(states.coherent(d, 1.0))
    rk = lindblad.evolve(rho0, liouv, 0.6, method="rk")
    ex = lindblad.evolve(rho0, liouv, 0.6, method="expm")
    assert np.abs(rk - ex).max() < 1e-8


def test_evolve_t0_and_validation():
    d = 8
    liouv = lindblad.build_liouvillian(None, [(1.0, fock.annihilation(d))])
    rho0 = states.density(fock.vacuum(d))
    assert np.abs(lindblad.evolve(rho0, liouv, 0.0) - rho0).max() == 0.0
    with pytest.raises(ValueError):
        lindblad.evolve(rho0, liouv, -1.0)
    with pytest.raises(ValueError):
        lindblad.evolve(np.eye(9), liouv, 0.1)


def test_steady_state_damping_is_vacuum():
    d = 16
    liouv = lindblad.build_liouvillian(None, [(1.0, fock.annihilation(d))])
    rho = lindblad.steady_state(liouv)
    assert np.abs(rho - states.density(fock.vacuum(d))).max() < 1e-10


def test_steady_state_sqcat_even_sector():
    d = 40
    spec = states.sqcat(1.0, 0.5, +1)
    delta = states.build_nullifier(spec, d)
    liouv = lindblad.build_liouvillian(None, [(1.0, delta)])
    with pytest.raises(SteadyStateError):
        lindblad.steady_state(liouv)  # four-dimensional kernel
    rho = lindblad.steady_state(liouv, restrict="even")
    target = states.build_state(spec, d)
    fid2 = np.real(np.vdot(target, rho @ target))
    assert 1.0 - fid2 < 1e-6


def test_steady_state_vs_long_time_evolution():
    # Stabilization + weak dephasing at the leakage-scenario parameters.
    d = 40
    spec = states.sqcat(1.0, 0.5, +1)
    delta = states.build_nullifier(spec, d)
    liouv = lindblad.build_liouvillian(
        None, [(1.0, delta), (0.01, fock.number(d))])
    rho_ss = lindblad.steady_state(liouv, restrict="even")
    sub, even = lindblad.parity_restrict(liouv)
    rho0 = states.density(states.build_state(spec, d))[np.ix_(even, even)]
    rho_t = lindblad.evolve(rho0, sub, 60.0)
    assert np.abs(rho_t - rho_ss[np.ix_(even, even)]).max() < 1e-6


def test_parity_restriction_dimensions_and_equivalence():
    d = 40
    spec = states.sqcat(1.0, 0.5, +1)
    delta = states.build_nullifier(spec, d)
    liouv = lindblad.build_liouvillian(None, [(1.0, delta)])
    sub, even = lindblad.parity_restrict(liouv)
    assert len(even) == 20
    assert sub.matrix.shape == (400, 400)
    rho0 = states.density(states.build_state(spec, d))
    full = lindblad.evolve(rho0, liouv, 0.4)
    restricted = lindblad.evolve(rho0[np.ix_(even, even)], sub, 0.4)
    assert np.abs(full[np.ix_(even, even)] - restricted).max() < 1e-10
    odd = np.arange(1, d, 2)
    assert np.abs(full[np.ix_(odd, odd)]).max() < 1e-12


def test_parity_restriction_rejects_odd_generators():
    d = 12
    liouv = lindblad.build_liouvillian(None, [(1.0, fock.annihilation(d))])
    with pytest.raises(SteadyStateError):
        lindblad.parity_restrict(liouv)


def test_positivity_and_trace_on_scenario_evolution():
    d = 30
    spec = states.cat(2.0, -1)
    delta = states.build_nullifier(spec, d)
    liouv = lindblad.build_liouvillian(
        None, [(1.0, delta), (0.02, fock.number(d))])
    rho = states.density(states.build_state(spec, d))
    for _ in range(4):
        rho = lindblad.evolve(rho, liouv, 0.5)
        assert abs(np.trace(rho).real - 1.0) < 1e-8
        assert np.abs(rho - rho.conj().T).max() < 1e-10
        assert lindblad.min_eigenvalue(rho) > -1e-7
