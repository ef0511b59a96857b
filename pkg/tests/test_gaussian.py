import numpy as np
import pytest

from aqec import fock, gaussian

D = 40
# Interior sub-block for Fock-level synthesis comparisons: the lowest 35% of
# indices, chosen so the symplectic light cone of the kept columns stays
# below the cutoff across the deployment parameter ranges.
KEEP = 14

# Parameter draw ranges per factor, matching where each synthesis is deployed
# (branch times Gamma*dt*e^r/sqrt2 etc. for Gamma*dt in the scenario grids).
CPS_T, CPS_ETA = (0.05, 0.82), (0.0, 0.5)
TSS_T, TSS_XI = (0.025, 0.325), (0.01, 0.3)
SQCAT_T, SQCAT_R = (0.01, 0.12), (0.0, 0.75)


def gen_cps(d, t, eta):
    x, p = fock.quadratures(d)
    return 1j * (p - eta * x @ x) * t


def gen_tss_a(d, t, xi):
    x, p = fock.quadratures(d)
    return -1j * (np.sqrt(2) * x - xi * (x @ x - p @ p)) * t


def gen_tss_b(d, t, xi):
    x, p = fock.quadratures(d)
    return -1j * (np.sqrt(2) * p + xi * (x @ p + p @ x)) * t


def gen_sqcat(d, t, r):
    x, p = fock.quadratures(d)
    return -1j * (np.exp(2 * r) * x @ x - np.exp(-2 * r) * p @ p) * t


def synth_distance(seq, generator):
    return fock.phase_aligned_distance(
        gaussian.seq_to_fock(seq, D), fock.mat_exp(generator), keep=KEEP)


def test_rotation_phase_on_fock_state():
    u = gaussian.rotation_unitary(8, np.pi)
    one = fock.fock_state(8, 1)
    assert np.abs(u @ one + one).max() < 1e-12


def test_displacement_inverse_pair():
    u = gaussian.displacement_unitary(30, 0.8 - 0.3j) \
        @ gaussian.displacement_unitary(30, -0.8 + 0.3j)
    assert fock.phase_aligned_distance(u, np.eye(30), keep=24) < 1e-10


def test_gate_symplectics_have_unit_determinant():
    rng = np.random.default_rng(5)
    for _ in range(20):
        seq = gaussian.GaussianGateSeq((
            gaussian.Displacement(complex(*rng.standard_normal(2))),
            gaussian.Rotation(rng.uniform(-np.pi, np.pi)),
            gaussian.Squeeze(rng.uniform(-1, 1))))
        sym = gaussian.seq_to_symplectic(seq)
        assert abs(np.linalg.det(sym.matrix) - 1.0) < 1e-12


def test_empty_sequence_is_identity():
    sym = gaussian.seq_to_symplectic(gaussian.GaussianGateSeq(()))
    assert np.abs(sym.matrix - np.eye(2)).max() == 0.0
    assert np.abs(sym.shift).max() == 0.0


# --- golden symplectic matrices -------------------------------------------

def test_golden_cps_symplectic():
    t, eta = 0.7, 0.4
    sym = gaussian.seq_to_symplectic(gaussian.synth_cps_B(t, eta))
    target = np.array([[1.0, 0.0], [-2 * eta * t, 1.0]])
    assert np.abs(sym.matrix - target).max() < 1e-12
    assert np.abs(sym.shift - np.array([-t, eta * t * t])).max() < 1e-12


def test_golden_tss_a_symplectic():
    t, xi = 0.3, 0.23
    w = 2 * xi * t
    sym = gaussian.seq_to_symplectic(gaussian.synth_tss_A(t, xi))
    target = np.array([[np.cosh(w), np.sinh(w)], [np.sinh(w), np.cosh(w)]])
    shift = np.array([1 - np.cosh(w), -np.sinh(w)]) / (np.sqrt(2) * xi)
    assert np.abs(sym.matrix - target).max() < 1e-12
    assert np.abs(sym.shift - shift).max() < 1e-12


def test_golden_tss_b_symplectic():
    t, xi = 0.3, 0.23
    w = 2 * xi * t
    sym = gaussian.seq_to_symplectic(gaussian.synth_tss_B(t, xi))
    assert np.abs(sym.matrix - np.diag([np.exp(w), np.exp(-w)])).max() < 1e-12
    shift = np.array([(np.exp(w) - 1) / (np.sqrt(2) * xi), 0.0])
    assert np.abs(sym.shift - shift).max() < 1e-12


def test_golden_sqcat_symplectic():
    t, r = 0.13, 0.5
    sym = gaussian.seq_to_symplectic(gaussian.synth_sqcat_A(t, r))
    assert np.abs(sym.matrix - gaussian.sqcat_A_target_matrix(t, r)).max() < 1e-12


# --- closed-form structure -------------------------------------------------

def test_cps_zero_time_parameters():
    seq = gaussian.synth_cps_B(0.0, 0.3)
    disp, rot2, squeeze, rot1 = seq.gates
    assert disp.alpha == 0.0
    assert abs(rot1.phi - np.pi / 4) < 1e-15
    assert abs(squeeze.r) < 1e-15
    assert abs(rot2.phi + np.pi / 4) < 1e-15
    sym = gaussian.seq_to_symplectic(seq)
    assert np.abs(sym.matrix - np.eye(2)).max() < 1e-14
    assert np.abs(sym.shift).max() == 0.0


def test_cps_eta_zero_is_momentum_displacement():
    # exp(i p t) displaces x by -t; verify through the symplectic composition
    t = 1.0
    sym = gaussian.seq_to_symplectic(gaussian.synth_cps_B(t, 0.0))
    assert np.abs(sym.matrix - np.eye(2)).max() < 1e-12
    assert np.abs(sym.shift - np.array([-t, 0.0])).max() < 1e-12


def test_tss_zero_time_identity():
    for synth in (gaussian.synth_tss_A, gaussian.synth_tss_B):
        sym = gaussian.seq_to_symplectic(synth(0.0, 0.23))
        assert np.abs(sym.matrix - np.eye(2)).max() < 1e-12
        assert np.abs(sym.shift).max() < 1e-12


def test_tss_xi_limit_branches():
    t = 0.5
    seq_a = gaussian.synth_tss_A(t, 0.0)
    assert len(seq_a.gates) == 1
    assert abs(seq_a.gates[0].alpha - (-1j * t)) < 1e-14
    seq_b = gaussian.synth_tss_B(t, 0.0)
    assert len(seq_b.gates) == 1
    assert abs(seq_b.gates[0].alpha - t) < 1e-14
    # limits agree with the closed form just above the threshold
    for synth, gen in ((gaussian.synth_tss_A, gen_tss_a),
                       (gaussian.synth_tss_B, gen_tss_b)):
        assert synth_distance(synth(t, 0.0), gen(D, t, 0.0)) < 1e-8
        assert synth_distance(synth(t, 1e-7), gen(D, t, 1e-7)) < 1e-8


def test_sqcat_zero_time_identity():
    seq = gaussian.synth_sqcat_A(0.0, 0.5)
    sym = gaussian.seq_to_symplectic(seq)
    assert np.abs(sym.matrix - np.eye(2)).max() < 1e-12
    assert abs(seq.gates[1].r) < 1e-15


def test_sqcat_r0_alternative_decomposition():
    # At r = 0 the generator x^2 - p^2 is squeezing along the diagonals; the
    # sequence must match the alternative form R(-pi/4) S(-2t) R(pi/4)
    # (CCW-rotation convention) up to phase.
    t = 0.1
    alt = gaussian.GaussianGateSeq((gaussian.Rotation(-np.pi / 4),
                                    gaussian.Squeeze(-2 * t),
                                    gaussian.Rotation(np.pi / 4)))
    got = gaussian.seq_to_fock(gaussian.synth_sqcat_A(t, 0.0), D)
    ref = gaussian.seq_to_fock(alt, D)
    assert fock.phase_aligned_distance(got, ref, keep=KEEP) < 1e-10


def test_spec_point_distances():
    assert synth_distance(gaussian.synth_cps_B(0.1, 0.3),
                          gen_cps(D, 0.1, 0.3)) < 1e-7
    assert synth_distance(gaussian.synth_tss_A(0.05, 0.23),
                          gen_tss_a(D, 0.05, 0.23)) < 1e-7
    assert synth_distance(gaussian.synth_tss_B(0.05, 0.23),
                          gen_tss_b(D, 0.05, 0.23)) < 1e-7
    assert synth_distance(gaussian.synth_sqcat_A(0.13, 0.5),
                          gen_sqcat(D, 0.13, 0.5)) < 1e-7


@pytest.mark.parametrize("synth,gen,t_range,p_range", [
    (gaussian.synth_cps_B, gen_cps, CPS_T, CPS_ETA),
    (gaussian.synth_tss_A, gen_tss_a, TSS_T, TSS_XI),
    (gaussian.synth_tss_B, gen_tss_b, TSS_T, TSS_XI),
    (gaussian.synth_sqcat_A, gen_sqcat, SQCAT_T, SQCAT_R),
])
def test_synthesis_soundness_random_draws(synth, gen, t_range, p_range):
    rng = np.random.default_rng(20240817)
    worst = 0.0
    for _ in range(50):
        t = rng.uniform(*t_range) * rng.choice([-1.0, 1.0])
        param = rng.uniform(*p_range)
        worst = max(worst, synth_distance(synth(t, param), gen(D, t, param)))
    assert worst < 1e-6, f"worst interior distance {worst:.3e}"


def test_symplectic_fock_moment_consistency():
    # The affine map must predict the Heisenberg transformation of the
    # quadrature means and covariances of Gaussian probe states.
    d = 50
    x, p = fock.quadratures(d)
    ops = {"x": x, "p": p}
    probes = []
    from aqec.states import coherent
    probes.append(coherent(d, 0.7 + 0.4j))
    probes.append(gaussian.squeeze_unitary(d, 0.3) @ coherent(d, -0.5 + 0.2j))

    def moments(psi):
        mean = np.array([np.vdot(psi, ops[k] @ psi).real for k in ("x", "p")])
        cov = np.zeros((2, 2))
        for i, a in enumerate("xp"):
            for j, b in enumerate("xp"):
                sym = 0.5 * (ops[a] @ ops[b] + ops[b] @ ops[a])
                cov[i, j] = np.vdot(psi, sym @ psi).real - mean[i] * mean[j]
        return mean, cov

    cases = [gaussian.synth_cps_B(0.4, 0.3), gaussian.synth_tss_A(0.2, 0.2),
             gaussian.synth_sqcat_A(0.1, 0.5)]
    for seq in cases:
        u = gaussian.seq_to_fock(seq, d)
        sym = gaussian.seq_to_symplectic(seq)
        for psi in probes:
            mean0, cov0 = moments(psi)
            mean1, cov1 = moments(u @ psi)
            assert np.abs(mean1 - sym.apply(mean0)).max() < 1e-7
            assert np.abs(cov1 - sym.matrix @ cov0 @ sym.matrix.T).max() < 1e-7


def test_sqcat_branch_deterministic():
    a = gaussian.synth_sqcat_A(0.08, 0.6)
    b = gaussian.synth_sqcat_A(0.08, 0.6)
    assert a == b
    # moving through t=0 keeps the matrix matched exactly
    for t in (-0.12, -1e-9, 0.0, 1e-9, 0.12):
        sym = gaussian.seq_to_symplectic(gaussian.synth_sqcat_A(t, 0.4))
        assert np.abs(sym.matrix
                      - gaussian.sqcat_A_target_matrix(t, 0.4)).max() < 1e-12
