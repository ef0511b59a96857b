"""Figures of merit and analytic estimates for the stabilization protocols.

Covers fidelity/leakage, the nullifier excitation number with its closed
forms, the birth-death depth estimate (relaxation of the level populations in
the target's rotated Fock basis), and the first-order perturbation solver for
the dephasing-induced leakage coefficient of the squeezed-cat code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import fock, lindblad, states
from .errors import SteadyStateError
from .states import NullifierSpec

PERTURBATION_RESIDUAL_TOL = 1e-8


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """Uhlmann fidelity against a pure target: sqrt(<psi|rho|psi>)."""
    target = np.asarray(target, complex)
    rho = np.asarray(rho, complex)
    if target.ndim != 1:
        raise ValueError("target must be a pure state vector")
    if rho.shape[-1] != len(target):
        raise ValueError(f"dimension mismatch: {rho.shape} vs {target.shape}")
    if rho.ndim == 1:
        return float(np.clip(np.abs(np.vdot(target, rho)), 0.0, 1.0))
    overlap = np.real(np.vdot(target, rho @ target))
    return float(np.sqrt(np.clip(overlap, 0.0, 1.0)))


def leakage(rho: np.ndarray, p_code: np.ndarray) -> float:
    """Population outside the code space, Tr[(I - P) rho], clamped to [0, 1]."""
    p_code = np.asarray(p_code, complex)
    defect = np.abs(p_code @ p_code - p_code).max()
    if defect > 1e-8:
        raise ValueError(f"p_code is not a projector (|P^2-P| = {defect:.3e})")
    rho = np.asarray(rho, complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    value = 1.0 - np.real(np.trace(p_code @ rho))
    return float(np.clip(value, 0.0, 1.0))


def mean_excitation(spec: NullifierSpec, initial: np.ndarray) -> float:
    """<phi| delta^dag delta |phi> for the family's nullifier."""
    initial = np.asarray(initial, complex)
    cutoff = initial.shape[-1]
    delta = states.build_nullifier(spec, cutoff)
    if initial.ndim == 1:
        return float(np.linalg.norm(delta @ initial) ** 2)
    value = np.trace(delta.conj().T @ delta @ initial)
    if abs(value.imag) > 1e-10:
        raise ValueError(f"excitation number has imaginary part {value.imag:.3e}")
    return float(value.real)


def cps_mean_excitation(r: float, eta: float) -> float:
    """Closed form of <0|delta^dag delta|0> for the cubic-phase nullifier:
    cosh(2r)/2 + (3/8) eta^2 e^{2r} - 1/2."""
    return 0.5 * np.cosh(2 * r) + 0.375 * eta ** 2 * np.exp(2 * r) - 0.5


def tss_mean_excitation(xi: float) -> float:
    """Leading order of <0|delta^dag delta|0> for the trisqueezing nullifier."""
    return 2.0 * xi ** 2


@dataclass(frozen=True)
class DepthEstimate:
    mean_excitation: float
    epsilon: float
    gamma_dt: float
    kappa_tau: float
    depth_n: int
    cps_large_r_depth: float | None = None


def depth_estimate(spec: NullifierSpec, initial: np.ndarray, epsilon: float,
                   gamma_dt: float) -> DepthEstimate:
    """Depth N ~ log(<n~>/eps) / (Gamma dt)^2 to reach squared fidelity
    1 - eps with the target.

    For the cubic-phase family the large-squeezing approximation
    [2r + log((3 eta^2 + 2)/(8 eps))] / (Gamma dt)^2, linear in r, is
    reported alongside.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    nbar = mean_excitation(spec, initial)
    if nbar <= epsilon:
        raise ValueError(
            f"depth estimate undefined: mean excitation {nbar:.3e} <= "
            f"epsilon {epsilon:.3e} (already converged)")
    kappa_tau = float(np.log(nbar / epsilon))
    depth = int(np.ceil(kappa_tau / gamma_dt ** 2))
    large_r = None
    if spec.family == "cps":
        large_r = float((2 * spec.r + np.log((3 * spec.eta ** 2 + 2)
                                             / (8 * epsilon))) / gamma_dt ** 2)
    return DepthEstimate(nbar, epsilon, gamma_dt, kappa_tau, depth, large_r)


def birth_death_P0(populations_0, kappa_t: float) -> float:
    """Ground-level population of the pure-lowering rate equation:
    P_0(t) = sum_n P_n(0) (1 - e^{-kappa t})^n."""
    populations = np.asarray(populations_0, float)
    if populations.min() < -1e-12:
        raise ValueError("populations must be nonnegative")
    total = populations.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"populations must sum to 1, got {total}")
    base = 1.0 - np.exp(-kappa_t)
    return float(np.sum(populations * base ** np.arange(len(populations))))


def target_basis_unitary(spec: NullifierSpec, cutoff: int) -> np.ndarray:
    """Defining unitary U with |target> = U|0> and nullifier U a U^dag.

    Only families generated by a unitary from the vacuum support this
    (sqvac, cps, tss).  The cubic-phase exponential here is simulation-only
    machinery for the depth oracle, never a compiled gate.
    """
    from .gaussian import squeeze_unitary  # local import avoids cycle noise

    if spec.family == "sqvac":
        return squeeze_unitary(cutoff, -spec.r)
    if spec.family == "cps":
        return states.cubic_phase_unitary(cutoff, spec.eta) \
            @ squeeze_unitary(cutoff, -spec.r)
    if spec.family == "tss":
        return states.trisqueeze_unitary(cutoff, spec.xi)
    raise ValueError(f"no vacuum-generating unitary for family {spec.family!r}")


def rotated_basis_populations(spec: NullifierSpec, state: np.ndarray) -> np.ndarray:
    """Populations of ``state`` in the basis |n~> = U|n> of the target.

    Built at an enlarged working cutoff (the state is zero-padded) so the
    basis change is faithful; the returned array sums to 1.
    """
    state = np.asarray(state, complex)
    cutoff = state.shape[-1]
    work = cutoff + states.BUILD_MARGIN[spec.family]
    u = target_basis_unitary(spec, work)
    if state.ndim == 1:
        padded = np.zeros(work, dtype=complex)
        padded[:cutoff] = state
        amps = u.conj().T @ padded
        return np.abs(amps) ** 2
    padded = np.zeros((work, work), dtype=complex)
    padded[:cutoff, :cutoff] = state
    rotated = u.conj().T @ padded @ u
    return np.real(np.diag(rotated)).clip(min=0.0)


@dataclass(frozen=True)
class LeakageExpansion:
    intercept_c: float
    slope_a: float
    max_residual: float
    epsilons: tuple[float, ...]


def fit_leakage_expansion(samples) -> LeakageExpansion:
    """Least-squares line w = C + eps * A through (eps, w) samples."""
    samples = list(samples)
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    eps = np.array([s[0] for s in samples], float)
    w = np.array([s[1] for s in samples], float)
    if len(np.unique(eps)) < 2:
        raise ValueError("epsilon values must not be all identical")
    design = np.column_stack([np.ones_like(eps), eps])
    coef, *_ = np.linalg.lstsq(design, w, rcond=None)
    resid = np.abs(design @ coef - w).max()
    return LeakageExpansion(float(coef[0]), float(coef[1]), float(resid),
                            tuple(eps))


def perturbative_A(spec: NullifierSpec, cutoff: int,
                   return_correction: bool = False,
                   tail_tol: float = states.TAIL_TOL):
    """First-order dephasing-leakage coefficient A for the squeezed-cat code.

    Solves, in the even parity sector, the stacked system
    [L0 ; vec(I)^dag] |rho1>> = [-L1 |rho0>> ; 0] with L0 = D[delta],
    L1 = D[a^dag a], rho0 the even squeezed-cat steady state, by minimum-norm
    least squares, and returns A = -Tr(P_code rho1).
    """
    if spec.family not in ("cat", "sqcat"):
        raise ValueError(f"perturbative_A requires a cat family, got {spec.family!r}")
    delta = states.build_nullifier(spec, cutoff)
    number_op = fock.number(cutoff)
    l0, even = lindblad.parity_restrict(
        lindblad.build_liouvillian(None, [(1.0, delta)]))
    l1, _ = lindblad.parity_restrict(
        lindblad.build_liouvillian(None, [(1.0, number_op)]))

    l0_mat = l0.matrix
    svals = scipy.linalg.svdvals(l0_mat)
    kernel_dim = int(np.sum(svals < 1e-8 * max(svals[0], 1.0)))
    if kernel_dim != 1:
        raise SteadyStateError(
            f"perturbation ill-posed: even-sector kernel dimension "
            f"{kernel_dim} != 1 at cutoff {cutoff}")

    rho0 = states.density(states.build_state(spec.with_sign(+1), cutoff,
                                             tail_tol=tail_tol))
    rho0_even = rho0[np.ix_(even, even)]
    n_even = len(even)
    stacked = np.vstack([l0_mat, lindblad.vec(np.eye(n_even)).conj()[None, :]])
    rhs = np.concatenate([-l1.matrix @ lindblad.vec(rho0_even), [0.0]])
    solution, *_ = np.linalg.lstsq(stacked, rhs, rcond=1e-10)
    rho1_even = lindblad.unvec(solution)
    rho1_even = 0.5 * (rho1_even + rho1_even.conj().T)

    residual = np.linalg.norm(l0.apply(rho1_even) + l1.apply(rho0_even))
    if residual > PERTURBATION_RESIDUAL_TOL:
        raise SteadyStateError(
            f"perturbation solve residual {residual:.3e} exceeds "
            f"{PERTURBATION_RESIDUAL_TOL:.0e}")

    rho1 = lindblad.embed_parity_sector(rho1_even, cutoff)
    p_code = states.code_projector(spec, cutoff, tail_tol=tail_tol)
    a_coeff = -float(np.real(np.trace(p_code @ rho1)))
    if return_correction:
        return a_coeff, rho1
    return a_coeff
