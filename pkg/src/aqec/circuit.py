"""Compilation of a nullifier into per-step stabilization channels.

One step couples a fresh ancilla qubit (ground state |0>) to the mode through
the factor unitaries

    A(dt) = exp[-i Gamma dt X (x) (delta + delta^dag)/2]
    B(dt) = exp[-i Gamma dt Y (x) (delta - delta^dag)/(2i)]

whose sum of generators is sigma+ (x) delta + sigma- (x) delta^dag, arranged
per Trotter scheme, then traces the qubit out (instantaneous, perfect
reset).  Schemes: ``st`` alternates Sharpen = A B (B applied first) with
Trim = B A on successive steps; ``bsb`` = A(dt/2) B(dt) A(dt/2);
``sbs`` = B(dt/2) A(dt) B(dt/2).  Every scheme occupies wall-clock 2*dt.

Two execution paths build the same step unitary: direct exponentiation of the
joint generators, and a gate-compiled path expanding each factor into a qubit
basis rotation conjugating a Z-conditioned pair of Gaussian-gate branches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock, gaussian, lindblad
from .errors import CompileError, IntegrationError
from .states import NullifierSpec, build_nullifier

SCHEMES = ("st", "bsb", "sbs")

TRACE_STEP_TOL = 1e-8

# Target per-substep unitary action (radians at the spectral scale) for the
# Strang splitting of noisy factors; validated against a brute-force
# integrator in the test suite.
_SUBSTEP_ACTION = 0.5
_SUBSTEP_MIN = 8
_SUBSTEP_MAX = 128


@dataclass(frozen=True)
class TrotterFactor:
    kind: str  # "A" or "B"
    scale: float  # fraction of dt this factor occupies (1.0 or 0.5)


def scheme_factors(scheme: str, step_index: int = 0) -> tuple[TrotterFactor, ...]:
    """Factors in application order (first entry acts first on the state)."""
    if scheme == "st":
        if step_index % 2 == 0:  # Sharpen: A(dt) B(dt) as an operator product
            return (TrotterFactor("B", 1.0), TrotterFactor("A", 1.0))
        return (TrotterFactor("A", 1.0), TrotterFactor("B", 1.0))  # Trim
    if scheme == "bsb":
        return (TrotterFactor("A", 0.5), TrotterFactor("B", 1.0),
                TrotterFactor("A", 0.5))
    if scheme == "sbs":
        return (TrotterFactor("B", 0.5), TrotterFactor("A", 1.0),
                TrotterFactor("B", 0.5))
    raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")


def mode_factor_operators(spec: NullifierSpec, cutoff: int) -> dict[str, np.ndarray]:
    """Hermitian mode operators h_A = (delta + delta^dag)/2 and
    h_B = (delta - delta^dag)/(2i)."""
    delta = build_nullifier(spec, cutoff)
    h_a = (delta + delta.conj().T) / 2.0
    h_b = (delta - delta.conj().T) / 2.0j
    return {"A": h_a, "B": h_b}


def _joint_generator(kind: str, h: np.ndarray) -> np.ndarray:
    # With textbook Pauli matrices and the ancilla reset to index 0, the
    # coupling that records a delta-jump in the ancilla is
    # sigma+ (x) delta + sigma- (x) delta^dag = X (x) h_A + Y (x) h_B,
    # which annihilates |0>_q (x) |dark>.  (A bath replacement written with
    # -Y instead presumes the opposite-sign Y convention; the dark-state
    # fixed-point and decay-rate tests pin this sign.)
    if kind == "A":
        return fock.embed_conditional("X", h)
    if kind == "B":
        return fock.embed_conditional("Y", h)
    raise ValueError(f"unknown factor kind {kind!r}")


def build_AB(spec: NullifierSpec, gamma_dt: float, cutoff: int
             ) -> tuple[np.ndarray, np.ndarray]:
    """Direct-exponential factor unitaries (A(dt), B(dt)) on the joint space."""
    h = mode_factor_operators(spec, cutoff)
    a = fock.mat_exp(_joint_generator("A", h["A"]), scale=-1j * gamma_dt)
    b = fock.mat_exp(_joint_generator("B", h["B"]), scale=-1j * gamma_dt)
    return a, b


# ---------------------------------------------------------------------------
# Gate-compiled path.

_W_Y_BASIS = fock.mat_exp(fock.PAULI_X, scale=1j * np.pi / 4)  # W Z W^dag = Y


@dataclass(frozen=True)
class FactorProgram:
    """One factor as basis rotation + Z-conditioned Gaussian branches.

    joint unitary = (basis (x) I) . [branch_plus (+) branch_minus] . (basis^dag (x) I),
    where branch_plus acts when the qubit is |0> (Z = +1).  The scalar
    ``phase_plus/minus`` are the qubit-conditional phases: the constant terms
    of the factor generator (cat-family -x0^2, p0^2, -2 x0 p0 pieces) plus
    the synthesis phases of the Gaussian sequences.
    """

    kind: str
    basis_label: str  # "X" or "Y"
    branch_plus: gaussian.GaussianGateSeq
    branch_minus: gaussian.GaussianGateSeq
    phase_plus: float
    phase_minus: float

    @property
    def basis(self) -> np.ndarray:
        return fock.HADAMARD if self.basis_label == "X" else _W_Y_BASIS

    def to_unitary(self, cutoff: int) -> np.ndarray:
        up = np.exp(1j * self.phase_plus) * gaussian.seq_to_fock(self.branch_plus, cutoff)
        um = np.exp(1j * self.phase_minus) * gaussian.seq_to_fock(self.branch_minus, cutoff)
        d = cutoff
        block = np.zeros((2 * d, 2 * d), dtype=complex)
        block[:d, :d] = up
        block[d:, d:] = um
        v = fock.embed_conditional(self.basis, fock.identity(d))
        return v @ block @ v.conj().T

    def record(self) -> dict:
        def gates(seq):
            out = []
            for g in seq.gates:
                if isinstance(g, gaussian.Displacement):
                    out.append({"gate": "displacement",
                                "alpha_re": g.alpha.real, "alpha_im": g.alpha.imag})
                elif isinstance(g, gaussian.Rotation):
                    out.append({"gate": "rotation", "phi": g.phi})
                else:
                    out.append({"gate": "squeeze", "r": g.r})
            return out
        return {"factor": self.kind, "basis": self.basis_label,
                "branch_plus": gates(self.branch_plus),
                "branch_minus": gates(self.branch_minus),
                "phase_plus": self.phase_plus, "phase_minus": self.phase_minus}


def _displacement_for_x_exponent(lam: float) -> gaussian.GaussianGateSeq:
    # exp(-i lam x) = D(-i lam / sqrt(2))
    return gaussian.GaussianGateSeq((gaussian.Displacement(-1j * lam / np.sqrt(2)),))


def _branch_sequence(spec: NullifierSpec, kind: str, s: int, theta: float
                     ) -> gaussian.GaussianGateSeq:
    """Gate sequence realizing exp(s * i * theta * h_kind) up to phase."""
    if spec.family in ("sqvac", "cps"):
        eta = spec.eta if spec.family == "cps" else 0.0
        if kind == "A":
            # h = (e^-r/sqrt2) x: exp(s i theta h) = exp(-i lam x), lam = -s theta e^-r/sqrt2
            return _displacement_for_x_exponent(-s * theta * np.exp(-spec.r) / np.sqrt(2))
        # h = (e^r/sqrt2)(p - eta x^2)
        return gaussian.synth_cps_B(s * theta * np.exp(spec.r) / np.sqrt(2), eta)
    if spec.family == "tss":
        if kind == "A":
            # h = [sqrt2 x - xi (x^2 - p^2)] / 2
            return gaussian.synth_tss_A(-s * theta / 2.0, spec.xi)
        # h = [sqrt2 p + xi (xp + px)] / 2
        return gaussian.synth_tss_B(-s * theta / 2.0, spec.xi)
    if spec.family in ("cat", "sqcat"):
        r = spec.r if spec.family == "sqcat" else 0.0
        if kind == "A":
            # h = [x^2 e^2r - p^2 e^-2r]/2 - (x0^2 e^2r - p0^2 e^-2r)/2
            return gaussian.synth_sqcat_A(-s * theta / 2.0, r)
        # h = (xp + px)/2 - x0 p0;  exp(i lam (xp+px)) = S(2 lam)
        return gaussian.GaussianGateSeq((gaussian.Squeeze(s * theta),))
    raise CompileError(f"no Gaussian expansion for family {spec.family!r}")


def _branch_phase(seq: gaussian.GaussianGateSeq, h: np.ndarray, s: int,
                  theta: float, cutoff: int) -> float:
    """Phase making exp(i phase) * seq equal exp(s i theta h).

    The synthesized sequences match their generator exponentials only up to a
    global phase, and the nullifiers' constant terms (cat-family -x0^2 etc.)
    add qubit-branch phases on top; between the two ancilla branches these
    become relative phases that the compiled channel must carry, so they are
    determined here against the direct exponential on the truncation-safe
    interior block.
    """
    direct = fock.mat_exp(h, scale=s * 1j * theta)
    compiled = gaussian.seq_to_fock(seq, cutoff)
    keep = fock.interior_keep(cutoff, 0.4)
    block_d = direct[:keep, :keep]
    block_c = compiled[:keep, :keep]
    idx = np.unravel_index(np.argmax(np.abs(block_d)), block_d.shape)
    ratio = block_d[idx] / block_c[idx]
    return float(np.angle(ratio))


def compile_factor(spec: NullifierSpec, kind: str, theta: float,
                   cutoff: int, h: np.ndarray) -> FactorProgram:
    """Conditional-Gaussian program for exp(-i theta {X, Y} (x) h_kind).

    theta is the accumulated action gamma_dt * scale of this factor.  After
    the basis change (X = H Z H, Y = W Z W^dag) the qubit-0 branch carries
    exp(-i theta h) and the qubit-1 branch exp(+i theta h).
    """
    if kind not in ("A", "B"):
        raise ValueError(f"unknown factor kind {kind!r}")
    basis = "X" if kind == "A" else "Y"
    seq_p = _branch_sequence(spec, kind, -1, theta)
    seq_m = _branch_sequence(spec, kind, +1, theta)
    ph_p = _branch_phase(seq_p, h, -1, theta, cutoff)
    ph_m = _branch_phase(seq_m, h, +1, theta, cutoff)
    return FactorProgram(kind, basis, seq_p, seq_m, ph_p, ph_m)


# ---------------------------------------------------------------------------
# Step channels.


@dataclass
class StepChannel:
    spec: NullifierSpec
    scheme: str
    gamma_dt: float
    cutoff: int  # mode dimension (possibly a parity-sector dimension)
    factors: tuple[TrotterFactor, ...]
    unitary: np.ndarray  # joint (2*cutoff x 2*cutoff)
    path: str
    factor_eigs: dict[str, tuple[np.ndarray, np.ndarray]]  # kind -> (w, V) of G_kind
    programs: tuple[FactorProgram, ...] | None = None
    reset: bool = True

    def factor_unitary(self, factor: TrotterFactor) -> np.ndarray:
        w, v = self.factor_eigs[factor.kind]
        phases = np.exp(-1j * self.gamma_dt * factor.scale * w)
        return (v * phases) @ v.conj().T


def compile_step(spec: NullifierSpec, scheme: str, gamma_dt: float, cutoff: int,
                 step_index: int = 0, path: str = "direct",
                 parity_sector: str | None = None) -> StepChannel:
    """Compile one Trotter step into a StepChannel.

    ``path='direct'`` exponentiates the joint generators; ``path='gates'``
    assembles the unitary from the conditional-Gaussian factor programs (not
    available with a parity-sector restriction, where gate matrices lose
    their block structure).
    """
    factors = scheme_factors(scheme, step_index)
    h = mode_factor_operators(spec, cutoff)
    if parity_sector == "even":
        pi = fock.parity(cutoff)
        even = np.arange(0, cutoff, 2)
        for kind, op in h.items():
            if np.abs(op @ pi - pi @ op).max() > 1e-10:
                raise CompileError(f"factor {kind} not parity-even for {spec.family}")
        h = {kind: op[np.ix_(even, even)] for kind, op in h.items()}
        dim = len(even)
        if path != "direct":
            raise CompileError("gate-compiled path unavailable in a parity sector")
    elif parity_sector is None:
        dim = cutoff
    else:
        raise ValueError(f"unknown parity sector {parity_sector!r}")

    eigs = {}
    for kind in ("A", "B"):
        g = _joint_generator(kind, h[kind])
        w, v = np.linalg.eigh(g)
        eigs[kind] = (w, v)

    programs = None
    if path == "direct":
        unitary = np.eye(2 * dim, dtype=complex)
        channel = StepChannel(spec, scheme, gamma_dt, dim, factors, unitary,
                              path, eigs)
        for f in factors:
            unitary = channel.factor_unitary(f) @ unitary
        channel.unitary = unitary
    elif path == "gates":
        programs = tuple(compile_factor(spec, f.kind, gamma_dt * f.scale,
                                        dim, h[f.kind])
                         for f in factors)
        unitary = np.eye(2 * dim, dtype=complex)
        for prog in programs:
            unitary = prog.to_unitary(dim) @ unitary
        channel = StepChannel(spec, scheme, gamma_dt, dim, factors, unitary,
                              path, eigs, programs)
    else:
        raise ValueError(f"unknown path {path!r}")
    return channel


def step_program_json(step: StepChannel, dt_seconds: float) -> list[dict]:
    """Ordered gate records {factor, branch gate lists, wall-clock duration}."""
    if step.programs is None:
        raise ValueError("step was not compiled on the gate path")
    return [dict(prog.record(), duration_s=f.scale * dt_seconds)
            for f, prog in zip(step.factors, step.programs)]


# ---------------------------------------------------------------------------
# Application of a step to a mode density matrix.


def _substep_count(gamma_dt: float, scale: float, w: np.ndarray,
                   override: int | None) -> int:
    if override is not None:
        return override
    action = abs(gamma_dt) * scale * 0.5 * (w.max() - w.min())
    return int(np.clip(np.ceil(action / _SUBSTEP_ACTION), _SUBSTEP_MIN,
                       _SUBSTEP_MAX))


def apply_step(rho_mode: np.ndarray, step: StepChannel,
               noise: lindblad.NoiseModel | None = None,
               dt_seconds: float | None = None,
               substeps: int | None = None) -> np.ndarray:
    """One stabilization step: couple a ground-state ancilla, run the factor
    unitaries (with decoherence active for the factor wall-clock times when a
    noise model is given), trace the ancilla out.

    Noisy factors use a Strang splitting: the factor Hamiltonian
    Gamma * G_kind is applied exactly in its eigenbasis while the jump terms
    are interleaved in first order over substeps.
    """
    d = step.cutoff
    if rho_mode.shape != (d, d):
        raise ValueError(f"state dimension {rho_mode.shape} != cutoff {d}")
    qubit0 = np.zeros((2, 2), dtype=complex)
    qubit0[0, 0] = 1.0
    rho = np.kron(qubit0, rho_mode)

    if noise is None or noise.is_trivial:
        rho = step.unitary @ rho @ step.unitary.conj().T
    else:
        if dt_seconds is None:
            raise ValueError("dt_seconds is required for a noisy step")
        joint = noise.joint_jumps(d)
        jumps = [(rate, op, op.conj().T) for rate, op in joint]
        anticomm = sum(0.5 * rate * op.conj().T @ op for rate, op in joint)

        def dissipate(r, tau):
            out = r - tau * (anticomm @ r + r @ anticomm)
            for rate, op, opd in jumps:
                out = out + (rate * tau) * (op @ r @ opd)
            return out

        for f in step.factors:
            w, v = step.factor_eigs[f.kind]
            m = _substep_count(step.gamma_dt, f.scale, w, substeps)
            tau = dt_seconds * f.scale / m
            phases = np.exp(-1j * step.gamma_dt * f.scale / m * w)
            u_sub = (v * phases) @ v.conj().T
            for _ in range(m):
                rho = dissipate(rho, tau / 2)
                rho = u_sub @ rho @ u_sub.conj().T
                rho = dissipate(rho, tau / 2)

    rho_mode_out = rho[:d, :d] + rho[d:, d:]  # partial trace over the qubit
    drift = abs(np.trace(rho_mode_out).real - 1.0)
    if drift > TRACE_STEP_TOL:
        raise IntegrationError(f"apply_step: trace drift {drift:.3e}")
    return 0.5 * (rho_mode_out + rho_mode_out.conj().T)


def run_protocol(rho0_mode: np.ndarray, spec: NullifierSpec, scheme: str,
                 n_steps: int, gamma_dt: float, cutoff: int,
                 noise: lindblad.NoiseModel | None = None,
                 dt_seconds: float | None = None,
                 path: str = "direct",
                 parity_sector: str | None = None,
                 substeps: int | None = None) -> list[np.ndarray]:
    """Repeated stabilization steps; returns the mode state after each step.

    The Sharpen-Trim scheme alternates its factor order per step, starting
    with Sharpen.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    rho0_mode = np.asarray(rho0_mode, complex)
    if rho0_mode.ndim == 1:
        rho0_mode = np.outer(rho0_mode, rho0_mode.conj())
    steps = {}
    for index in (0, 1) if scheme == "st" else (0,):
        steps[index] = compile_step(spec, scheme, gamma_dt, cutoff,
                                    step_index=index, path=path,
                                    parity_sector=parity_sector)
    trajectory = []
    rho = rho0_mode
    for k in range(n_steps):
        step = steps[k % 2 if scheme == "st" else 0]
        rho = apply_step(rho, step, noise=noise, dt_seconds=dt_seconds,
                         substeps=substeps)
        trajectory.append(rho)
    return trajectory
