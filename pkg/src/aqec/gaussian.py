"""Closed-form synthesis of Gaussian gate sequences for the dissipator factors.

Gate conventions (pinned by the symplectic golden tests in the test suite):

* ``Displacement(alpha)`` is exp(alpha a^dag - alpha* a); it shifts the
  quadrature means by (sqrt(2) Re alpha, sqrt(2) Im alpha).
* ``Squeeze(r)`` is exp[r (a^2 - a^dag^2)/2]; Heisenberg action
  x -> e^{-r} x, p -> e^{r} p (r > 0 squeezes x).
* ``Rotation(phi)`` rotates phase space counterclockwise by phi,
  (x, p) -> (x cos phi - p sin phi, x sin phi + p cos phi), realized in Fock
  space as exp(+i phi a^dag a).

Sequences are stored in operator-product order: ``gates[0]`` is the leftmost
factor, i.e. the one applied last to a state.  All synthesized sequences equal
their target exponential up to a global phase, which is tracked but never
asserted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock

# Below this squeezing magnitude the tss closed forms hit 0/0 and the exact
# xi -> 0 displacement limit is returned instead.
XI_LIMIT = 1e-8

SYMPLECTIC_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class Displacement:
    alpha: complex


@dataclass(frozen=True)
class Rotation:
    phi: float


@dataclass(frozen=True)
class Squeeze:
    r: float


GaussianGate = Displacement | Rotation | Squeeze


@dataclass(frozen=True)
class GaussianGateSeq:
    """Ordered gate list; gates[0] acts last (leftmost operator factor)."""

    gates: tuple[GaussianGate, ...]
    global_phase: float = 0.0

    def __iter__(self):
        return iter(self.gates)


@dataclass(frozen=True)
class SymplecticAffine:
    """Heisenberg action on (x, p): X -> matrix @ X + shift."""

    matrix: np.ndarray  # real 2x2
    shift: np.ndarray  # real 2-vector

    @staticmethod
    def identity() -> "SymplecticAffine":
        return SymplecticAffine(np.eye(2), np.zeros(2))

    def then_inner(self, other: "SymplecticAffine") -> "SymplecticAffine":
        """Affine map of (self as outer factor) composed with an operator
        appended on the right, i.e. applied earlier."""
        return SymplecticAffine(self.matrix @ other.matrix,
                                self.matrix @ other.shift + self.shift)

    def apply(self, xp: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(xp, float) + self.shift


def gate_unitary(gate: GaussianGate, cutoff: int) -> np.ndarray:
    a = fock.annihilation(cutoff)
    ad = a.conj().T
    if isinstance(gate, Displacement):
        return fock.mat_exp(gate.alpha * ad - np.conj(gate.alpha) * a)
    if isinstance(gate, Rotation):
        return fock.mat_exp(ad @ a, scale=1j * gate.phi)
    if isinstance(gate, Squeeze):
        return fock.mat_exp((a @ a - ad @ ad) / 2, scale=gate.r)
    raise TypeError(f"not a Gaussian gate: {gate!r}")


def gate_symplectic(gate: GaussianGate) -> SymplecticAffine:
    if isinstance(gate, Displacement):
        shift = np.sqrt(2.0) * np.array([gate.alpha.real, gate.alpha.imag])
        return SymplecticAffine(np.eye(2), shift)
    if isinstance(gate, Rotation):
        c, s = np.cos(gate.phi), np.sin(gate.phi)
        return SymplecticAffine(np.array([[c, -s], [s, c]]), np.zeros(2))
    if isinstance(gate, Squeeze):
        return SymplecticAffine(np.diag([np.exp(-gate.r), np.exp(gate.r)]),
                                np.zeros(2))
    raise TypeError(f"not a Gaussian gate: {gate!r}")


def displacement_unitary(cutoff: int, alpha: complex) -> np.ndarray:
    return gate_unitary(Displacement(complex(alpha)), cutoff)


def rotation_unitary(cutoff: int, phi: float) -> np.ndarray:
    return gate_unitary(Rotation(float(phi)), cutoff)


def squeeze_unitary(cutoff: int, r: float) -> np.ndarray:
    return gate_unitary(Squeeze(float(r)), cutoff)


def seq_to_symplectic(seq: GaussianGateSeq) -> SymplecticAffine:
    """Compose the Heisenberg actions of all gates in the sequence."""
    total = SymplecticAffine.identity()
    for gate in seq.gates:
        total = total.then_inner(gate_symplectic(gate))
    return total


def seq_to_fock(seq: GaussianGateSeq, cutoff: int) -> np.ndarray:
    """Fock-space unitary of the sequence (including the tracked phase)."""
    u = fock.identity(cutoff)
    for gate in seq.gates:
        u = u @ gate_unitary(gate, cutoff)
    return np.exp(1j * seq.global_phase) * u


# ---------------------------------------------------------------------------
# Synthesis of the four dissipator factors.


def synth_cps_B(t: float, eta: float) -> GaussianGateSeq:
    """Gate sequence for exp[+i (p - eta x^2) t].

    Heisenberg action: (x, p) -> (x - t, -2 eta t x + p + eta t^2).
    """
    u = np.sqrt(1.0 + eta * eta * t * t)
    alpha = (-t + 1j * eta * t * t) / np.sqrt(2.0)
    phi1 = np.arctan(u - eta * t)
    r = np.log(u - eta * t)
    phi2 = -np.arctan(u + eta * t)
    return GaussianGateSeq((Displacement(alpha), Rotation(phi2),
                            Squeeze(r), Rotation(phi1)))


def synth_tss_A(t: float, xi: float) -> GaussianGateSeq:
    """Gate sequence for exp[-i {sqrt(2) x - xi (x^2 - p^2)} t].

    At xi = 0 the closed-form displacement argument degenerates to 0/0; the
    analytic limit exp(-i sqrt(2) x t) = D(-i t) is returned explicitly.
    """
    if abs(xi) < XI_LIMIT:
        return GaussianGateSeq((Displacement(-1j * t),))
    w = 2.0 * xi * t
    alpha = (1.0 - np.cosh(w) - 1j * np.sinh(w)) / (2.0 * xi)
    return GaussianGateSeq((Displacement(alpha), Rotation(np.pi / 4),
                            Squeeze(-w), Rotation(-np.pi / 4)))


def synth_tss_B(t: float, xi: float) -> GaussianGateSeq:
    """Gate sequence for exp[-i {sqrt(2) p + xi (x p + p x)} t].

    At xi = 0 this degenerates to exp(-i sqrt(2) p t) = D(t).
    """
    if abs(xi) < XI_LIMIT:
        return GaussianGateSeq((Displacement(complex(t)),))
    w = 2.0 * xi * t
    alpha = (np.exp(w) - 1.0) / (2.0 * xi)
    return GaussianGateSeq((Displacement(complex(alpha)), Squeeze(-w)))


def sqcat_A_target_matrix(t: float, r: float) -> np.ndarray:
    """Heisenberg matrix of exp[-i (x^2 e^{2r} - p^2 e^{-2r}) t]."""
    c2t, s2t = np.cosh(2 * t), np.sinh(2 * t)
    return np.array([[c2t, -np.exp(-2 * r) * s2t],
                     [-np.exp(2 * r) * s2t, c2t]])


def synth_sqcat_A(t: float, r: float) -> GaussianGateSeq:
    """Gate sequence R(phi + pi/2) S(rho) R(phi) for
    exp[-i (x^2 e^{2r} - p^2 e^{-2r}) t].

    tan(2 phi) = cosh(2t) / (sinh(2r) sinh(2t)) fixes phi only modulo pi/2;
    the branch is selected by matching the composed symplectic matrix against
    the target, with ties broken toward phi in (-pi/4, pi/4].
    """
    rho = np.arcsinh(np.sinh(2 * t) * np.cosh(2 * r))
    phi0 = 0.5 * np.arctan2(-np.cosh(2 * t), -np.sinh(2 * r) * np.sinh(2 * t))
    target = sqcat_A_target_matrix(t, r)

    def candidate(phi):
        return GaussianGateSeq((Rotation(phi + np.pi / 2), Squeeze(rho),
                                Rotation(phi)))

    best = None
    for phi in sorted((phi0, phi0 + np.pi / 2, phi0 - np.pi / 2),
                      key=lambda p: (not -np.pi / 4 < p <= np.pi / 4, p)):
        seq = candidate(phi)
        err = np.abs(seq_to_symplectic(seq).matrix - target).max()
        if best is None or err < best[0] - SYMPLECTIC_MATCH_TOL:
            best = (err, seq)
    err, seq = best
    if err > SYMPLECTIC_MATCH_TOL * max(1.0, np.abs(target).max()):
        raise ArithmeticError(
            f"sqcat branch selection failed: residual {err:.3e} at t={t}, r={r}")
    return seq
