"""Truncated Fock-space operator algebra for a single bosonic mode.

Operators are plain complex numpy arrays; the cutoff D is simply the matrix
dimension.  Joint qubit-mode operators are 2D x 2D arrays ordered qubit (x) mode,
i.e. built with ``np.kron(pauli, mode_op)``.

Truncation corrupts the last row/column of ladder-operator identities, so the
invariant helpers in this module measure on interior sub-blocks.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericError

HERMITICITY_TOL = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

PAULI = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z, "I": PAULI_I}


def _check_cutoff(cutoff: int) -> int:
    if int(cutoff) != cutoff or cutoff < 2:
        raise ValueError(f"Fock cutoff must be an integer >= 2, got {cutoff!r}")
    return int(cutoff)


def annihilation(cutoff: int) -> np.ndarray:
    """Ladder operator with <n-1|a|n> = sqrt(n)."""
    d = _check_cutoff(cutoff)
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def creation(cutoff: int) -> np.ndarray:
    return annihilation(cutoff).conj().T


def number(cutoff: int) -> np.ndarray:
    d = _check_cutoff(cutoff)
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def identity(cutoff: int) -> np.ndarray:
    return np.eye(_check_cutoff(cutoff), dtype=complex)


def quadratures(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (x, p) with x = (a + a^dag)/sqrt(2), p = -i(a - a^dag)/sqrt(2)."""
    a = annihilation(cutoff)
    ad = a.conj().T
    x = (a + ad) / np.sqrt(2)
    p = -1j * (a - ad) / np.sqrt(2)
    return x, p


def parity(cutoff: int) -> np.ndarray:
    """Photon-number parity exp(i pi a^dag a) = diag(+1, -1, +1, ...)."""
    d = _check_cutoff(cutoff)
    return np.diag((-1.0 + 0j) ** np.arange(d))


def fock_state(cutoff: int, n: int) -> np.ndarray:
    d = _check_cutoff(cutoff)
    if not 0 <= n < d:
        raise ValueError(f"Fock index {n} outside cutoff {d}")
    vec = np.zeros(d, dtype=complex)
    vec[n] = 1.0
    return vec


def vacuum(cutoff: int) -> np.ndarray:
    return fock_state(cutoff, 0)


def is_hermitian(op: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    scale = max(np.abs(op).max(), 1.0)
    return np.abs(op - op.conj().T).max() <= tol * scale


def mat_exp(op: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """Matrix exponential exp(scale * op).

    Hermitian and anti-Hermitian ``op`` (the dominant case: every
    exp(-i H t)) go through an eigendecomposition, which keeps the result
    unitary to machine precision; anything else falls back to
    scaling-and-squaring Pade.
    """
    op = np.ascontiguousarray(op, dtype=complex)
    if not np.all(np.isfinite(op)):
        raise NumericError("mat_exp: non-finite entries in generator")
    if not np.isfinite(scale):
        raise NumericError("mat_exp: non-finite scale")
    if is_hermitian(op):
        w, v = np.linalg.eigh(op)
        result = (v * np.exp(scale * w)) @ v.conj().T
    elif is_hermitian(1j * op):
        w, v = np.linalg.eigh(1j * op)  # op = -i * Hermitian
        result = (v * np.exp(-1j * scale * w)) @ v.conj().T
    else:
        return scipy.linalg.expm(scale * op)
    # Anti-Hermitian exponent means the result must be unitary.
    exponent_anti_hermitian = is_hermitian(1j * scale * op, tol=1e-10)
    if exponent_anti_hermitian:
        defect = np.abs(result.conj().T @ result - np.eye(len(result))).max()
        if defect > 1e-10:
            raise NumericError(f"mat_exp: unitarity defect {defect:.3e}")
    return result


def embed_conditional(pauli, mode_op: np.ndarray) -> np.ndarray:
    """Tensor a Pauli factor with a mode operator, qubit-first ordering."""
    if isinstance(pauli, str):
        try:
            pauli = PAULI[pauli.upper()]
        except KeyError:
            raise ValueError(f"unknown Pauli label {pauli!r}") from None
    pauli = np.asarray(pauli, dtype=complex)
    mode_op = np.asarray(mode_op, dtype=complex)
    if pauli.shape != (2, 2):
        raise ValueError(f"qubit factor must be 2x2, got {pauli.shape}")
    if mode_op.ndim != 2 or mode_op.shape[0] != mode_op.shape[1]:
        raise ValueError(f"mode operator must be square, got {mode_op.shape}")
    return np.kron(pauli, mode_op)


def embed_mode(mode_op: np.ndarray) -> np.ndarray:
    """I_qubit (x) mode_op on the joint space."""
    return embed_conditional("I", mode_op)


def join_qubit_mode(qubit_vec: np.ndarray, mode_vec: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(qubit_vec, complex), np.asarray(mode_vec, complex))


# ---------------------------------------------------------------------------
# Interior sub-block helpers.  Ladder truncation corrupts the top rows and
# columns, so quantitative operator comparisons exclude a boundary margin.

def sub_block(op: np.ndarray, keep: int) -> np.ndarray:
    return op[:keep, :keep]


def interior_keep(dim: int, exclude_fraction: float = 0.1) -> int:
    margin = max(1, int(np.ceil(dim * exclude_fraction)))
    return dim - margin


def unitarity_defect(u: np.ndarray, exclude_fraction: float = 0.1) -> float:
    """max |U^dag U - I| restricted to the interior sub-block."""
    keep = interior_keep(len(u), exclude_fraction)
    gram = u.conj().T @ u
    return np.abs(sub_block(gram, keep) - np.eye(keep)).max()


def phase_aligned_distance(a: np.ndarray, b: np.ndarray, keep: int | None = None) -> float:
    """Frobenius distance between a and e^{i theta} b, theta chosen from the
    largest-magnitude element of a; optionally restricted to [:keep, :keep]."""
    if keep is not None:
        a = sub_block(a, keep)
        b = sub_block(b, keep)
    idx = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    if np.abs(b[idx]) == 0:
        return float(np.linalg.norm(a - b))
    phase = a[idx] / b[idx]
    phase /= np.abs(phase)
    return float(np.linalg.norm(a - phase * b))
