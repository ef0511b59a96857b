"""GKSL master-equation machinery.

The Liouvillian d rho/dt = -i[H, rho] + sum_i kappa_i D[L_i] rho with
D[L] rho = L rho L^dag - {L^dag L, rho}/2 is kept as (H, jump list) and
applied matrix-free; the dense superoperator in column-stacking vectorization
(vec(A rho B) = (B^T kron A) vec(rho)) is materialized lazily for null-space
solves and the perturbation machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg

from . import fock
from .errors import IntegrationError, SteadyStateError

RK_RTOL = 1e-9
RK_ATOL = 1e-12
TRACE_TOL = 1e-8
NULLSPACE_TOL = 1e-8
# Above this vectorized dimension the dense SVD null-space solve is refused;
# restrict the parity sector or lower the cutoff instead.
DENSE_SOLVE_LIMIT = 2100


@dataclass(frozen=True)
class NoiseModel:
    """Error rates: photon loss (jump a), mode dephasing (jump a^dag a),
    ancilla-qubit T1/T2 in seconds (infinite by default)."""

    photon_loss_rate: float = 0.0
    dephasing_rate: float = 0.0
    qubit_t1: float = np.inf
    qubit_t2: float = np.inf

    def __post_init__(self):
        if self.photon_loss_rate < 0 or self.dephasing_rate < 0:
            raise ValueError("noise rates must be >= 0")
        if self.qubit_t1 <= 0 or self.qubit_t2 <= 0:
            raise ValueError("qubit T1/T2 must be > 0")
        if np.isfinite(self.qubit_t1) and self.qubit_t2 > 2 * self.qubit_t1 + 1e-15:
            raise ValueError("qubit T2 must not exceed 2*T1")
        if self.qubit_pure_dephasing_rate < -1e-15:
            raise ValueError("derived qubit pure-dephasing rate is negative")

    @property
    def qubit_pure_dephasing_rate(self) -> float:
        t1 = self.qubit_t1
        t2 = self.qubit_t2
        rate = (0.0 if np.isinf(t2) else 1.0 / t2) - (0.0 if np.isinf(t1) else 0.5 / t1)
        return max(rate, 0.0)

    @property
    def is_trivial(self) -> bool:
        return (self.photon_loss_rate == 0 and self.dephasing_rate == 0
                and np.isinf(self.qubit_t1) and np.isinf(self.qubit_t2))

    def mode_jumps(self, cutoff: int) -> list[tuple[float, np.ndarray]]:
        jumps = []
        if self.photon_loss_rate > 0:
            jumps.append((self.photon_loss_rate, fock.annihilation(cutoff)))
        if self.dephasing_rate > 0:
            jumps.append((self.dephasing_rate, fock.number(cutoff)))
        return jumps

    def joint_jumps(self, cutoff: int) -> list[tuple[float, np.ndarray]]:
        """Jumps on the qubit (x) mode space; qubit ground state is index 0."""
        jumps = [(rate, fock.embed_mode(op)) for rate, op in self.mode_jumps(cutoff)]
        if np.isfinite(self.qubit_t1):
            sigma_minus = np.array([[0, 1], [0, 0]], dtype=complex)
            jumps.append((1.0 / self.qubit_t1,
                          fock.embed_conditional(sigma_minus, fock.identity(cutoff))))
        gphi = self.qubit_pure_dephasing_rate
        if gphi > 0:
            jumps.append((gphi / 2.0,
                          fock.embed_conditional("Z", fock.identity(cutoff))))
        return jumps


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, complex).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(len(v))))
    return np.asarray(v, complex).reshape((d, d), order="F")


def dissipator_matrix(op: np.ndarray) -> np.ndarray:
    """Column-stacking superoperator of D[op]."""
    op = np.asarray(op, complex)
    eye = np.eye(len(op))
    mm = op.conj().T @ op
    return (np.kron(op.conj(), op)
            - 0.5 * np.kron(eye, mm)
            - 0.5 * np.kron(mm.T, eye))


def hamiltonian_matrix(h: np.ndarray) -> np.ndarray:
    """Column-stacking superoperator of -i[h, .]."""
    h = np.asarray(h, complex)
    eye = np.eye(len(h))
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


@dataclass
class Liouvillian:
    dimension: int
    hamiltonian: np.ndarray | None
    jumps: list[tuple[float, np.ndarray]]
    _matrix: np.ndarray | None = field(default=None, repr=False)
    _jump_products: list[tuple[float, np.ndarray, np.ndarray]] | None = \
        field(default=None, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            d = self.dimension
            m = np.zeros((d * d, d * d), dtype=complex)
            if self.hamiltonian is not None:
                m += hamiltonian_matrix(self.hamiltonian)
            for rate, op in self.jumps:
                m += rate * dissipator_matrix(op)
            self._matrix = m
        return self._matrix

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Matrix-free right-hand side of the master equation."""
        if self._jump_products is None:
            self._jump_products = [(rate, op, op.conj().T @ op)
                                   for rate, op in self.jumps]
        out = np.zeros_like(rho)
        if self.hamiltonian is not None:
            out += -1j * (self.hamiltonian @ rho - rho @ self.hamiltonian)
        for rate, op, mm in self._jump_products:
            out += rate * (op @ rho @ op.conj().T
                           - 0.5 * (mm @ rho + rho @ mm))
        return out


def build_liouvillian(hamiltonian: np.ndarray | None,
                      jumps: list[tuple[float, np.ndarray]]) -> Liouvillian:
    dims = set()
    if hamiltonian is not None:
        hamiltonian = np.asarray(hamiltonian, complex)
        dims.add(hamiltonian.shape[0])
    cleaned = []
    for rate, op in jumps:
        if rate < 0:
            raise ValueError(f"jump rate must be >= 0, got {rate}")
        op = np.asarray(op, complex)
        dims.add(op.shape[0])
        cleaned.append((float(rate), op))
    if len(dims) > 1:
        raise ValueError(f"inconsistent operator dimensions {sorted(dims)}")
    if not dims:
        raise ValueError("need a Hamiltonian or at least one jump operator")
    return Liouvillian(dims.pop(), hamiltonian, cleaned)


def _check_density(rho: np.ndarray, where: str) -> np.ndarray:
    drift = abs(np.trace(rho).real - 1.0)
    if drift > TRACE_TOL:
        raise IntegrationError(f"{where}: trace drift {drift:.3e}")
    return 0.5 * (rho + rho.conj().T)


def evolve(rho0: np.ndarray, liouvillian: Liouvillian, t: float,
           dt_max: float = np.inf, method: str = "auto",
           check_trace: bool = True) -> np.ndarray:
    """Propagate rho0 for time t.

    ``method='rk'`` integrates matrix-free with an embedded RK45
    (rtol 1e-9 / atol 1e-12), re-symmetrizing at segment boundaries;
    ``method='expm'`` is the dense-exponential oracle path, available while
    the vectorized dimension stays small.  ``'auto'`` picks RK.
    """
    d = liouvillian.dimension
    rho0 = np.asarray(rho0, complex)
    if rho0.shape != (d, d):
        raise ValueError(f"state shape {rho0.shape} does not match dimension {d}")
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    if t == 0:
        return rho0.copy()

    if method == "expm":
        if d * d > 4096:
            raise ValueError("dense-exponential path limited to d^2 <= 4096")
        propagator = scipy.linalg.expm(liouvillian.matrix * t)
        rho = unvec(propagator @ vec(rho0))
        rho = 0.5 * (rho + rho.conj().T)
        return _check_density(rho, "evolve/expm") if check_trace else rho
    if method not in ("rk", "auto"):
        raise ValueError(f"unknown method {method!r}")

    def rhs(_t, y):
        return liouvillian.apply(y.reshape(d, d)).ravel()

    segments = max(1, int(np.ceil(t / dt_max))) if np.isfinite(dt_max) else 1
    rho = rho0
    edges = np.linspace(0.0, t, segments + 1)
    for t0, t1 in zip(edges[:-1], edges[1:]):
        sol = scipy.integrate.solve_ivp(
            rhs, (t0, t1), rho.ravel(), method="RK45",
            rtol=RK_RTOL, atol=RK_ATOL)
        if not sol.success:
            raise IntegrationError(f"evolve/rk: integrator failed: {sol.message}")
        rho = sol.y[:, -1].reshape(d, d)
        rho = 0.5 * (rho + rho.conj().T)
    return _check_density(rho, "evolve/rk") if check_trace else rho


def dephasing_map(rho: np.ndarray, kappa_t: float,
                  levels: np.ndarray | None = None) -> np.ndarray:
    """Exact solution of d rho/dt = kappa D[a^dag a] rho over kappa*t:
    rho_nm -> rho_nm exp(-kappa t (n-m)^2 / 2).

    ``levels`` supplies the photon numbers of the matrix indices when rho
    lives in a sub-basis (e.g. the even parity sector, where index i means
    n = 2i); defaults to 0..d-1.
    """
    n = np.arange(len(rho)) if levels is None else np.asarray(levels, float)
    decay = np.exp(-0.5 * kappa_t * (n[:, None] - n[None, :]) ** 2)
    return rho * decay


def _parity_indices(dimension: int) -> np.ndarray:
    return np.arange(0, dimension, 2)


def parity_restrict(liouvillian: Liouvillian) -> tuple[Liouvillian, np.ndarray]:
    """Restrict to the even-even parity sector.

    All generators must commute with the photon-number parity, which makes
    the Liouvillian block diagonal; the restriction is then just the
    even-index sub-block of every operator.  Returns the restricted
    Liouvillian and the retained Fock indices.
    """
    d = liouvillian.dimension
    pi = fock.parity(d)
    even = _parity_indices(d)

    def restricted(op, what):
        defect = np.abs(op @ pi - pi @ op).max()
        if defect > 1e-10:
            raise SteadyStateError(
                f"parity restriction invalid: {what} does not commute with "
                f"parity (defect {defect:.3e})")
        return op[np.ix_(even, even)]

    h = None
    if liouvillian.hamiltonian is not None:
        h = restricted(liouvillian.hamiltonian, "Hamiltonian")
    jumps = [(rate, restricted(op, "jump operator"))
             for rate, op in liouvillian.jumps]
    return Liouvillian(len(even), h, jumps), even


def embed_parity_sector(rho_even: np.ndarray, dimension: int) -> np.ndarray:
    """Inverse of the even-sector index map: place rho_even into a
    full-dimension density matrix (odd sector zero)."""
    even = _parity_indices(dimension)
    out = np.zeros((dimension, dimension), dtype=complex)
    out[np.ix_(even, even)] = rho_even
    return out


def steady_state(liouvillian: Liouvillian, restrict: str | None = None) -> np.ndarray:
    """Null vector of the Liouvillian, Hermitized and trace-normalized.

    ``restrict='even'`` solves in the even parity sector and re-embeds.
    Raises SteadyStateError when the null space is not one-dimensional
    (restrict the parity sector, per the degenerate cat-code kernel).
    """
    if restrict == "even":
        sub, _ = parity_restrict(liouvillian)
        rho_even = steady_state(sub)
        return embed_parity_sector(rho_even, liouvillian.dimension)
    if restrict is not None:
        raise ValueError(f"unknown restriction {restrict!r}")

    d = liouvillian.dimension
    if d * d > DENSE_SOLVE_LIMIT ** 2:
        raise SteadyStateError(
            f"steady_state: vectorized dimension {d * d} too large for the "
            "dense null-space solve; restrict the parity sector or reduce "
            "the cutoff")
    _, s, vh = scipy.linalg.svd(liouvillian.matrix)
    tol = NULLSPACE_TOL * max(s[0], 1.0)
    kernel_dim = int(np.sum(s < tol))
    if kernel_dim != 1:
        raise SteadyStateError(
            f"steady_state: null space dimension {kernel_dim} != 1 "
            f"(smallest singular values {s[-3:]}); restrict the parity sector")
    rho = unvec(vh[-1].conj())
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise SteadyStateError("steady_state: null vector is traceless")
    return rho / tr


def purity(rho: np.ndarray) -> float:
    return float(np.trace(rho @ rho).real)


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = 0.5 * (rho - sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
