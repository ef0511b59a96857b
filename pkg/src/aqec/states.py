"""Target states of the stabilization protocols and their nullifiers.

Five families are supported, each specified by a :class:`NullifierSpec`:

========  =====================================================  =========================
family    state                                                  nullifier
========  =====================================================  =========================
sqvac     S(-r)|0>                                               a cosh r - a^dag sinh r
cps       exp(i eta x^3/3) S(-r)|0>                              i e^r (p - eta x^2)/sqrt2 + e^-r x/sqrt2
tss       T(xi)|0>,  T = exp[xi(a^dag^3 - a^3)/3]                a - xi a^dag^2  (first order in xi)
cat       N (|alpha> + sign |-alpha>)                            a^2 - alpha^2
sqcat     N (D(alpha)S(r)|0> + sign D(-alpha)S(r)|0>)            (a cosh r + a^dag sinh r)^2 - beta^2
========  =====================================================  =========================

with beta = alpha cosh r + conj(alpha) sinh r.  The tss state is built from
the exact trisqueezing unitary while its nullifier keeps only the first order
in xi, so the annihilation residual scales as O(xi^2) by construction.

Squeezing levels quoted in dB convert as r = (dB / 20) ln 10; the same map is
used for trisqueezing levels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import fock
from .errors import CutoffError
from .gaussian import displacement_unitary, squeeze_unitary

FAMILIES = ("sqvac", "cps", "tss", "cat", "sqcat")

TAIL_FRACTION = 0.1
TAIL_TOL = 1e-8

# Extra Fock levels used while constructing a state before truncating back,
# so that the defining unitaries act on an uncorrupted interior.  The cubic
# families spread boundary corruption deep into the interior and need far
# larger margins than the Gaussian/cat families.
BUILD_MARGIN = {"sqvac": 20, "cat": 20, "sqcat": 20, "tss": 100, "cps": 200}


def db_to_r(level_db: float) -> float:
    """Squeezing (or trisqueezing) level in dB to the dimensionless parameter."""
    return (level_db / 20.0) * np.log(10.0)


def r_to_db(r: float) -> float:
    return 20.0 * r / np.log(10.0)


@dataclass(frozen=True)
class NullifierSpec:
    family: str
    r: float = 0.0
    eta: float = 0.0
    xi: float = 0.0
    alpha: complex = 0.0 + 0.0j
    sign: int = +1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.sign not in (+1, -1):
            raise ValueError(f"cat sign must be +1 or -1, got {self.sign!r}")
        used = {"sqvac": ("r",), "cps": ("r", "eta"), "tss": ("xi",),
                "cat": ("alpha", "sign"), "sqcat": ("alpha", "r", "sign")}[self.family]
        for name in ("r", "eta", "xi", "alpha"):
            value = getattr(self, name)
            if name not in used and value != 0:
                raise ValueError(
                    f"parameter {name}={value!r} is not used by family {self.family!r}")

    def with_sign(self, sign: int) -> "NullifierSpec":
        return replace(self, sign=sign)


def sqvac(r: float = 0.0, *, level_db: float | None = None) -> NullifierSpec:
    if level_db is not None:
        r = db_to_r(level_db)
    return NullifierSpec("sqvac", r=r)


def cps(r: float = 0.0, eta: float = 0.0, *, level_db: float | None = None) -> NullifierSpec:
    if level_db is not None:
        r = db_to_r(level_db)
    return NullifierSpec("cps", r=r, eta=eta)


def tss(xi: float = 0.0, *, level_db: float | None = None) -> NullifierSpec:
    if level_db is not None:
        xi = db_to_r(level_db)
    return NullifierSpec("tss", xi=xi)


def cat(alpha: complex, sign: int = +1) -> NullifierSpec:
    return NullifierSpec("cat", alpha=complex(alpha), sign=sign)


def sqcat(alpha: complex, r: float = 0.0, sign: int = +1,
          *, level_db: float | None = None) -> NullifierSpec:
    if level_db is not None:
        r = db_to_r(level_db)
    return NullifierSpec("sqcat", alpha=complex(alpha), r=r, sign=sign)


def build_nullifier(spec: NullifierSpec, cutoff: int) -> np.ndarray:
    """Lowering operator annihilating the family's target state(s)."""
    a = fock.annihilation(cutoff)
    ad = a.conj().T
    eye = fock.identity(cutoff)
    if spec.family == "sqvac":
        return a * np.cosh(spec.r) - ad * np.sinh(spec.r)
    if spec.family == "cps":
        x, p = fock.quadratures(cutoff)
        return (1j * np.exp(spec.r) / np.sqrt(2)) * (p - spec.eta * (x @ x)) \
            + (np.exp(-spec.r) / np.sqrt(2)) * x
    if spec.family == "tss":
        return a - spec.xi * (ad @ ad)
    if spec.family == "cat":
        return a @ a - spec.alpha ** 2 * eye
    if spec.family == "sqcat":
        beta = spec.alpha * np.cosh(spec.r) + np.conj(spec.alpha) * np.sinh(spec.r)
        g = a * np.cosh(spec.r) + ad * np.sinh(spec.r)
        return g @ g - beta ** 2 * eye
    raise AssertionError(spec.family)


def tail_population(state: np.ndarray, fraction: float = TAIL_FRACTION) -> float:
    """Population in the top ``fraction`` of Fock levels of a pure state."""
    d = len(state)
    start = d - max(1, int(np.ceil(d * fraction)))
    return float(np.sum(np.abs(state[start:]) ** 2))


def _truncate_normalized(psi: np.ndarray, cutoff: int) -> np.ndarray:
    out = psi[:cutoff]
    return out / np.linalg.norm(out)


def coherent(cutoff: int, alpha: complex) -> np.ndarray:
    """Coherent state D(alpha)|0>, built at an enlarged cutoff then truncated."""
    work = cutoff + BUILD_MARGIN["cat"]
    psi = displacement_unitary(work, alpha) @ fock.vacuum(work)
    return _truncate_normalized(psi, cutoff)


def trisqueeze_unitary(cutoff: int, xi: float) -> np.ndarray:
    """exp[xi (a^dag^3 - a^3) / 3]."""
    a = fock.annihilation(cutoff)
    ad = a.conj().T
    gen = (np.linalg.matrix_power(ad, 3) - np.linalg.matrix_power(a, 3)) / 3.0
    return fock.mat_exp(gen, scale=xi)


def cubic_phase_unitary(cutoff: int, eta: float) -> np.ndarray:
    """exp[i eta x^3 / 3]; simulation-only, never a compiled gate."""
    x, _ = fock.quadratures(cutoff)
    return fock.mat_exp(x @ x @ x, scale=1j * eta / 3.0)


def build_state(spec: NullifierSpec, cutoff: int,
                tail_tol: float = TAIL_TOL) -> np.ndarray:
    """Normalized target state at the given cutoff.

    Construction happens at cutoff + BUILD_MARGIN and is truncated back; the
    result must keep its top-decile population below ``tail_tol`` or the
    cutoff is rejected as too small.  The strict default makes the state
    faithful to the infinite-dimensional target; simulation grids that only
    need the target as a fidelity reference at a desk-scale cutoff pass a
    looser tolerance explicitly (heavy-tailed targets such as the cubic-phase
    family would otherwise demand cutoffs far beyond the dynamics grid).
    """
    work = cutoff + BUILD_MARGIN[spec.family]
    vac = fock.vacuum(work)
    if spec.family == "sqvac":
        psi = squeeze_unitary(work, -spec.r) @ vac
    elif spec.family == "cps":
        psi = cubic_phase_unitary(work, spec.eta) @ (squeeze_unitary(work, -spec.r) @ vac)
    elif spec.family == "tss":
        psi = trisqueeze_unitary(work, spec.xi) @ vac
    elif spec.family in ("cat", "sqcat"):
        r = spec.r if spec.family == "sqcat" else 0.0
        core = squeeze_unitary(work, r) @ vac
        plus = displacement_unitary(work, spec.alpha) @ core
        minus = displacement_unitary(work, -spec.alpha) @ core
        psi = plus + spec.sign * minus
        norm = np.linalg.norm(psi)
        if norm < 1e-12:
            raise ValueError(f"degenerate cat superposition for {spec}")
        psi = psi / norm
    else:
        raise AssertionError(spec.family)
    psi = _truncate_normalized(psi, cutoff)
    tail = tail_population(psi)
    if tail >= tail_tol:
        raise CutoffError(
            f"cutoff {cutoff} too small for {spec.family}: "
            f"top-decile population {tail:.2e} >= {tail_tol:.0e}")
    return psi


def annihilation_residual(spec: NullifierSpec, cutoff: int,
                          exclude_fraction: float = TAIL_FRACTION,
                          tail_tol: float = TAIL_TOL) -> float:
    """Interior norm of build_nullifier @ build_state.

    Truncation feeds the chopped Fock tail straight into the top few
    components of the product (the nullifiers contain x^2-type terms whose
    boundary couplings land there), so annihilation is measured excluding the
    top decile, the same zone the tail-population precondition governs.
    """
    delta = build_nullifier(spec, cutoff)
    psi = build_state(spec, cutoff, tail_tol=tail_tol)
    keep = fock.interior_keep(cutoff, exclude_fraction)
    return float(np.linalg.norm((delta @ psi)[:keep]))


def code_projector(spec: NullifierSpec, cutoff: int,
                   tail_tol: float = TAIL_TOL) -> np.ndarray:
    """Rank-2 projector onto span{|target_+>, |target_->} for cat families.

    The two branches are orthogonal by parity; Gram-Schmidt guards against
    truncation noise.
    """
    if spec.family not in ("cat", "sqcat"):
        raise ValueError(f"code projector requires a cat family, got {spec.family!r}")
    u1 = build_state(spec.with_sign(+1), cutoff, tail_tol=tail_tol)
    v2 = build_state(spec.with_sign(-1), cutoff, tail_tol=tail_tol)
    u1 = u1 / np.linalg.norm(u1)
    v2 = v2 - u1 * np.vdot(u1, v2)
    u2 = v2 / np.linalg.norm(v2)
    return np.outer(u1, u1.conj()) + np.outer(u2, u2.conj())


def density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, complex)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------------------
# JSON import/export for golden-file tests.


def state_to_json(psi: np.ndarray) -> str:
    psi = np.asarray(psi, complex)
    return json.dumps({
        "cutoff": len(psi),
        "kind": "pure",
        "amplitudes": [[float(z.real), float(z.imag)] for z in psi],
    })


def state_from_json(text: str) -> np.ndarray:
    payload = json.loads(text)
    if payload.get("kind") != "pure":
        raise ValueError(f"unsupported state kind {payload.get('kind')!r}")
    amps = payload["amplitudes"]
    if len(amps) != payload["cutoff"]:
        raise ValueError("cutoff metadata does not match amplitude count")
    return np.array([complex(re, im) for re, im in amps])
