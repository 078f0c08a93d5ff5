import functools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

import qmath
from errors import DomainError
from qmath import I2, SIGMA_X, SIGMA_Y, SIGMA_Z

# Projectors of Bob's sharp observables B0 = sigma_x and B1 = sigma_z.
B0_PLUS = (I2 + SIGMA_X) / 2
B0_MINUS = (I2 - SIGMA_X) / 2
B1_PLUS = (I2 + SIGMA_Z) / 2
B1_MINUS = (I2 - SIGMA_Z) / 2

HERMITIAN_TOLERANCE = 1e-12
STATE_TOLERANCE = 1e-10


class Variant(str, Enum):
    PPM3 = "ppm"
    FOUR_KRAUS = "four-kraus"
    TWO_KRAUS = "two-kraus"


def _read_only(matrix, dim):
    m = qmath.as_complex_mat(matrix, dim).copy()
    m.setflags(write=False)
    return m


def _check_unit_interval(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value)) or not 0 <= value <= 1:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True, eq=False)
class Observable:
    matrix: np.ndarray
    sharp: bool = True

    def __post_init__(self):
        m = _read_only(self.matrix, 2)
        object.__setattr__(self, "matrix", m)
        if not qmath.is_hermitian(m, HERMITIAN_TOLERANCE):
            raise DomainError("Observable is not Hermitian")
        if self.sharp and not np.allclose(m @ m, I2, rtol=0, atol=STATE_TOLERANCE):
            raise DomainError("Sharp observable must square to the identity")


@dataclass(frozen=True, eq=False)
class ObservablePair:
    a0: Observable
    a1: Observable
    delta: float

    def __post_init__(self):
        a0, a1 = self.a0.matrix, self.a1.matrix
        anti = a0 @ a1 + a1 @ a0
        comm = a0 @ a1 - a1 @ a0
        if not np.allclose(anti, 2 * math.cos(2 * self.delta) * I2, rtol=0, atol=STATE_TOLERANCE):
            raise DomainError("Anticommutator does not match 2cos(2δ)I")
        if not np.allclose(comm, 2j * math.sin(2 * self.delta) * SIGMA_Y, rtol=0, atol=STATE_TOLERANCE):
            raise DomainError("Commutator does not match 2i sin(2δ) σy")

    @property
    def sum(self):
        return self.a0.matrix + self.a1.matrix

    @property
    def difference(self):
        return self.a0.matrix - self.a1.matrix


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = _read_only(self.matrix, 4)
        object.__setattr__(self, "matrix", m)
        if not qmath.is_hermitian(m, HERMITIAN_TOLERANCE):
            raise DomainError("Density matrix is not Hermitian")
        trace = complex(np.trace(m))
        if abs(trace - 1) > STATE_TOLERANCE:
            raise DomainError(f"Density matrix trace is {trace}, expected 1")
        if np.linalg.eigvalsh(m)[0] < -STATE_TOLERANCE:
            raise DomainError("Density matrix is not positive semidefinite")

    @property
    def alice_marginal(self):
        return qmath.partial_trace_bob(self.matrix)

    @property
    def bob_marginal(self):
        return qmath.partial_trace_alice(self.matrix)

    def expectation(self, op):
        return qmath.expectation(op, self.matrix)


@dataclass(frozen=True)
class MeasurementScheme:
    variant: Variant
    alpha: float
    v: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        _check_unit_interval("alpha", self.alpha)
        _check_unit_interval("v", self.v)
        if self.variant is Variant.PPM3 and self.v != 1:
            raise DomainError(f"The three-Kraus realization fixes v = 1, got {self.v}")
        completeness = sum(k.conj().T @ k for k in build_kraus_set(self))
        if not np.allclose(completeness, I2, rtol=0, atol=STATE_TOLERANCE):
            raise DomainError(f"Kraus set of {self} is not complete")

    @classmethod
    def ppm(cls, alpha):
        return cls(Variant.PPM3, alpha)

    @classmethod
    def four_kraus(cls, alpha, v):
        return cls(Variant.FOUR_KRAUS, alpha, v)

    @classmethod
    def two_kraus(cls, alpha, v):
        return cls(Variant.TWO_KRAUS, alpha, v)


@dataclass(frozen=True, eq=False)
class PovmPair:
    e_plus: np.ndarray
    e_minus: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "e_plus", _read_only(self.e_plus, 2))
        object.__setattr__(self, "e_minus", _read_only(self.e_minus, 2))
        for effect in (self.e_plus, self.e_minus):
            if not qmath.is_psd(effect, STATE_TOLERANCE):
                raise DomainError("POVM effect is not positive semidefinite")
        if not np.allclose(self.e_plus + self.e_minus, I2, rtol=0, atol=STATE_TOLERANCE):
            raise DomainError("POVM effects do not sum to the identity")


def build_alice_observables(delta):
    if not 0 <= delta <= math.pi / 2:
        raise DomainError(f"delta must lie in [0, π/2], got {delta}")
    s, c = math.sin(delta), math.cos(delta)
    return ObservablePair(
        Observable(s * SIGMA_Z + c * SIGMA_X),
        Observable(-s * SIGMA_Z + c * SIGMA_X),
        delta,
    )


@functools.cache
def build_bob_observables():
    return Observable(SIGMA_X), Observable(SIGMA_Z)


def build_initial_state(theta):
    """cosθ|00> + sinθ|11> as a density matrix."""
    if not 0 <= theta <= math.pi / 4:
        raise DomainError(f"theta must lie in [0, π/4], got {theta}")
    psi = np.array([math.cos(theta), 0, 0, math.sin(theta)], dtype=complex)
    return DensityMatrix(qmath.projector(psi))


def initial_state_concurrence(theta):
    if not 0 <= theta <= math.pi / 4:
        raise DomainError(f"theta must lie in [0, π/4], got {theta}")
    return math.sin(2 * theta)


def two_kraus_coefficients(alpha, v):
    """(m1, m2, n1, n2) of the two-operator realization."""
    m1 = math.sqrt(v * (1 - alpha) + alpha)
    m2 = math.sqrt(v * (1 - alpha))
    n1 = math.sqrt((1 - alpha) * (1 - v))
    n2 = math.sqrt(max(0.0, 1 - v * (1 - alpha)))
    return m1, m2, n1, n2


def build_kraus_set(scheme):
    alpha, v = scheme.alpha, scheme.v
    if scheme.variant is Variant.PPM3:
        return [
            math.sqrt(alpha) * B1_PLUS,
            math.sqrt(alpha) * B1_MINUS,
            math.sqrt(1 - alpha) * I2,
        ]
    if scheme.variant is Variant.FOUR_KRAUS:
        return [
            math.sqrt(alpha) * B1_PLUS,
            math.sqrt(alpha) * B1_MINUS,
            math.sqrt(v * (1 - alpha)) * I2,
            math.sqrt((1 - v) * (1 - alpha)) * I2,
        ]
    if scheme.variant is Variant.TWO_KRAUS:
        m1, m2, n1, n2 = two_kraus_coefficients(alpha, v)
        return [
            (m1 + m2) / 2 * I2 + (m1 - m2) / 2 * SIGMA_Z,
            (n1 + n2) / 2 * I2 + (n1 - n2) / 2 * SIGMA_Z,
        ]
    raise ValueError(f"Unsupported measurement variant: {scheme.variant}")


# Which Kraus operators report outcome + (the rest report -).
PLUS_OUTCOME_KRAUS = {
    Variant.PPM3: (0, 2),
    Variant.FOUR_KRAUS: (0, 2),
    Variant.TWO_KRAUS: (0,),
}


def povm_from_kraus(scheme):
    kraus = build_kraus_set(scheme)
    plus = PLUS_OUTCOME_KRAUS[scheme.variant]
    e_plus = sum(kraus[i].conj().T @ kraus[i] for i in plus)
    e_minus = sum(k.conj().T @ k for i, k in enumerate(kraus) if i not in plus)
    return PovmPair(e_plus, e_minus)


def effective_povm(scheme):
    alpha, v = scheme.alpha, scheme.v
    return PovmPair(
        alpha * B1_PLUS + v * (1 - alpha) * I2,
        alpha * B1_MINUS + (1 - v) * (1 - alpha) * I2,
    )


def effective_observable(scheme):
    """E+ - E- = α σz + (2v - 1)(1 - α) I."""
    return scheme.alpha * SIGMA_Z + (2 * scheme.v - 1) * (1 - scheme.alpha) * I2
