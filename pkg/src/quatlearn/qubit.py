"""Qubits and multi-qubit registers as pure-imaginary quaternions.

A single qubit is a unit pure quaternion on the Bloch sphere.  An m-qubit
register is a quaternion vector of length m whose total norm is one; product
registers built from individual qubits carry the 1/sqrt(m) scaling on every
element.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidRegisterError, PreconditionError
from .quaternion import Quaternion, QuatVector

STATE_TOL = 1e-12
REGISTER_TOL = 1e-10

PER_QUBIT = "per-qubit-amplitude"
BITWISE = "bitwise-marginal"


@dataclass(frozen=True)
class QubitState:
    q: Quaternion

    def __post_init__(self):
        if abs(self.q.r) > STATE_TOL or abs(self.q.norm() - 1.0) > STATE_TOL:
            raise InvalidRegisterError(f"qubit must be a unit pure quaternion, got {self.q}")


@dataclass(frozen=True)
class QubitRegister:
    """Register of ``m`` qubits stored with the 1/sqrt(m) scaling already applied.

    Only purity and unit total norm are enforced on construction; registers
    drawn on the orthant of the quaternion sphere need not have equal element
    norms.  :meth:`check_product_form` enforces the per-qubit 1/sqrt(m) norms.
    """

    q: QuatVector

    def __post_init__(self):
        data = self.q.data
        if len(self.q) == 0:
            raise InvalidRegisterError("a register needs at least one qubit")
        if np.max(np.abs(data[:, 0])) > REGISTER_TOL:
            raise InvalidRegisterError("register elements must be pure imaginary")
        if abs(np.linalg.norm(data) - 1.0) > REGISTER_TOL:
            raise InvalidRegisterError(f"register norm {np.linalg.norm(data)!r} is not 1")

    @property
    def m(self) -> int:
        return len(self.q)

    @property
    def qubit_norms(self) -> np.ndarray:
        return np.linalg.norm(self.q.data, axis=1)

    def is_product_form(self, tol: float = REGISTER_TOL) -> bool:
        return bool(np.all(np.abs(self.qubit_norms - 1.0 / math.sqrt(self.m)) <= tol))

    def check_product_form(self, tol: float = REGISTER_TOL) -> "QubitRegister":
        if not self.is_product_form(tol):
            raise InvalidRegisterError(
                f"element norms {self.qubit_norms.tolist()} differ from 1/sqrt({self.m})"
            )
        return self

    def qubit(self, s: int) -> QubitState:
        """Unscaled state of qubit ``s`` (requires a nonzero element)."""
        row = self.q.data[s]
        return QubitState(Quaternion.from_array(row / np.linalg.norm(row)))

    @classmethod
    def from_qubits(cls, qubits: Sequence[QubitState]) -> "QubitRegister":
        m = len(qubits)
        data = np.array([s.q.as_array() for s in qubits]) / math.sqrt(m)
        return cls(QuatVector(data))


@dataclass(frozen=True)
class HypothesisEncoding:
    z: int
    scheme: str = PER_QUBIT

    def __post_init__(self):
        if self.z < 1:
            raise PreconditionError("hypothesis count must be at least 1")
        if self.scheme not in (PER_QUBIT, BITWISE):
            raise PreconditionError(f"unknown encoding scheme {self.scheme!r}")
        if self.scheme == BITWISE and self.z < 2:
            raise PreconditionError("bitwise-marginal encoding needs z >= 2")

    @property
    def m(self) -> int:
        if self.scheme == PER_QUBIT:
            return self.z
        return math.ceil(math.log2(self.z))


def bloch_from_angles(theta: float, phi: float) -> QubitState:
    st = math.sin(theta)
    return QubitState(Quaternion(0.0, st * math.cos(phi), st * math.sin(phi), math.cos(theta)))


def angles_from_qubit(s: QubitState) -> tuple[float, float]:
    """Inverse of :func:`bloch_from_angles` with phi in (-pi, pi]."""
    return math.acos(max(-1.0, min(1.0, s.q.xk))), math.atan2(s.q.xj, s.q.xi)


def qubit_from_amplitudes(alpha: complex, beta: complex) -> QubitState:
    """Map ``alpha|0> + beta|1>`` to ``k|alpha| + i Re(beta') + j Im(beta')``.

    The global phase is removed first so that alpha becomes real and nonnegative.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > REGISTER_TOL:
        raise PreconditionError("amplitudes must satisfy |alpha|^2 + |beta|^2 = 1")
    phase = cmath.exp(-1j * cmath.phase(alpha)) if alpha != 0 else 1.0
    a = alpha * phase
    b = beta * phase
    q = np.array([0.0, b.real, b.imag, a.real])
    return QubitState(Quaternion.from_array(q / np.linalg.norm(q)))


def amplitudes_from_qubit(s: QubitState) -> tuple[complex, complex]:
    """Canonical amplitudes (alpha real, nonnegative) for a qubit.

    Only the closed upper hemisphere (k component >= 0) is reachable from
    :func:`qubit_from_amplitudes`; other states raise.
    """
    if s.q.xk < -STATE_TOL:
        raise PreconditionError("states with a negative k component have no canonical amplitudes")
    return complex(max(s.q.xk, 0.0), 0.0), complex(s.q.xi, s.q.xj)


def _check_probabilities(p, enc: HypothesisEncoding) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size != enc.z:
        raise PreconditionError(f"expected {enc.z} probabilities, got shape {p.shape}")
    if np.any(p < 0):
        raise PreconditionError("probabilities must be nonnegative")
    if enc.scheme == PER_QUBIT and np.any(p > 1):
        raise PreconditionError("per-qubit probabilities must lie in [0, 1]")
    if enc.scheme == BITWISE and abs(p.sum() - 1.0) > REGISTER_TOL:
        raise PreconditionError("bitwise-marginal encoding needs a normalised distribution")
    return p


def bit_marginals(p, m: int) -> np.ndarray:
    """P(bit b of the hypothesis index is 1) for b = 0 .. m-1 (bit 0 least significant)."""
    idx = np.arange(len(p))
    return np.array([p[(idx >> b) & 1 == 1].sum() for b in range(m)])


def encode_distribution(p, enc: HypothesisEncoding) -> QubitRegister:
    p = _check_probabilities(p, enc)
    probs = p if enc.scheme == PER_QUBIT else np.clip(bit_marginals(p, enc.m), 0.0, 1.0)
    qubits = [qubit_from_amplitudes(math.sqrt(1.0 - ps), math.sqrt(ps)) for ps in probs]
    return QubitRegister.from_qubits(qubits)


def decode_distribution(reg: QubitRegister, enc: HypothesisEncoding) -> np.ndarray:
    """Invert :func:`encode_distribution`.

    The bitwise scheme returns the product measure over the decoded bit
    marginals, renormalised over the ``z`` valid hypothesis indices.
    """
    if reg.m != enc.m:
        raise InvalidRegisterError(f"register has {reg.m} qubits, encoding needs {enc.m}")
    reg.check_product_form()
    data = reg.q.data
    ones = reg.m * (data[:, 1] ** 2 + data[:, 2] ** 2)
    if enc.scheme == PER_QUBIT:
        return ones
    idx = np.arange(enc.z)
    probs = np.ones(enc.z)
    for b in range(enc.m):
        bit = (idx >> b) & 1
        probs *= np.where(bit == 1, ones[b], 1.0 - ones[b])
    total = probs.sum()
    return probs / total if total > 0 else probs


def random_register_positive_orthant(m: int, rng: np.random.Generator) -> QubitRegister:
    """Uniform sample on the nonnegative orthant of the unit sphere in the 3m imaginary coordinates."""
    if m < 1:
        raise PreconditionError("m must be at least 1")
    v = np.abs(rng.standard_normal((m, 3)))
    v /= np.linalg.norm(v)
    data = np.concatenate([np.zeros((m, 1)), v], axis=1)
    return QubitRegister(QuatVector(data))
