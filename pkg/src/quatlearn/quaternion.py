"""Quaternion scalars, vectors and matrices plus the augmented-space machinery.

Arrays of quaternions are stored as float64 numpy arrays whose last axis holds
the components ``(r, i, j, k)``.  The array-level helpers (:func:`hamilton`,
:func:`conj_array`, :func:`left_matrix`) do the heavy lifting; the
:class:`Quaternion`, :class:`QuatVector` and :class:`QuatMatrix` types are thin
value-semantics wrappers around them.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateAxisError,
    PreconditionError,
    ShapeError,
    SingularInputError,
    UndefinedAxisError,
)

# precondition checks on unit / pure inputs
UNIT_TOL = 1e-10

_CONJ = np.array([1.0, -1.0, -1.0, -1.0])

# Sign pattern of the four involutions (identity, i, j, k) acting on (r, i, j, k).
INVOLUTION_SIGNS = np.array(
    [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)


# ---------------------------------------------------------------------------
# array-level primitives


def hamilton(a, b) -> np.ndarray:
    """Broadcasting Hamilton product of quaternion arrays of shape (..., 4)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def conj_array(a) -> np.ndarray:
    return np.asarray(a, dtype=float) * _CONJ


# L(p)[r, c] = sign * p[idx]; rows are p0 -p1 -p2 -p3 / p1 p0 -p3 p2 / p2 p3 p0 -p1 / p3 -p2 p1 p0
_L_IDX = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])
_L_SIGN = np.array([[1, -1, -1, -1], [1, 1, -1, 1], [1, 1, 1, -1], [1, -1, 1, 1]], dtype=float)


def left_matrix(p) -> np.ndarray:
    """Real 4x4 matrices ``L`` with ``hamilton(p, q) == L @ q`` (shape (..., 4, 4))."""
    return np.asarray(p, dtype=float)[..., _L_IDX] * _L_SIGN


def real_part_product(a, b) -> np.ndarray:
    """``Re{a b}`` for broadcast quaternion arrays, without forming the product."""
    return np.sum(np.asarray(a, dtype=float) * conj_array(b), axis=-1)


def augment_array(v) -> np.ndarray:
    """Stack ``[v; v^i; v^j; v^k]`` along the first axis of a (M, 4) array."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([v * s for s in INVOLUTION_SIGNS], axis=0)


# ---------------------------------------------------------------------------
# scalar quaternion


@dataclass(frozen=True)
class Quaternion:
    r: float = 0.0
    xi: float = 0.0
    xj: float = 0.0
    xk: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @classmethod
    def pure(cls, xi: float, xj: float, xk: float) -> "Quaternion":
        return cls(0.0, xi, xj, xk)

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.xi, self.xj, self.xk])

    @property
    def imag(self) -> np.ndarray:
        return np.array([self.xi, self.xj, self.xk])

    def __add__(self, other):
        o = _coerce(other)
        return Quaternion(self.r + o.r, self.xi + o.xi, self.xj + o.xj, self.xk + o.xk)

    __radd__ = __add__

    def __sub__(self, other):
        o = _coerce(other)
        return Quaternion(self.r - o.r, self.xi - o.xi, self.xj - o.xj, self.xk - o.xk)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __neg__(self):
        return Quaternion(-self.r, -self.xi, -self.xj, -self.xk)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._scaled(float(other))
        return qmul(self, _coerce(other))

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._scaled(float(other))
        return qmul(_coerce(other), self)

    def __truediv__(self, s):
        return self._scaled(1.0 / float(s))

    def _scaled(self, s: float) -> "Quaternion":
        return Quaternion(self.r * s, self.xi * s, self.xj * s, self.xk * s)

    def conj(self) -> "Quaternion":
        return conj(self)

    def norm(self) -> float:
        return norm(self)

    def inverse(self) -> "Quaternion":
        return inverse(self)

    def isclose(self, other, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.as_array() - _coerce(other).as_array())) <= tol)


def _coerce(q) -> Quaternion:
    if isinstance(q, Quaternion):
        return q
    if isinstance(q, (int, float, np.floating, np.integer)):
        return Quaternion(float(q))
    return Quaternion.from_array(q)


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)
BASIS = (ONE, I, J, K)


def qmul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p q`` (ij = k, jk = i, ki = j)."""
    a0, a1, a2, a3 = p.r, p.xi, p.xj, p.xk
    b0, b1, b2, b3 = q.r, q.xi, q.xj, q.xk
    return Quaternion(
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    )


def conj(q: Quaternion) -> Quaternion:
    return Quaternion(q.r, -q.xi, -q.xj, -q.xk)


def norm(q: Quaternion) -> float:
    return math.sqrt(q.r * q.r + q.xi * q.xi + q.xj * q.xj + q.xk * q.xk)


def inverse(q: Quaternion) -> Quaternion:
    n2 = q.r * q.r + q.xi * q.xi + q.xj * q.xj + q.xk * q.xk
    if n2 == 0.0:
        raise SingularInputError("cannot invert the zero quaternion")
    return Quaternion(q.r / n2, -q.xi / n2, -q.xj / n2, -q.xk / n2)


class Polar(NamedTuple):
    magnitude: float
    axis: Quaternion
    angle: float


def polar(q: Quaternion, real_axis_convention: bool = False) -> Polar:
    """Polar form ``q = |q| (cos a + axis sin a)`` with ``a = atan2(|Im q|, Re q)``.

    Purely real input has no axis; it raises unless ``real_axis_convention``
    is set, in which case the axis ``i`` is used.
    """
    mag = norm(q)
    im = q.imag
    im_norm = float(np.linalg.norm(im))
    if im_norm == 0.0:
        if not real_axis_convention:
            raise UndefinedAxisError("polar axis undefined for a purely real quaternion")
        return Polar(mag, I, 0.0 if q.r >= 0 else math.pi)
    axis = Quaternion.pure(*(im / im_norm))
    return Polar(mag, axis, math.atan2(im_norm, q.r))


def _check_unit_pure(axis: Quaternion, name: str = "axis") -> None:
    if abs(axis.r) > UNIT_TOL or abs(norm(axis) - 1.0) > UNIT_TOL:
        raise PreconditionError(f"{name} must be a unit pure quaternion, got {axis}")


def _check_pure(q: Quaternion, name: str = "q") -> None:
    if abs(q.r) > UNIT_TOL:
        raise PreconditionError(f"{name} must be pure imaginary, got real part {q.r}")


def qexp_pure(axis: Quaternion, angle: float) -> Quaternion:
    _check_unit_pure(axis)
    s = math.sin(angle)
    return Quaternion(math.cos(angle), axis.xi * s, axis.xj * s, axis.xk * s)


def involution(q: Quaternion, zeta: Quaternion) -> Quaternion:
    """``zeta q zeta^-1``; for zeta in {i, j, k} this flips the other two components."""
    return qmul(qmul(zeta, q), inverse(zeta))


def rotate(q_pre: Quaternion, axis: Quaternion, angle: float) -> Quaternion:
    """Right-hand rotation of the pure quaternion ``q_pre`` about ``axis`` by ``angle``."""
    _check_pure(q_pre, "q_pre")
    _check_unit_pure(axis)
    xi = qexp_pure(axis, angle / 2.0)
    out = qmul(qmul(xi, q_pre), conj(xi))
    return Quaternion(0.0, out.xi, out.xj, out.xk)


def rotation_matrix_3x3(axis: Quaternion, angle: float) -> np.ndarray:
    """Rodrigues matrix for the same rotation, acting on ``(xi, xj, xk)``."""
    _check_unit_pure(axis)
    x, y, z = axis.imag
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


class GateInvolution(NamedTuple):
    axis: Quaternion
    angle: float
    degenerate: bool


def gate_to_involution(q_in: Quaternion, q_out: Quaternion, tol: float = 1e-12) -> GateInvolution:
    """Axis and angle of the rotation carrying qubit ``q_in`` onto ``q_out``.

    Identical inputs return angle 0 with axis ``i`` and ``degenerate=True``.
    Antipodal inputs raise :class:`DegenerateAxisError`.
    """
    _check_unit_pure(q_in, "q_in")
    _check_unit_pure(q_out, "q_out")
    prod = qmul(q_in, q_out)
    normal = prod.imag
    n = float(np.linalg.norm(normal))
    cos_a = -prod.r  # Re{q_in q_out} = -<q_in, q_out> for pure operands
    if n <= tol:
        if cos_a > 0:
            return GateInvolution(I, 0.0, True)
        raise DegenerateAxisError(
            "q_in = -q_out: any axis orthogonal to q_in with angle pi completes the gate"
        )
    return GateInvolution(Quaternion.pure(*(normal / n)), math.atan2(n, cos_a), False)


# ---------------------------------------------------------------------------
# vectors and matrices


class QuatVector:
    """Immutable dense vector of quaternions backed by an (M, 4) array."""

    __slots__ = ("data",)

    def __init__(self, elems):
        if isinstance(elems, QuatVector):
            data = elems.data
        elif isinstance(elems, np.ndarray):
            data = np.array(elems, dtype=float)
        else:
            elems = list(elems)
            data = np.array([_coerce(e).as_array() for e in elems], dtype=float).reshape(len(elems), 4)
        if data.ndim != 2 or data.shape[1] != 4:
            raise ShapeError(f"expected an (M, 4) array, got {data.shape}")
        data.setflags(write=False)
        self.data = data

    @classmethod
    def zeros(cls, n: int) -> "QuatVector":
        return cls(np.zeros((n, 4)))

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, idx) -> Quaternion:
        return Quaternion.from_array(self.data[idx])

    def __iter__(self):
        return (Quaternion.from_array(row) for row in self.data)

    def __repr__(self):
        return f"QuatVector({self.data.tolist()})"

    def __eq__(self, other):
        return isinstance(other, QuatVector) and np.array_equal(self.data, other.data)

    def __add__(self, other):
        return QuatVector(self.data + other.data)

    def __sub__(self, other):
        return QuatVector(self.data - other.data)

    def __mul__(self, s: float):
        return QuatVector(self.data * float(s))

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def conj(self) -> "QuatVector":
        return QuatVector(conj_array(self.data))

    def involution(self, axis: str) -> "QuatVector":
        """Elementwise involution about ``'i'``, ``'j'`` or ``'k'``."""
        return QuatVector(self.data * INVOLUTION_SIGNS["1ijk".index(axis)])

    def allclose(self, other, tol: float = 1e-12) -> bool:
        return self.data.shape == other.data.shape and bool(np.max(np.abs(self.data - other.data), initial=0.0) <= tol)


class QuatMatrix:
    """Immutable dense row-major quaternion matrix backed by a (rows, cols, 4) array."""

    __slots__ = ("data",)

    def __init__(self, entries, rows: int | None = None, cols: int | None = None):
        data = np.array(entries, dtype=float)
        if rows is not None and cols is not None:
            data = data.reshape(rows, cols, 4)
        if data.ndim != 3 or data.shape[2] != 4:
            raise ShapeError(f"expected a (rows, cols, 4) array, got {data.shape}")
        data.setflags(write=False)
        self.data = data

    @classmethod
    def identity(cls, n: int) -> "QuatMatrix":
        d = np.zeros((n, n, 4))
        d[np.arange(n), np.arange(n), 0] = 1.0
        return cls(d)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "QuatMatrix":
        return cls(np.zeros((rows, cols, 4)))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    def __getitem__(self, ij) -> Quaternion:
        return Quaternion.from_array(self.data[ij])

    def __repr__(self):
        return f"QuatMatrix(rows={self.rows}, cols={self.cols})"

    def __eq__(self, other):
        return isinstance(other, QuatMatrix) and np.array_equal(self.data, other.data)

    def __add__(self, other):
        return QuatMatrix(self.data + other.data)

    def __sub__(self, other):
        return QuatMatrix(self.data - other.data)

    def __mul__(self, s: float):
        return QuatMatrix(self.data * float(s))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, QuatMatrix):
            return matmul(self, other)
        return qmatvec(self, other)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def real_matrix(self) -> np.ndarray:
        """Real (4 rows, 4 cols) matrix of left multiplication by this matrix."""
        L = left_matrix(self.data)  # (r, c, 4, 4)
        return L.transpose(0, 2, 1, 3).reshape(4 * self.rows, 4 * self.cols)

    def allclose(self, other, tol: float = 1e-12) -> bool:
        return self.data.shape == other.data.shape and bool(np.max(np.abs(self.data - other.data), initial=0.0) <= tol)


def qmatvec(A: QuatMatrix, v: QuatVector) -> QuatVector:
    if A.cols != len(v):
        raise ShapeError(f"matrix has {A.cols} columns but vector has length {len(v)}")
    return QuatVector(np.einsum("rcab,cb->ra", left_matrix(A.data), v.data))


def matmul(A: QuatMatrix, B: QuatMatrix) -> QuatMatrix:
    if A.cols != B.rows:
        raise ShapeError(f"cannot multiply {A.shape} by {B.shape}")
    return QuatMatrix(np.einsum("ijab,jkb->ika", left_matrix(A.data), B.data))


def hermitian(A: QuatMatrix) -> QuatMatrix:
    return QuatMatrix(conj_array(A.data.transpose(1, 0, 2)))


def outer(u: QuatVector, v: QuatVector) -> QuatMatrix:
    """``outer(u, v)[i][j] = u[i] conj(v[j])``."""
    return QuatMatrix(hamilton(u.data[:, None, :], conj_array(v.data)[None, :, :]))


def transpose_product(u: QuatVector, v: QuatVector) -> Quaternion:
    """``u^T v = sum_i u_i v_i`` (no conjugation, left factors from ``u``)."""
    if len(u) != len(v):
        raise ShapeError(f"length mismatch {len(u)} vs {len(v)}")
    return Quaternion.from_array(hamilton(u.data, v.data).sum(axis=0))


# ---------------------------------------------------------------------------
# augmented space


@dataclass(frozen=True)
class AugmentedVector:
    base: QuatVector
    blocks: QuatVector

    def __len__(self):
        return len(self.blocks)


def augment(v: QuatVector) -> AugmentedVector:
    v = QuatVector(v)
    return AugmentedVector(v, QuatVector(augment_array(v.data)))


def deaugment(a) -> QuatVector:
    data = a.blocks.data if isinstance(a, AugmentedVector) else QuatVector(a).data
    n = data.shape[0]
    if n % 4:
        raise ShapeError(f"augmented length {n} is not divisible by 4")
    return QuatVector(data[: n // 4])


@lru_cache(maxsize=32)
def augmentation_matrix(M: int) -> QuatMatrix:
    """The 4M x 4M block matrix mapping the real stack ``[q_r; q_i; q_j; q_k]`` to ``q^a``."""
    data = np.zeros((4 * M, 4 * M, 4))
    idx = np.arange(M)
    for b in range(4):
        for c in range(4):
            # block (b, c) is sign * unit_c * I
            data[b * M + idx, c * M + idx, c] = INVOLUTION_SIGNS[b, c]
    return QuatMatrix(data)


def real_expansion(v: QuatVector) -> np.ndarray:
    """Real component stack of ``v``, recovered from ``augment(v)`` through the inverse block map.

    The inverse of the augmentation matrix is a quarter of its Hermitian transpose.
    """
    v = QuatVector(v)
    A = augmentation_matrix(len(v))
    stacked = qmatvec(hermitian(A), augment(v).blocks).data / 4.0
    return stacked[:, 0].copy()


def real_contraction(real) -> QuatVector:
    """Inverse of :func:`real_expansion`: real stack -> quaternion vector."""
    real = np.asarray(real, dtype=float).ravel()
    if real.size % 4:
        raise ShapeError(f"real stack length {real.size} is not divisible by 4")
    M = real.size // 4
    as_quat = np.zeros((4 * M, 4))
    as_quat[:, 0] = real
    return deaugment(qmatvec(augmentation_matrix(M), QuatVector(as_quat)))


def rotation_to_augmented_matrix(axis: Quaternion, angle: float) -> QuatMatrix:
    """4x4 quaternion matrix ``Z`` with ``augment(rotate(q)) == Z augment(q)``.

    Built as ``A R A^H / 4``: real-stack rotation conjugated by the augmentation map.
    """
    R = np.eye(4)
    R[1:, 1:] = rotation_matrix_3x3(axis, angle)
    A = augmentation_matrix(1)
    real_R = QuatMatrix(np.concatenate([R[..., None], np.zeros((4, 4, 3))], axis=-1))
    return QuatMatrix(matmul(matmul(A, real_R), hermitian(A)).data / 4.0)


def embed_qubit_block(Z: QuatMatrix, s: int, m: int) -> QuatMatrix:
    """Lift a single-qubit 4x4 augmented map to the 4m x 4m register map (identity elsewhere)."""
    data = np.array(QuatMatrix.identity(4 * m).data)
    idx = np.arange(4) * m + s
    data[np.ix_(idx, idx)] = Z.data
    return QuatMatrix(data)


def as_quaternions(values: Iterable) -> list[Quaternion]:
    return [_coerce(v) for v in values]


def from_components(rows: Sequence[Sequence[float]]) -> QuatVector:
    return QuatVector(np.asarray(rows, dtype=float).reshape(-1, 4))
