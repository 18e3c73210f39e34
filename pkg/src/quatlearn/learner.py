"""Gradient-descent learning of a widely-linear circuit matrix from measurement data.

The circuit is a 4m x 4m quaternion matrix ``W`` acting on augmented input
registers.  For each probe direction ``h`` the expected measurement is the
literal functional ``dhat = (Re{h^aT W x^a})^2 / 4`` and training drives these
towards the target functionals of the output register.

Gradients are conjugate (HR) gradients: for a real cost ``f`` of a quaternion
entry ``w = a + ib + jc + kd`` the returned entry is
``(df/da + i df/db + j df/dc + k df/dd) / 4``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergenceError, PreconditionError, ShapeError
from .measurement import (
    MeasurementDirection,
    MeasurementPanel,
    estimate_expectation,
    functional,
    register_functionals,
)
from .quaternion import QuatMatrix, augment_array, conj_array, left_matrix
from .qubit import QubitRegister

log = logging.getLogger(__name__)

SQRT_DIFF = "sqrt-diff"
SQUARED_DIFF = "squared-diff"
METRICS = (SQRT_DIFF, SQUARED_DIFF)

EXACT = "exact"
MONTE_CARLO = "monte-carlo"

SAMPLE = "sample"
BATCH = "batch"


@dataclass(frozen=True)
class CircuitWeights:
    W: QuatMatrix
    m: int

    def __post_init__(self):
        if self.W.shape != (4 * self.m, 4 * self.m):
            raise ShapeError(f"W must be {4 * self.m}x{4 * self.m}, got {self.W.shape}")
        if not np.all(np.isfinite(self.W.data)):
            raise PreconditionError("circuit weights must be finite")

    @classmethod
    def identity(cls, m: int) -> "CircuitWeights":
        return cls(QuatMatrix.identity(4 * m), m)

    @classmethod
    def from_array(cls, data) -> "CircuitWeights":
        data = np.asarray(data, dtype=float)
        return cls(QuatMatrix(data), data.shape[0] // 4)

    def apply(self, reg: QubitRegister) -> np.ndarray:
        """``W x^a`` as a (4m, 4) array (not necessarily a valid augmented register)."""
        return np.einsum("rcab,cb->ra", left_matrix(self.W.data), augment_array(reg.q.data))


@dataclass(frozen=True)
class TrainingSample:
    x: QubitRegister
    y: QubitRegister
    d_targets: np.ndarray

    @classmethod
    def build(cls, x: QubitRegister, y: QubitRegister, panel: MeasurementPanel) -> "TrainingSample":
        d = register_functionals(panel, y)
        d.setflags(write=False)
        return cls(x, y, d)


@dataclass(frozen=True)
class TrainingConfig:
    mu: float = 0.9 / 24
    iterations: int = 2000
    metric: str = SQRT_DIFF
    expectation_mode: str = EXACT
    mc_draws: int = 100
    z: int = 256
    seed: int = 0
    epsilon_floor: float = 1e-12
    schedule: str = SAMPLE
    normalized_gain: bool = True
    positive_branch: bool = True
    enforce_bound: bool = False
    divergence_threshold: float = 1e12

    def __post_init__(self):
        if self.iterations < 1:
            raise PreconditionError("iterations must be at least 1")
        if self.mu < 0:
            raise PreconditionError("mu must be nonnegative")
        if self.epsilon_floor <= 0:
            raise PreconditionError("epsilon_floor must be positive")
        if self.metric not in METRICS:
            raise PreconditionError(f"unknown metric {self.metric!r}")
        if self.expectation_mode not in (EXACT, MONTE_CARLO):
            raise PreconditionError(f"unknown expectation mode {self.expectation_mode!r}")
        if self.expectation_mode == MONTE_CARLO and self.mc_draws < 1:
            raise PreconditionError("mc_draws must be at least 1")
        if self.schedule not in (SAMPLE, BATCH):
            raise PreconditionError(f"unknown schedule {self.schedule!r}")
        if self.enforce_bound and not self.mu < step_bound(self.z):
            raise PreconditionError(f"mu={self.mu} violates the step bound {step_bound(self.z)}")


@dataclass
class TrainingTrace:
    cost: list = field(default_factory=list)
    cost_db: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)

    def __len__(self):
        return len(self.cost)


def to_db(cost) -> np.ndarray:
    """10 log10 with a floor at the smallest normal double so zero cost stays finite."""
    return 10.0 * np.log10(np.maximum(np.asarray(cost, dtype=float), np.finfo(float).tiny))


def step_bound(z: int) -> float:
    """Upper end of the convergent step-size interval, 1 / (3 ceil(log2 z))."""
    if z < 2:
        raise PreconditionError("step bound needs z >= 2")
    return 1.0 / (3 * math.ceil(math.log2(z)))


# ---------------------------------------------------------------------------
# vectorised internals; Xa is (N, 4m, 4), R is (P, N)


def _real_circuit(W: np.ndarray) -> np.ndarray:
    n = W.shape[0]
    return left_matrix(W).transpose(0, 2, 1, 3).reshape(4 * n, 4 * n)


def _amplitudes(W: np.ndarray, Xa: np.ndarray, panel: MeasurementPanel) -> np.ndarray:
    """``Re{h_s^aT W x_n^a}`` for every direction s and sample n."""
    U = _real_circuit(W) @ Xa.reshape(Xa.shape[0], -1).T
    return panel.functional_matrix @ U


def _metric(dhat, d, metric: str):
    if metric == SQRT_DIFF:
        return (np.sqrt(dhat) - np.sqrt(d)) ** 2
    return (dhat - d) ** 2


def _chain_factors(R, D, metric, epsilon_floor, positive_branch, dhat=None):
    """Per-(direction, sample) scalar multiplying ``outer(conj(h^a), x^a)`` in the gradient.

    ``dhat`` overrides the closed-form expected measurement (Monte-Carlo mode).
    """
    exact = dhat is None
    if exact:
        dhat = 0.25 * R**2
    if metric == SQUARED_DIFF:
        return 2.0 * (dhat - D) * 0.125 * R
    sq_dhat = np.sqrt(dhat)
    if positive_branch:
        # sqrt(dhat) taken signed, as Re{h^aT W x^a}/2 (nonnegative branch assumed)
        return 0.25 * ((0.5 * R if exact else np.sign(R) * sq_dhat) - np.sqrt(D))
    if exact:
        return (sq_dhat - np.sqrt(D)) / np.maximum(sq_dhat, epsilon_floor) * 0.125 * R
    return 0.25 * np.sign(R) * (sq_dhat - np.sqrt(D))


def _gradient_from_factors(F: np.ndarray, Xa: np.ndarray, panel: MeasurementPanel) -> np.ndarray:
    """Mean over samples of ``(1/P) sum_s F[s, n] conj(h_s^a) conj(x_n^a)^T``."""
    P, N = F.shape
    n4 = Xa.shape[1]
    # V[n] = sum_s F[s, n] conj(h_s^a)
    V = conj_array((F.T @ panel.h_aug.reshape(P, -1)).reshape(N, n4, 4))
    LV = left_matrix(V).transpose(1, 2, 0, 3).reshape(4 * n4, 4 * N)
    CX = conj_array(Xa).transpose(0, 2, 1).reshape(4 * N, n4)
    G = (LV @ CX).reshape(n4, 4, n4).transpose(0, 2, 1)
    return G / (P * N)


def _stack(samples: Sequence[TrainingSample]):
    Xa = np.stack([augment_array(s.x.q.data) for s in samples])
    D = np.stack([np.asarray(s.d_targets, dtype=float) for s in samples], axis=1)
    return Xa, D


def _check_shapes(W: CircuitWeights, panel: MeasurementPanel, samples) -> None:
    for s in samples:
        if s.x.m != W.m or s.x.m != panel.m:
            raise ShapeError(f"register size {s.x.m} does not match W ({W.m}) / panel ({panel.m})")
        if len(s.d_targets) != len(panel):
            raise ShapeError("cached targets do not match the panel size")


# ---------------------------------------------------------------------------
# public operations


def estimate_dhat(W: CircuitWeights, x: QubitRegister, h: MeasurementDirection, mode: str = EXACT,
                  K: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Expected outcome of probing ``W x^a`` along ``h``.

    Exact mode returns the literal functional; Monte-Carlo mode averages K
    clamped Bernoulli draws and is only approximate.
    """
    if h.m != x.m or W.m != x.m:
        raise ShapeError("W, x and h must share the register size")
    v = W.apply(x)
    if mode == EXACT:
        return functional(h, v).p_eq
    if mode == MONTE_CARLO:
        if K is None or rng is None:
            raise PreconditionError("monte-carlo mode needs K and rng")
        return estimate_expectation(h, v, K, rng)
    raise PreconditionError(f"unknown expectation mode {mode!r}")


def cost(W: CircuitWeights, batch: Sequence[TrainingSample], panel: MeasurementPanel,
         metric: str = SQRT_DIFF) -> float:
    """Dataset mean of the per-direction mean metric between dhat and targets."""
    if not batch:
        raise PreconditionError("cost needs a nonempty batch")
    _check_shapes(W, panel, batch)
    Xa, D = _stack(batch)
    R = _amplitudes(W.W.data, Xa, panel)
    return float(np.mean(_metric(0.25 * R**2, D, metric)))


def gradient(W: CircuitWeights, sample: TrainingSample, panel: MeasurementPanel,
             metric: str = SQRT_DIFF, epsilon_floor: float = 1e-12,
             positive_branch: bool = False) -> QuatMatrix:
    """Conjugate gradient of the single-sample cost with respect to ``W``.

    With ``positive_branch`` the sqrt-diff metric is differentiated on the
    branch sqrt(dhat) = Re{h^aT W x^a}/2, which agrees with the exact gradient
    wherever that real part is positive.
    """
    _check_shapes(W, panel, [sample])
    Xa, D = _stack([sample])
    R = _amplitudes(W.W.data, Xa, panel)
    F = _chain_factors(R, D, metric, epsilon_floor, positive_branch)
    return QuatMatrix(_gradient_from_factors(F, Xa, panel))


def sgd_step(W: CircuitWeights, grad: QuatMatrix, mu: float) -> CircuitWeights:
    if mu < 0:
        raise PreconditionError("mu must be nonnegative")
    return CircuitWeights(QuatMatrix(W.W.data - mu * grad.data), W.m)


def gain_scale(panel: MeasurementPanel, Xa: np.ndarray) -> float:
    """Factor turning the raw gradient into a curvature-normalised step.

    Along a single panel direction the cost has curvature
    ``|h^a|^2 |x^a|^2 / (8 P)`` in conjugate-gradient units; dividing by it and
    summing over the P directions makes ``mu * P`` the per-direction gain.
    """
    P = len(panel)
    h2 = float(np.mean(np.sum(panel.h_aug**2, axis=(1, 2))))
    x2 = float(np.mean(np.sum(Xa**2, axis=(1, 2))))
    return 8.0 * P * P / (h2 * x2)


def train(dataset: Sequence[TrainingSample], panel: MeasurementPanel, config: TrainingConfig,
          W0: CircuitWeights | None = None) -> tuple[CircuitWeights, TrainingTrace]:
    """Run gradient descent from ``W0`` (identity by default).

    Entry n of the trace is the dataset cost of the weights before update n.
    Sample schedule cycles the dataset in order, one sample per update; batch
    schedule uses the dataset-mean gradient.
    """
    if not dataset:
        raise PreconditionError("dataset must be nonempty")
    m = panel.m
    W0 = W0 if W0 is not None else CircuitWeights.identity(m)
    _check_shapes(W0, panel, dataset)
    if config.z >= 2 and panel.rank() < 3 * math.ceil(math.log2(config.z)):
        log.warning("panel rank %d is below 3*ceil(log2 z) = %d; the map may be unrecoverable",
                    panel.rank(), 3 * math.ceil(math.log2(config.z)))
    rng = np.random.default_rng(config.seed)
    Xa, D = _stack(dataset)
    N, n4 = Xa.shape[0], Xa.shape[1]
    P = len(panel)
    scale = gain_scale(panel, Xa) if config.normalized_gain else 1.0
    # The circuit is kept as its real left-multiplication matrix; the update
    # L(G) = L(V) L(conj x) reuses the constant right factor.
    Lw = _real_circuit(np.asarray(W0.W.data, dtype=float))
    X_cols = Xa.reshape(N, -1).T
    LCX = left_matrix(conj_array(Xa)).transpose(0, 2, 1, 3).reshape(N, 4, 4 * n4)
    H_flat = panel.h_aug.reshape(P, -1)
    trace = TrainingTrace()
    for it in range(config.iterations):
        R = panel.functional_matrix @ (Lw @ X_cols)
        c = float(np.mean(_metric(0.25 * R**2, D, config.metric)))
        if not math.isfinite(c) or c > config.divergence_threshold or not np.all(np.isfinite(Lw)):
            raise DivergenceError(it, c)
        if config.schedule == BATCH:
            Rn, Dn, rows = R, D, LCX.reshape(4 * N, 4 * n4)
        else:
            n = it % N
            Rn, Dn, rows = R[:, n:n + 1], D[:, n:n + 1], LCX[n]
        dhat = None
        if config.expectation_mode == MONTE_CARLO:
            dhat = rng.binomial(config.mc_draws, np.minimum(0.25 * Rn**2, 1.0)) / config.mc_draws
        F = _chain_factors(Rn, Dn, config.metric, config.epsilon_floor, config.positive_branch, dhat)
        k = F.shape[1]
        V = conj_array((F.T @ H_flat).reshape(k, n4, 4))
        LV = left_matrix(V).transpose(1, 2, 0, 3).reshape(4 * n4, 4 * k)
        LG = (LV @ rows) / (P * k)
        trace.cost.append(c)
        trace.cost_db.append(float(to_db(c)))
        # each 4x4 block L(g) has Frobenius norm 2|g|
        trace.grad_norm.append(float(np.linalg.norm(LG)) / 2.0)
        Lw -= (config.mu * scale) * LG
    W = Lw.reshape(n4, 4, n4, 4)[:, :, :, 0].transpose(0, 2, 1)
    return CircuitWeights(QuatMatrix(W), m), trace


def finite_difference_gradient(W: CircuitWeights, sample: TrainingSample, panel: MeasurementPanel,
                               metric: str = SQRT_DIFF, step: float = 1e-6,
                               chunk: int = 512) -> np.ndarray:
    """Central differences of the single-sample cost over every real coordinate of ``W``.

    Returns an array shaped like ``W.W.data`` holding d cost / d coordinate.
    """
    base = W.W.data
    n = base.size
    xa = augment_array(sample.x.q.data)
    D = np.asarray(sample.d_targets, dtype=float)
    F = panel.functional_matrix
    out = np.empty(n)

    def costs(flat_ws):
        ws = flat_ws.reshape(-1, *base.shape)
        U = np.einsum("nrcab,cb->nra", left_matrix(ws), xa).reshape(len(ws), -1)
        R = U @ F.T
        return np.mean(_metric(0.25 * R**2, D[None, :], metric), axis=1)

    flat = base.ravel()
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        plus = np.repeat(flat[None, :], len(idx), axis=0)
        minus = plus.copy()
        plus[np.arange(len(idx)), idx] += step
        minus[np.arange(len(idx)), idx] -= step
        out[idx] = (costs(plus) - costs(minus)) / (2 * step)
    return out.reshape(base.shape)


def fd_gradient_check(W: CircuitWeights, sample: TrainingSample, panel: MeasurementPanel,
                      metric: str = SQRT_DIFF, step: float = 1e-6, epsilon_floor: float = 1e-12,
                      abs_floor: float = 1e-8) -> float:
    """Worst error between the analytic gradient and central differences.

    The analytic conjugate gradient maps to real partial derivatives as four
    times its components.  The error is relative to the larger gradient
    magnitude, or absolute when both gradients are below ``abs_floor``.
    """
    if step <= 0:
        raise PreconditionError("step must be positive")
    analytic = 4.0 * gradient(W, sample, panel, metric, epsilon_floor).data
    numeric = finite_difference_gradient(W, sample, panel, metric, step)
    err = float(np.max(np.abs(analytic - numeric)))
    scale = max(float(np.max(np.abs(numeric))), float(np.max(np.abs(analytic))))
    return err if scale < abs_floor else err / scale


def random_weights(m: int, rng: np.random.Generator, spread: float = 0.3) -> CircuitWeights:
    """Identity plus Gaussian perturbation, for gradient checks."""
    data = np.array(QuatMatrix.identity(4 * m).data) + spread * rng.standard_normal((4 * m, 4 * m, 4))
    return CircuitWeights(QuatMatrix(data), m)


__all__ = [
    "CircuitWeights", "TrainingSample", "TrainingConfig", "TrainingTrace", "estimate_dhat", "cost",
    "gradient", "sgd_step", "step_bound", "train", "fd_gradient_check", "finite_difference_gradient",
    "gain_scale", "random_weights", "to_db",
]
