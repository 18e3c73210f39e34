"""Quadratic measurement functionals, Bernoulli outcomes and register reconstruction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidRegisterError,
    PreconditionError,
    ShapeError,
    UndefinedProbabilityError,
)
from .quaternion import QuatVector, augment_array, conj_array, hamilton
from .qubit import QubitRegister

LITERAL_CLAMPED = "literal-clamped"
PANEL_NORMALIZED = "panel-normalized"
MODES = (LITERAL_CLAMPED, PANEL_NORMALIZED)

RANK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class MeasurementDirection:
    h: QuatVector
    h_aug: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        data = self.h.data
        if np.max(np.abs(data[:, 0])) > 1e-12:
            raise PreconditionError("measurement direction must be pure imaginary")
        if abs(np.linalg.norm(data) - 1.0) > 1e-12:
            raise PreconditionError("measurement direction must have unit norm")
        aug = augment_array(data)
        aug.setflags(write=False)
        object.__setattr__(self, "h_aug", aug)

    @property
    def m(self) -> int:
        return len(self.h)


class MeasurementPanel:
    """A linearly independent set of probe directions over an m-qubit register."""

    def __init__(self, directions: Sequence[MeasurementDirection], canonical: bool = False):
        directions = tuple(directions)
        if not directions:
            raise PreconditionError("a panel needs at least one direction")
        m = directions[0].m
        if any(d.m != m for d in directions):
            raise ShapeError("all panel directions must share the register size")
        self.directions = directions
        self.m = m
        self.canonical = canonical
        self.h_aug = np.stack([d.h_aug for d in directions])  # (P, 4m, 4)
        # Re{h^aT v} = functional_matrix @ v.ravel()
        self.functional_matrix = conj_array(self.h_aug).reshape(len(directions), -1)
        if self.rank() != len(directions):
            raise PreconditionError("panel directions are linearly dependent")

    def __len__(self):
        return len(self.directions)

    def __iter__(self):
        return iter(self.directions)

    def __getitem__(self, i) -> MeasurementDirection:
        return self.directions[i]

    def rank(self, tol: float = RANK_TOL) -> int:
        return int(np.linalg.matrix_rank(self.h_aug.reshape(len(self.directions), -1), tol=tol))


class OutcomePair(NamedTuple):
    p_eq: float
    p_neq: float


def canonical_panel(m: int) -> MeasurementPanel:
    """The 3m directions ``-mu e_s`` for s = 1..m and mu in (i, j, k), s-major."""
    if m < 1:
        raise PreconditionError("m must be at least 1")
    dirs = []
    for s in range(m):
        for comp in (1, 2, 3):
            h = np.zeros((m, 4))
            h[s, comp] = -1.0
            dirs.append(MeasurementDirection(QuatVector(h)))
    return MeasurementPanel(dirs, canonical=True)


def _as_aug(v, m: int) -> np.ndarray:
    data = v.data if isinstance(v, QuatVector) else getattr(v, "blocks", v)
    data = data.data if isinstance(data, QuatVector) else np.asarray(data, dtype=float)
    if data.shape != (4 * m, 4):
        raise ShapeError(f"expected a length-{4 * m} quaternion vector, got {data.shape}")
    return data


def functional(h: MeasurementDirection, v) -> OutcomePair:
    """Literal quadratic functionals of ``u = h^aT v``: (Re u)^2/4 and |Im u|^2/4."""
    u = hamilton(h.h_aug, _as_aug(v, h.m)).sum(axis=0)
    return OutcomePair(0.25 * u[0] ** 2, 0.25 * float(u[1:] @ u[1:]))


def panel_functionals(panel: MeasurementPanel, v) -> np.ndarray:
    """Agreement functionals p_eq for every panel direction (vectorised)."""
    re = panel.functional_matrix @ _as_aug(v, panel.m).ravel()
    return 0.25 * re**2


def register_functionals(panel: MeasurementPanel, reg: QubitRegister) -> np.ndarray:
    return panel_functionals(panel, augment_array(reg.q.data))


def outcome_probability(h: MeasurementDirection, v, mode: str = LITERAL_CLAMPED,
                        panel: MeasurementPanel | None = None) -> float:
    if mode == LITERAL_CLAMPED:
        return min(functional(h, v).p_eq, 1.0)
    if mode == PANEL_NORMALIZED:
        if panel is None:
            raise PreconditionError("panel-normalized mode needs a panel")
        total = float(panel_functionals(panel, v).sum())
        if total <= 0.0:
            raise UndefinedProbabilityError("all panel functionals are zero")
        return functional(h, v).p_eq / total
    raise PreconditionError(f"unknown probability mode {mode!r}")


def sample_outcome(h: MeasurementDirection, v, rng: np.random.Generator,
                   mode: str = LITERAL_CLAMPED, panel: MeasurementPanel | None = None) -> int:
    """One Bernoulli draw: 1 means collapse into ``h``, 0 the complement."""
    p = outcome_probability(h, v, mode, panel)
    return int(rng.random() < p)


def estimate_expectation(h: MeasurementDirection, v, K: int, rng: np.random.Generator,
                         mode: str = LITERAL_CLAMPED, panel: MeasurementPanel | None = None) -> float:
    if K < 1:
        raise PreconditionError("K must be at least 1")
    p = outcome_probability(h, v, mode, panel)
    return float(np.mean(rng.random(K) < p))


def estimate_panel(panel: MeasurementPanel, v, K: int, rng: np.random.Generator,
                   mode: str = LITERAL_CLAMPED) -> np.ndarray:
    """Monte-Carlo estimate of every panel probability from K draws each.

    In panel-normalized mode the estimates are rescaled by the functional sum
    of a true register (4), so they estimate the functionals themselves and can
    be passed straight to :func:`reconstruct_register`.
    """
    if K < 1:
        raise PreconditionError("K must be at least 1")
    d = panel_functionals(panel, v)
    if mode == LITERAL_CLAMPED:
        return rng.binomial(K, np.minimum(d, 1.0)) / K
    if mode == PANEL_NORMALIZED:
        total = float(d.sum())
        if total <= 0.0:
            raise UndefinedProbabilityError("all panel functionals are zero")
        return 4.0 * rng.binomial(K, d / total) / K
    raise PreconditionError(f"unknown probability mode {mode!r}")


def reconstruct_register(panel: MeasurementPanel, d, tol: float = 1e-6,
                         per_qubit: bool = False, project: bool = False) -> QubitRegister:
    """Recover a register from its canonical-panel functionals.

    Components are taken on the nonnegative branch, ``Im_mu{q_s} = sqrt(d)/2``.
    ``per_qubit`` additionally requires every element norm to be 1/sqrt(m);
    ``project`` rescales each qubit onto that norm instead (for noisy inputs).
    """
    if not panel.canonical:
        raise PreconditionError("reconstruction needs the canonical panel")
    d = np.asarray(d, dtype=float)
    if d.shape != (len(panel),):
        raise ShapeError(f"expected {len(panel)} functionals, got {d.shape}")
    if np.any(d < 0):
        raise PreconditionError("functionals must be nonnegative")
    if abs(d.sum() - 4.0) > tol:
        raise PreconditionError(f"functionals sum to {d.sum()!r}, expected 4 within {tol}")
    m = panel.m
    comps = np.sqrt(d).reshape(m, 3) / 2.0
    if project:
        norms = np.linalg.norm(comps, axis=1)
        if np.any(norms == 0):
            raise InvalidRegisterError("cannot project a qubit with all-zero functionals")
        comps = comps / norms[:, None] / math.sqrt(m)
    else:
        comps = comps / np.linalg.norm(comps)  # absorbs the sum tolerance
    reg = QubitRegister(QuatVector(np.concatenate([np.zeros((m, 1)), comps], axis=1)))
    if per_qubit:
        reg.check_product_form()
    return reg
