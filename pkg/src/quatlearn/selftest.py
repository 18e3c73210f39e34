"""Fast invariant checks runnable from the command line."""
from __future__ import annotations

import math

import numpy as np

from . import quaternion as qc
from .learner import SQRT_DIFF, SQUARED_DIFF, TrainingSample, fd_gradient_check, random_weights, step_bound
from .measurement import canonical_panel, register_functionals, reconstruct_register
from .qubit import (
    BITWISE,
    PER_QUBIT,
    HypothesisEncoding,
    decode_distribution,
    encode_distribution,
    qubit_from_amplitudes,
    random_register_positive_orthant,
)


def _rand_q(rng, n):
    return rng.standard_normal((n, 4))


def check_product_table(rng):
    expected = {("i", "j"): qc.K, ("j", "k"): qc.I, ("k", "i"): qc.J, ("j", "i"): -qc.K}
    units = {"i": qc.I, "j": qc.J, "k": qc.K}
    ok = all(qc.qmul(units[a], units[b]) == v for (a, b), v in expected.items())
    return ok and all(qc.qmul(u, u) == qc.Quaternion(-1.0) for u in units.values())


def check_involution_sum(rng):
    q = _rand_q(rng, 1000)
    total = sum(q * s for s in qc.INVOLUTION_SIGNS)
    return np.max(np.abs(total[:, 1:])) < 1e-12 and np.max(np.abs(total[:, 0] - 4 * q[:, 0])) < 1e-12


def check_rotation(rng):
    worst = 0.0
    for _ in range(200):
        axis = qc.Quaternion.pure(*(lambda v: v / np.linalg.norm(v))(rng.standard_normal(3)))
        q = qc.Quaternion.pure(*rng.standard_normal(3))
        ang = rng.uniform(-math.pi, math.pi)
        out = qc.rotate(q, axis, ang)
        worst = max(worst, np.max(np.abs(out.imag - qc.rotation_matrix_3x3(axis, ang) @ q.imag)))
    return worst < 1e-10


def check_encoding(rng):
    a = complex(*rng.standard_normal(2))
    b = complex(*rng.standard_normal(2))
    n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    a, b = a / n, b / n
    ph = complex(math.cos(1.3), math.sin(1.3))
    same = qubit_from_amplitudes(a, b).q.isclose(qubit_from_amplitudes(ph * a, ph * b).q)
    p = rng.uniform(size=5)
    enc = HypothesisEncoding(5, PER_QUBIT)
    rt = np.allclose(decode_distribution(encode_distribution(p, enc), enc), p, atol=1e-10)
    pb = np.array([0.1 * 0.3, 0.9 * 0.3, 0.1 * 0.7, 0.9 * 0.7])
    encb = HypothesisEncoding(4, BITWISE)
    rtb = np.allclose(decode_distribution(encode_distribution(pb, encb), encb), pb, atol=1e-10)
    return same and rt and rtb


def check_measurement(rng):
    panel = canonical_panel(8)
    for _ in range(50):
        reg = random_register_positive_orthant(8, rng)
        d = register_functionals(panel, reg)
        if abs(d.sum() - 4.0) > 1e-10:
            return False
        if not reconstruct_register(panel, d).q.allclose(reg.q, 1e-10):
            return False
    return True


def check_gradient(rng):
    worst = 0.0
    for m in (1, 2):
        panel = canonical_panel(m)
        for metric in (SQRT_DIFF, SQUARED_DIFF):
            s = TrainingSample.build(random_register_positive_orthant(m, rng),
                                     random_register_positive_orthant(m, rng), panel)
            worst = max(worst, fd_gradient_check(random_weights(m, rng), s, panel, metric))
    return worst < 1e-5


def check_step_bound(rng):
    return step_bound(256) == 1 / 24 and step_bound(2) == 1 / 3 and step_bound(5) == 1 / 9


CHECKS = [
    ("product table", check_product_table),
    ("involution sum", check_involution_sum),
    ("rotation vs rotation matrix", check_rotation),
    ("qubit encodings", check_encoding),
    ("measurement identities", check_measurement),
    ("gradient vs finite differences", check_gradient),
    ("step bound", check_step_bound),
]


def run_selftest(seed: int = 0, echo=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, fn in CHECKS:
        passed = bool(fn(rng))
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'} {name}")
    return ok
