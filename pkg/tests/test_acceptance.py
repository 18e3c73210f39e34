"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test appends a PASS/FAIL line (with the measured numbers) that the
terminal summary prints at the end of the run.
"""
import cmath
import math
import time

import numpy as np
import pytest

from quatlearn import quaternion as qc
from quatlearn.harness import ExperimentConfig, run_learning_curve, run_likelihood_experiment, run_trial
from quatlearn.learner import METRICS, TrainingSample, fd_gradient_check, random_weights, step_bound
from quatlearn.measurement import (
    MeasurementDirection,
    canonical_panel,
    estimate_expectation,
    functional,
    outcome_probability,
    reconstruct_register,
    register_functionals,
)
from quatlearn.quaternion import Quaternion, QuatVector
from quatlearn.qubit import (
    BITWISE,
    PER_QUBIT,
    HypothesisEncoding,
    decode_distribution,
    encode_distribution,
    qubit_from_amplitudes,
    random_register_positive_orthant,
)

from conftest import ACCEPTANCE_LINES, table_product


def report(name, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, f"{name}: {detail}"


def rodrigues(v, axis, angle):
    """3x3 axis-angle rotation matrix built from the cross-product matrix."""
    kx = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    R = np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * kx @ kx
    return R @ v


def unit3(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def test_algebra_suite():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    basis_ok = all(
        np.array_equal(qc.qmul(qc.BASIS[a], qc.BASIS[b]).as_array(), table_product(np.eye(4)[a], np.eye(4)[b]))
        for a in range(4) for b in range(4)
    )
    inv_err = auto_err = 0.0
    for _ in range(1000):
        p = Quaternion.from_array(rng.standard_normal(4))
        q = Quaternion.from_array(rng.standard_normal(4))
        s = q + qc.involution(q, qc.I) + qc.involution(q, qc.J) + qc.involution(q, qc.K)
        inv_err = max(inv_err, np.max(np.abs(s.as_array() - [4 * q.r, 0, 0, 0])))
        for zeta in (qc.I, qc.J, qc.K):
            lhs = qc.involution(qc.qmul(p, q), zeta)
            rhs = qc.qmul(qc.involution(p, zeta), qc.involution(q, zeta))
            auto_err = max(auto_err, np.max(np.abs(lhs.as_array() - rhs.as_array())))
    rot_err = 0.0
    for _ in range(1000):
        v, axis, ang = rng.standard_normal(3), unit3(rng), rng.uniform(-math.pi, math.pi)
        out = qc.rotate(Quaternion.pure(*v), Quaternion.pure(*axis), ang)
        rot_err = max(rot_err, np.max(np.abs(out.imag - rodrigues(v, axis, ang))), abs(out.r))
    elapsed = time.perf_counter() - t0
    ok = basis_ok and inv_err <= 1e-12 and auto_err <= 1e-12 and rot_err <= 1e-10 and elapsed < 1.0
    report("algebra", ok, f"basis_exact={basis_ok} involution_sum={inv_err:.1e} automorphism={auto_err:.1e} "
                          f"rotate={rot_err:.1e} time={elapsed:.2f}s")


def test_augmented_machinery():
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    bij_err = rot_err = 0.0
    for _ in range(1000):
        M = int(rng.integers(1, 5))
        v = QuatVector(rng.standard_normal((M, 4)))
        real = qc.real_expansion(v)
        bij_err = max(bij_err, np.max(np.abs(real - v.data.T.ravel())),
                      np.max(np.abs(qc.real_contraction(real).data - v.data)))
        r = rng.standard_normal(4 * M)
        bij_err = max(bij_err, np.max(np.abs(qc.real_expansion(qc.real_contraction(r)) - r)))
        axis, ang = Quaternion.pure(*unit3(rng)), rng.uniform(-math.pi, math.pi)
        Z = qc.rotation_to_augmented_matrix(axis, ang)
        q = Quaternion.pure(*rng.standard_normal(3))
        got = qc.qmatvec(Z, qc.augment(QuatVector([q])).blocks).data
        want = qc.augment(QuatVector([qc.rotate(q, axis, ang)])).blocks.data
        rot_err = max(rot_err, np.max(np.abs(got - want)))
    elapsed = time.perf_counter() - t0
    ok = bij_err <= 1e-12 and rot_err <= 1e-12 and elapsed < 1.0
    report("augmented", ok, f"bijection={bij_err:.1e} rotation_consistency={rot_err:.1e} time={elapsed:.2f}s")


def test_encoding_suite():
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    phase_err = 0.0
    for _ in range(1000):
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        a /= np.linalg.norm(a)
        ph = cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        d = qubit_from_amplitudes(ph * a[0], ph * a[1]).q.as_array() - qubit_from_amplitudes(a[0], a[1]).q.as_array()
        phase_err = max(phase_err, np.max(np.abs(d)))
    per_err = bit_err = 0.0
    for _ in range(200):
        enc = HypothesisEncoding(8, PER_QUBIT)
        p = rng.uniform(0, 1, 8)
        per_err = max(per_err, np.max(np.abs(decode_distribution(encode_distribution(p, enc), enc) - p)))
        b = rng.uniform(0, 1, 3)
        idx = np.arange(8)
        prod = np.prod([np.where((idx >> k) & 1, b[k], 1 - b[k]) for k in range(3)], axis=0)
        enc = HypothesisEncoding(8, BITWISE)
        bit_err = max(bit_err, np.max(np.abs(decode_distribution(encode_distribution(prod, enc), enc) - prod)))
    elapsed = time.perf_counter() - t0
    ok = phase_err <= 1e-12 and per_err <= 1e-10 and bit_err <= 1e-10 and elapsed < 1.0
    report("encoding", ok, f"phase={phase_err:.1e} per_qubit_roundtrip={per_err:.1e} "
                           f"bitwise_roundtrip={bit_err:.1e} time={elapsed:.2f}s")


def test_measurement_identities():
    rng = np.random.default_rng(104)
    panel = canonical_panel(8)
    t0 = time.perf_counter()
    sum_err = neq = rec_err = 0.0
    for _ in range(1000):
        reg = random_register_positive_orthant(8, rng)
        qa = qc.augment_array(reg.q.data)
        pairs = [functional(h, qa) for h in panel]
        d = np.array([p.p_eq for p in pairs])
        sum_err = max(sum_err, abs(d.sum() - 4.0))
        neq = max(neq, max(p.p_neq for p in pairs))
        out = reconstruct_register(panel, register_functionals(panel, reg))
        rec_err = max(rec_err, np.max(np.abs(out.q.data - reg.q.data)))
    elapsed = time.perf_counter() - t0
    ok = sum_err <= 1e-10 and neq <= 1e-12 and rec_err <= 1e-10 and elapsed < 5.0
    report("measurement", ok, f"sum_peq={sum_err:.1e} p_neq={neq:.1e} reconstruct={rec_err:.1e} "
                              f"time={elapsed:.2f}s")


def test_gradient_oracle():
    rng = np.random.default_rng(105)
    t0 = time.perf_counter()
    worst = 0.0
    sizes = (1, 2, 4)
    for k in range(100):
        m = sizes[k % 3]
        panel = canonical_panel(m)
        sample = TrainingSample.build(random_register_positive_orthant(m, rng),
                                      random_register_positive_orthant(m, rng), panel)
        W = random_weights(m, rng)
        for metric in METRICS:
            worst = max(worst, fd_gradient_check(W, sample, panel, metric, 1e-6))
    elapsed = time.perf_counter() - t0
    report("gradient", worst < 1e-5 and elapsed < 60, f"worst_relative_error={worst:.1e} time={elapsed:.1f}s")


@pytest.mark.slow
def test_learning_curve():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(m=8, trials=100, iterations=2000, mu=0.9 / 24, z=256, seed=0)
    summary = run_learning_curve(cfg)
    elapsed = time.perf_counter() - t0
    monotone = sum(1 for t in summary.trials if not t.diverged
                   and np.all(np.diff(np.asarray(t.trace.cost_db)[10:]) <= 0))
    frac = monotone / cfg.trials
    ok = summary.improvement_db >= 20 and frac >= 0.95 and elapsed < 600
    report("learning_curve", ok, f"improvement={summary.improvement_db:.1f}dB non_increasing={frac:.0%} "
                                 f"divergent={summary.divergent} time={elapsed:.0f}s")


def test_likelihood_recovery():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(m=8, z=8, iterations=2000, seed=0)
    trained = run_likelihood_experiment(cfg)
    oracle = run_likelihood_experiment(cfg, oracle=True)
    elapsed = time.perf_counter() - t0
    ok = trained.linf_error < 0.05 and oracle.linf_error <= 1e-8 and elapsed < 60
    report("likelihood", ok, f"trained_linf={trained.linf_error:.1e} oracle_linf={oracle.linf_error:.1e} "
                             f"time={elapsed:.1f}s")


def test_step_bound_behaviour():
    exact = step_bound(256) == 1 / 24
    cfg = ExperimentConfig(m=8, trials=20, iterations=2000, mu=5 * step_bound(256), z=256, seed=0)
    diverged = sum(run_trial(cfg, t).diverged for t in range(20))
    report("step_bound", exact and diverged >= 10, f"bound_exact={exact} diverged={diverged}/20 at 5x bound")


def test_monte_carlo_consistency():
    rng = np.random.default_rng(106)
    K = 10_000
    worst = 0.0
    exact_ok = True
    for n in range(100):
        m = int(rng.integers(1, 9))
        v = np.zeros((m, 4))
        v[:, 1:] = rng.standard_normal((m, 3))
        h = MeasurementDirection(QuatVector(v / np.linalg.norm(v)))
        if n % 10 == 0:
            reg = qc.augment_array(np.zeros((m, 4)))  # p = 0
        elif n % 10 == 1:
            reg = qc.augment_array(-h.h.data)  # aligned, p_eq = 4 clamps to 1
        else:
            reg = qc.augment_array(random_register_positive_orthant(m, rng).q.data)
        p = outcome_probability(h, reg)
        est = estimate_expectation(h, reg, K, rng)
        sigma = math.sqrt(p * (1 - p) / K)
        if sigma == 0.0:
            exact_ok &= est == p
        else:
            worst = max(worst, abs(est - p) / sigma)
    report("monte_carlo", exact_ok and worst <= 3.0, f"worst={worst:.2f} sigma degenerate_exact={exact_ok}")
