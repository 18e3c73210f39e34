"""End-to-end experiments: learning-curve band and likelihood recovery.

Every trial owns a random stream derived from the master seed and the trial
index, so results do not depend on worker count or scheduling order.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import DivergenceError, PreconditionError
from .learner import (
    BATCH,
    EXACT,
    SQRT_DIFF,
    CircuitWeights,
    TrainingConfig,
    TrainingSample,
    TrainingTrace,
    step_bound,
    to_db,
    train,
)
from .measurement import canonical_panel, panel_functionals, reconstruct_register
from .quaternion import (
    QuatMatrix,
    Quaternion,
    QuatVector,
    augment_array,
    embed_qubit_block,
    hermitian,
    left_matrix,
    matmul,
    rotation_to_augmented_matrix,
)
from .qubit import (
    PER_QUBIT,
    HypothesisEncoding,
    QubitRegister,
    decode_distribution,
    encode_distribution,
    random_register_positive_orthant,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "QUATLEARN_MAX_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = 8
    trials: int = 1000
    iterations: int = 2000
    mu: float | None = None
    z: int = 256
    seed: int = 0
    samples: int = 100
    expectation_mode: str = EXACT
    mc_draws: int = 100
    metric: str = SQRT_DIFF
    schedule: str = BATCH
    output_dir: str | None = None

    def __post_init__(self):
        for name in ("m", "trials", "iterations", "samples"):
            if getattr(self, name) < 1:
                raise PreconditionError(f"{name} must be at least 1")
        if self.mu is not None and self.mu <= 0:
            raise PreconditionError("mu must be positive")

    @property
    def step(self) -> float:
        return self.mu if self.mu is not None else 0.9 * step_bound(self.z)

    def training_config(self, seed: int) -> TrainingConfig:
        return TrainingConfig(
            mu=self.step, iterations=self.iterations, metric=self.metric,
            expectation_mode=self.expectation_mode, mc_draws=self.mc_draws, z=self.z,
            seed=seed, schedule=self.schedule,
        )


@dataclass
class TrialResult:
    trial: int
    seed: int
    trace: TrainingTrace
    fingerprint: str
    diverged: bool = False
    diverged_at: int | None = None


@dataclass
class CurveSummary:
    trials: list
    iteration: np.ndarray
    mean_db: np.ndarray
    min_db: np.ndarray
    max_db: np.ndarray
    per_qubit_offset_db: float
    divergent: int = 0

    @property
    def improvement_db(self) -> float:
        return float(self.mean_db[0] - self.mean_db[-1])


@dataclass
class LikelihoodReport:
    labels: list
    true_likelihoods: np.ndarray
    estimated_likelihoods: np.ndarray
    linf_error: float
    extra: dict = field(default_factory=dict)


def trial_seed(master: int, trial: int) -> int:
    """Counter-based split of the master seed."""
    return int(np.random.SeedSequence(entropy=master, spawn_key=(trial,)).generate_state(1, np.uint64)[0])


def weights_fingerprint(W: CircuitWeights) -> str:
    return hashlib.sha256(np.ascontiguousarray(W.W.data).tobytes()).hexdigest()[:16]


def _random_axis(rng: np.random.Generator) -> Quaternion:
    v = rng.standard_normal(3)
    return Quaternion.pure(*(v / np.linalg.norm(v)))


def random_circuit(m: int, rng: np.random.Generator) -> QuatMatrix:
    """Per-qubit random rotations followed by a random qubit permutation, in augmented form."""
    W = QuatMatrix.identity(4 * m)
    for s in range(m):
        Z = rotation_to_augmented_matrix(_random_axis(rng), rng.uniform(0.0, 2.0 * math.pi))
        W = matmul(embed_qubit_block(Z, s, m), W)
    perm = rng.permutation(m)
    P = np.zeros((4 * m, 4 * m, 4))
    for b in range(4):
        P[b * m + perm, b * m + np.arange(m), 0] = 1.0
    return matmul(QuatMatrix(P), W)


def pass_through(W: QuatMatrix, reg: QubitRegister) -> QubitRegister:
    """Apply an augmented circuit to a register and keep the base block."""
    out = np.einsum("rcab,cb->ra", left_matrix(W.data), augment_array(reg.q.data))
    m = reg.m
    base = out[:m].copy()
    base[:, 0] = 0.0  # exact zero; rotations keep the real part at rounding level
    return QubitRegister(QuatVector(base))


def generate_instance(m: int, rng: np.random.Generator, samples: int = 100):
    """Ground-truth circuit and a dataset of (x, y) pairs with x = W_true y.

    The learner estimates the inverse map x -> y.
    """
    if m < 1:
        raise PreconditionError("m must be at least 1")
    W_true = random_circuit(m, rng)
    panel = canonical_panel(m)
    dataset = []
    for _ in range(samples):
        y = random_register_positive_orthant(m, rng)
        dataset.append(TrainingSample.build(pass_through(W_true, y), y, panel))
    return CircuitWeights(W_true, m), dataset


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    seed = trial_seed(config.seed, trial)
    rng = np.random.default_rng(seed)
    _, dataset = generate_instance(config.m, rng, config.samples)
    panel = canonical_panel(config.m)
    try:
        W, trace = train(dataset, panel, config.training_config(seed))
    except DivergenceError as exc:
        return TrialResult(trial, seed, TrainingTrace(), "", True, exc.iteration)
    return TrialResult(trial, seed, trace, weights_fingerprint(W))


def _worker_count(jobs: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, min(n, jobs))


def _run_one(args):
    return run_trial(*args)


def run_trials(config: ExperimentConfig) -> list[TrialResult]:
    jobs = [(config, t) for t in range(config.trials)]
    workers = _worker_count(len(jobs))
    if workers == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def aggregate(results: Sequence[TrialResult], m: int, panel_size: int) -> CurveSummary:
    good = [r for r in results if not r.diverged]
    if not good:
        raise DivergenceError(0, float("nan"))
    curves = np.array([r.trace.cost_db for r in good])
    return CurveSummary(
        trials=list(results),
        iteration=np.arange(curves.shape[1]),
        mean_db=curves.mean(axis=0),
        min_db=curves.min(axis=0),
        max_db=curves.max(axis=0),
        # panel-sum / m differs from the per-direction mean by P/m
        per_qubit_offset_db=float(10 * math.log10(panel_size / m)),
        divergent=len(results) - len(good),
    )


def run_learning_curve(config: ExperimentConfig) -> CurveSummary:
    results = run_trials(config)
    return aggregate(results, config.m, 3 * config.m)


def run_likelihood_experiment(config: ExperimentConfig, circuit: CircuitWeights | None = None,
                              oracle: bool = False, reconstruct_tol: float = 0.05) -> LikelihoodReport:
    """Recover per-hypothesis likelihoods through a learned (or supplied) circuit.

    The likelihood vector is encoded one hypothesis per qubit, pushed through
    the ground-truth circuit, mapped back with the estimate, and decoded from
    the canonical-panel functionals.  ``oracle`` uses the exact inverse of the
    ground-truth circuit instead of training.
    """
    m = config.m
    enc = HypothesisEncoding(m, PER_QUBIT)
    rng = np.random.default_rng(trial_seed(config.seed, 0))
    W_true, dataset = generate_instance(m, rng, config.samples)
    panel = canonical_panel(m)
    if oracle:
        circuit = inverse_circuit(W_true)
    if circuit is None:
        circuit, trace = train(dataset, panel, config.training_config(config.seed))
        final_db = float(trace.cost_db[-1])
    else:
        final_db = None
    p_true = rng.uniform(0.0, 1.0, size=m)
    y = encode_distribution(p_true, enc)
    x = pass_through(W_true.W, y)
    d = panel_functionals(panel, circuit.apply(x))
    reg = reconstruct_register(panel, d, tol=reconstruct_tol, project=True)
    p_est = decode_distribution(reg, enc)
    return LikelihoodReport(
        labels=[f"zeta_{s + 1}" for s in range(m)],
        true_likelihoods=p_true,
        estimated_likelihoods=p_est,
        linf_error=float(np.max(np.abs(p_true - p_est))),
        extra={"final_cost_db": final_db, "functional_sum": float(d.sum())},
    )


def inverse_circuit(W: CircuitWeights) -> CircuitWeights:
    """Exact inverse of a unitary augmented circuit."""
    return CircuitWeights(hermitian(W.W), W.m)


# ---------------------------------------------------------------------------
# artifacts


def _fmt(v: float) -> str:
    return repr(float(v))


def write_curve_csv(summary: CurveSummary, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "mean_db", "min_db", "max_db"])
        for row in zip(summary.iteration, summary.mean_db, summary.min_db, summary.max_db):
            w.writerow([int(row[0])] + [_fmt(v) for v in row[1:]])


def write_per_qubit_csv(summary: CurveSummary, path: Path) -> None:
    """Same curve in the panel-sum / m normalisation."""
    off = summary.per_qubit_offset_db
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "mean_db", "min_db", "max_db"])
        for row in zip(summary.iteration, summary.mean_db, summary.min_db, summary.max_db):
            w.writerow([int(row[0])] + [_fmt(v + off) for v in row[1:]])


def write_trace_csv(trace: TrainingTrace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "cost", "cost_db", "grad_norm"])
        for i, (c, db, g) in enumerate(zip(trace.cost, trace.cost_db, trace.grad_norm)):
            w.writerow([i, _fmt(c), _fmt(db), _fmt(g)])


def write_likelihood_csv(report: LikelihoodReport, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hypothesis", "true_likelihood", "estimated_likelihood"])
        for lab, t, e in zip(report.labels, report.true_likelihoods, report.estimated_likelihoods):
            w.writerow([lab, _fmt(t), _fmt(e)])


def write_manifest(path: Path, command: str, config: dict, seed: int, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "versions": {
            "quatlearn": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "platform": platform.platform(),
        },
    }
    if extra:
        manifest["results"] = extra
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def config_dict(config) -> dict:
    d = asdict(config)
    if isinstance(config, ExperimentConfig):
        d["mu"] = config.step
    return d
