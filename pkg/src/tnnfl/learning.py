"""Learning a Haar-random target unitary from MPS training data.

Two trainers are available. `construct` builds a hypothesis that reproduces
every training label exactly and acts as a Haar-random unitary on the
complement of the training span. `optimize` runs Riemannian gradient descent
on U(N) for the phase-insensitive loss Σ_j (1 - |<φ_j|P|ψ_j>|²).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm, polar

from .errors import CannotBuildIndependentSet, DegenerateTrainingSet, InvalidInput
from .moments1d import exact_avg_risk_1d, full_training_risk_1d, thm1_lower_bound
from .numeric import RngLike, RngStream, as_generator, haar_unitaries, haar_unitary
from .oracle import risk_samples
from .states import contract_mps_batch

INDEPENDENCE_TOL = 1e-8


@dataclass(frozen=True)
class TrainingSet:
    states: np.ndarray  # (t, N), unit rows
    labels: np.ndarray  # (t, N), target @ state

    @property
    def t(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def sample_mps_states(n: int, d: int, D: int, count: int, rng: RngLike) -> np.ndarray:
    """Normalized random unitary-embedded MPS, shape (count, d**n)."""
    gen = as_generator(rng)
    locals_ = haar_unitaries(D * d, count * n, gen).reshape(count, n, D * d, D * d)
    states = contract_mps_batch(locals_, d, D)
    return states / np.linalg.norm(states, axis=1, keepdims=True)


def _min_singular(rows: np.ndarray) -> float:
    return float(np.linalg.svd(rows, compute_uv=False)[-1])


def make_training_set(target: np.ndarray, n: int, d: int, D: int, t: int, rng: RngLike) -> TrainingSet:
    N = d**n
    target = np.asarray(target, dtype=complex)
    if target.shape != (N, N):
        raise InvalidInput(f"target must be {N}x{N}")
    if not 0 <= t <= N:
        raise InvalidInput(f"t must lie in [0, {N}], got {t}")
    gen = as_generator(rng)
    if t == 0:
        empty = np.zeros((0, N), dtype=complex)
        return TrainingSet(empty, empty.copy())
    states = sample_mps_states(n, d, D, t, gen)
    if _min_singular(states) <= INDEPENDENCE_TOL:
        # rebuild one state at a time, redrawing any that breaks independence
        kept: list[np.ndarray] = []
        budget = 100 * t
        while len(kept) < t:
            if budget == 0:
                raise CannotBuildIndependentSet(f"no independent set of {t} states after {100 * t} redraws")
            cand = sample_mps_states(n, d, D, 1, gen)[0]
            if _min_singular(np.array(kept + [cand])) > INDEPENDENCE_TOL:
                kept.append(cand)
            else:
                budget -= 1
        states = np.array(kept)
    return TrainingSet(states, states @ target.T)


def perfect_hypothesis(
    target: np.ndarray, ts: TrainingSet, rng: RngLike, theta: float | None = None
) -> np.ndarray:
    """P = M Q (e^{iθ} I_t ⊕ Y) Q^† with Q's first t columns spanning the inputs."""
    gen = as_generator(rng)
    N, t = ts.dim, ts.t
    if theta is None:
        theta = gen.uniform(0.0, 2.0 * math.pi)
    if t == 0:
        q = np.eye(N, dtype=complex)
    else:
        q, r = np.linalg.qr(ts.states.T, mode="complete")
        if np.abs(np.diag(r[:t, :t])).min() <= INDEPENDENCE_TOL:
            raise DegenerateTrainingSet("training states are linearly dependent")
    block = np.zeros((N, N), dtype=complex)
    block[:t, :t] = np.exp(1j * theta) * np.eye(t)
    if t < N:
        block[t:, t:] = haar_unitary(N - t, gen)
    return np.asarray(target) @ q @ block @ q.conj().T


# -- optimization ------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    train_error_target: float = 1e-3
    max_iters: int = 2000
    step_size: float = 0.5
    armijo: float = 0.25
    reorthonormalize_every: int = 50


@dataclass
class OptimizeResult:
    unitary: np.ndarray
    loss: float
    train_error: float
    iterations: int
    converged: bool


def training_loss(p: np.ndarray, ts: TrainingSet) -> float:
    if ts.t == 0:
        return 0.0
    c = np.einsum("ji,ik,jk->j", ts.labels.conj(), p, ts.states)
    return float(np.sum(1.0 - np.abs(c) ** 2))


def optimize_hypothesis(ts: TrainingSet, cfg: OptimizerConfig, rng: RngLike = None) -> OptimizeResult:
    """Gradient descent along P <- P exp(-η Ω) with Armijo backtracking.

    Ω is the skew-Hermitian part of P^† G with G the Euclidean gradient
    -2 Σ_j c_j |φ_j><ψ_j|, c_j = <φ_j|P|ψ_j>.
    """
    gen = as_generator(rng)
    p = haar_unitary(ts.dim, gen)
    if ts.t == 0:
        return OptimizeResult(p, 0.0, 0.0, 0, True)
    phi, psi = ts.labels.T, ts.states.T
    loss = training_loss(p, ts)
    eta = cfg.step_size
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if loss / ts.t <= cfg.train_error_target:
            it -= 1
            break
        c = np.einsum("ij,ij->j", phi.conj(), p @ psi)
        grad = -2.0 * (phi * c) @ psi.conj().T
        x = p.conj().T @ grad
        omega = 0.5 * (x - x.conj().T)
        sq = float(np.real(np.vdot(omega, omega)))
        if sq < 1e-30:
            break
        while True:
            cand = p @ expm(-eta * omega)
            cand_loss = training_loss(cand, ts)
            if cand_loss <= loss - cfg.armijo * eta * sq or eta < 1e-12:
                break
            eta *= 0.5
        p, loss = cand, cand_loss
        eta = min(eta * 2.0, 64.0 * cfg.step_size)
        if it % cfg.reorthonormalize_every == 0:
            p = polar(p)[0]
    p = polar(p)[0]
    loss = training_loss(p, ts)
    err = loss / ts.t
    return OptimizeResult(p, loss, err, it, err <= cfg.train_error_target)


# -- experiments ---------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    d: int = 2
    D: int = 2
    k_grid: tuple[int, ...] = ()
    n_targets: int = 10
    n_test: int = 500
    trainer: str = "construct"
    train_error_target: float = 1e-3
    max_iters: int = 2000
    step_size: float = 0.5
    seed: int = 0
    workers: int = 1
    include_full: bool = True
    t_values: tuple[int, ...] = ()
    normalized: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        object.__setattr__(self, "t_values", tuple(int(t) for t in self.t_values))
        if self.n_targets < 1 or self.n_test < 1:
            raise InvalidInput("n_targets and n_test must be >= 1")
        if any(not 0 <= k <= self.n for k in self.k_grid):
            raise InvalidInput(f"k_grid must lie in [0, {self.n}]")
        if any(not 0 <= t <= self.d**self.n for t in self.t_values):
            raise InvalidInput(f"t_values must lie in [0, {self.d**self.n}]")
        if self.trainer not in ("construct", "optimize"):
            raise InvalidInput(f"trainer must be 'construct' or 'optimize', got {self.trainer!r}")
        if self.workers < 1:
            raise InvalidInput("workers must be >= 1")

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(self.train_error_target, self.max_iters, self.step_size)


@dataclass
class ExperimentRow:
    k: int | str | None
    t_k: int
    mean_risk: float
    std_err: float
    thm1_bound: float | None
    exact_formula: float | None
    trainer: str
    n: int
    d: int
    D: int
    seed: int
    train_error: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


CSV_COLUMNS = tuple(ExperimentRow.__dataclass_fields__)


@dataclass(frozen=True)
class _Point:
    k: int | str | None
    t: int


def _points(cfg: ExperimentConfig) -> list[_Point]:
    N = cfg.d**cfg.n
    pts = [_Point(k, N - cfg.d ** (cfg.n - k)) for k in cfg.k_grid]
    pts += [_Point(None, t) for t in cfg.t_values]
    if cfg.include_full:
        pts.append(_Point("full", N))
    return pts


def _run_target(cfg: ExperimentConfig, j: int, points: Sequence[_Point]) -> list[tuple[float, float]]:
    """(mean risk over test states, train error) for every point, one target."""
    root = RngStream(cfg.seed)
    target = haar_unitary(cfg.d**cfg.n, root.spawn(0).spawn(j))
    tests = sample_mps_states(cfg.n, cfg.d, cfg.D, cfg.n_test, root.spawn(1).spawn(j))
    out = []
    for pt in points:
        ts = make_training_set(target, cfg.n, cfg.d, cfg.D, pt.t, root.spawn(2).spawn(j).spawn(pt.t))
        hyp_rng = root.spawn(3).spawn(j).spawn(pt.t)
        if cfg.trainer == "construct":
            p = perfect_hypothesis(target, ts, hyp_rng)
            err = training_loss(p, ts) / ts.t if ts.t else 0.0
        else:
            res = optimize_hypothesis(ts, cfg.optimizer(), hyp_rng)
            p, err = res.unitary, res.train_error
        w = target.conj().T @ p
        out.append((float(risk_samples(w, tests, cfg.normalized).mean()), err))
    return out


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    points = _points(cfg)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            per_target = list(pool.map(lambda j: _run_target(cfg, j, points), range(cfg.n_targets)))
    else:
        per_target = [_run_target(cfg, j, points) for j in range(cfg.n_targets)]
    risks = np.array([[r for r, _ in row] for row in per_target])  # (targets, points)
    errs = np.array([[e for _, e in row] for row in per_target])
    rows = []
    for i, pt in enumerate(points):
        col = risks[:, i]
        se = float(col.std(ddof=1) / math.sqrt(col.size)) if col.size > 1 else 0.0
        if isinstance(pt.k, int):
            bound = thm1_lower_bound(cfg.n, cfg.d, cfg.D, pt.k)
            exact = exact_avg_risk_1d(cfg.n, cfg.d, cfg.D, pt.k)
        elif pt.k == "full":
            bound, exact = None, full_training_risk_1d(cfg.n, cfg.d, cfg.D)
        else:
            bound = exact = None
        rows.append(
            ExperimentRow(
                pt.k, pt.t, float(col.mean()), se, bound, exact,
                cfg.trainer, cfg.n, cfg.d, cfg.D, cfg.seed, float(errs[:, i].mean()),
            )
        )
    return rows
