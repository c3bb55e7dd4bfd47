"""Monte-Carlo estimates of Haar-averaged moments and risks.

Samples are drawn in fixed-size chunks and chunk j always uses stream
(seed, j), so estimates are bit-identical for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import InvalidInput
from .moments1d import BlockPhaseUnitary
from .numeric import RngStream, haar_unitaries
from .states import contract_mps_batch, contract_peps_batch
from .ising2d import zone_projector

Site = tuple[int, int]


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    std_err: float
    n_samples: int

    def z_score(self, value: float) -> float:
        # deviations at rounding level count as exact agreement (deterministic samples)
        if math.isclose(self.mean, value, rel_tol=1e-12, abs_tol=1e-14):
            return 0.0
        if self.std_err == 0:
            return math.inf
        return (self.mean - value) / self.std_err

    def agrees(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.z_score(value)) <= sigmas


@dataclass(frozen=True)
class McConfig:
    n_samples: int
    seed: int = 0
    workers: int = 1
    chunk_size: int = 2000

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise InvalidInput(f"need at least 2 samples, got {self.n_samples}")
        if self.workers < 1 or self.chunk_size < 1:
            raise InvalidInput("workers and chunk_size must be positive")


Sampler = Callable[[np.random.Generator, int], np.ndarray]


def run_chunks(sampler: Sampler, cfg: McConfig) -> np.ndarray:
    """All samples in chunk order; chunk j is drawn from stream (cfg.seed, j)."""
    sizes = [min(cfg.chunk_size, cfg.n_samples - s) for s in range(0, cfg.n_samples, cfg.chunk_size)]

    def one(j: int) -> np.ndarray:
        return np.asarray(sampler(RngStream(cfg.seed, j).generator(), sizes[j]), dtype=float)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(j) for j in range(len(sizes))]
    return np.concatenate(parts)


def estimate(samples: np.ndarray) -> RiskEstimate:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise InvalidInput("need at least 2 samples")
    return RiskEstimate(float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n)), n)


WSpec = Union[None, str, BlockPhaseUnitary, np.ndarray]


def _overlaps(states: np.ndarray, w: WSpec, gen: np.random.Generator, resample_y: bool) -> np.ndarray:
    """<x|W|x> per row of `states`."""
    if w is None:
        return (np.abs(states) ** 2).sum(axis=1).astype(complex)
    B, N = states.shape
    if isinstance(w, str):
        if w != "haar":
            raise InvalidInput(f"unknown W keyword {w!r}")
        mats = haar_unitaries(N, B, gen)
        return np.einsum("bi,bij,bj->b", states.conj(), mats, states)
    if isinstance(w, BlockPhaseUnitary):
        if w.d**w.n != N:
            raise InvalidInput("W does not match the state dimension")
        if not resample_y:
            return w.overlap(states)
        mask = w.projector_prefix()
        ys = haar_unitaries(w.d ** (w.n - w.k), B, gen)
        v = states[:, mask]
        rest = (np.abs(states[:, ~mask]) ** 2).sum(axis=1)
        return np.exp(1j * w.theta) * rest + np.einsum("bi,bij,bj->b", v.conj(), ys, v)
    mat = np.asarray(w)
    if mat.shape != (N, N):
        raise InvalidInput(f"W must be {N}x{N}")
    return np.einsum("bi,ij,bj->b", states.conj(), mat, states)


def mc_second_moment_mps(
    n: int, d: int, D: int, w: WSpec, cfg: McConfig, resample_y: bool = False
) -> RiskEstimate:
    """E |<x|W|x>|² over Haar MPS (unnormalized).

    w: None for the identity, "haar" for a fresh Haar W per draw, a
    BlockPhaseUnitary (with `resample_y` drawing a fresh Y per sample), or an
    explicit matrix.
    """

    def sampler(gen: np.random.Generator, count: int) -> np.ndarray:
        locals_ = haar_unitaries(D * d, count * n, gen).reshape(count, n, D * d, D * d)
        states = contract_mps_batch(locals_, d, D)
        return np.abs(_overlaps(states, w, gen, resample_y)) ** 2

    return estimate(run_chunks(sampler, cfg))


def mc_second_moment_peps(
    L: int, d: int, D: int, cfg: McConfig, zone: frozenset[Site] | None = None
) -> RiskEstimate:
    """E <Ψ|Ψ>² over Haar PEPS, or E |<Ψ|W|Ψ>|² for a block-phase W on `zone`.

    With a zone (PEPS coordinates), W = I - P + P Y P where P projects the zone
    qudits on |d-1> and Y is Haar on the range of P, resampled per draw.
    """
    mask = None if zone is None else zone_projector(frozenset(zone), L, d)
    dim = D * D * d

    def sampler(gen: np.random.Generator, count: int) -> np.ndarray:
        locals_ = haar_unitaries(dim, count * L * L, gen).reshape(count, L, L, dim, dim)
        states = contract_peps_batch(locals_, d, D)
        if mask is None:
            return (np.abs(states) ** 2).sum(axis=1) ** 2
        ys = haar_unitaries(int(mask.sum()), count, gen)
        v = states[:, mask]
        rest = (np.abs(states[:, ~mask]) ** 2).sum(axis=1)
        return np.abs(rest + np.einsum("bi,bij,bj->b", v.conj(), ys, v)) ** 2

    return estimate(run_chunks(sampler, cfg))


def risk_samples(
    w: np.ndarray, states: np.ndarray, normalized: bool = True
) -> np.ndarray:
    """1 - |<x|W|x>|² (/ <x|x>² when normalized) per row of `states`."""
    ov = np.einsum("bi,ij,bj->b", states.conj(), w, states)
    val = np.abs(ov) ** 2
    if normalized:
        val = val / ((np.abs(states) ** 2).sum(axis=1) ** 2)
    return 1.0 - val


def mc_risk(
    target: np.ndarray,
    hypothesis: np.ndarray,
    n: int,
    d: int,
    D: int,
    cfg: McConfig,
    normalized: bool = True,
) -> RiskEstimate:
    """Mean of 1 - |<x|M^† P|x>|² over fresh test MPS."""
    N = d**n
    target = np.asarray(target, dtype=complex)
    hypothesis = np.asarray(hypothesis, dtype=complex)
    if target.shape != (N, N) or hypothesis.shape != (N, N):
        raise InvalidInput(f"target and hypothesis must be {N}x{N}")
    w = target.conj().T @ hypothesis

    def sampler(gen: np.random.Generator, count: int) -> np.ndarray:
        locals_ = haar_unitaries(D * d, count * n, gen).reshape(count, n, D * d, D * d)
        return risk_samples(w, contract_mps_batch(locals_, d, D), normalized)

    return estimate(run_chunks(sampler, cfg))
