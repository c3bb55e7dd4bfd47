"""Dense complex linear algebra helpers and Haar sampling.

Matrices are plain complex128 ndarrays; unitarity is checked, not enforced by type.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidDimension, InvalidShape, SizeOverflow

UNITARY_ATOL = 1e-10
CLOSED_FORM_RTOL = 1e-12

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream addressed by (seed, stream_id).

    Streams with distinct ids are statistically independent, so parallel
    workers can each take their own id and still give reproducible results.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, index: int) -> "RngStream":
        """Child stream; deterministic in (seed, stream_id, index)."""
        ss = np.random.SeedSequence(self.stream_id, spawn_key=(int(index) & _MASK64,))
        child_id = int(ss.generate_state(1, dtype=np.uint64)[0])
        return RngStream(self.seed, child_id)


RngLike = Union[RngStream, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


def haar_unitaries(dim: int, count: int, rng: RngLike) -> np.ndarray:
    """Stack of `count` independent Haar unitaries, shape (count, dim, dim)."""
    if dim < 1:
        raise InvalidDimension(f"dim must be >= 1, got {dim}")
    gen = as_generator(rng)
    shape = (count, dim, dim)
    z = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    # fix the column phases so the distribution is exactly Haar
    phases = diag / np.abs(diag)
    return q * phases[:, None, :]


def haar_unitary(dim: int, rng: RngLike) -> np.ndarray:
    return haar_unitaries(dim, 1, rng)[0]


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    err = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max(initial=0.0)
    return bool(err <= atol)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    if a.ndim != 2 or b.ndim != 2:
        raise InvalidShape("kron expects matrices")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > np.iinfo(np.intp).max:
        raise SizeOverflow(f"kron result {rows}x{cols} exceeds the addressable size")
    return np.kron(a, b)


def trace_norm(a: np.ndarray) -> float:
    """Half the sum of singular values, i.e. (1/2) tr sqrt(A^dag A)."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidShape(f"trace_norm needs a square matrix, got shape {a.shape}")
    if a.size == 0:
        return 0.0
    return 0.5 * float(np.linalg.svd(a, compute_uv=False).sum())
