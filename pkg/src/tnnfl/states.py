"""Unitary-embedded MPS (ring) and PEPS (torus) construction and exact contraction.

Leg conventions
---------------
MPS local unitary acts on (bond ⊗ physical), bond-major: row index a*d + i,
column index b*d + j. The block A_i[a, b] = U[a*d + i, b*d + 0] fixes the
physical input to |0> and the physical output to i.

PEPS local unitary maps (right-in ⊗ down-in ⊗ physical |0>) to
(left-out ⊗ up-out ⊗ physical out). As a tensor
A[l, u, p, r, dn] = U.reshape(D, D, d, D, D, d)[l, u, p, r, dn, 0].
The right-in leg of site (x, y) is the left-out leg of (x+1, y); the down-in
leg of (x, y) is the up-out leg of (x, y+1), both periodic. Locals are stored
as grid[y, x] and qudit s = y*L + x is the s-th most significant digit of the
basis index.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateState, InvalidDimension, InvalidShape, StateTooLarge
from .numeric import RngLike, as_generator, haar_unitaries

DEFAULT_CAP = 1 << 20


def _check_dims(d: int, D: int) -> None:
    if d < 2:
        raise InvalidDimension(f"physical dimension must be >= 2, got {d}")
    if D < 1:
        raise InvalidDimension(f"bond dimension must be >= 1, got {D}")


@dataclass(frozen=True)
class MpsSpec:
    n: int
    d: int
    D: int
    locals: np.ndarray  # (n, D*d, D*d)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InvalidDimension(f"MPS needs n >= 2 sites, got {self.n}")
        _check_dims(self.d, self.D)
        dim = self.D * self.d
        loc = np.asarray(self.locals, dtype=complex)
        if loc.shape != (self.n, dim, dim):
            raise InvalidShape(f"expected locals of shape {(self.n, dim, dim)}, got {loc.shape}")
        object.__setattr__(self, "locals", loc)


@dataclass(frozen=True)
class PepsSpec:
    L: int
    d: int
    D: int
    locals: np.ndarray  # (L, L, D*D*d, D*D*d), indexed [y, x]

    def __post_init__(self) -> None:
        if self.L < 2:
            raise InvalidDimension(f"PEPS needs L >= 2, got {self.L}")
        _check_dims(self.d, self.D)
        dim = self.D * self.D * self.d
        loc = np.asarray(self.locals, dtype=complex)
        if loc.shape != (self.L, self.L, dim, dim):
            raise InvalidShape(f"expected locals of shape {(self.L, self.L, dim, dim)}, got {loc.shape}")
        object.__setattr__(self, "locals", loc)


def sample_mps(n: int, d: int, D: int, rng: RngLike) -> MpsSpec:
    if n < 2:
        raise InvalidDimension(f"MPS needs n >= 2 sites, got {n}")
    _check_dims(d, D)
    return MpsSpec(n, d, D, haar_unitaries(D * d, n, rng))


def sample_peps(L: int, d: int, D: int, rng: RngLike) -> PepsSpec:
    if L < 2:
        raise InvalidDimension(f"PEPS needs L >= 2, got {L}")
    _check_dims(d, D)
    u = haar_unitaries(D * D * d, L * L, rng)
    return PepsSpec(L, d, D, u.reshape(L, L, D * D * d, D * D * d))


def contract_mps_batch(locals_: np.ndarray, d: int, D: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Amplitudes for a batch of MPS locals of shape (B, n, Dd, Dd) -> (B, d**n)."""
    locals_ = np.asarray(locals_)
    B, n = locals_.shape[:2]
    if d**n > cap:
        raise StateTooLarge(f"d^n = {d**n} exceeds cap {cap}")
    # blocks[b, k, i, a, c] = U_k[a*d + i, c*d + 0]
    blocks = locals_.reshape(B, n, D, d, D, d)[..., 0].transpose(0, 1, 3, 2, 4)
    acc = blocks[:, 0]  # (B, I, a, c)
    for k in range(1, n):
        acc = np.einsum("bIae,bjec->bIjac", acc, blocks[:, k])
        acc = acc.reshape(B, -1, D, D)
    return np.einsum("bIaa->bI", acc)


def contract_mps(spec: MpsSpec, cap: int = DEFAULT_CAP) -> np.ndarray:
    return contract_mps_batch(spec.locals[None], spec.d, spec.D, cap)[0]


def _peps_row(tensors: np.ndarray) -> np.ndarray:
    """Contract one periodic row. tensors: (B, L, l, u, p, r, dn) -> (B, U, P, N)."""
    B, L, D, _, d = tensors.shape[:5]
    w = tensors[:, 0].transpose(0, 1, 2, 3, 5, 4)  # (B, l0, U, P, N, r)
    for x in range(1, L):
        l0, U, P, N = w.shape[1:5]
        # sum over the shared horizontal bond h
        m = w.reshape(B, l0 * U * P * N, D) @ tensors[:, x].reshape(B, D, D * d * D * D)
        m = m.reshape(B, l0, U, P, N, D, d, D, D)  # ..., u, p, r, e
        w = m.transpose(0, 1, 2, 5, 3, 6, 4, 8, 7).reshape(B, l0, U * D, P * d, N * D, D)
    return np.einsum("blUPNl->bUPN", w)


def contract_peps_batch(locals_: np.ndarray, d: int, D: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Amplitudes for a batch of PEPS locals of shape (B, L, L, D²d, D²d) -> (B, d**(L*L))."""
    locals_ = np.asarray(locals_)
    B, L = locals_.shape[:2]
    if d ** (L * L) > cap:
        raise StateTooLarge(f"d^(L^2) = {d ** (L * L)} exceeds cap {cap}")
    tens = locals_.reshape(B, L, L, D, D, d, D, D, d)[..., 0]
    acc = _peps_row(tens[:, 0])
    for y in range(1, L):
        row = _peps_row(tens[:, y])
        U, P, N = acc.shape[1:]
        Q, M = row.shape[2:]
        acc = (acc.reshape(B, U * P, N) @ row.reshape(B, N, Q * M)).reshape(B, U, P * Q, M)
    return np.einsum("bUPU->bP", acc)


def contract_peps(spec: PepsSpec, cap: int = DEFAULT_CAP) -> np.ndarray:
    return contract_peps_batch(spec.locals[None], spec.d, spec.D, cap)[0]


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    nrm = np.linalg.norm(v)
    if not nrm > 0:
        raise DegenerateState("cannot normalize a zero vector")
    return v / nrm


def dump_state(path: str | Path, v: np.ndarray) -> None:
    """Little-endian u64 length followed by interleaved f64 (re, im) pairs."""
    v = np.ascontiguousarray(v, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", v.size))
        fh.write(v.view("<f8").tobytes())


def load_state(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (dim,) = struct.unpack_from("<Q", raw, 0)
    body = np.frombuffer(raw, dtype="<f8", offset=8)
    if body.size != 2 * dim:
        raise InvalidShape(f"state file declares {dim} amplitudes but holds {body.size // 2}")
    return body.view("<c16").astype(complex)
