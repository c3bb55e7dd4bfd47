"""Exact second moments of unitary-embedded MPS on a ring.

Averaging two copies of the state over Haar local unitaries leaves one
permutation of S_2 per site. Spin 0 (↓) is the identity pairing and spin 1 (↑)
the swap pairing. Neighbouring sites couple through a 2x2 transfer matrix and
each site carries a weight that depends on the operator being averaged.
Closed forms use exact rationals; `config_sum_1d` is a brute-force oracle
built from Weingarten values directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidK, InvalidTrainingSet, InvalidW, TooManyConfigs, UnsupportedDimension
from .numeric import RngLike, haar_unitary, is_unitary

Weights = tuple  # (weight for ↓, weight for ↑)
Mat2 = tuple  # ((a, b), (c, d)) of Fractions


@dataclass(frozen=True)
class TransferMatrix:
    t_aa: Fraction
    t_as: Fraction
    t_sa: Fraction
    t_ss: Fraction

    def matrix(self) -> Mat2:
        return ((self.t_ss, self.t_sa), (self.t_as, self.t_aa))

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.matrix()])


def transfer_matrix(d: int, D: int) -> TransferMatrix:
    if d < 2:
        raise UnsupportedDimension(f"physical dimension must be >= 2, got {d}")
    if D < 1:
        raise UnsupportedDimension(f"bond dimension must be >= 1, got {D}")
    den = D * D * d**3 - d
    diag = Fraction(D * D * d - 1, den)
    off = Fraction(D * d - D, den)
    return TransferMatrix(diag, off, off, diag)


def _mul(a: Mat2, b: Mat2) -> Mat2:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def _pow(a: Mat2, e: int) -> Mat2:
    out: Mat2 = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))
    while e:
        if e & 1:
            out = _mul(out, a)
        a = _mul(a, a)
        e >>= 1
    return out


def _weighted(t: Mat2, w: Weights) -> Mat2:
    # diag(w) @ T
    return ((w[0] * t[0][0], w[0] * t[0][1]), (w[1] * t[1][0], w[1] * t[1][1]))


def transfer_trace(n: int, d: int, D: int, blocks: Sequence[tuple[int, Weights]]) -> Fraction:
    """tr of Π (diag(w) T)^count over consecutive blocks of sites."""
    t = transfer_matrix(d, D).matrix()
    acc = _pow(t, 0)
    total = 0
    for count, w in blocks:
        w = (Fraction(w[0]), Fraction(w[1]))
        acc = _mul(acc, _pow(_weighted(t, w), count))
        total += count
    if total != n:
        raise InvalidK(f"blocks cover {total} sites, expected {n}")
    return acc[0][0] + acc[1][1]


WEIGHT_KINDS = ("identity", "half-projected", "projected", "haar-y")


def weight_blocks(kind: str, n: int, d: int, k: int) -> list[tuple[int, Weights]]:
    """Per-site weights for the terms of the block-phase expansion.

    identity        W = I on all sites
    half-projected  I ⊗ P, P = Σ^{⊗k} ⊗ I
    projected       P ⊗ P
    haar-y          the Haar average of the Y block
    """
    if not 0 <= k <= n:
        raise InvalidK(f"k must lie in [0, {n}], got {k}")
    free = (d * d, d)
    if kind == "identity":
        return [(n, free)]
    if kind == "half-projected":
        return [(k, (d, 1)), (n - k, free)]
    if kind == "projected":
        return [(k, (1, 1)), (n - k, free)]
    if kind == "haar-y":
        return [(k, (1, 1)), (n - k, (1, d))]
    raise ValueError(f"unknown weight kind {kind!r}")


def site_weights(kind: str, n: int, d: int, k: int) -> list[Weights]:
    return [w for count, w in weight_blocks(kind, n, d, k) for _ in range(count)]


def _lambda2(d: int, D: int) -> Fraction:
    return Fraction(D * D * d - d, D * D * d * d - 1)


def second_moment_identity(n: int, d: int, D: int) -> float:
    """E <x|x>^2 over Haar locals."""
    transfer_matrix(d, D)
    return float(1 + _lambda2(d, D) ** n)


def _check_k(n: int, k: int) -> None:
    if not 0 <= k <= n:
        raise InvalidK(f"k must lie in [0, {n}], got {k}")


def exact_avg_risk_1d_fraction(n: int, d: int, D: int, k: int) -> Fraction:
    _check_k(n, k)
    z_id = 1 + _lambda2(d, D) ** n
    z_pp = transfer_trace(n, d, D, weight_blocks("projected", n, d, k))
    z_y = transfer_trace(n, d, D, weight_blocks("haar-y", n, d, k))
    return 1 - (1 - Fraction(2, d**k)) * z_id - z_pp - z_y


def exact_avg_risk_1d(n: int, d: int, D: int, k: int) -> float:
    return float(exact_avg_risk_1d_fraction(n, d, D, k))


def full_training_risk_1d(n: int, d: int, D: int) -> float:
    """Risk when the hypothesis equals the target up to phase (t = d^n)."""
    return float(-(_lambda2(d, D) ** n))


def thm1_lower_bound_fraction(n: int, d: int, D: int, k: int) -> Fraction:
    _check_k(n, k)
    if k == 0 or k == n:
        return exact_avg_risk_1d_fraction(n, d, D, k)
    A = Fraction(D + 1, D * d + 1)
    B = Fraction(D - 1, D * d - 1)
    dab = d * A * B
    return (
        1
        - (1 - Fraction(2, d**k)) * (1 + dab**n)
        - (Fraction(1, d**n) + Fraction(1, d**k)) * (A**k + B**k) * (1 + dab ** (n - k))
    )


def thm1_lower_bound(n: int, d: int, D: int, k: int) -> float:
    return float(thm1_lower_bound_fraction(n, d, D, k))


# -- block-phase unitaries ----------------------------------------------------


@dataclass(frozen=True)
class BlockPhaseUnitary:
    """W = e^{iθ}(I - Σ^{⊗k}⊗I) + Σ^{⊗k}⊗Y with Σ = |d-1><d-1|.

    The phase block has dimension t_k = d^n - d^(n-k); Y lives on the last n-k qudits.
    """

    n: int
    d: int
    k: int
    theta: float
    y: np.ndarray

    def __post_init__(self) -> None:
        _check_k(self.n, self.k)
        y = np.atleast_2d(np.asarray(self.y, dtype=complex))
        m = self.d ** (self.n - self.k)
        if y.shape != (m, m):
            raise InvalidW(f"Y must be {m}x{m}, got {y.shape}")
        if not is_unitary(y):
            raise InvalidW("Y is not unitary")
        object.__setattr__(self, "y", y)

    @classmethod
    def identity(cls, n: int, d: int) -> "BlockPhaseUnitary":
        return cls(n, d, 0, 0.0, np.eye(d**n))

    @classmethod
    def random(cls, n: int, d: int, k: int, rng: RngLike, theta: float = 0.0) -> "BlockPhaseUnitary":
        _check_k(n, k)
        return cls(n, d, k, theta, haar_unitary(d ** (n - k), rng))

    @property
    def t_k(self) -> int:
        return self.d**self.n - self.d ** (self.n - self.k)

    def projector_prefix(self) -> np.ndarray:
        """Diagonal of Σ^{⊗k} ⊗ I as a boolean mask over basis states."""
        idx = np.arange(self.d**self.n)
        tail = self.d ** (self.n - self.k)
        prefix = idx // tail
        return prefix == (self.d**self.k - 1)

    def materialize(self) -> np.ndarray:
        N = self.d**self.n
        mask = self.projector_prefix()
        w = np.diag(np.where(mask, 0.0, np.exp(1j * self.theta))).astype(complex)
        sel = np.flatnonzero(mask)
        w[np.ix_(sel, sel)] = self.y
        return w

    def overlap(self, states: np.ndarray) -> np.ndarray:
        """<x|W|x> for a stack of (unnormalized) vectors, shape (B, d^n)."""
        mask = self.projector_prefix()
        x = np.asarray(states)
        v = x[:, mask]
        rest = (np.abs(x[:, ~mask]) ** 2).sum(axis=1)
        return np.exp(1j * self.theta) * rest + np.einsum("bi,ij,bj->b", v.conj(), self.y, v)


def _basis_digits(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    place = d ** np.arange(n - 1, -1, -1)
    digits = (np.arange(d**n)[:, None] // place) % d
    return digits, place


def pair_trace(a: np.ndarray, b: np.ndarray, swap: np.ndarray, digits: np.ndarray, place: np.ndarray) -> complex:
    """Σ_{x,z} A[x, x'] B[z, z'] where x', z' exchange digits of x and z on swapped sites."""
    swap = np.asarray(swap, dtype=bool)
    keep_part = digits[:, ~swap] @ place[~swap]
    swap_part = digits[:, swap] @ place[swap]
    col_a = keep_part[:, None] + swap_part[None, :]
    col_b = keep_part[None, :] + swap_part[:, None]
    rows = np.arange(a.shape[0])
    return complex((a[rows[:, None], col_a] * b[rows[None, :], col_b]).sum())


def _real_if_close(z: complex) -> float | complex:
    if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)):
        return float(z.real)
    return complex(z)


def twirl_moment_1d(a: np.ndarray, b: np.ndarray, n: int, d: int, D: int) -> float | complex:
    """Exact E_x <x|A|x><x|B|x> over Haar MPS locals, for explicit operators."""
    N = d**n
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (N, N) or b.shape != (N, N):
        raise InvalidW(f"operators must be {N}x{N}")
    if n > 10:
        raise TooManyConfigs("twirl_moment_1d supports n <= 10")
    t = transfer_matrix(d, D).as_array()
    digits, place = _basis_digits(n, d)
    total = 0j
    for cfg in range(2**n):
        s = (cfg >> np.arange(n - 1, -1, -1)) & 1
        bond = np.prod(t[s, np.roll(s, -1)])
        total += bond * pair_trace(a, b, s == 1, digits, place)
    return _real_if_close(total)


def second_moment_blockphase(w: BlockPhaseUnitary, D: int, average_y: bool = True) -> float:
    """E_x |<x|W|x>|^2. With average_y the Y block is Haar-averaged analytically."""
    if average_y:
        return 1.0 - exact_avg_risk_1d(w.n, w.d, D, w.k)
    mat = w.materialize()
    return float(np.real(twirl_moment_1d(mat, mat.conj().T, w.n, w.d, D)))


# -- brute-force oracle ---------------------------------------------------------


def weingarten_s2(N: int) -> tuple[float, float]:
    """Weingarten values (identity, transposition) for U(N), second moment."""
    return 1.0 / (N * N - 1), -1.0 / (N * (N * N - 1))


def bond_weights(d: int, D: int) -> np.ndarray:
    """bond[s, s'] = Σ_τ Wg(s τ) D^{cycles(τ s')}, S_2 composed by xor."""
    wg = weingarten_s2(D * d)
    cyc = (2, 1)
    out = np.zeros((2, 2))
    for s in range(2):
        for s2 in range(2):
            out[s, s2] = sum(wg[s ^ tau] * D ** cyc[tau ^ s2] for tau in range(2))
    return out


CONFIG_SUM_MAX_SITES = 24


def config_sum_1d(n: int, d: int, D: int, site_weights: Sequence[Weights], chunk_bits: int = 16) -> float:
    """Σ over all 2^n ring configurations of Π bond weights × Π site weights."""
    if n > CONFIG_SUM_MAX_SITES:
        raise TooManyConfigs(f"n = {n} exceeds {CONFIG_SUM_MAX_SITES}")
    if len(site_weights) != n:
        raise InvalidK(f"need {n} site weights, got {len(site_weights)}")
    bond = bond_weights(d, D)
    sw = np.array([[float(w[0]), float(w[1])] for w in site_weights])
    shifts = np.arange(n - 1, -1, -1)
    chunk = 1 << min(chunk_bits, n)
    total = 0.0
    for start in range(0, 1 << n, chunk):
        cfg = np.arange(start, start + chunk)[:, None]
        s = (cfg >> shifts) & 1
        term = np.prod(bond[s, np.roll(s, -1, axis=1)], axis=1)
        term *= np.prod(sw[np.arange(n), s], axis=1)
        total += float(term.sum())
    return total


# -- orthonormal-input bounds ---------------------------------------------------------


def mpo_bound(n: int, d: int, t: int, case: str = "a", t_prime: int | None = None) -> float:
    """1 - (d^n + t^2 + 1)/(d^n (d^n + 1)) for orthonormal training inputs.

    Cases a and b use t directly; case c substitutes the effective size t_prime.
    """
    if case not in ("a", "b", "c"):
        raise ValueError(f"case must be 'a', 'b' or 'c', got {case!r}")
    size = t
    if case == "c":
        if t_prime is None:
            raise InvalidTrainingSet("case c needs t_prime")
        size = t_prime
    N = d**n
    if not 0 <= size <= N:
        raise InvalidTrainingSet(f"training size must lie in [0, {N}], got {size}")
    return float(1 - Fraction(N + size * size + 1, N * (N + 1)))


def quantum_nfl_baseline(N: int, r: int, t: int) -> float:
    if r * t > N:
        raise InvalidTrainingSet(f"r*t = {r * t} exceeds N = {N}")
    return float(1 - Fraction(N + r * r * t * t + 1, N * (N + 1)))
