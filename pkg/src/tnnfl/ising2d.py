"""Toric Ising-model form of PEPS second moments, summed exhaustively at small L.

After the Haar average, each PEPS site carries one S_2 permutation
(0 = ↓ = identity pairing, 1 = ↑ = swap pairing). Summing out the output
permutations leaves a weight per site that depends on the spin there and the
spins of its right and lower neighbours. Tables are indexed by
4*here + 2*right + down.

Coordinates: Ising site (X, Y) sees its right neighbour at (X+1, Y) and lower
neighbour at (X, Y+1). Under the PEPS leg convention in `states` these
neighbours are the physical sites to the left and above, so PEPS site (x, y)
sits at Ising site (-x mod L, -y mod L). `physical_site` applies this map.
The sums are invariant under that point reflection of the trained zone, so
zones may be given in either frame.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInput, InvalidK, InvalidW, TooManyConfigs, UnsupportedDimension
from .moments1d import _basis_digits, _real_if_close, pair_trace

MAX_SITES = 25

Site = tuple[int, int]


def _check(d: int, D: int) -> None:
    if d < 2 or D < 1:
        raise UnsupportedDimension(f"need d >= 2 and D >= 1, got d={d}, D={D}")


def _f_fraction(here: int, right: int, down: int, d: int, D: int) -> Fraction:
    den = D**4 * d**3 - d
    ups = right + down
    if here == 0:
        if ups == 0:
            return Fraction(1)
        if ups == 1:
            return Fraction(D**3 * d**3 - D * d, den)
        return Fraction(D**2 * d**3 - D**2 * d, den)
    if ups == 0:
        return Fraction(0)
    if ups == 1:
        return Fraction(D**3 * d**2 - D * d**2, den)
    return Fraction(D**4 * d**2 - d**2, den)


def _g_fraction(here: int, right: int, down: int, d: int, D: int) -> Fraction:
    den = D**4 * d**3 - d
    # g only depends on how many neighbours disagree with the centre
    flips = (right != here) + (down != here)
    return Fraction((D**4 * d - 1, D**3 * d - D, D**2 * d - D**2)[flips], den)


def weight_f(spin_here: int, spin_right: int, spin_down: int, d: int, D: int) -> float:
    _check(d, D)
    return float(_f_fraction(int(spin_here), int(spin_right), int(spin_down), d, D))


def weight_g(spin_here: int, spin_right: int, spin_down: int, d: int, D: int) -> float:
    _check(d, D)
    return float(_g_fraction(int(spin_here), int(spin_right), int(spin_down), d, D))


WEIGHT_KINDS = ("f", "f-times-inv-d", "g", "f-flipped")


def weight_table(kind: str, d: int, D: int) -> np.ndarray:
    """8-entry table over (here, right, down). f-flipped is f at the flipped spins."""
    _check(d, D)
    out = np.empty(8)
    for idx in range(8):
        h, r, dn = (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        if kind == "f":
            val = _f_fraction(h, r, dn, d, D)
        elif kind == "f-times-inv-d":
            val = _f_fraction(h, r, dn, d, D) / d
        elif kind == "g":
            val = _g_fraction(h, r, dn, d, D)
        elif kind == "f-flipped":
            val = _f_fraction(1 - h, 1 - r, 1 - dn, d, D)
        else:
            raise ValueError(f"unknown weight kind {kind!r}")
        out[idx] = float(val)
    return out


# -- lattice ---------------------------------------------------------------------


def packed_zone(L: int, k: int) -> frozenset[Site]:
    """k sites filling a ceil(sqrt(k)) square row-major from the top-left corner."""
    if not 0 <= k <= L * L:
        raise InvalidK(f"k must lie in [0, {L * L}], got {k}")
    if k == 0:
        return frozenset()
    side = math.isqrt(k - 1) + 1
    if side > L:
        raise InvalidK(f"a zone of {k} sites does not fit in the packing square on L={L}")
    return frozenset((i % side, i // side) for i in range(k))


@dataclass(frozen=True)
class ToricLattice:
    L: int
    d: int
    D: int
    trained_zone: frozenset[Site] = frozenset()

    def __post_init__(self) -> None:
        if self.L < 2:
            raise InvalidInput(f"L must be >= 2, got {self.L}")
        _check(self.d, self.D)
        zone = frozenset((int(x), int(y)) for x, y in self.trained_zone)
        if any(not (0 <= x < self.L and 0 <= y < self.L) for x, y in zone):
            raise InvalidInput("trained zone leaves the lattice")
        object.__setattr__(self, "trained_zone", zone)

    @classmethod
    def packed(cls, L: int, k: int, d: int, D: int) -> "ToricLattice":
        return cls(L, d, D, packed_zone(L, k))

    @property
    def k(self) -> int:
        return len(self.trained_zone)

    @property
    def sites(self) -> int:
        return self.L * self.L

    def zone_mask(self) -> np.ndarray:
        mask = np.zeros(self.sites, dtype=bool)
        for x, y in self.trained_zone:
            mask[y * self.L + x] = True
        return mask


def physical_site(x: int, y: int, L: int) -> Site:
    """Ising site <-> PEPS site. The map is an involution."""
    return (-x) % L, (-y) % L


def physical_zone(lat: ToricLattice) -> frozenset[Site]:
    return frozenset(physical_site(x, y, lat.L) for x, y in lat.trained_zone)


# -- configuration sums -------------------------------------------------------------


def _neighbours(L: int) -> tuple[np.ndarray, np.ndarray]:
    s = np.arange(L * L)
    x, y = s % L, s // L
    return y * L + (x + 1) % L, ((y + 1) % L) * L + x


def config_sum_2d(tables: np.ndarray, L: int, workers: int = 1, chunk_bits: int = 16) -> float:
    """Σ over all 2^(L²) configurations of Π_s tables[s, 4σ_s + 2σ_right(s) + σ_down(s)].

    Chunks are reduced in a fixed order, so the result does not depend on `workers`.
    """
    n = L * L
    if n > MAX_SITES:
        raise TooManyConfigs(f"L^2 = {n} exceeds {MAX_SITES}")
    tables = np.asarray(tables, dtype=float)
    if tables.shape == (8,):
        tables = np.broadcast_to(tables, (n, 8))
    if tables.shape != (n, 8):
        raise InvalidInput(f"tables must have shape (8,) or ({n}, 8)")
    right, down = _neighbours(L)
    shifts = np.arange(n)
    sites = np.arange(n)
    chunk = 1 << min(chunk_bits, n)

    def part(start: int) -> float:
        cfg = np.arange(start, start + chunk, dtype=np.int64)[:, None]
        s = (cfg >> shifts) & 1
        idx = 4 * s + 2 * s[:, right] + s[:, down]
        return float(np.prod(tables[sites, idx], axis=1).sum())

    starts = range(0, 1 << n, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(part, starts))
    else:
        parts = [part(s) for s in starts]
    return math.fsum(parts)


def validate_ess(config: Sequence[int], L: int) -> bool:
    """True iff every ↑ has a ↑ right or lower neighbour (toric), i.e. f-weight != 0."""
    s = np.asarray(config, dtype=int).ravel()
    if s.size != L * L:
        raise InvalidInput(f"configuration has {s.size} spins, lattice has {L * L}")
    right, down = _neighbours(L)
    up = s == 1
    return bool(np.all(~up | (s[right] == 1) | (s[down] == 1)))


class ZTerms(NamedTuple):
    z1: float
    z2: float
    z3: float
    z4: float
    z5: float


def z_terms(lat: ToricLattice, workers: int = 1) -> ZTerms:
    """The five terms of the block-phase expansion on the torus.

    z1: f on every site. z2 = z3 = z1 / d^k. z4: g on the zone, f elsewhere.
    z5: g on the zone, spin-flipped f elsewhere, times d^-(L²-k).
    """
    n = lat.sites
    if n > MAX_SITES:
        raise TooManyConfigs(f"L^2 = {n} exceeds {MAX_SITES}")
    f = weight_table("f", lat.d, lat.D)
    g = weight_table("g", lat.d, lat.D)
    fl = weight_table("f-flipped", lat.d, lat.D)
    zone = lat.zone_mask()
    z1 = config_sum_2d(f, lat.L, workers)
    z23 = z1 / lat.d**lat.k
    z4 = config_sum_2d(np.where(zone[:, None], g, f), lat.L, workers)
    z5 = config_sum_2d(np.where(zone[:, None], g, fl), lat.L, workers) / lat.d ** (n - lat.k)
    return ZTerms(z1, z23, z23, z4, z5)


def exact_avg_risk_2d(lat: ToricLattice, workers: int = 1) -> float:
    z = z_terms(lat, workers)
    return 1.0 - (z.z1 - z.z2 - z.z3 + z.z4 + z.z5)


# -- explicit-operator twirl ------------------------------------------------------------


def zone_projector(zone: frozenset[Site], L: int, d: int) -> np.ndarray:
    """Diagonal of ⊗_s (Σ on zone sites, I elsewhere) over PEPS qudits s = y*L + x."""
    digits, _ = _basis_digits(L * L, d)
    cols = [y * L + x for x, y in zone]
    if not cols:
        return np.ones(d ** (L * L), dtype=bool)
    return np.all(digits[:, cols] == d - 1, axis=1)


def twirl_moment_peps(a: np.ndarray, b: np.ndarray, L: int, d: int, D: int) -> float | complex:
    """Exact E <Ψ|A|Ψ><Ψ|B|Ψ> over Haar PEPS locals for explicit operators.

    Sums over output permutations σ in physical coordinates; summing out the
    input permutations gives Π_s g(σ_s, σ_right(s), σ_down(s)).
    """
    n = L * L
    N = d**n
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (N, N) or b.shape != (N, N):
        raise InvalidW(f"operators must be {N}x{N}")
    if N > 1 << 9:
        raise TooManyConfigs("twirl_moment_peps supports at most 9 qubit-sized sites")
    g = weight_table("g", d, D)
    right, down = _neighbours(L)
    digits, place = _basis_digits(n, d)
    total = 0j
    for cfg in range(1 << n):
        # qudit s is digit s of the basis index, most significant first
        s = (cfg >> np.arange(n - 1, -1, -1)) & 1
        bond = np.prod(g[4 * s + 2 * s[right] + s[down]])
        if bond == 0.0:
            continue
        total += bond * pair_trace(a, b, s == 1, digits, place)
    return _real_if_close(total)
