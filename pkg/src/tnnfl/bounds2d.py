"""Closed-form PEPS lower bound on the average risk and its L -> infinity form.

Evaluated with mpmath: at ~50 sites the bracketed terms cancel to ~1e-15 and
double precision loses every digit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from .errors import InvalidInput, InvalidK, OutsideConvergenceDomain

PRECISION_DIGITS = 50


@dataclass(frozen=True)
class PepsBoundParams:
    """L sets the concentration rate 0.7^L; `sites` overrides the site count L²."""

    L: int
    d: int
    D: int
    k: int
    c: float = 1.0
    sites: int | None = None

    def __post_init__(self) -> None:
        if self.L < 1:
            raise InvalidInput(f"L must be >= 1, got {self.L}")
        if self.d < 2 or self.D < 1:
            raise InvalidInput(f"need d >= 2 and D >= 1, got d={self.d}, D={self.D}")
        if not self.c >= 0:
            raise InvalidInput(f"c must be >= 0, got {self.c}")
        if self.sites is not None and self.sites < 1:
            raise InvalidInput(f"sites must be >= 1, got {self.sites}")
        if not 0 <= self.k <= self.n_sites:
            raise InvalidK(f"k must lie in [0, {self.n_sites}], got {self.k}")

    @property
    def n_sites(self) -> int:
        return self.L * self.L if self.sites is None else self.sites

    @property
    def l(self) -> int:
        return math.isqrt(self.k - 1) + 1 if self.k > 0 else 0


def _gen_fun_mp(q, p):
    den = 1 - q * (2 + p) + q * q * (1 - p)
    if not den > 0:
        raise OutsideConvergenceDomain(f"generating function diverges at q={q}, p={p}")
    return p / 2 * (mpmath.sqrt((1 + q) * (1 + q - q * p) / den) - 1)


def _bracket_tail(p: PepsBoundParams):
    """(1 + d^-(N-k)) a^k b^(2k) (1 + G)^(2l) with the two per-site ratios a, b."""
    d, D, k = mpmath.mpf(p.d), mpmath.mpf(p.D), p.k
    a = (2 * D**4 * d - 2) / (D**4 * d**3 - d)
    b = (1 + D) / (2 * D)
    G = _gen_fun_mp(1 / d, 1 / D**2)
    return (1 + d ** (k - p.n_sites)) * a**k * b ** (2 * k) * (1 + G) ** (2 * p.l)


def thm2_lower_bound_mp(p: PepsBoundParams) -> mpmath.mpf:
    with mpmath.workdps(PRECISION_DIGITS):
        d = mpmath.mpf(p.d)
        conc = 1 + mpmath.mpf(p.c) * mpmath.mpf("0.7") ** p.L
        if p.k == p.n_sites:
            # hypothesis equals the target up to phase: 1 - E<Ψ|Ψ>²
            return 1 - conc
        # k = 0 falls out of the same expression with l = 0
        return 1 - conc * (1 - 2 / d**p.k + _bracket_tail(p))


def thm2_thermo_limit_mp(p: PepsBoundParams) -> mpmath.mpf:
    with mpmath.workdps(PRECISION_DIGITS):
        if p.k == p.n_sites:
            return mpmath.mpf(0)
        return 2 / mpmath.mpf(p.d) ** p.k - _bracket_tail(p)


def thm2_lower_bound(p: PepsBoundParams) -> float:
    return float(thm2_lower_bound_mp(p))


def thm2_thermo_limit(p: PepsBoundParams) -> float:
    return float(thm2_thermo_limit_mp(p))
