"""Oracle-equivalence suites behind `tnnfl verify`.

Statistical checks pass within 3σ, warn between 3σ and 5σ and fail beyond 5σ.
Exact checks pass or fail outright. A zero budget skips the statistical
checks with a warning.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .ising2d import ToricLattice, exact_avg_risk_2d, physical_zone, twirl_moment_peps, z_terms, zone_projector
from .moments1d import BlockPhaseUnitary, exact_avg_risk_1d, second_moment_identity
from .oracle import McConfig, mc_second_moment_mps, mc_second_moment_peps
from .polyomino import enumerate_directed, gen_fun_series

PASS_SIGMA, FAIL_SIGMA = 3.0, 5.0
DIRECTED_ANIMALS = (1, 2, 5, 13, 35, 96, 267, 750)


def _stat_check(name: str, est, expected: float) -> dict:
    z = est.z_score(expected)
    status = "pass" if abs(z) <= PASS_SIGMA else ("warn" if abs(z) <= FAIL_SIGMA else "fail")
    return {
        "name": name, "kind": "statistical", "status": status,
        "measured": est.mean, "std_err": est.std_err, "n_samples": est.n_samples,
        "expected": expected, "z": z if math.isfinite(z) else None,
    }


def _exact_check(name: str, measured, expected, tol: float = 0.0) -> dict:
    numeric = (int, float)
    if isinstance(measured, numeric) and isinstance(expected, numeric) and not isinstance(expected, bool):
        dev = abs(measured - expected)
        ok = dev <= tol * max(1.0, abs(expected))
    else:
        dev = None
        ok = measured == expected
    return {
        "name": name, "kind": "exact", "status": "pass" if ok else "fail",
        "measured": measured, "expected": expected, "deviation": dev, "tolerance": tol,
    }


def _skip(name: str) -> dict:
    return {"name": name, "kind": "statistical", "status": "skipped"}


def _mps_suite(budget: int, seed: int, workers: int) -> list[dict]:
    checks = [
        _exact_check("closed-form E<x|x>^2 at (4,2,2)", second_moment_identity(4, 2, 2), 1 + 0.4**4, 1e-12),
    ]
    if budget == 0:
        return checks + [_skip("mc W=I (4,2,2)"), _skip("mc W=I (4,2,1)"), _skip("mc Haar-Y block phase (3,2,2,k=1)")]
    cfg = McConfig(budget, seed, workers)
    checks.append(_stat_check("mc W=I (4,2,2)", mc_second_moment_mps(4, 2, 2, None, cfg), second_moment_identity(4, 2, 2)))
    checks.append(_stat_check("mc W=I (4,2,1)", mc_second_moment_mps(4, 2, 1, None, McConfig(budget, seed + 1, workers)), 1.0))
    w = BlockPhaseUnitary.random(3, 2, 1, seed)
    est = mc_second_moment_mps(3, 2, 2, w, McConfig(budget, seed + 2, workers), resample_y=True)
    checks.append(_stat_check("mc Haar-Y block phase (3,2,2,k=1)", est, 1 - exact_avg_risk_1d(3, 2, 2, 1)))
    return checks


def _peps_suite(budget: int, seed: int, workers: int) -> list[dict]:
    z1 = z_terms(ToricLattice.packed(2, 0, 2, 2)).z1
    checks = [_exact_check("z1 > 1 at L=2", z1 > 1, True)]
    if budget == 0:
        return checks + [_skip("mc E<Ψ|Ψ>^2 (L=2,d=2,D=2)"), _skip("mc E<Ψ|Ψ>^2 (L=2,d=2,D=1)")]
    checks.append(_stat_check("mc E<Ψ|Ψ>^2 (L=2,d=2,D=2)", mc_second_moment_peps(2, 2, 2, McConfig(budget, seed, workers)), z1))
    checks.append(_stat_check("mc E<Ψ|Ψ>^2 (L=2,d=2,D=1)", mc_second_moment_peps(2, 2, 1, McConfig(budget, seed + 1, workers)), 1.0))
    return checks


def _polyomino_suite(budget: int, seed: int, workers: int) -> list[dict]:
    enum = enumerate_directed(8)
    series = gen_fun_series(8, 8)
    return [
        _exact_check("enumeration == series coefficients (m <= 8)", enum.counts == series.counts, True),
        _exact_check("row sums", enum.row_sums(), list(DIRECTED_ANIMALS)),
    ]


def _zterms_suite(budget: int, seed: int, workers: int) -> list[dict]:
    L, d, D = 2, 2, 2
    eye = np.eye(d ** (L * L))
    checks = [
        _exact_check("z1 == explicit twirl (L=2)", z_terms(ToricLattice.packed(L, 0, d, D)).z1,
                     float(twirl_moment_peps(eye, eye, L, d, D)), 1e-12),
    ]
    for k in (1, 2, 3):
        lat = ToricLattice.packed(L, k, d, D)
        proj = np.diag(zone_projector(physical_zone(lat), L, d).astype(float))
        z = z_terms(lat)
        checks.append(_exact_check(f"z4 == twirl P⊗P (L=2,k={k})", z.z4, float(twirl_moment_peps(proj, proj, L, d, D)), 1e-12))
        checks.append(_exact_check(f"z2 == twirl I⊗P (L=2,k={k})", z.z2, float(twirl_moment_peps(eye, proj, L, d, D)), 1e-12))
    r0 = exact_avg_risk_2d(ToricLattice.packed(L, 0, d, D))
    rf = exact_avg_risk_2d(ToricLattice.packed(L, L * L, d, D))
    checks.append(_exact_check("k=0 risk in [0.9, 1]", 0.9 <= r0 <= 1.0, True))
    checks.append(_exact_check("k=L^2 risk <= 0.05", rf <= 0.05, True))
    lat = ToricLattice.packed(L, 1, d, D)
    if budget == 0:
        checks.append(_skip("mc Haar-Y block phase (L=2,k=1)"))
    else:
        est = mc_second_moment_peps(L, d, D, McConfig(budget, seed, workers), zone=physical_zone(lat))
        checks.append(_stat_check("mc Haar-Y block phase (L=2,k=1)", est, 1 - exact_avg_risk_2d(lat)))
    return checks


SUITES: dict[str, Callable[[int, int, int], list[dict]]] = {
    "mps-moment": _mps_suite,
    "peps-moment": _peps_suite,
    "polyomino": _polyomino_suite,
    "zterms": _zterms_suite,
}


def run_suite(suite: str, budget: int, seed: int, workers: int = 1) -> dict:
    checks = SUITES[suite](budget, seed, workers)
    warnings = []
    if any(c["status"] == "skipped" for c in checks):
        warnings.append("budget is 0: Monte-Carlo checks skipped")
    warnings += [f"{c['name']}: |z| = {abs(c['z']):.2f} exceeds {PASS_SIGMA}σ" for c in checks if c["status"] == "warn"]
    return {
        "suite": suite, "budget": budget, "seed": seed,
        "passed": all(c["status"] in ("pass", "warn", "skipped") for c in checks),
        "checks": checks, "warnings": warnings,
    }
