import itertools
from fractions import Fraction

import numpy as np
import pytest

from tnnfl.errors import InvalidInput, InvalidK, TooManyConfigs
from tnnfl.ising2d import (
    ToricLattice,
    config_sum_2d,
    exact_avg_risk_2d,
    packed_zone,
    physical_site,
    physical_zone,
    twirl_moment_peps,
    validate_ess,
    weight_f,
    weight_g,
    weight_table,
    z_terms,
    zone_projector,
)
from tnnfl.numeric import haar_unitary
from tnnfl.oracle import estimate


def _wg(N: int) -> tuple[Fraction, Fraction]:
    return Fraction(1, N * N - 1), Fraction(-1, N * (N * N - 1))


def _cycles(perm: int) -> int:
    return 2 if perm == 0 else 1


def _derived_f(h, r, dn, d, D):
    """Sum the output permutation out of one site with identity on the physical output."""
    wg = _wg(D * D * d)
    return sum(
        wg[s ^ h] * Fraction(d) ** _cycles(s) * Fraction(D) ** (_cycles(s ^ r) + _cycles(s ^ dn)) for s in range(2)
    )


def _derived_g(h, r, dn, d, D):
    """Sum the input permutation out (the physical input is the fixed |0>)."""
    wg = _wg(D * D * d)
    return sum(wg[h ^ t] * Fraction(D) ** (_cycles(t ^ r) + _cycles(t ^ dn)) for t in range(2))


SPINS = list(itertools.product(range(2), repeat=3))


@pytest.mark.parametrize("d,D", [(2, 1), (2, 2), (3, 2), (2, 3), (4, 4)])
def test_weight_tables_match_weingarten_derivation(d, D):
    for h, r, dn in SPINS:
        assert weight_f(h, r, dn, d, D) == pytest.approx(float(_derived_f(h, r, dn, d, D)), rel=1e-14, abs=1e-16)
        assert weight_g(h, r, dn, d, D) == pytest.approx(float(_derived_g(h, r, dn, d, D)), rel=1e-14)


def test_weight_examples():
    assert weight_f(0, 0, 0, 2, 2) == 1
    assert weight_f(1, 0, 0, 2, 2) == 0
    assert weight_f(1, 1, 1, 2, 2) == pytest.approx(10 / 21)
    assert weight_g(1, 1, 0, 2, 2) == pytest.approx(1 / 9)
    for h, r, dn in SPINS:
        assert weight_g(h, r, dn, 3, 2) == weight_g(1 - h, 1 - r, 1 - dn, 3, 2)
    assert weight_g(1, 1, 1, 2, 3) == weight_g(0, 0, 0, 2, 3)


def test_weight_table_layout():
    f = weight_table("f", 2, 2)
    assert f[4 * 1 + 2 * 1 + 1] == pytest.approx(10 / 21)
    np.testing.assert_allclose(weight_table("f-times-inv-d", 3, 2), weight_table("f", 3, 2) / 3)
    np.testing.assert_allclose(weight_table("f-flipped", 2, 2), f[::-1])
    with pytest.raises(ValueError):
        weight_table("h", 2, 2)


def test_all_down_contributes_one():
    tables = np.where(np.arange(8) == 0, weight_table("f", 2, 2), 0.0)
    assert config_sum_2d(tables, 3) == 1.0


def _naive_z(table: np.ndarray, L: int, only_valid: bool) -> float:
    total = 0.0
    for cfg in itertools.product(range(2), repeat=L * L):
        if only_valid and not validate_ess(cfg, L):
            continue
        s = np.array(cfg).reshape(L, L)  # [Y, X]
        prod = 1.0
        for Y in range(L):
            for X in range(L):
                prod *= table[4 * s[Y, X] + 2 * s[Y, (X + 1) % L] + s[(Y + 1) % L, X]]
        total += prod
    return total


def test_invalid_configurations_contribute_exactly_zero():
    f = weight_table("f", 2, 2)
    full = _naive_z(f, 3, only_valid=False)
    assert _naive_z(f, 3, only_valid=True) == full
    assert config_sum_2d(f, 3) == pytest.approx(full, rel=1e-13)


def test_validate_ess_examples():
    assert validate_ess([0] * 9, 3)
    single = [0] * 9
    single[4] = 1
    assert not validate_ess(single, 3)
    row = [1, 1, 1, 0, 0, 0, 0, 0, 0]
    assert validate_ess(row, 3)
    column = [1, 0, 0, 1, 0, 0, 1, 0, 0]
    assert validate_ess(column, 3)
    assert not validate_ess([1, 1, 0, 0, 0, 0, 0, 0, 0], 3)
    for cfg in itertools.product(range(2), repeat=4):
        weight = np.prod([weight_f(cfg[s], cfg[s ^ 1], cfg[s ^ 2], 2, 2) for s in range(4)])
        assert validate_ess(cfg, 2) == (weight != 0)
    with pytest.raises(InvalidInput):
        validate_ess([0] * 5, 2)


def test_z1_concentrates():
    z = [z_terms(ToricLattice.packed(L, 0, 2, 2)).z1 for L in (2, 3, 4)]
    assert all(v > 1 for v in z)
    assert z[0] - 1 > z[1] - 1 > z[2] - 1


@pytest.mark.parametrize("L,seed", [(2, 21), (3, 22)])
def test_z1_matches_monte_carlo(peps_norms, L, seed):
    est = estimate(peps_norms(L, 2, 2, 100_000, seed) ** 2)
    assert est.agrees(z_terms(ToricLattice.packed(L, 0, 2, 2)).z1)


def test_empty_zone_reductions():
    for L in (2, 3):
        z = z_terms(ToricLattice.packed(L, 0, 2, 2))
        assert z.z4 == z.z1
        assert z.z5 == pytest.approx(z.z1 / 2 ** (L * L), rel=1e-13)
        assert z.z2 == z.z3 == z.z1


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_zterms_match_explicit_twirl_L2(k):
    L, d, D = 2, 2, 2
    lat = ToricLattice.packed(L, k, d, D)
    proj = np.diag(zone_projector(physical_zone(lat), L, d).astype(float))
    eye = np.eye(d ** (L * L))
    z = z_terms(lat)
    assert z.z1 == pytest.approx(twirl_moment_peps(eye, eye, L, d, D), rel=1e-12)
    assert z.z2 == pytest.approx(twirl_moment_peps(eye, proj, L, d, D), rel=1e-12)
    assert z.z3 == pytest.approx(twirl_moment_peps(proj, eye, L, d, D), rel=1e-12)
    assert z.z4 == pytest.approx(twirl_moment_peps(proj, proj, L, d, D), rel=1e-12)


@pytest.mark.parametrize("zone", [frozenset({(0, 0), (1, 0)}), frozenset({(0, 0), (1, 0), (0, 1), (2, 2)})])
def test_zterms_match_explicit_twirl_L3(zone):
    L, d, D = 3, 2, 2
    lat = ToricLattice(L, d, D, zone)
    proj = np.diag(zone_projector(physical_zone(lat), L, d).astype(float))
    eye = np.eye(d ** (L * L))
    z = z_terms(lat)
    assert z.z2 == pytest.approx(twirl_moment_peps(eye, proj, L, d, D), rel=1e-12)
    assert z.z4 == pytest.approx(twirl_moment_peps(proj, proj, L, d, D), rel=1e-12)


def test_risk_matches_explicit_haar_y_average():
    # fixed-Y twirl of the explicit W = (I - P) + Y on the zone, averaged over Haar Y
    L, d, D, k = 2, 2, 2, 2
    lat = ToricLattice.packed(L, k, d, D)
    mask = zone_projector(physical_zone(lat), L, d)
    m = int(mask.sum())
    rng = np.random.default_rng(4)
    vals = []
    for j in range(40):
        y = haar_unitary(m, rng)
        w = np.diag(np.where(mask, 0, 1)).astype(complex)
        sel = np.flatnonzero(mask)
        w[np.ix_(sel, sel)] = y
        vals.append(np.real(twirl_moment_peps(w, w.conj().T, L, d, D)))
    vals = np.array(vals)
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - (1 - exact_avg_risk_2d(lat))) < 3 * se + 1e-12


def test_reflection_invariance_of_zone_sums():
    L = 3
    zone = frozenset({(0, 0), (1, 0), (2, 1)})
    a = z_terms(ToricLattice(L, 2, 2, zone))
    b = z_terms(ToricLattice(L, 2, 2, frozenset(physical_site(x, y, L) for x, y in zone)))
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_physical_site_is_involution():
    for L in (2, 3, 5):
        for x in range(L):
            for y in range(L):
                assert physical_site(*physical_site(x, y, L), L) == (x, y)


def test_global_flip_symmetry_of_g():
    g = weight_table("g", 3, 2)
    np.testing.assert_array_equal(g, g[::-1])
    # a lattice entirely in the zone: each configuration's weight equals that of its flip
    L = 2
    tables = np.broadcast_to(g, (L * L, 8))
    for cfg in range(1 << (L * L)):
        s = [(cfg >> i) & 1 for i in range(L * L)]
        flip = [1 - v for v in s]

        def weight(spins):
            return np.prod([tables[i][4 * spins[i] + 2 * spins[i ^ 1] + spins[i ^ 2]] for i in range(4)])

        assert weight(s) == weight(flip)


def test_risk_endpoints_and_monotonicity():
    for L in (2, 3):
        risks = [exact_avg_risk_2d(ToricLattice.packed(L, k, 2, 2)) for k in range(L * L + 1)]
        assert all(a >= b for a, b in zip(risks, risks[1:])), L
        if L == 2:
            assert 0.9 <= risks[0] <= 1
            assert risks[-1] <= 0.05


def test_packing_and_validation():
    assert packed_zone(4, 0) == frozenset()
    assert packed_zone(4, 3) == {(0, 0), (1, 0), (0, 1)}
    assert packed_zone(4, 5) == {(0, 0), (1, 0), (2, 0), (0, 1), (1, 1)}
    for k in range(1, 17):
        zone = packed_zone(4, k)
        side = int(np.ceil(np.sqrt(k)))
        assert len(zone) == k and all(x < side and y < side for x, y in zone)
    with pytest.raises(InvalidK):
        packed_zone(3, 10)
    with pytest.raises(InvalidInput):
        ToricLattice(2, 2, 2, frozenset({(2, 0)}))
    with pytest.raises(TooManyConfigs):
        z_terms(ToricLattice.packed(6, 0, 2, 2))


def test_workers_do_not_change_the_sum():
    lat = ToricLattice.packed(4, 5, 2, 2)
    assert z_terms(lat, workers=1) == z_terms(lat, workers=4)
