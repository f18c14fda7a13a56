import math

import numpy as np
import pytest

from qrabi import eigen, gfunction as gf
from qrabi.model import ModelParams, ScaledParams, Sector, build_sector_hamiltonian, scaled_params

HALF = scaled_params(ModelParams(delta=0.5))

# lowest PLUS-sector energies at delta = 1/2 from the tridiagonal solver (dim 400), frozen
LOWEST_HALF = [-1.1320399501312104, -0.21245512682704315, 0.9531088744728449, 2.166922967137962]


def test_frozen_reference_still_matches_dense_oracle():
    op = build_sector_hamiltonian(ModelParams(delta=0.5), Sector.PLUS, 400)
    np.testing.assert_allclose(eigen.dense_oracle_eigenvalues(op)[:4], LOWEST_HALF, atol=1e-12)


def test_recurrence_initial_values():
    rec = gf.recurrence_coefficients(HALF, 0.3, 2)
    f0 = (1 / 1.98) * (-0.3 + 4 * 0.9801 - 0.25 / (-0.3))
    assert rec.K[0] == 1.0
    assert rec.K[1] == pytest.approx(f0, rel=1e-15)
    assert rec.f[0] == pytest.approx(f0, rel=1e-15)


@pytest.mark.parametrize("x", [0.3, 4.7, -2.2, 35.5])
@pytest.mark.parametrize("scaled", [HALF, ScaledParams(3.0, 1.5, 0.5), ScaledParams(0.2, 0.0, 2.0)])
def test_recurrence_residual(scaled, x):
    rec = gf.recurrence_coefficients(scaled, x, 400)
    K = rec.K
    e = rec.exponent
    for j in range(2, 401):
        # bring all three terms to the exponent of K_j
        km1 = math.ldexp(K[j - 1], int(e[j - 1] - e[j]))
        km2 = math.ldexp(K[j - 2], int(e[j - 2] - e[j]))
        scale = max(abs(j * K[j]), abs(km1 * rec.f[j - 1]), abs(km2))
        assert abs(j * K[j] - km1 * rec.f[j - 1] + km2) <= 1e-12 * scale


def test_rescaling_kicks_in_for_large_coupling():
    rec = gf.recurrence_coefficients(ScaledParams(300.0, 1.0, 1.0), 0.5, 2000)
    assert rec.exponent.max() > 0
    assert np.all(np.isfinite(rec.K))
    # peak |K_j| ~ exp(2 g) ~ 1e260 is past the 2^600 rescale trigger
    peak = np.max(np.log10(np.abs(rec.K[1:])) + rec.exponent[1:] * math.log10(2))
    assert peak == pytest.approx(600 / math.log(10), abs=2.0)


def test_degenerate_displaced_vacuum_coefficients():
    # omega0_tilde = 0, x = 0: K_j = (2 g)^j / j!, so G(0) = exp(2 g^2)
    sc = scaled_params(ModelParams(delta=0.0))
    rec = gf.recurrence_coefficients(sc, 0.0, 30)
    j = np.arange(31)
    ref = np.array([(2 * sc.g_tilde) ** k / math.factorial(k) for k in j])
    # forward recurrence tracks the decaying solution in absolute, not relative, terms
    np.testing.assert_allclose(rec.k_values(), ref, rtol=1e-13, atol=1e-16)
    res = gf.g_at_zero(sc, 0.0)
    assert res.value == pytest.approx(math.exp(2 * sc.g_tilde ** 2), rel=1e-13)


def test_g_at_zero_without_pole_terms():
    sc = ScaledParams(0.7, 0.0, 1.0)
    x = 1.3
    rec = gf.recurrence_coefficients(sc, x, 120)
    direct = math.fsum(rec.k_values()[j] * sc.g_tilde ** j for j in range(121))
    assert gf.g_at_zero(sc, x).value == pytest.approx(direct, rel=1e-13)


def test_g_at_zero_diagnostics():
    res = gf.g_at_zero(HALF, 0.3, tol=1e-15)
    assert res.terms_used > 10
    assert res.trunc_estimate < 1e-14 * res.max_term
    partial = gf.recurrence_coefficients(HALF, 0.3, res.terms_used - 1)
    j = np.arange(res.terms_used)
    terms = partial.k_values() * (1 - 0.5 / (j - 0.3)) * HALF.g_tilde ** j
    assert res.value == pytest.approx(math.fsum(terms), rel=1e-13)


def test_sign_change_across_eigenvalue():
    for e in LOWEST_HALF:
        x = float(HALF.x_from_energy(e))
        a = gf.g_at_zero(HALF, x - 1e-7).value
        b = gf.g_at_zero(HALF, x + 1e-7).value
        assert a * b < 0


def test_pole_growth_and_errors():
    vals = [abs(gf.g_at_zero(HALF, 2 + eps).value) for eps in (1e-2, 1e-4, 1e-6)]
    assert vals[0] < vals[1] < vals[2]
    with pytest.raises(gf.PoleError):
        gf.g_at_zero(HALF, 3.0)
    with pytest.raises(gf.PoleError):
        gf.recurrence_coefficients(HALF, 2.0, 5)
    with pytest.raises(ValueError):
        gf.g_at_zero(ScaledParams(0.0, 0.5, 1.0), 0.3)
    with pytest.raises(gf.SeriesConvergenceError):
        gf.g_at_zero(HALF, 0.3, term_cap=5)


def test_roots_match_tridiagonal():
    reports = gf.find_roots(HALF, 12)
    energies = gf.root_energies(HALF, reports)[:10]
    ref = eigen.eigenvalues(build_sector_hamiltonian(ModelParams(delta=0.5), Sector.PLUS, 400), (0, 10))
    np.testing.assert_allclose(energies, ref, rtol=0, atol=1e-6)
    assert np.max(np.abs(energies - ref)) < 5e-12
    np.testing.assert_allclose(energies[:4], LOWEST_HALF, atol=1e-10)


def test_report_structure_and_pattern():
    reports = gf.find_roots(HALF, 16)
    assert reports[0].k == -1
    for r in reports:
        lo, hi = r.interval
        assert all(lo < x < hi for x in r.roots)
        assert r.roots == sorted(r.roots)
        assert r.count in (0, 1, 2)
        assert not r.unresolved
    pattern = gf.root_pattern(reports)
    assert len(pattern["counts"]) == 16
    assert pattern["consecutive_two_root_intervals"] is False


def test_roots_stable_under_grid_refinement():
    a = gf.find_roots(HALF, 8, samples=128)
    b = gf.find_roots(HALF, 8, samples=256)
    xa = [x for r in a for x in r.roots]
    xb = [x for r in b for x in r.roots]
    assert len(xa) == len(xb)
    np.testing.assert_allclose(xa, xb, atol=2e-12)


def test_zero_qubit_splitting_has_no_roots():
    sc = scaled_params(ModelParams(delta=0.0))
    reports = gf.find_roots(sc, 5)
    assert all(r.count == 0 for r in reports)
    assert "pole" in reports[0].note


def test_vectorised_values_agree_with_scalar():
    xs = np.array([-1.5, 0.25, 1.5, 7.3])
    vals = gf.g_values(HALF, xs)
    for x, v in zip(xs, vals):
        assert v == pytest.approx(gf.g_at_zero(HALF, x).value, rel=1e-14)
