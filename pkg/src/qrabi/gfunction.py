"""Bargmann-space G-function of a sector Hamiltonian and its roots.

In scaled units (energies divided by 2 omega (1-delta)) the sector problem
is a†a + g̃ (a + a†) - ω̃₀ Π.  With the displaced energy x = g̃² + Ẽ the
series coefficients obey

    K_0 = 1,  K_1 = f_0(x),  j K_j = f_{j-1}(x) K_{j-1} - K_{j-2}
    f_j(x) = (j - x + 4 g̃² - ω̃₀² / (j - x)) / (2 g̃)

and

    G(x) = sum_j K_j(x) (1 - ω̃₀ / (j - x)) g̃^j

vanishes exactly at the eigenvalues of the PLUS sector that do not sit on
a pole x = 0, 1, 2, ...  Overall normalisation of the series is irrelevant
for root positions, so only the sign and relative size of G are used.

K_j can grow by many orders of magnitude when g̃ is large, so the running
coefficients are rescaled by powers of two and the exponent is carried
separately.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from ._accel import njit
from .model import ScaledParams

log = logging.getLogger(__name__)

POLE_EPS = 1e-6
POLE_TOL = 1e-12
_RESCALE_AT = 2.0 ** 600
_RESCALE_BITS = 600


class PoleError(ValueError):
    pass


class SeriesConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Recurrence:
    """K_j = K[j] * 2**exponent[j]; f[j] is the auxiliary f_j(x)."""

    K: np.ndarray
    f: np.ndarray
    exponent: np.ndarray

    def k_values(self) -> np.ndarray:
        return np.ldexp(self.K, self.exponent)


@dataclass(frozen=True)
class GFunctionSeries:
    scaled: ScaledParams
    x: float
    terms_used: int
    value: float
    trunc_estimate: float
    max_term: float

    @property
    def cancellation_digits(self) -> float:
        """Decimal digits lost to cancellation between the largest term and the sum."""
        if self.value == 0.0:
            return math.inf
        return max(0.0, math.log10(self.max_term / abs(self.value)))


@dataclass
class RootReport:
    k: int
    interval: tuple[float, float]
    roots: list[float] = field(default_factory=list)
    unresolved: list[float] = field(default_factory=list)
    note: str = ""

    @property
    def count(self) -> int:
        return len(self.roots)


def _check_pole(scaled: ScaledParams, x: float, jmax: int | None = None):
    if scaled.omega0_tilde == 0.0:
        return
    k = round(x)
    if k >= 0 and (jmax is None or k <= jmax) and abs(x - k) <= POLE_TOL:
        raise PoleError(f"x = {x!r} is at (or within {POLE_TOL}) of the pole x = {k}")


def _check_g(scaled: ScaledParams):
    if not scaled.g_tilde > 0.0:
        raise ValueError("g_tilde must be positive (f_j is undefined at zero coupling)")


def default_term_cap(scaled: ScaledParams, x_max: float) -> int:
    return int(4 * (max(x_max, 0.0) + 10.0 * scaled.g_tilde ** 2)) + 64


def recurrence_coefficients(scaled: ScaledParams, x: float, jmax: int) -> Recurrence:
    """K_j(x) and f_j(x) for j = 0 .. jmax with overflow-guarded rescaling."""
    _check_g(scaled)
    _check_pole(scaled, x, jmax)
    gt = scaled.g_tilde
    wt = scaled.omega0_tilde
    jmax = int(jmax)
    f = np.empty(jmax + 1)
    for j in range(jmax + 1):
        pole = wt * wt / (j - x) if wt else 0.0
        f[j] = (j - x + 4.0 * gt * gt - pole) / (2.0 * gt)
    K = np.empty(jmax + 1)
    expo = np.zeros(jmax + 1, dtype=np.int64)
    K[0] = 1.0
    if jmax >= 1:
        K[1] = f[0]
    e = 0
    prev, cur = 1.0, f[0]
    for j in range(2, jmax + 1):
        nxt = (cur * f[j - 1] - prev) / j
        prev, cur = cur, nxt
        if abs(cur) > _RESCALE_AT:
            prev = math.ldexp(prev, -_RESCALE_BITS)
            cur = math.ldexp(cur, -_RESCALE_BITS)
            e += _RESCALE_BITS
        elif 0.0 < abs(cur) < 1.0 / _RESCALE_AT and abs(prev) < 1.0 / _RESCALE_AT:
            # decaying tail: keep clear of subnormals
            prev = math.ldexp(prev, _RESCALE_BITS)
            cur = math.ldexp(cur, _RESCALE_BITS)
            e -= _RESCALE_BITS
        K[j] = cur
        expo[j] = e
    return Recurrence(K=K, f=f, exponent=expo)


@njit
def _g_series_nb(gt, wt, xs, tol, cap):
    m = xs.size
    val = np.empty(m)
    expo = np.zeros(m, np.int64)
    terms = np.zeros(m, np.int64)
    trunc = np.empty(m)
    peak = np.empty(m)
    for i in range(m):
        x = xs[i]
        e = 0
        prev = 1.0
        s = 1.0 - (wt / (0.0 - x) if wt != 0.0 else 0.0)
        mx = abs(s)
        f0 = (0.0 - x + 4.0 * gt * gt - (wt * wt / (0.0 - x) if wt != 0.0 else 0.0)) / (2.0 * gt)
        cur = f0
        gp = gt
        t = cur * (1.0 - (wt / (1.0 - x) if wt != 0.0 else 0.0)) * gp
        s += t
        mx = max(mx, abs(t))
        lastt = abs(t)
        j = 1
        converged = False
        while j < cap:
            j += 1
            fj = (j - 1.0 - x + 4.0 * gt * gt - (wt * wt / (j - 1.0 - x) if wt != 0.0 else 0.0)) / (2.0 * gt)
            nxt = (cur * fj - prev) / j
            prev = cur
            cur = nxt
            gp *= gt
            if gp > 1e150:
                # fold g̃^j growth into the common exponent
                gp *= 2.0 ** -_RESCALE_BITS
                cur *= 2.0 ** -_RESCALE_BITS
                prev *= 2.0 ** -_RESCALE_BITS
                s *= 2.0 ** -_RESCALE_BITS
                mx *= 2.0 ** -_RESCALE_BITS
                lastt *= 2.0 ** -_RESCALE_BITS
                e += _RESCALE_BITS
            if abs(cur) > _RESCALE_AT:
                cur *= 2.0 ** -_RESCALE_BITS
                prev *= 2.0 ** -_RESCALE_BITS
                s *= 2.0 ** -_RESCALE_BITS
                mx *= 2.0 ** -_RESCALE_BITS
                lastt *= 2.0 ** -_RESCALE_BITS
                e += _RESCALE_BITS
            t = cur * (1.0 - (wt / (j - x) if wt != 0.0 else 0.0)) * gp
            s += t
            at = abs(t)
            mx = max(mx, at)
            if j > x + 2.0 and at <= lastt and 2.0 * at <= tol * mx:
                lastt = at
                converged = True
                break
            lastt = at
        val[i] = s
        expo[i] = e
        terms[i] = j + 1 if converged else -(j + 1)
        trunc[i] = lastt
        peak[i] = mx
    return val, expo, terms, trunc, peak


def _g_series_np(gt, wt, xs, tol, cap):
    xs = np.asarray(xs, dtype=np.float64)
    m = xs.size
    with np.errstate(divide="ignore", invalid="ignore"):
        def pole(j):
            return wt / (j - xs) if wt else 0.0

        def fval(j):
            return (j - xs + 4.0 * gt * gt - (wt * wt / (j - xs) if wt else 0.0)) / (2.0 * gt)

        e = np.zeros(m, np.int64)
        prev = np.ones(m)
        s = 1.0 - pole(0.0) * np.ones(m)
        mx = np.abs(s)
        cur = fval(0.0)
        gp = np.full(m, gt)
        t = cur * (1.0 - pole(1.0)) * gp
        s = s + t
        mx = np.maximum(mx, np.abs(t))
        lastt = np.abs(t)
        terms = np.zeros(m, np.int64)
        trunc = lastt.copy()
        active = np.ones(m, dtype=bool)
        j = 1
        while j < cap and active.any():
            j += 1
            nxt = (cur * fval(j - 1.0) - prev) / j
            prev, cur = cur, nxt
            gp = gp * gt
            big = gp > 1e150
            if big.any():
                sc = np.where(big, 2.0 ** -_RESCALE_BITS, 1.0)
                gp, cur, prev, s, mx, lastt = gp * sc, cur * sc, prev * sc, s * sc, mx * sc, lastt * sc
                e = e + np.where(big, _RESCALE_BITS, 0)
            big = np.abs(cur) > _RESCALE_AT
            if big.any():
                sc = np.where(big, 2.0 ** -_RESCALE_BITS, 1.0)
                cur, prev, s, mx, lastt = cur * sc, prev * sc, s * sc, mx * sc, lastt * sc
                e = e + np.where(big, _RESCALE_BITS, 0)
            t = cur * (1.0 - pole(float(j))) * gp
            at = np.abs(t)
            s = np.where(active, s + t, s)
            mx = np.where(active, np.maximum(mx, at), mx)
            stop = active & (j > xs + 2.0) & (at <= lastt) & (2.0 * at <= tol * mx)
            terms[stop] = j + 1
            trunc[stop] = at[stop]
            lastt = np.where(active, at, lastt)
            active &= ~stop
        terms[active] = -(j + 1)
        trunc[active] = lastt[active]
    return s, e, terms, trunc, mx


def _series(scaled, xs, tol, cap):
    xs = np.ascontiguousarray(np.atleast_1d(np.asarray(xs, dtype=np.float64)))
    kern = _g_series_nb if _accel.USE_NUMBA else _g_series_np
    return kern(float(scaled.g_tilde), float(scaled.omega0_tilde), xs, float(tol), int(cap))


def g_values(scaled: ScaledParams, xs, tol: float = 1e-15, term_cap: int | None = None) -> np.ndarray:
    """G(x) on an array of x (poles give +-inf or nan); no convergence diagnostics."""
    _check_g(scaled)
    xs = np.asarray(xs, dtype=np.float64)
    cap = default_term_cap(scaled, float(np.max(xs))) if term_cap is None else term_cap
    val, expo, terms, _, _ = _series(scaled, xs, tol, cap)
    if np.any(terms < 0):
        bad = xs.ravel()[terms < 0][0]
        raise SeriesConvergenceError(f"G-series did not converge within {cap} terms (first at x = {bad})")
    return np.ldexp(val, expo).reshape(xs.shape)


def g_at_zero(scaled: ScaledParams, x: float, tol: float = 1e-15, term_cap: int | None = None) -> GFunctionSeries:
    """G(x;0) with the number of retained terms and truncation diagnostics."""
    _check_g(scaled)
    if not tol > 0:
        raise ValueError("tol must be positive")
    x = float(x)
    _check_pole(scaled, x)
    cap = default_term_cap(scaled, x) if term_cap is None else int(term_cap)
    val, expo, terms, trunc, peak = _series(scaled, [x], tol, cap)
    n = int(terms[0])
    if n < 0:
        raise SeriesConvergenceError(
            f"G-series at x = {x} not converged after {-n} terms: partial sum "
            f"{math.ldexp(val[0], int(expo[0])):.6e}, last term {math.ldexp(trunc[0], int(expo[0])):.3e}")
    e = int(expo[0])
    return GFunctionSeries(scaled=scaled, x=x, terms_used=n, value=math.ldexp(val[0], e),
                           trunc_estimate=math.ldexp(trunc[0], e), max_term=math.ldexp(peak[0], e))


def _sign(scaled, x, tol, cap):
    val, _, terms, _, _ = _series(scaled, [x], tol, cap)
    if terms[0] < 0:
        raise SeriesConvergenceError(f"G-series did not converge at x = {x}")
    return np.sign(val[0])


def _bisect_root(scaled, a, b, sa, tol, series_tol, cap):
    while b - a > tol:
        c = 0.5 * (a + b)
        if c <= a or c >= b:
            break
        sc = _sign(scaled, c, series_tol, cap)
        if sc == 0:
            return c
        if sc == sa:
            a = c
        else:
            b = c
    return 0.5 * (a + b)


def find_roots(scaled: ScaledParams, k_max: int, tol: float = 1e-12, *,
               samples: int = 256, pole_eps: float = POLE_EPS,
               series_tol: float = 1e-15) -> list[RootReport]:
    """Roots of G between consecutive poles, plus the region below the first pole.

    Returns one report for the window below x = 0 (``k = -1``) followed by
    one per interval (k, k+1), 0 <= k < k_max.  Each interval is sampled on
    ``samples`` points kept ``pole_eps`` away from the poles; sign changes
    are refined by bisection to width ``tol``.  A local dip of |G| that
    does not resolve into a sign change on a finer grid is recorded under
    ``unresolved`` instead of being dropped.
    """
    _check_g(scaled)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    cap = default_term_cap(scaled, k_max + 1)
    low = -(scaled.g_tilde ** 2 + scaled.omega0_tilde) - 1.0
    windows = [(-1, low, -pole_eps)] + [(k, k + pole_eps, k + 1 - pole_eps) for k in range(k_max)]
    note = ""
    if scaled.omega0_tilde == 0.0:
        note = ("omega0_tilde = 0: every eigenvalue sits on a pole x = k, G has no roots; "
                "use the analytic degenerate spectrum")
    reports = []
    for k, a, b in windows:
        xs = np.linspace(a, b, samples)
        vals = g_values(scaled, xs, series_tol, cap)
        rep = RootReport(k=k, interval=(float(a if k < 0 else k), float(k + 1 if k >= 0 else 0.0)), note=note)
        rep.roots.extend(_roots_on_grid(scaled, xs, vals, tol, series_tol, cap))
        for i in _dips(vals):
            sub = np.linspace(xs[i - 1], xs[i + 1], 65)
            sv = g_values(scaled, sub, series_tol, cap)
            found = _roots_on_grid(scaled, sub, sv, tol, series_tol, cap)
            if found:
                rep.roots.extend(found)
            else:
                j = int(np.argmin(np.abs(sv)))
                neighbour = max(abs(vals[i - 1]), abs(vals[i + 1]))
                if abs(sv[j]) <= 1e-6 * neighbour:
                    rep.unresolved.append(float(sub[j]))
        rep.roots.sort()
        reports.append(rep)
    return reports


def _roots_on_grid(scaled, xs, vals, tol, series_tol, cap):
    out = []
    s = np.sign(vals)
    for i in range(xs.size - 1):
        if s[i] == 0:
            out.append(float(xs[i]))
        elif s[i] * s[i + 1] < 0:
            out.append(float(_bisect_root(scaled, xs[i], xs[i + 1], s[i], tol, series_tol, cap)))
    if s[-1] == 0:
        out.append(float(xs[-1]))
    return out


def _dips(vals):
    """Interior local minima of |G| with no sign change on either side."""
    a = np.abs(vals)
    s = np.sign(vals)
    idx = []
    for i in range(1, vals.size - 1):
        if a[i] < a[i - 1] and a[i] <= a[i + 1] and s[i - 1] == s[i] == s[i + 1]:
            idx.append(i)
    return idx


def root_energies(scaled: ScaledParams, reports: list[RootReport]) -> np.ndarray:
    """All certified roots mapped to laboratory energies, ascending."""
    xs = sorted(x for r in reports for x in r.roots)
    return np.asarray(scaled.energy_from_x(np.asarray(xs, dtype=float)), dtype=float)


def root_pattern(reports: list[RootReport]) -> dict:
    """Per-interval root counts between poles and whether two-root intervals ever repeat back to back."""
    counts = [r.count for r in reports if r.k >= 0]
    repeated = any(a >= 2 and b >= 2 for a, b in zip(counts, counts[1:]))
    if repeated:
        log.warning("consecutive intervals with two roots found: %s", counts)
    return {"counts": counts, "max_count": max(counts) if counts else 0,
            "consecutive_two_root_intervals": repeated,
            "below_first_pole": [r.count for r in reports if r.k < 0]}
