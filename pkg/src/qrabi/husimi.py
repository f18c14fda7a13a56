"""Husimi Q-functions Q(beta) = <beta|rho|beta> / pi on rectangular phase-space grids.

beta = x + i y with x, y the quadratures (a + a†)/2 and i(a† - a)/2, so
the integral of Q over dx dy is 1 and each Q variance exceeds the state
variance by exactly 1/4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import (TruncationError, degenerate_alpha, relativistic_coefficients,
                       required_squeezed_dim, squeeze_parameters)
from .model import ModelParams
from .specialfn import displaced_overlap, gauss_2f1, log_factorial, overlap_cutoff

_CHUNK = 1024


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int = 64
    ny: int = 64

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.x_range[1] > self.x_range[0] and self.y_range[1] > self.y_range[0]):
            raise ValueError("grid ranges must be increasing")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_range[0], self.y_range[1], self.ny)

    @property
    def cell_area(self) -> float:
        return float((self.xs[1] - self.xs[0]) * (self.ys[1] - self.ys[0]))

    def points(self) -> np.ndarray:
        """Complex beta on an (ny, nx) mesh; rows run along y."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return X + 1j * Y

    @classmethod
    def centred(cls, mean_x, mean_y, var_x, var_y, n: int = 64, width: float = 6.0) -> "PhaseSpaceGrid":
        """Window of +-width Q standard deviations around the mean (Q variance = state variance + 1/4).

        An even ``n`` is bumped to n + 1 so the mean itself is a grid point.
        """
        n = n if n % 2 else n + 1
        sx = math.sqrt(var_x + 0.25)
        sy = math.sqrt(var_y + 0.25)
        return cls((mean_x - width * sx, mean_x + width * sx),
                   (mean_y - width * sy, mean_y + width * sy), n, n)


@dataclass
class QField:
    grid: PhaseSpaceGrid
    values: np.ndarray
    norm_estimate: float
    meta: dict = field(default_factory=dict)


def _integrate(grid: PhaseSpaceGrid, values) -> float:
    # values vanish at the window edges, so the plain Riemann sum is trapezoidal
    return float(np.sum(values) * grid.cell_area)


def coherent_kernel(beta: np.ndarray, kmax: int) -> np.ndarray:
    """<beta|k> = exp(-|beta|²/2) conj(beta)^k / sqrt(k!) for k < kmax, one row per beta.

    Built in log space so large k and |beta| do not overflow.
    """
    beta = np.asarray(beta).ravel()
    k = np.arange(kmax)
    r = np.maximum(np.abs(beta), 1e-300)
    logmag = -0.5 * r[:, None] ** 2 + k[None, :] * np.log(r)[:, None] - 0.5 * log_factorial(k)[None, :]
    phase = np.exp(-1j * np.angle(beta)[:, None] * k[None, :])
    return np.exp(logmag) * phase


def _mixture_q(grid: PhaseSpaceGrid, components, weights) -> np.ndarray:
    pts = grid.points().ravel()
    out = np.zeros(pts.size)
    kmax = max(c.size for c in components)
    for lo in range(0, pts.size, _CHUNK):
        kern = coherent_kernel(pts[lo:lo + _CHUNK], kmax)
        for w, c in zip(weights, components):
            amp = kern[:, :c.size] @ c
            out[lo:lo + _CHUNK] += w * np.abs(amp) ** 2
    return (out / math.pi).reshape(grid.ny, grid.nx)


def q_from_fock_state(components, grid: PhaseSpaceGrid, weights=None) -> QField:
    """Q of a pure state (one amplitude vector) or of a mixture of normalised vectors."""
    if isinstance(components, np.ndarray) and components.ndim == 1:
        components = [components]
    comps = [np.asarray(c) for c in components]
    if weights is None:
        weights = [1.0 / len(comps)] * len(comps)
    if len(weights) != len(comps):
        raise ValueError("one weight per component")
    for c in comps:
        nrm = float(np.vdot(c, c).real)
        if abs(nrm - 1.0) > 1e-6:
            raise ValueError(f"component norm² {nrm:.8f} is not 1 within 1e-6")
    if abs(sum(weights) - 1.0) > 1e-9 or min(weights) < 0:
        raise ValueError("weights must be non-negative and sum to 1")
    vals = _mixture_q(grid, comps, weights)
    return QField(grid, vals, _integrate(grid, vals), {"kmax": max(c.size for c in comps)})


def q_degenerate_closed_form(params: ModelParams, n: int, grid: PhaseSpaceGrid) -> QField:
    """Q of the delta = 0 reduced state of level n, from the displaced-overlap kernel.

    Q = exp(-(|beta|² + alpha²)) / (4 pi) * sum over r = +-1 of
        |sum_k conj(beta)^k / sqrt(k!) P(n, k, alpha) [(-1)^|n-k| - r (-1)^n]|²
    """
    if params.delta != 0.0:
        raise ValueError("closed form needs delta = 0")
    alpha = degenerate_alpha(params)
    kmax = overlap_cutoff(n, alpha)
    P = np.array([displaced_overlap(n, k, alpha) for k in range(kmax)])
    k = np.arange(kmax)
    rel = np.where((np.abs(n - k) % 2) == 0, 1.0, -1.0)
    par = 1.0 if n % 2 == 0 else -1.0
    pts = grid.points().ravel()
    out = np.zeros(pts.size)
    for lo in range(0, pts.size, _CHUNK):
        # coherent_kernel already carries exp(-|beta|²/2)
        kern = coherent_kernel(pts[lo:lo + _CHUNK], kmax)
        for r in (1.0, -1.0):
            out[lo:lo + _CHUNK] += np.abs(kern @ (P * (rel - r * par))) ** 2
    vals = (out * math.exp(-alpha * alpha) / (4.0 * math.pi)).reshape(grid.ny, grid.nx)
    return QField(grid, vals, _integrate(grid, vals), {"kmax": kmax, "alpha": alpha, "n": n})


def squeeze_element(n: int, m: int, mu: float) -> float:
    """<n| S(mu) |m> for S(mu) = exp(-(mu/2) a†²) sech(r)^(a†a + 1/2) exp((mu/2) a²), mu = tanh r.

    Zero unless n and m have equal parity s; with p = (n-s)/2, q = (m-s)/2

        sqrt(n! m!) (-mu/2)^p (mu/2)^q / (p! q!) (1 - mu²)^((2s+1)/4)
        * 2F1(-p, -q; s + 1/2; -(1 - mu²)/mu²)
    """
    if (n - m) % 2:
        return 0.0
    if mu == 0.0:
        return 1.0 if n == m else 0.0
    s = n % 2
    p = (n - s) // 2
    q = (m - s) // 2
    z = -(1.0 - mu * mu) / (mu * mu)
    h = gauss_2f1(-p, -q, s + 0.5, z)
    if h == 0.0:
        return 0.0
    logmag = (0.5 * (log_factorial(n) + log_factorial(m)) - log_factorial(p) - log_factorial(q)
              + (p + q) * math.log(mu / 2.0) + (2 * s + 1) / 4.0 * math.log1p(-mu * mu) + math.log(abs(h)))
    sign = math.copysign(1.0, h) * (-1.0) ** p
    return sign * math.exp(logmag)


def squeezed_displaced_amplitudes(mu: float, displacement: float, n_max: int, m_max: int) -> np.ndarray:
    """Fock amplitudes of S(mu) D(d)|0>, summed over displaced components m < m_max."""
    m = np.arange(m_max)
    if displacement == 0.0:
        coh = np.zeros(m_max)
        coh[0] = 1.0
    else:
        coh = np.exp(-0.5 * displacement ** 2 + m * math.log(abs(displacement)) - 0.5 * log_factorial(m))
        if displacement < 0:
            coh = coh * np.where(m % 2 == 1, -1.0, 1.0)
    out = np.zeros(n_max)
    for n in range(n_max):
        out[n] = math.fsum(coh[j] * squeeze_element(n, j, mu) for j in range(n % 2, m_max, 2) if coh[j] != 0.0)
    return out


def q_relativistic_closed_form(params: ModelParams, x: float, mu: float, grid: PhaseSpaceGrid, *,
                               prefactor: str = "normalized", term_cap: int = 800) -> QField:
    """Q of the regularised delta = 1 eigenstate from the squeezed-displaced expansion.

    The reduced state is (gamma_+ - gamma_-)² |odd><odd| + (gamma_+ + gamma_-)² |even><even|
    with odd/even the parity parts of S(mu) D(d)|0>, d = 2 x cosh r.  With
    ``prefactor="normalized"`` Q integrates to one; ``"raw"`` keeps the
    pi^(-5/4) e^(xi/2 - mu d²) constant of the unnormalised expression.
    The ratio between the two is stored as ``meta["raw_prefactor_ratio"]``.
    """
    if prefactor not in ("normalized", "raw"):
        raise ValueError("prefactor must be 'normalized' or 'raw'")
    sq = squeeze_parameters(x, mu)
    d = sq.displacement
    n_max = required_squeezed_dim(x, mu, 1e-16)
    m_max = int(d * d + 10.0 * abs(d) + 30)
    if n_max > term_cap or m_max > term_cap:
        raise TruncationError(f"x = {x}, mu = {mu} needs {n_max} x {m_max} terms, above term_cap = {term_cap}; "
                              "lower mu or raise term_cap")
    c = squeezed_displaced_amplitudes(mu, d, n_max, m_max)
    idx = np.arange(n_max)
    even = np.where(idx % 2 == 0, c, 0.0)
    odd = c - even
    norm_e = 0.5 * (1.0 + math.exp(-2.0 * d * d))
    norm_o = 0.5 * (1.0 - math.exp(-2.0 * d * d))
    if x == 0.0:
        w_o, w_e, raw_g = 0.0, 1.0, (0.0, 1.0)
    else:
        st = relativistic_coefficients(params, x)
        gp, gm = st.position_weights
        w_o, w_e = (gp - gm) ** 2, (gp + gm) ** 2
        raw_g = ((st.gamma_plus - st.gamma_minus) ** 2, (st.gamma_plus + st.gamma_minus) ** 2)
    total = w_o * norm_o + w_e * norm_e
    vals = _mixture_q(grid, [odd, even], [w_o / total, w_e / total])
    ratio = (math.pi ** -0.25 * math.exp(0.5 * sq.xi - mu * d * d)
             * (raw_g[0] * norm_o + raw_g[1] * norm_e))
    meta = {"n_terms": n_max, "m_terms": m_max, "displacement": d, "zeta": sq.zeta,
            "raw_prefactor_ratio": ratio, "truncated_norm": float(c @ c)}
    if prefactor == "raw":
        vals = vals * ratio
    return QField(grid, vals, _integrate(grid, vals), meta)


@dataclass(frozen=True)
class QMoments:
    norm: float
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float


def q_moments(q: QField, min_norm: float = 0.9) -> QMoments:
    """State quadrature moments from Q (1/4 removed from each variance)."""
    if q.norm_estimate < min_norm:
        raise ValueError(f"grid captures only {q.norm_estimate:.4f} of Q; enlarge the window")
    X, Y = np.meshgrid(q.grid.xs, q.grid.ys)
    w = q.values / np.sum(q.values)
    mx = float(np.sum(w * X))
    my = float(np.sum(w * Y))
    vx = float(np.sum(w * (X - mx) ** 2)) - 0.25
    vy = float(np.sum(w * (Y - my) ** 2)) - 0.25
    return QMoments(q.norm_estimate, mx, my, vx, vy)
