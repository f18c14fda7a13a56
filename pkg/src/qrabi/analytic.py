"""Closed-form eigenstates at the two exactly solvable ends of the model.

delta = 0: a degenerate qubit.  Each level n has energy 2 omega n - g²/(2 omega)
and its boson parts are the displaced number states D(±alpha)|n>,
alpha = -g / (2 omega).

delta = 1: the oscillator term drops out and the position quadrature
x = (a + a†)/2 is conserved.  Levels form a continuum E = ±sqrt(omega0² + 4 g² x²).
Position eigenstates are not normalisable, so they are regularised as
exp(-(mu/2) a†² + 2 x a†)|0>, which becomes |x> as mu -> 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams
from .specialfn import displaced_overlap, hermite_functions, log_factorial, overlap_cutoff

_TAIL_TOL = 1e-12


class TruncationError(ValueError):
    """Raised when a Fock truncation drops more than the allowed norm."""


def _require_degenerate(params: ModelParams):
    if params.delta != 0.0:
        raise ValueError(f"closed forms apply at delta = 0 only, got delta = {params.delta}")


def degenerate_alpha(params: ModelParams) -> float:
    return -params.g / (2.0 * params.omega)


def degenerate_spectrum(params: ModelParams, n_max: int) -> np.ndarray:
    """Energies 2 omega n - g²/(2 omega) for n = 0 .. n_max-1 (each doubly degenerate)."""
    _require_degenerate(params)
    n = np.arange(int(n_max), dtype=np.float64)
    return 2.0 * params.omega * n - params.g ** 2 / (2.0 * params.omega)


@dataclass(frozen=True)
class DegenerateSolution:
    """Level n at delta = 0.

    ``phi_plus``/``phi_minus`` are the unnormalised Fock amplitudes
    exp(-alpha²/2) P(n, k, alpha) [(-1)^|n-k| -/+ (-1)^n]; each is twice the
    even or odd part of D(alpha)|n>, up to sign.
    """

    alpha: float
    n: int
    energy: float
    phi_plus: np.ndarray
    phi_minus: np.ndarray

    def reduced_state(self) -> tuple[list[np.ndarray], list[float]]:
        """Normalised boson components and weights of the reduced density matrix."""
        comps, weights = [], []
        total = 0.0
        for v in (self.phi_plus, self.phi_minus):
            total += float(v @ v)
        for v in (self.phi_plus, self.phi_minus):
            nv = float(v @ v)
            if nv > 0:
                comps.append(v / math.sqrt(nv))
                weights.append(nv / total)
        return comps, weights


def degenerate_eigenvector(params: ModelParams, n: int, dim: int) -> DegenerateSolution:
    _require_degenerate(params)
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    alpha = degenerate_alpha(params)
    dim = int(dim)
    need = overlap_cutoff(n, alpha)
    pref = math.exp(-0.5 * alpha * alpha)
    col = np.array([pref * displaced_overlap(n, k, alpha) for k in range(dim)])
    kept = float(col @ col)
    if dim <= n or 1.0 - kept > _TAIL_TOL:
        raise TruncationError(f"dim = {dim} keeps norm {kept:.3e} of D(alpha)|{n}>; use dim >= {need}")
    k = np.arange(dim)
    rel = np.where(np.abs(n - k) % 2 == 0, 1.0, -1.0)
    par = 1.0 if n % 2 == 0 else -1.0
    return DegenerateSolution(alpha=alpha, n=n,
                              energy=float(degenerate_spectrum(params, n + 1)[n]),
                              phi_plus=col * (rel - par), phi_minus=col * (rel + par))


@dataclass(frozen=True)
class Quadratures:
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float


def degenerate_quadratures(params: ModelParams, n: int) -> Quadratures:
    """Variances of x = (a + a†)/2 and y = i(a† - a)/2 in the reduced state of level n.

    The reduced state is an equal mixture of D(alpha)|n> and D(-alpha)|n>,
    so the means vanish and x picks up alpha² from the two lobes.
    """
    _require_degenerate(params)
    a = degenerate_alpha(params)
    return Quadratures(0.0, 0.0, a * a + n / 2 + 0.25, n / 2 + 0.25)


def state_quadratures(components, weights=None) -> Quadratures:
    """Quadrature moments of a mixture of Fock-amplitude vectors."""
    comps = [np.asarray(c) for c in components]
    if weights is None:
        weights = [1.0 / len(comps)] * len(comps)
    ea = ea2 = 0.0 + 0.0j
    en = 0.0
    for w, c in zip(weights, comps):
        k = np.arange(c.size)
        ea += w * np.vdot(c[:-1], np.sqrt(k[1:]) * c[1:])
        ea2 += w * np.vdot(c[:-2], np.sqrt(k[1:-1] * k[2:]) * c[2:])
        en += w * float(np.sum(k * np.abs(c) ** 2))
    mx, my = ea.real, ea.imag
    x2 = (2.0 * ea2.real + 2.0 * en + 1.0) / 4.0
    y2 = (2.0 * en + 1.0 - 2.0 * ea2.real) / 4.0
    return Quadratures(float(mx), float(my), float(x2 - mx * mx), float(y2 - my * my))


def relativistic_energy(params: ModelParams, x) -> np.ndarray | float:
    """Upper branch sqrt(omega0² + 4 g² x²) of the delta = 1 continuum."""
    e = np.sqrt(params.omega0 ** 2 + 4.0 * params.g ** 2 * np.asarray(x, dtype=float) ** 2)
    return float(e) if np.ndim(e) == 0 else e


def shifted_energy(params: ModelParams, x) -> np.ndarray | float:
    """E(x) - 2 g x written as omega0² / (E + 2 g x), which does not cancel for large g x."""
    x = np.asarray(x, dtype=float)
    out = params.omega0 ** 2 / (relativistic_energy(params, x) + 2.0 * params.g * x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RelativisticState:
    """Eigenstate at delta = 1 for position x > 0 on the positive-energy branch.

    In the conserved-parity frame it is gamma_plus |x> + gamma_minus |-x>.
    ``position_weights`` gives the normalised coefficients of |x> and |-x>
    with the Gaussian prefactor stripped.
    """

    x: float
    energy: float
    gamma_plus: float
    gamma_minus: float
    position_weights: tuple[float, float]


def relativistic_coefficients(params: ModelParams, x: float) -> RelativisticState:
    x = float(x)
    if x == 0.0:
        raise ValueError("x = 0 is the separate vacuum-like branch; the gamma coefficients are singular there")
    if x < 0:
        raise ValueError("use x > 0; the state at -x is the parity image")
    if params.omega0 <= 0:
        raise ValueError("omega0 must be positive (E = 2 g x makes the coefficients singular)")
    e = relativistic_energy(params, x)
    shifted = shifted_energy(params, x)
    pref = math.exp(-x * x) / math.sqrt(2.0 * math.pi * e * shifted)
    norm = math.sqrt(2.0 * e * shifted)
    return RelativisticState(x=x, energy=e, gamma_plus=pref * params.omega0, gamma_minus=-pref * shifted,
                             position_weights=(params.omega0 / norm, -shifted / norm))


@dataclass(frozen=True)
class SqueezeParameters:
    """Squeezing strength mu = tanh r with xi = ln(1 - mu²) <= 0.

    ``zeta`` is the literal 2 x e^(xi/2) = 2 x sech r.  The amplitude that
    actually reproduces |x, mu> is ``displacement`` = 2 x e^(-xi/2) = 2 x cosh r:
    S(mu) D(displacement)|0> is proportional to exp(-(mu/2) a†² + 2 x a†)|0>.
    """

    mu: float
    xi: float
    r: float
    zeta: float
    displacement: float


def squeeze_parameters(x: float, mu: float) -> SqueezeParameters:
    if not 0.0 <= mu < 1.0:
        raise ValueError("mu must lie in [0, 1)")
    xi = math.log1p(-mu * mu)
    return SqueezeParameters(mu=mu, xi=xi, r=math.atanh(mu),
                             zeta=2.0 * x * math.exp(xi / 2.0),
                             displacement=2.0 * x * math.exp(-xi / 2.0))


def position_state_amplitudes(x: float, mu: float, dim: int) -> np.ndarray:
    """Fock amplitudes of exp(-(mu/2) a†² + 2 x a†)|0>, up to an x-even constant.

    For mu > 0 they are mu^(n/2) h_n(x sqrt(2/mu)) with h_n the normalised
    Hermite functions; the dropped constant is the same for x and -x.
    """
    if not 0.0 <= mu < 1.0:
        raise ValueError("mu must lie in [0, 1)")
    n = np.arange(dim)
    if mu == 0.0:
        lam = 2.0 * x
        if lam == 0.0:
            out = np.zeros(dim)
            out[0] = 1.0
            return out
        mag = n * math.log(abs(lam)) - 0.5 * log_factorial(n)
        sign = np.where((n % 2 == 1) & (lam < 0), -1.0, 1.0)
        return sign * np.exp(mag - mag.max())
    u = x * math.sqrt(2.0 / mu)
    return np.exp(0.5 * n * math.log(mu)) * hermite_functions(dim, u)


def required_squeezed_dim(x: float, mu: float, tol: float = 1e-10) -> int:
    """Fock cutoff for |x, mu> (tail of mu^n decay past the classical turning point)."""
    if mu == 0.0:
        lam2 = 4.0 * x * x
        return int(lam2 + 10.0 * math.sqrt(lam2) + 40)
    u2 = 2.0 * x * x / mu
    return int(math.log(tol) / math.log(mu) + 4.0 * u2 + 40)


@dataclass(frozen=True)
class FiniteMuState:
    """Regularised delta = 1 eigenstate, psi_plus|+> + psi_minus|->, total norm 1."""

    x: float
    mu: float
    phi_plus: np.ndarray
    phi_minus: np.ndarray

    def reduced_state(self) -> tuple[list[np.ndarray], list[float]]:
        comps, weights = [], []
        for v in (self.phi_plus, self.phi_minus):
            nv = float(v @ v)
            if nv > 0:
                comps.append(v / math.sqrt(nv))
                weights.append(nv)
        s = sum(weights)
        return comps, [w / s for w in weights]


def finite_mu_state(params: ModelParams, x: float, mu: float, dim: int) -> FiniteMuState:
    """Normalised |x, mu> analogue of the delta = 1 eigenstate.

    The qubit-plus branch carries the odd part of gamma_+|x> + gamma_-|-x>,
    scaled by (gamma_+ - gamma_-), and the qubit-minus branch the even part
    scaled by (gamma_+ + gamma_-).  x = 0 gives the squeezed vacuum on both
    branches.
    """
    dim = int(dim)
    need = required_squeezed_dim(x, mu)
    if dim < need:
        raise TruncationError(f"dim = {dim} too small for x = {x}, mu = {mu}; use dim >= {need}")
    pos = position_state_amplitudes(x, mu, dim)
    if x == 0.0:
        v = pos / math.sqrt(float(pos @ pos))
        return FiniteMuState(x=0.0, mu=mu, phi_plus=v / math.sqrt(2.0), phi_minus=v / math.sqrt(2.0))
    st = relativistic_coefficients(params, x)
    # |x> and |-x> differ by the sign of the odd amplitudes
    odd = np.where(np.arange(dim) % 2 == 1, pos, 0.0)
    even = pos - odd
    gp, gm = st.position_weights
    plus = (gp - gm) * odd
    minus = (gp + gm) * even
    tot = math.sqrt(float(plus @ plus + minus @ minus))
    return FiniteMuState(x=x, mu=mu, phi_plus=plus / tot, phi_minus=minus / tot)
