"""Parameters of the interpolating Rabi model and its Fulton-Gouterman sectors.

The interpolating Hamiltonian is

    H(delta) = 2 omega (1 - delta) a^dag a + delta omega0 sigma_z + g (a^dag + a) sigma_x

and after diagonalising the qubit it splits into two boson-only operators

    H_plus  = 2 omega (1 - delta) a^dag a + g (a^dag + a) - delta omega0 Pi
    H_minus = 2 omega (1 - delta) a^dag a + g (a^dag + a) + delta omega0 Pi

with Pi = exp(i pi a^dag a) the boson parity.  ``Sector.PLUS`` is H_plus
(minus sign on the parity term); this is the only place the sign
convention is fixed.  hbar = 1 throughout.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np


class Sector(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def parity_sign(self) -> float:
        """Coefficient multiplying ``delta * omega0 * Pi`` in the sector Hamiltonian."""
        return -1.0 if self is Sector.PLUS else 1.0

    @classmethod
    def parse(cls, value: "Sector | str") -> "Sector":
        if isinstance(value, Sector):
            return value
        key = str(value).strip().lower()
        aliases = {"plus": cls.PLUS, "+": cls.PLUS, "p": cls.PLUS,
                   "minus": cls.MINUS, "-": cls.MINUS, "m": cls.MINUS}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown sector {value!r}; use 'plus' or 'minus'") from None


@dataclass(frozen=True)
class ModelParams:
    omega: float = 1.0
    omega0: float = 1.0
    g: float = 0.99
    delta: float = 0.0

    def __post_init__(self):
        for name in ("omega", "omega0", "g", "delta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.omega0 < 0:
            raise ValueError(f"omega0 must be non-negative, got {self.omega0}")
        if self.g < 0:
            raise ValueError(f"g must be non-negative, got {self.g}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")

    def with_delta(self, delta: float) -> "ModelParams":
        return replace(self, delta=float(delta))

    @property
    def oscillator_frequency(self) -> float:
        """Effective boson frequency 2 omega (1 - delta)."""
        return 2.0 * self.omega * (1.0 - self.delta)


@dataclass(frozen=True)
class ScaledParams:
    g_tilde: float
    omega0_tilde: float
    prefactor: float

    def energy_from_x(self, x):
        """Laboratory energy for scaled displaced energy ``x``."""
        return self.prefactor * (np.asarray(x) - self.g_tilde ** 2)

    def x_from_energy(self, energy):
        return np.asarray(energy) / self.prefactor + self.g_tilde ** 2


def scaled_params(params: ModelParams) -> ScaledParams:
    """Bargmann-space scaling g/(2(1-delta)omega), delta omega0/(2(1-delta)omega)."""
    if params.delta >= 1.0:
        raise ValueError("relativistic limit has no Bargmann scaling (delta = 1)")
    pre = params.oscillator_frequency
    return ScaledParams(g_tilde=params.g / pre,
                        omega0_tilde=params.delta * params.omega0 / pre,
                        prefactor=pre)


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix stored as its two nonzero diagonals."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=np.float64)
        e = np.ascontiguousarray(self.offdiag, dtype=np.float64)
        if d.ndim != 1 or e.ndim != 1 or d.size < 1 or e.size != d.size - 1:
            raise ValueError(f"need diag of length n >= 1 and offdiag of length n-1, "
                             f"got {d.shape} and {e.shape}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("matrix entries must be finite")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def dim(self) -> int:
        return self.diag.size

    @property
    def scale(self) -> float:
        """max(|diag|, |offdiag|), the reference magnitude for tolerances."""
        s = float(np.max(np.abs(self.diag)))
        if self.offdiag.size:
            s = max(s, float(np.max(np.abs(self.offdiag))))
        return s

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros(self.dim)
        ae = np.abs(self.offdiag)
        r[:-1] += ae
        r[1:] += ae
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    def norm_bound(self) -> float:
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi))

    def trace(self) -> float:
        return float(np.sum(self.diag))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        tail = (1,) * (v.ndim - 1)
        d = self.diag.reshape((-1,) + tail)
        e = self.offdiag.reshape((-1,) + tail)
        out = d * v
        out[:-1] += e * v[1:]
        out[1:] += e * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def build_sector_hamiltonian(params: ModelParams, sector: Sector | str, dim: int) -> TridiagonalOperator:
    """Matrix of the sector Hamiltonian in Fock states |0>, ..., |dim-1>.

    Parameters
    ----------
    params : ModelParams
    sector : Sector or str
        ``PLUS`` carries ``-delta*omega0*Pi``, ``MINUS`` carries ``+delta*omega0*Pi``.
    dim : int
        Truncation dimension, at least 2.

    Returns
    -------
    TridiagonalOperator
        ``diag[n] = 2 omega (1-delta) n -+ delta omega0 (-1)^n`` and
        ``offdiag[n] = g sqrt(n+1)``.
    """
    if not isinstance(params, ModelParams):
        raise TypeError("params must be a ModelParams instance")
    sector = Sector.parse(sector)
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    n = np.arange(dim, dtype=np.float64)
    parity = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    diag = params.oscillator_frequency * n + sector.parity_sign * params.delta * params.omega0 * parity
    offdiag = params.g * np.sqrt(n[1:])
    return TridiagonalOperator(diag, offdiag)


def suggest_dim(params: ModelParams, n_levels: int, keep_fraction: float = 0.6) -> int:
    """Truncation dimension for which the lowest ``n_levels`` are safely converged.

    The statistics keep ``keep_fraction`` of the computed levels.  Low sector
    eigenstates look like number states displaced by s = g / (2 omega (1-delta)),
    whose Fock weight sits within s² + 10 s of the origin.
    """
    if n_levels < 1:
        raise ValueError("n_levels must be positive")
    if params.delta >= 1.0:
        raise ValueError("no discrete spectrum at delta = 1")
    shift = params.g / params.oscillator_frequency
    margin = 32 + int(math.ceil(shift * shift + 10.0 * shift))
    return int(math.ceil(n_levels / keep_fraction)) + margin
