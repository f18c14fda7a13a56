"""Nearest- and next-nearest-neighbour level spacings and their histograms.

s_k(n) = (E_{n+k} - E_n) / omega, taken over levels that are both converged
with respect to the truncation and inside the kept low-lying fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import Spectrum
from .model import ModelParams

# values this close below a bin edge (in units of the bin width) go to the upper bin
_EDGE_SNAP = 1e-6
_IDENTITY_TOL = 1e-10


class InsufficientLevelsError(ValueError):
    pass


@dataclass(frozen=True)
class SpacingSample:
    k: int
    values: np.ndarray
    levels_used: int
    meta: dict = field(default_factory=dict)


def spacings(spectrum: Spectrum | np.ndarray, k: int = 1, *, keep_fraction: float | None = None,
             omega: float | None = None) -> SpacingSample:
    """k-th neighbour spacings of a Spectrum (filtered) or of a plain sorted level array.

    A Spectrum is cut to min(keep_fraction * dim, converged_count) levels,
    keep_fraction defaulting to 0.6; a raw array is used as given.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    if isinstance(spectrum, Spectrum):
        kf = 0.6 if keep_fraction is None else keep_fraction
        levels = np.asarray(spectrum.energies)
        cap = min(int(math.floor(kf * spectrum.dim)), spectrum.converged_count, levels.size)
        om = spectrum.params.omega if omega is None else omega
        meta = {"delta": spectrum.params.delta, "dim": spectrum.dim,
                "converged_count": spectrum.converged_count, "keep_fraction": kf}
    else:
        levels = np.asarray(spectrum, dtype=np.float64)
        kf = 1.0 if keep_fraction is None else keep_fraction
        cap = int(math.floor(kf * levels.size))
        om = 1.0 if omega is None else omega
        meta = {"keep_fraction": kf}
    if cap < k + 2:
        need = ""
        if isinstance(spectrum, Spectrum):
            need = f"; converged {spectrum.converged_count} of dim {spectrum.dim}, raise dim"
        raise InsufficientLevelsError(f"only {cap} usable levels for k = {k}{need}")
    e = levels[:cap]
    if np.any(np.diff(e) < 0):
        raise ValueError("levels must be sorted ascending")
    vals = (e[k:] - e[:-k]) / om
    return SpacingSample(k=k, values=vals, levels_used=vals.size, meta=meta)


@dataclass(frozen=True)
class SpacingHistogram:
    bin_edges: np.ndarray
    density: np.ndarray
    peak_locations: np.ndarray
    peak_heights: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def dominant_peaks(self, count: int = 2) -> np.ndarray:
        """Locations of the ``count`` highest local maxima, ascending in position."""
        order = np.argsort(-self.peak_heights, kind="stable")[:count]
        return np.sort(self.peak_locations[order])


def histogram(sample: SpacingSample | np.ndarray, bin_width: float = 0.01) -> SpacingHistogram:
    """Density histogram on fixed bins [0, w), [w, 2w), ... up past max(values).

    Values within a relative 1e-6 of the bin width below an edge are moved
    into the upper bin, so rounding noise on exactly periodic spectra does
    not split one spacing value across two bins.
    """
    vals = np.asarray(sample.values if isinstance(sample, SpacingSample) else sample, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("empty sample")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    if np.any(vals < -_EDGE_SNAP * bin_width):
        raise ValueError("spacings must be non-negative")
    idx = np.floor(vals / bin_width + _EDGE_SNAP).astype(np.int64)
    idx = np.maximum(idx, 0)
    nbins = int(idx.max()) + 2
    counts = np.bincount(idx, minlength=nbins).astype(np.float64)
    edges = bin_width * np.arange(nbins + 1)
    density = counts / (vals.size * bin_width)
    locs, heights = _local_maxima(edges, density)
    return SpacingHistogram(edges, density, locs, heights)


def _local_maxima(edges, density):
    """Strict maxima of the density, a flat run of equal bins counting once at its centre."""
    centers = 0.5 * (edges[1:] + edges[:-1])
    padded = np.concatenate(([-np.inf], density, [-np.inf]))
    locs, heights = [], []
    i = 1
    n = density.size
    while i <= n:
        j = i
        while j + 1 <= n and padded[j + 1] == padded[i]:
            j += 1
        if padded[i] > 0 and padded[i] > padded[i - 1] and padded[i] > padded[j + 1]:
            locs.append(0.5 * (centers[i - 1] + centers[j - 1]))
            heights.append(padded[i])
        i = j + 1
    return np.asarray(locs), np.asarray(heights)


def pole_spacing_diagnostic(params: ModelParams) -> float:
    """Energy distance 2 omega (1 - delta) between consecutive poles of the G-function."""
    return params.oscillator_frequency


def runs_test(values) -> dict:
    """Wald-Wolfowitz runs about the median; large positive z means the sequence alternates."""
    v = np.asarray(values)
    med = np.median(v)
    above = v[v != med] > med
    n1 = int(above.sum())
    n2 = int(above.size - n1)
    if n1 == 0 or n2 == 0:
        return {"runs": 1, "expected": 1.0, "z": 0.0}
    runs = 1 + int(np.count_nonzero(above[1:] != above[:-1]))
    tot = n1 + n2
    mean = 2.0 * n1 * n2 / tot + 1.0
    var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - tot) / (tot * tot * (tot - 1.0))
    z = (runs - mean) / math.sqrt(var) if var > 0 else 0.0
    return {"runs": runs, "expected": mean, "z": z}


def iqr(values) -> float:
    q75, q25 = np.percentile(values, [75, 25])
    return float(q75 - q25)


def interweave_report(s1: SpacingSample, s2: SpacingSample, bin_width: float = 0.01) -> dict:
    """How the two-peak s_1 distribution recombines into a narrow s_2 distribution.

    Raises if s_2(n) = s_1(n) + s_1(n+1) fails beyond 1e-10, which would mean
    the samples come from different level sets.
    """
    if s1.k != 1 or s2.k != 2:
        raise ValueError("pass the k = 1 and k = 2 samples")
    a = np.asarray(s1.values)
    b = np.asarray(s2.values)
    if b.size != a.size - 1:
        raise ValueError("s1 and s2 must come from the same level set")
    resid = float(np.max(np.abs(b - (a[:-1] + a[1:])))) if b.size else 0.0
    if resid > _IDENTITY_TOL:
        raise ValueError(f"s2(n) != s1(n) + s1(n+1): max deviation {resid:.3e}")
    hist = histogram(s1, bin_width)
    peaks = hist.dominant_peaks(2)
    sep = float(peaks[1] - peaks[0]) if peaks.size == 2 else 0.0
    spread = iqr(b)
    return {
        "s1_peaks": [float(p) for p in peaks],
        "s1_peak_separation": sep,
        "s1_median": float(np.median(a)),
        "s1_mean": float(np.mean(a)),
        "s2_median": float(np.median(b)),
        "s2_iqr": spread,
        "s2_iqr_over_peak_separation": spread / sep if sep > 0 else math.inf,
        "telescoping_max_deviation": resid,
        "runs": runs_test(a),
        "levels_used": s1.levels_used,
    }
