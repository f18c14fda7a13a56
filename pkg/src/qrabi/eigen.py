"""Symmetric tridiagonal eigensolver: Sturm-count bisection plus inverse iteration.

Eigenvalues are found by batched bisection: every eigenvalue index owns a
bracket [lo, hi] and each sweep evaluates the Sturm count (number of
eigenvalues below a shift) at all bracket midpoints at once.  The inner
loop over shifts is what numba vectorises; the numpy fallback runs the same
recurrence with the shift axis as an array dimension.

A count sweep stops early at row i once the pivot satisfies q_i > |e_i| and
every later row is strictly diagonally dominant with respect to the shift:
the remaining pivots then stay positive, so no further eigenvalue can be
counted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from ._accel import njit, prange
from .model import ModelParams, Sector, TridiagonalOperator, build_sector_hamiltonian

EPS = np.finfo(np.float64).eps
SAFMIN = np.finfo(np.float64).tiny
DENSE_ORACLE_MAX_DIM = 512
DEFAULT_KEEP_FRACTION = 0.6
_CHUNK = 64
_MAXIT = 200


class ConvergenceError(RuntimeError):
    pass


@dataclass
class Spectrum:
    params: ModelParams | None
    sector: Sector | None
    dim: int
    energies: np.ndarray
    vectors: np.ndarray | None = None
    converged_count: int = 0
    first_index: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.converged_count > self.dim:
            raise ValueError("converged_count cannot exceed dim")

    def __len__(self):
        return self.energies.size


# --------------------------------------------------------------------------
# kernels

@njit
def _tail_min(d, ae):
    n = d.size
    out = np.empty(n + 1)
    out[n] = np.inf
    for i in range(n - 1, -1, -1):
        left = ae[i - 1] if i > 0 else 0.0
        right = ae[i] if i < n - 1 else 0.0
        out[i] = min(d[i] - left - right, out[i + 1])
    return out


@njit(parallel=True)
def _counts_nb(d, e2, ae, tailmin, xs, pivmin):
    n = d.size
    m = xs.size
    out = np.zeros(m, np.int64)
    nchunk = (m + _CHUNK - 1) // _CHUNK
    for c in prange(nchunk):
        k0 = c * _CHUNK
        w = min(m, k0 + _CHUNK) - k0
        q = np.empty(w)
        cnt = np.zeros(w, np.int64)
        xmax = -np.inf
        for t in range(w):
            x = xs[k0 + t]
            xmax = max(xmax, x)
            qq = d[0] - x
            if abs(qq) < pivmin:
                qq = -pivmin
            q[t] = qq
            cnt[t] = 1 if qq < 0.0 else 0
        for i in range(1, n):
            if tailmin[i] > xmax:
                a = ae[i - 1]
                done = True
                for t in range(w):
                    if q[t] <= a:
                        done = False
                        break
                if done:
                    break
            di = d[i]
            ei = e2[i - 1]
            for t in range(w):
                qq = di - xs[k0 + t] - ei / q[t]
                if abs(qq) < pivmin:
                    qq = -pivmin
                q[t] = qq
                cnt[t] += qq < 0.0
        for t in range(w):
            out[k0 + t] = cnt[t]
    return out


@njit(parallel=True)
def _bisect_nb(d, e2, ae, tailmin, lo, hi, idx, pivmin, abstol, reltol, maxit):
    n = d.size
    m = idx.size
    nchunk = (m + _CHUNK - 1) // _CHUNK
    unconverged = 0
    for c in prange(nchunk):
        k0 = c * _CHUNK
        w = min(m, k0 + _CHUNK) - k0
        mid = np.empty(w)
        q = np.empty(w)
        cnt = np.empty(w, np.int64)
        finished = False
        for it in range(maxit):
            finished = True
            for t in range(w):
                k = k0 + t
                tol = max(abstol, reltol * max(abs(lo[k]), abs(hi[k])))
                if hi[k] - lo[k] > tol:
                    finished = False
                    break
            if finished:
                break
            xmax = -np.inf
            for t in range(w):
                x = 0.5 * (lo[k0 + t] + hi[k0 + t])
                mid[t] = x
                xmax = max(xmax, x)
                qq = d[0] - x
                if abs(qq) < pivmin:
                    qq = -pivmin
                q[t] = qq
                cnt[t] = 1 if qq < 0.0 else 0
            for i in range(1, n):
                if tailmin[i] > xmax:
                    a = ae[i - 1]
                    done = True
                    for t in range(w):
                        if q[t] <= a:
                            done = False
                            break
                    if done:
                        break
                di = d[i]
                ei = e2[i - 1]
                for t in range(w):
                    qq = di - mid[t] - ei / q[t]
                    if abs(qq) < pivmin:
                        qq = -pivmin
                    q[t] = qq
                    cnt[t] += qq < 0.0
            for t in range(w):
                k = k0 + t
                if cnt[t] > idx[k]:
                    hi[k] = mid[t]
                else:
                    lo[k] = mid[t]
        if not finished:
            unconverged += 1
    return unconverged


def _counts_np(d, e2, ae, tailmin, xs, pivmin):
    xs = np.asarray(xs, dtype=np.float64)
    xmax = xs.max()
    q = d[0] - xs
    q[np.abs(q) < pivmin] = -pivmin
    cnt = (q < 0).astype(np.int64)
    for i in range(1, d.size):
        if tailmin[i] > xmax and q.min() > ae[i - 1]:
            break
        q = d[i] - xs - e2[i - 1] / q
        q[np.abs(q) < pivmin] = -pivmin
        cnt += q < 0
    return cnt


def _bisect_np(d, e2, ae, tailmin, lo, hi, idx, pivmin, abstol, reltol, maxit):
    for _ in range(maxit):
        tol = np.maximum(abstol, reltol * np.maximum(np.abs(lo), np.abs(hi)))
        active = np.nonzero(hi - lo > tol)[0]
        if active.size == 0:
            return 0
        mid = 0.5 * (lo[active] + hi[active])
        below = _counts_np(d, e2, ae, tailmin, mid, pivmin) > idx[active]
        hi[active[below]] = mid[below]
        lo[active[~below]] = mid[~below]
    tol = np.maximum(abstol, reltol * np.maximum(np.abs(lo), np.abs(hi)))
    return int(np.count_nonzero(hi - lo > tol))


@njit
def _gttrf(dd, e):
    """LU factorisation with partial pivoting of a tridiagonal matrix (LAPACK dgttrf)."""
    n = dd.size
    dl = e.copy()
    du = e.copy()
    du2 = np.zeros(max(n - 2, 0))
    ipiv = np.arange(n)
    for i in range(n - 1):
        if abs(dd[i]) >= abs(dl[i]):
            if dd[i] != 0.0:
                fact = dl[i] / dd[i]
                dl[i] = fact
                dd[i + 1] -= fact * du[i]
        else:
            fact = dd[i] / dl[i]
            dd[i] = dl[i]
            dl[i] = fact
            temp = du[i]
            du[i] = dd[i + 1]
            dd[i + 1] = temp - fact * dd[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            ipiv[i] = i + 1
    return dl, dd, du, du2, ipiv


@njit
def _gttrs(dl, dd, du, du2, ipiv, b):
    n = dd.size
    for i in range(n - 1):
        ip = ipiv[i]
        temp = b[2 * i + 1 - ip] - dl[i] * b[ip]
        b[i] = b[ip]
        b[i + 1] = temp
    b[n - 1] /= dd[n - 1]
    if n > 1:
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2]
    for i in range(n - 3, -1, -1):
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i]
    return b


# --------------------------------------------------------------------------
# public API

def _prepare(op: TridiagonalOperator):
    d = op.diag
    e = op.offdiag
    e2 = e * e
    ae = np.abs(e)
    tailmin = _tail_min(d, ae)
    pivmin = SAFMIN * max(1.0, float(e2.max()) if e2.size else 1.0)
    return d, e2, ae, tailmin, pivmin


def sturm_counts(op: TridiagonalOperator, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift."""
    d, e2, ae, tailmin, pivmin = _prepare(op)
    xs = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    if _accel.USE_NUMBA:
        out = _counts_nb(d, e2, ae, tailmin, np.ascontiguousarray(xs), pivmin)
    else:
        out = _counts_np(d, e2, ae, tailmin, xs, pivmin)
    return out.reshape(np.shape(shifts)) if np.ndim(shifts) else out


def _index_range(dim, index_range):
    if index_range is None:
        return 0, dim
    start, stop = index_range
    start, stop = int(start), int(stop)
    if not 0 <= start < stop <= dim:
        raise ValueError(f"empty or invalid eigenvalue index range {index_range!r} for dim {dim}")
    return start, stop


def eigenvalues(op: TridiagonalOperator, index_range: tuple[int, int] | None = None,
                *, abstol: float | None = None) -> np.ndarray:
    """Ascending eigenvalues ``index_range[0] <= j < index_range[1]`` by Sturm bisection.

    The default absolute tolerance is ``2 eps * op.scale``; each bracket is
    also refined to relative width ``4 eps``, whichever is larger.
    """
    start, stop = _index_range(op.dim, index_range)
    d, e2, ae, tailmin, pivmin = _prepare(op)
    scale = op.scale
    if abstol is None:
        abstol = 2.0 * EPS * max(scale, SAFMIN)
    gl, gu = op.gershgorin()
    pad = 2.0 * EPS * max(abs(gl), abs(gu)) * op.dim + 2.0 * pivmin
    gl -= pad
    gu += pad
    if gu - gl <= abstol:
        return np.full(stop - start, 0.5 * (gl + gu))

    m = stop - start
    idx = np.arange(start, stop, dtype=np.int64)
    # a coarse grid of Sturm counts gives every index a narrow starting bracket
    ngrid = int(min(max(4 * m, 64), max(op.dim, 64)))
    grid = np.linspace(gl, gu, ngrid + 1)
    counts = sturm_counts(op, grid)
    counts[0] = 0
    counts[-1] = op.dim
    pos = np.searchsorted(counts, idx, side="right")
    lo = grid[pos - 1].copy()
    hi = grid[pos].copy()

    kernel = _bisect_nb if _accel.USE_NUMBA else _bisect_np
    left = kernel(d, e2, ae, tailmin, lo, hi, idx, pivmin, abstol, 4.0 * EPS, _MAXIT)
    if left:
        raise ConvergenceError(f"bisection did not converge for {left} bracket group(s)")
    return 0.5 * (lo + hi)


def _inverse_iteration(op, lam, start, maxit, tol, ortho):
    n = op.dim
    dd = np.array(op.diag - lam)
    dl, du_d, du, du2, ipiv = _gttrf(dd, np.array(op.offdiag))
    tiny = EPS * max(op.scale, SAFMIN)
    du_d[np.abs(du_d) < tiny] = tiny
    x = start / np.linalg.norm(start)
    for _ in range(maxit):
        y = _gttrs(dl, du_d, du, du2, ipiv, x.copy())
        for v in ortho:
            y -= (v @ y) * v
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0.0:
            return None
        x = y / nrm
        r = op.matvec(x) - lam * x
        if np.linalg.norm(r) <= tol:
            return x
    return None


def eigenpairs(op: TridiagonalOperator, index_range: tuple[int, int],
               *, maxit: int = 8) -> Spectrum:
    """Eigenvalues by bisection and unit eigenvectors by inverse iteration.

    Vectors whose eigenvalues lie within ``1e-6 * scale`` of each other are
    re-orthogonalised against one another.  Each vector's sign is fixed so
    that its largest-magnitude component is positive.
    """
    start, stop = _index_range(op.dim, index_range)
    lam = eigenvalues(op, (start, stop))
    scale = max(op.norm_bound(), SAFMIN)
    tol = 1e-10 * scale
    cluster = 1e-6 * scale
    rng = np.random.default_rng(12345)
    vecs = np.empty((op.dim, lam.size))
    for j, ev in enumerate(lam):
        ortho = [vecs[:, i] for i in range(j) if abs(lam[i] - ev) <= cluster]
        x = None
        for attempt in range(3):
            seed = rng.uniform(-1.0, 1.0, op.dim) + (1.0 if attempt == 0 else 0.0)
            x = _inverse_iteration(op, ev, seed, maxit, tol, ortho)
            if x is not None:
                break
        if x is None:
            raise ConvergenceError(f"inverse iteration failed for eigenvalue index {start + j}")
        if x[np.argmax(np.abs(x))] < 0:
            x = -x
        vecs[:, j] = x
    return Spectrum(params=None, sector=None, dim=op.dim, energies=lam, vectors=vecs,
                    converged_count=0, first_index=start)


def dense_oracle_eigenvalues(op: TridiagonalOperator) -> np.ndarray:
    """Reference eigenvalues from LAPACK on a dense copy; capped at dim 512."""
    if op.dim > DENSE_ORACLE_MAX_DIM:
        raise ValueError(f"dense oracle is limited to dim <= {DENSE_ORACLE_MAX_DIM}, got {op.dim}")
    return np.linalg.eigvalsh(op.to_dense())


def _leading_agreement(a, b, tol):
    bad = np.nonzero(np.abs(a - b) > tol)[0]
    return int(bad[0]) if bad.size else int(a.size)


def converged_levels(params: ModelParams, sector: Sector | str, dim: int, probe_dim: int,
                     *, levels: int | None = None, tol: float = 1e-8) -> int:
    """Largest k such that the lowest k eigenvalues at ``dim`` and ``probe_dim``
    agree within ``tol * omega``."""
    if probe_dim <= dim:
        raise ValueError(f"probe_dim ({probe_dim}) must exceed dim ({dim})")
    k = dim if levels is None else min(int(levels), dim)
    a = eigenvalues(build_sector_hamiltonian(params, sector, dim), (0, k))
    b = eigenvalues(build_sector_hamiltonian(params, sector, probe_dim), (0, k))
    return _leading_agreement(a, b, tol * params.omega)


def default_probe_dim(dim: int) -> int:
    return dim + max(32, dim // 8)


def compute_spectrum(params: ModelParams, sector: Sector | str = Sector.PLUS, dim: int = 4000,
                     *, n_vectors: int = 0, probe_dim: int | None = None,
                     keep_fraction: float = DEFAULT_KEEP_FRACTION,
                     tol: float = 1e-8) -> Spectrum:
    """Full sector spectrum with truncation certificate.

    ``converged_count`` is measured on the lowest ``ceil(keep_fraction * dim)``
    levels against a larger probe truncation; levels above that fraction
    are never certified.  ``n_vectors`` lowest eigenvectors are attached
    when requested.
    """
    sector = Sector.parse(sector)
    op = build_sector_hamiltonian(params, sector, dim)
    energies = eigenvalues(op)
    check = max(1, min(dim, int(math.ceil(keep_fraction * dim))))
    probe_dim = default_probe_dim(dim) if probe_dim is None else int(probe_dim)
    if probe_dim <= dim:
        raise ValueError(f"probe_dim ({probe_dim}) must exceed dim ({dim})")
    probe = eigenvalues(build_sector_hamiltonian(params, sector, probe_dim), (0, check))
    converged = _leading_agreement(energies[:check], probe, tol * params.omega)
    vectors = None
    if n_vectors:
        vectors = eigenpairs(op, (0, int(n_vectors))).vectors
    return Spectrum(params=params, sector=sector, dim=dim, energies=energies, vectors=vectors,
                    converged_count=converged,
                    meta={"probe_dim": probe_dim, "checked_levels": check,
                          "backend": _accel.backend()})
