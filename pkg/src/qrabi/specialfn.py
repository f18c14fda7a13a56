"""Special functions for displaced and squeezed oscillator states.

Everything here works with real arguments.  Large factorials are handled in
log space; terminating hypergeometric polynomials are evaluated either as
finite sums or through their three-term recurrence in the degree.

Displacement convention: ``D(alpha) = exp(alpha a^dag - alpha* a)``, and for
real ``alpha``

    <k|D(alpha)|n> = exp(-alpha^2/2) * P(n, k, alpha)

where ``P`` is :func:`displaced_overlap`.
"""
from __future__ import annotations

import math

import numpy as np

_LOGFACT_CAP = 1024
_LOGFACT_TABLE = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, _LOGFACT_CAP + 1)))))
_LOGFACT_TABLE.setflags(write=False)

# Stirling series coefficients B_{2k} / (2k (2k-1))
_STIRLING = (1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188)


def log_factorial(n):
    """ln(n!) for integer ``n >= 0`` (scalar or array).

    Table lookup up to 1024, Stirling series with five correction terms above.
    """
    arr = np.asarray(n)
    if np.any(arr < 0):
        raise ValueError("log_factorial needs n >= 0")
    if arr.ndim == 0:
        return _log_factorial_scalar(int(arr))
    flat = arr.astype(np.int64).ravel()
    out = np.empty(flat.size)
    small = flat <= _LOGFACT_CAP
    out[small] = _LOGFACT_TABLE[flat[small]]
    big = flat[~small].astype(np.float64)
    if big.size:
        out[~small] = _stirling(big)
    return out.reshape(arr.shape)


def _log_factorial_scalar(n: int) -> float:
    if n <= _LOGFACT_CAP:
        return float(_LOGFACT_TABLE[n])
    return float(_stirling(np.float64(n)))


def _stirling(n):
    x = n + 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    corr = 0.0
    p = inv
    for c in _STIRLING:
        corr = corr + c * p
        p = p * inv2
    return (x - 0.5) * np.log(x) - x + 0.5 * math.log(2.0 * math.pi) + corr


def kummer_m_terminating(m: int, b: float, x: float) -> float:
    """1F1(-m; b; x) for integer ``m >= 0`` via the recurrence in ``m``.

    (b + j) M_{j+1} = (2j + b - x) M_j - j M_{j-1}, which is the Laguerre
    recurrence rescaled so the values stay O(1) for moderate ``x``.
    """
    if m < 0:
        raise ValueError("m must be a non-negative integer")
    prev, cur = 1.0, 1.0 - x / b
    if m == 0:
        return prev
    for j in range(1, m):
        prev, cur = cur, ((2 * j + b - x) * cur - j * prev) / (b + j)
    return cur


def kummer_m_sum(m: int, b: float, x: float) -> float:
    """1F1(-m; b; x) summed term by term (short polynomials, test oracle)."""
    term, total = 1.0, 1.0
    for j in range(m):
        term *= (j - m) * x / ((b + j) * (j + 1))
        total += term
    return total


def tricomi_u_terminating(m: int, b: float, x: float) -> tuple[float, float]:
    """Tricomi U(-m; b; x) for integer ``m >= 0`` as ``(sign, log|U|)``.

    Uses U(-m, b, x) = (-1)^m (b)_m 1F1(-m; b; x); the Pochhammer factor
    overflows quickly so the magnitude is returned as a logarithm.
    """
    mval = kummer_m_terminating(m, b, x)
    if mval == 0.0:
        return 0.0, -math.inf
    log_poch = math.lgamma(b + m) - math.lgamma(b)
    sign = (-1.0) ** m * math.copysign(1.0, mval)
    return sign, log_poch + math.log(abs(mval))


def displaced_overlap(n: int, k: int, alpha: float) -> float:
    """Amplitude kernel ``P(n, k, alpha)`` of the displaced number state.

    P(n, k, a) = (-1)^(|n-k| [n > k]) a^|n-k| / |n-k|! sqrt(max! / min!)
                 * C(-min; |n-k| + 1; a^2)

    with C the terminating confluent hypergeometric polynomial.  Written in
    terms of the Tricomi function, C(-m; b; x) = (-1)^m U(-m; b; x) / (b)_m;
    inserting U without that normalisation would scale P by (b)_m.
    ``exp(-alpha^2/2) * P`` equals ``<k|D(alpha)|n>`` for real alpha.
    """
    n = int(n)
    k = int(k)
    if n < 0 or k < 0:
        raise ValueError("Fock indices must be non-negative")
    d = abs(n - k)
    lo = min(n, k)
    hi = max(n, k)
    if alpha == 0.0:
        return 1.0 if d == 0 else 0.0
    poly = kummer_m_terminating(lo, d + 1.0, alpha * alpha)
    if poly == 0.0:
        return 0.0
    logmag = (d * math.log(abs(alpha)) - _log_factorial_scalar(d)
              + 0.5 * (_log_factorial_scalar(hi) - _log_factorial_scalar(lo))
              + math.log(abs(poly)))
    sign = math.copysign(1.0, poly)
    if alpha < 0 and d % 2:
        sign = -sign
    if n > k and d % 2:
        sign = -sign
    return sign * math.exp(logmag)


def displaced_column(n: int, alpha: float, kmax: int) -> np.ndarray:
    """``<k|D(alpha)|n>`` for ``k = 0 .. kmax-1`` (includes the Gaussian factor)."""
    pref = math.exp(-0.5 * alpha * alpha)
    return np.array([pref * displaced_overlap(n, k, alpha) for k in range(kmax)])


def overlap_cutoff(n: int, alpha: float) -> int:
    """Fock cutoff n + 20 + 10 alpha^2 past which displaced-state tails are negligible."""
    return int(n + 20 + math.ceil(10.0 * alpha * alpha))


def hermite_poly(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by forward recurrence."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    h0 = np.ones_like(x)
    if n == 0:
        return h0 if x.ndim else float(h0)
    h1 = 2.0 * x
    for j in range(1, n):
        h0, h1 = h1, 2.0 * x * h1 - 2.0 * j * h0
    return h1 if x.ndim else float(h1)


def hermite_functions(nmax: int, x: float) -> np.ndarray:
    """<n|q> = pi^(-1/4) exp(-q^2/2) H_n(q) / sqrt(2^n n!) for n < nmax.

    Uses the normalised recurrence, so no factorial ever overflows.
    """
    out = np.empty(nmax)
    out[0] = math.pi ** -0.25 * math.exp(-0.5 * x * x)
    if nmax > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for j in range(1, nmax - 1):
        out[j + 1] = math.sqrt(2.0 / (j + 1)) * x * out[j] - math.sqrt(j / (j + 1)) * out[j - 1]
    return out


class DomainError(ValueError):
    pass


def _nonpositive_int(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def gauss_2f1(a: float, b: float, c: float, z: float, *, rtol: float = 1e-14, max_terms: int = 100000) -> float:
    """Gauss 2F1(a, b; c; z) on the restricted domain used by the squeezed-state weights.

    Supported: ``a`` or ``b`` a non-positive integer (finite polynomial, any
    ``z``), or ``|z| < 1``.  ``c`` must not be a non-positive integer unless
    the series terminates before the pole.
    """
    term_limit = None
    if _nonpositive_int(a):
        term_limit = int(-a)
    if _nonpositive_int(b):
        term_limit = int(-b) if term_limit is None else min(term_limit, int(-b))
    if _nonpositive_int(c) and (term_limit is None or term_limit >= -c):
        raise DomainError(f"c = {c} hits a pole of the series")
    if term_limit is None and not abs(z) < 1.0:
        raise DomainError(f"non-terminating 2F1 needs |z| < 1, got z = {z}")

    term = 1.0
    total = 1.0
    j = 0
    while True:
        if term_limit is not None and j >= term_limit:
            return total
        term *= (a + j) * (b + j) / ((c + j) * (j + 1)) * z
        total += term
        j += 1
        if term_limit is None:
            # geometric tail bound once the term ratio has settled below 1
            ratio = abs((a + j) * (b + j) / ((c + j) * (j + 1)) * z)
            if ratio < 1.0 and abs(term) * ratio / (1.0 - ratio) <= rtol * abs(total):
                return total
            if j >= max_terms:
                raise DomainError("2F1 series did not converge within the term cap")
