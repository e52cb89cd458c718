"""Gamma-ratio and Gamma-sum primitives.

All closed forms in :mod:`nstars.analytic` are products of ratios
``Gamma(n + a) / Gamma(n + b)``.  They are evaluated in log space: for small
arguments as a difference of ``lgamma`` values, for large ones through the
difference of two Stirling series, which keeps full relative precision where
the plain difference of two huge ``lgamma`` values would not.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import DivergentSum, DomainError, SingularIdentity

# Below this argument the lgamma difference is already accurate to ~1e-14.
_STIRLING_MIN = 20.0

# B_{2k} / (2k (2k - 1)), k = 1..8
_STIRLING_COEF = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)


def _stirling_tail(z):
    zinv = 1.0 / z
    z2 = zinv * zinv
    acc = np.zeros_like(z)
    for c in reversed(_STIRLING_COEF):
        acc = acc * z2 + c
    return acc * zinv


def _log_ratio_array(x, y, d):
    out = np.empty(np.broadcast(x, y, d).shape, dtype=float)
    x, y, d = np.broadcast_arrays(x, y, d)
    big = np.minimum(x, y) >= _STIRLING_MIN
    small = ~big
    if small.any():
        out[small] = gammaln(x[small]) - gammaln(y[small])
    if big.any():
        xb, yb, db = x[big], y[big], d[big]
        out[big] = (
            (yb - 0.5) * np.log1p(db / yb)
            + db * (np.log(xb) - 1.0)
            + (_stirling_tail(xb) - _stirling_tail(yb))
        )
    return out


def log_gamma_ratio(n, a, b):
    """Return ``ln Gamma(n + a) - ln Gamma(n + b)``.

    Accepts scalars or numpy arrays (broadcast together).  Raises
    :class:`DomainError` unless every ``n + a`` and ``n + b`` is positive.
    """
    n_arr = np.asarray(n, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    x = n_arr + a_arr
    y = n_arr + b_arr
    if not (np.all(x > 0) and np.all(y > 0)):
        raise DomainError(
            "log_gamma_ratio needs positive arguments; got n+a and n+b with "
            f"minimum {float(np.min(x))!r}, {float(np.min(y))!r}"
        )
    # a - b is formed directly so that a large n does not swamp the offset.
    out = _log_ratio_array(x, y, a_arr - b_arr)
    out = np.where(x == y, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def gamma_ratio(n, a, b):
    """``Gamma(n + a) / Gamma(n + b)``; may under/overflow for extreme inputs."""
    lr = log_gamma_ratio(n, a, b)
    return np.exp(lr) if isinstance(lr, np.ndarray) else math.exp(lr)


def finite_gamma_sum(n: int, a: float, b: float) -> float:
    """Closed form of ``sum_{i=0}^{n} Gamma(i + a) / Gamma(i + b)``.

    Uses ``[Gamma(n+a+1)/Gamma(n+b) - Gamma(a)/Gamma(b-1)] / (a - b + 1)``,
    rewritten as ``[(n+a) R_n - (b-1) R_0] / (a - b + 1)`` with
    ``R_i = Gamma(i+a)/Gamma(i+b)`` so that every Gamma argument stays
    positive even when ``b < 1``.
    """
    n = int(n)
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    if a <= 0 or b <= 0:
        raise DomainError(f"need a > 0 and b > 0, got a={a!r}, b={b!r}")
    denom = a - b + 1.0
    if denom == 0.0:
        raise SingularIdentity(
            "a - b + 1 == 0: the closed form is undefined, sum the terms directly"
        )
    head = (n + a) * math.exp(log_gamma_ratio(n, a, b))
    tail = (b - 1.0) * math.exp(log_gamma_ratio(0, a, b))
    return math.fsum((head, -tail)) / denom


def infinite_gamma_sum(a: float, b: float) -> float:
    """``sum_{i>=0} Gamma(i + a) / Gamma(i + b) = Gamma(a) / ((b-a-1) Gamma(b-1))``."""
    if b <= a + 1.0:
        raise DivergentSum(f"the series diverges for b <= a + 1 (a={a!r}, b={b!r})")
    if a <= 0 or b <= 1:
        raise DomainError(f"need a > 0 and b > 1, got a={a!r}, b={b!r}")
    return math.exp(log_gamma_ratio(0, a, b - 1.0)) / (b - a - 1.0)
