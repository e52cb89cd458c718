"""Limit joint distribution of (central weight, peripheral weight) and its moments.

Two independent routes are provided for most quantities:

* the exact two-dimensional recurrence (:func:`joint_table`), and
* closed forms built from Gamma ratios (:func:`x_0l_closed`,
  :func:`x_k0_closed`, :func:`row_via_b_coefficients`,
  :func:`marginal_closed`, :func:`expectation_closed`,
  :func:`second_moment_closed`, :func:`taylor_constant`).

Each one is the oracle for the other in the test-suite.

Notation: ``w1`` is the central weight, ``w2`` (or ``l``) the peripheral
weight.  Throughout, ``s = b2/a2``.  A divergent conditional second moment is
reported as ``math.inf`` (see :data:`DIVERGENT`) rather than raised, so that
parameter sweeps keep going.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DivergentMoment, InvalidParams
from .gammakit import log_gamma_ratio
from .params import DerivedParams

DIVERGENT = math.inf


def is_divergent(value) -> bool:
    return isinstance(value, float) and math.isinf(value)


def _require_analytic(d: DerivedParams) -> None:
    for name in ("p", "q", "r"):
        v = getattr(d, name)
        if not 0.0 < v < 1.0:
            raise InvalidParams(
                f"{name}={v!r}: the limit formulas need p, q, r in the open interval (0, 1)"
            )


@dataclass(frozen=True)
class JointTable:
    """Dense rectangle ``values[w1, w2]`` of the limit joint distribution."""

    W1max: int
    W2max: int
    values: np.ndarray
    params: DerivedParams

    def __getitem__(self, idx):
        return self.values[idx]

    def row_sum(self, w1: int) -> float:
        return math.fsum(self.values[w1])

    def col_sum(self, w2: int) -> float:
        return math.fsum(self.values[:, w2])


@dataclass(frozen=True)
class MomentRow:
    """Marginal probability and conditional moments at one fixed coordinate.

    ``w1`` holds the fixed value (a peripheral weight when the row comes from
    a swapped view or a ``fix_w2`` reduction).  ``count`` is the bin
    population for empirical rows and ``None`` for analytic ones.
    """

    w1: int
    marginal: float
    mean: float
    second_moment: float
    count: Optional[int] = None


@dataclass(frozen=True)
class TailCoefficients:
    A_of_w2: float
    C_of_w1: float


@dataclass(frozen=True)
class AuxMoments:
    """Shifted moment sums at one ``w1``.

    ``A_w1 = sum_l x[w1,l] (l + s)`` and
    ``B_w1 = sum_l x[w1,l] (l + s)(l + 1 + s)``; ``B_*`` is ``inf`` when the
    second moment diverges.
    """

    A_w1: float
    B_w1: float
    A_1: float
    B_1: float


@dataclass(frozen=True)
class TruncatedSum:
    """A finite sum over a table row plus an integral bound on the cut-off tail."""

    value: float
    tail_bound: float


# ---------------------------------------------------------------------------
# recurrence


def joint_table(d: DerivedParams, W1max: int, W2max: int) -> JointTable:
    """Fill ``x[w1, w2]`` for ``0 <= w1 <= W1max``, ``0 <= w2 <= W2max``.

    Base cases ``x[1,0] = (1-r)/(a1+b+1)``, ``x[0,1] = r/(a2+b+1)``; every
    other entry with ``w1 + w2 > 1`` is

        ((a1 (w1-1) + b1) x[w1-1,w2] + (a2 (w2-1) + b2) x[w1,w2-1])
        / (a1 w1 + a2 w2 + b + 1)

    Entries are computed one anti-diagonal ``w1 + w2 = const`` at a time, as
    each depends only on the previous diagonal.
    """
    _require_analytic(d)
    W1max, W2max = int(W1max), int(W2max)
    if W1max < 1 or W2max < 1:
        raise InvalidParams("W1max and W2max must be >= 1")
    a1, a2, b1, b2, b = d.a1, d.a2, d.b1, d.b2, d.b
    rho = d.rho
    x = np.zeros((W1max + 1, W2max + 1))
    x[1, 0] = (1.0 - rho) / (a1 + b + 1.0)
    x[0, 1] = rho / (a2 + b + 1.0)

    for s in range(2, W1max + W2max + 1):
        lo = max(0, s - W2max)
        hi = min(W1max, s)
        w1 = np.arange(lo, hi + 1)
        w2 = s - w1
        has_left = w1 >= 1
        has_up = w2 >= 1
        left = np.where(has_left, x[np.maximum(w1 - 1, 0), w2], 0.0)
        up = np.where(has_up, x[w1, np.maximum(w2 - 1, 0)], 0.0)
        num = (a1 * (w1 - 1) + b1) * left + (a2 * (w2 - 1) + b2) * up
        x[w1, w2] = num / (a1 * w1 + a2 * w2 + b + 1.0)
    return JointTable(W1max=W1max, W2max=W2max, values=x, params=d)


# ---------------------------------------------------------------------------
# boundary rows in closed form


def x_0l_closed(d: DerivedParams, l):
    """``x[0, l]`` for ``l >= 1`` (scalar or array)."""
    _require_analytic(d)
    l_arr = np.asarray(l)
    if np.any(l_arr < 1):
        raise InvalidParams("x_0l_closed needs l >= 1")
    a2, b2, b = d.a2, d.b2, d.b
    log_c0 = math.log(d.rho / a2) + log_gamma_ratio(0, 1.0 + (b + 1.0) / a2, 1.0 + b2 / a2)
    out = np.exp(log_c0 + log_gamma_ratio(l_arr, b2 / a2, (a2 + b + 1.0) / a2))
    return float(out) if np.ndim(out) == 0 else out


def x_k0_closed(d: DerivedParams, k):
    """``x[k, 0]`` for ``k >= 1`` (scalar or array)."""
    _require_analytic(d)
    k_arr = np.asarray(k)
    if np.any(k_arr < 1):
        raise InvalidParams("x_k0_closed needs k >= 1")
    a1, b1, b = d.a1, d.b1, d.b
    log_a0 = math.log((1.0 - d.rho) / a1) + log_gamma_ratio(0, 1.0 + (b + 1.0) / a1, 1.0 + b1 / a1)
    out = np.exp(log_a0 + log_gamma_ratio(k_arr, b1 / a1, (a1 + b + 1.0) / a1))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# row w1 from row w1-1


def log_b_prev(d: DerivedParams, w1: int, i, l: int):
    """Log of the coefficient of ``x[w1-1, i]`` in the expansion of ``x[w1, l]``."""
    a1, a2, b1, b2, b = d.a1, d.a2, d.b1, d.b2, d.b
    s = b2 / a2
    c = (w1 * a1 + b + 1.0) / a2
    lead = math.log(((w1 - 1) * a1 + b1) / a2)
    return lead + log_gamma_ratio(l, s, 1.0 + c) + log_gamma_ratio(i, c, s)


def log_b_zero(d: DerivedParams, w1: int, l: int) -> float:
    """Log of the coefficient of ``x[w1, 0]`` in the expansion of ``x[w1, l]``."""
    s = d.b2 / d.a2
    c = (w1 * d.a1 + d.b + 1.0) / d.a2
    return log_gamma_ratio(0, 1.0 + c, s) + log_gamma_ratio(l, s, 1.0 + c)


def row_via_b_coefficients(
    d: DerivedParams, w1: int, l: int, previous_row: Sequence[float], x_w1_0: float
) -> float:
    """``x[w1, l]`` as a linear combination of row ``w1 - 1`` and ``x[w1, 0]``.

    ``previous_row[i]`` must be ``x[w1-1, i]`` for ``1 <= i <= l`` (index 0 is
    ignored, so a full table row can be passed directly).
    """
    _require_analytic(d)
    if w1 < 1 or l < 1:
        raise InvalidParams("row_via_b_coefficients needs w1 >= 1 and l >= 1")
    prev = np.asarray(previous_row, dtype=float)[1 : l + 1]
    if prev.shape[0] != l:
        raise InvalidParams(f"previous_row must cover indices 1..{l}")
    i = np.arange(1, l + 1)
    coef = np.exp(log_b_prev(d, w1, i, l))
    terms = list(coef * prev)
    terms.append(math.exp(log_b_zero(d, w1, l)) * x_w1_0)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# marginal, moments


def _marginal_one(d: DerivedParams) -> float:
    b1, a1, rho = d.b1, d.a1, d.rho
    return b1 / (a1 + b1 + 1.0) * (rho / (b1 + 1.0) + (1.0 - rho) / b1)


def marginal_closed(d: DerivedParams, w1):
    """Probability that a vertex has central weight ``w1`` in the limit.

    Works on a scalar or an integer array.
    """
    _require_analytic(d)
    w = np.asarray(w1)
    if np.any(w < 0):
        raise InvalidParams("w1 must be non-negative")
    a1, b1, rho = d.a1, d.b1, d.rho
    u = (b1 + 1.0) / a1
    wf = np.maximum(w, 2).astype(float)
    log_general = (
        log_gamma_ratio(wf, b1 / a1, 1.0 + u)
        + log_gamma_ratio(0, 1.0 + u, b1 / a1)
        + math.log((1.0 - rho + b1) / (b1 * (b1 + 1.0)))
    )
    out = np.where(
        w == 0,
        rho / (b1 + 1.0),
        np.where(w == 1, _marginal_one(d), np.exp(log_general)),
    )
    return float(out) if out.ndim == 0 else out


def aux_moments(d: DerivedParams, w1: int) -> AuxMoments:
    """The shifted first/second moment sums at ``w1`` and at ``w1 = 1``."""
    _require_analytic(d)
    if w1 < 0:
        raise InvalidParams("w1 must be non-negative")
    a1, a2, b1, b2, rho = d.a1, d.a2, d.b1, d.b2, d.rho
    s = b2 / a2
    if not b1 + 1.0 > a2:
        raise DivergentMoment(f"b1 + 1 = {b1 + 1.0} <= a2 = {a2}: the first moment is infinite")
    A0 = rho / (b1 + 1.0 - a2) * (1.0 + s)
    den1 = a1 + b1 + 1.0 - a2
    A1 = A0 * b1 / den1 + (1.0 - rho) * s / den1
    if b1 + 1.0 > 2.0 * a2:
        B0 = rho / (b1 + 1.0 - 2.0 * a2) * (1.0 + s) * (2.0 + s)
        den2 = a1 + b1 + 1.0 - 2.0 * a2
        B1 = B0 * b1 / den2 + s * (1.0 + s) * (1.0 - rho) / den2
    else:
        B0 = B1 = DIVERGENT

    if w1 == 0:
        return AuxMoments(A0, B0, A1, B1)
    if w1 == 1:
        return AuxMoments(A1, B1, A1, B1)
    g = b1 / a1
    lead = log_gamma_ratio(0, w1 + g, 1.0 + g)
    Aw = math.exp(lead + log_gamma_ratio(0, 2.0 + (b1 + 1.0 - a2) / a1, w1 + 1.0 + (b1 + 1.0 - a2) / a1)) * A1
    if math.isinf(B1):
        Bw = DIVERGENT
    else:
        Bw = math.exp(
            lead + log_gamma_ratio(0, 2.0 + (b1 + 1.0 - 2.0 * a2) / a1, w1 + 1.0 + (b1 + 1.0 - 2.0 * a2) / a1)
        ) * B1
    return AuxMoments(Aw, Bw, A1, B1)


def _growth(d: DerivedParams, w1: int, shift: float) -> float:
    # Gamma(2+v)/Gamma(2+u) * Gamma(w1+1+u)/Gamma(w1+1+v), u=(b1+1)/a1, v=u-shift/a1
    u = (d.b1 + 1.0) / d.a1
    v = (d.b1 + 1.0 - shift) / d.a1
    return math.exp(log_gamma_ratio(0, 2.0 + v, 2.0 + u) + log_gamma_ratio(w1, 1.0 + u, 1.0 + v))


def expectation_closed(d: DerivedParams, w1: int) -> float:
    """Conditional mean of the peripheral weight given central weight ``w1``.

    The Gamma-ratio formula holds for ``w1 >= 1``; ``w1 = 0`` uses ``A_0``
    directly.  Raises :class:`DivergentMoment` when ``b1 + 1 <= a2``.
    """
    aux = aux_moments(d, 0 if w1 == 0 else 1)
    s = d.b2 / d.a2
    if w1 == 0:
        return aux.A_w1 / marginal_closed(d, 0) - s
    return _growth(d, w1, d.a2) * aux.A_1 / _marginal_one(d) - s


def second_moment_closed(d: DerivedParams, w1: int) -> float:
    """Conditional second moment of the peripheral weight given ``w1``.

    Returns ``inf`` when ``b1 + 1 <= 2 a2``.
    """
    aux = aux_moments(d, 0 if w1 == 0 else 1)
    if math.isinf(aux.B_1):
        return DIVERGENT
    s = d.b2 / d.a2
    E = expectation_closed(d, w1)
    if w1 == 0:
        lead = aux.B_w1 / marginal_closed(d, 0)
    else:
        lead = _growth(d, w1, 2.0 * d.a2) * aux.B_1 / _marginal_one(d)
    return math.fsum((lead, -(1.0 + 2.0 * s) * E, -s * (1.0 + s)))


def moment_row(d: DerivedParams, w1: int) -> MomentRow:
    return MomentRow(
        w1=w1,
        marginal=marginal_closed(d, w1),
        mean=expectation_closed(d, w1),
        second_moment=second_moment_closed(d, w1),
    )


def tail_coefficients(d: DerivedParams, w1: int, w2: int) -> TailCoefficients:
    """``A(w2)`` and ``C(w1)`` of the power-law tails

    ``x[w1,w2] ~ A(w2) w1^-(1+(b2+1)/a1)`` as ``w1 -> inf`` and
    ``x[w1,w2] ~ C(w1) w2^-(1+(b1+1)/a2)`` as ``w2 -> inf``.
    """
    _require_analytic(d)
    if w1 < 0 or w2 < 0:
        raise InvalidParams("w1 and w2 must be non-negative")
    a1, a2, b1, b2, b, rho = d.a1, d.a2, d.b1, d.b2, d.b, d.rho
    logA = (
        math.log((1.0 - rho) / a1)
        + log_gamma_ratio(w2, b2 / a2, 1.0)
        - gammaln(b2 / a2)
        + log_gamma_ratio(0, 1.0 + (b + 1.0) / a1, 1.0 + b1 / a1)
    )
    logC = (
        math.log(rho / a2)
        + log_gamma_ratio(w1, b1 / a1, 1.0)
        - gammaln(b1 / a1)
        + log_gamma_ratio(0, 1.0 + (b + 1.0) / a2, 1.0 + b2 / a2)
    )
    return TailCoefficients(A_of_w2=math.exp(logA), C_of_w1=math.exp(logC))


def taylor_constant(d: DerivedParams) -> float:
    """Limit of ``M[w1] / E[w1]**2`` as ``w1 -> inf``; ``inf`` if ``M`` diverges."""
    aux = aux_moments(d, 1)
    if math.isinf(aux.B_1):
        return DIVERGENT
    a1, a2, b1 = d.a1, d.a2, d.b1
    log_g = (
        gammaln(2.0 + (b1 + 1.0 - 2.0 * a2) / a1)
        + gammaln(2.0 + (b1 + 1.0) / a1)
        - 2.0 * gammaln(2.0 + (b1 + 1.0 - a2) / a1)
    )
    return aux.B_1 * _marginal_one(d) / aux.A_1 ** 2 * math.exp(log_g)


def swap_roles(d: DerivedParams) -> DerivedParams:
    """View in which the peripheral weight plays the role of ``w1``.

    Exchanges ``a1 <-> a2``, ``b1 <-> b2`` and uses ``1 - r`` in place of
    ``r``; every function of this module evaluated on the view describes
    ``x[., w2]``, ``E[w2]`` and ``M[w2]``.  Applying it twice returns the
    original object's fields exactly.
    """
    _require_analytic(d)
    return d.swap()


# ---------------------------------------------------------------------------
# truncated sums over a table (oracles for the closed forms)


def row_power_sum(table: JointTable, w1: int, power: int) -> TruncatedSum:
    """``sum_{l <= W2max} x[w1, l] l**power`` and a bound on the omitted tail.

    The tail is estimated from the power-law decay ``C(w1) l^-gamma`` with
    ``gamma = 1 + (b1+1)/a2``.
    """
    d = table.params
    row = table.values[w1]
    l = np.arange(row.shape[0], dtype=float)
    value = math.fsum(row * l ** power)
    gamma = 1.0 + (d.b1 + 1.0) / d.a2
    expo = gamma - power - 1.0
    if expo <= 0:
        tail = math.inf
    else:
        C = tail_coefficients(d, w1, 0).C_of_w1
        tail = C * table.W2max ** (-expo) / expo
    return TruncatedSum(value=value, tail_bound=tail)


def table_moment_row(table: JointTable, w1: int) -> MomentRow:
    """Conditional moments at ``w1`` from truncated sums over a table row."""
    m0 = row_power_sum(table, w1, 0).value
    m1 = row_power_sum(table, w1, 1).value
    m2 = row_power_sum(table, w1, 2).value
    return MomentRow(w1=w1, marginal=m0, mean=m1 / m0, second_moment=m2 / m0)
