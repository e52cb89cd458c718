"""Model parameters and the derived alpha/beta constants.

Every analytic formula in the package is expressed through the eight
constants of :class:`DerivedParams`::

    a11 = p r                    a12 = (1 - p) q
    a1  = a11 + a12              a2  = p r (N - 2)/(N - 1) + (1 - p) q
    b1  = (1 - p)(1 - q)/p       b2  = (N - 1) [(1 - r) + b1]
    a   = a1 + a2                b   = b1 + b2
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import InvalidParams


@dataclass(frozen=True)
class ModelParams:
    """Raw inputs of the N-stars evolution model."""

    N: int
    p: float
    q: float
    r: float

    def validate_simulation(self) -> "ModelParams":
        # p == 0 is allowed: the evolution is well defined (no vertex is ever
        # born), only the derived constants are not.
        if int(self.N) != self.N or self.N < 3:
            raise InvalidParams(f"N must be an integer >= 3, got {self.N!r}")
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParams(f"{name} must lie in [0, 1], got {v!r}")
        return self

    def validate_analytic(self) -> "ModelParams":
        if int(self.N) != self.N or self.N < 3:
            raise InvalidParams(f"N must be an integer >= 3, got {self.N!r}")
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidParams(
                    f"{name} must lie in the open interval (0, 1) for the "
                    f"limit formulas, got {v!r}"
                )
        return self


@dataclass(frozen=True)
class DerivedParams:
    """Constants feeding the limit-distribution formulas.

    ``a21``/``a22`` are the two summands of ``a2`` (kept so that a role swap
    is a pure field permutation). ``swapped`` marks the view produced by
    :func:`nstars.analytic.swap_roles`; under it the formulas describe the
    peripheral weight as the fixed coordinate and use ``rho = 1 - r``.
    """

    N: int
    p: float
    q: float
    r: float
    a11: float
    a12: float
    a21: float
    a22: float
    a1: float
    a2: float
    b1: float
    b2: float
    a: float
    b: float
    swapped: bool = False

    @property
    def rho(self) -> float:
        """Probability attached to the ``w1 = 0`` boundary in this view."""
        return 1.0 - self.r if self.swapped else self.r

    def swap(self) -> "DerivedParams":
        return replace(
            self,
            a11=self.a21,
            a12=self.a22,
            a21=self.a11,
            a22=self.a12,
            a1=self.a2,
            a2=self.a1,
            b1=self.b2,
            b2=self.b1,
            swapped=not self.swapped,
        )


@dataclass(frozen=True)
class ConditionReport:
    e_finite: bool
    m_finite: bool
    m_finite_swapped: bool
    e_exponent: float
    m_exponent: float


def derive(params: ModelParams) -> DerivedParams:
    """Compute the alpha/beta constants for ``params``.

    Raises :class:`InvalidParams` for ``N < 3`` or ``p == 0`` (``b1`` is
    undefined there) and for probabilities outside ``[0, 1]``.
    """
    N, p, q, r = params.N, float(params.p), float(params.q), float(params.r)
    if int(N) != N or N < 3:
        raise InvalidParams(f"N must be an integer >= 3, got {N!r}")
    N = int(N)
    if not 0.0 < p <= 1.0:
        raise InvalidParams(f"p must lie in (0, 1], got {p!r}")
    if not (0.0 <= q <= 1.0 and 0.0 <= r <= 1.0):
        raise InvalidParams(f"q and r must lie in [0, 1], got q={q!r}, r={r!r}")

    a11 = p * r
    a12 = (1.0 - p) * q
    a21 = p * r * (N - 2) / (N - 1)
    a22 = a12
    a1 = a11 + a12
    a2 = a21 + a22
    b1 = (1.0 - p) * (1.0 - q) / p
    b2 = (N - 1) * ((1.0 - r) + b1)
    return DerivedParams(
        N=N, p=p, q=q, r=r,
        a11=a11, a12=a12, a21=a21, a22=a22,
        a1=a1, a2=a2, b1=b1, b2=b2,
        a=a1 + a2, b=b1 + b2,
    )


def check_conditions(d: DerivedParams) -> ConditionReport:
    """Finiteness conditions of the conditional moments.

    ``e_finite``: b1 + 1 > a2, ``m_finite``: b1 + 1 > 2 a2 and
    ``m_finite_swapped``: b2 + 1 > 2 a1 (the same test with roles exchanged).
    """
    return ConditionReport(
        e_finite=d.b1 + 1.0 > d.a2,
        m_finite=d.b1 + 1.0 > 2.0 * d.a2,
        m_finite_swapped=d.b2 + 1.0 > 2.0 * d.a1,
        e_exponent=d.a2 / d.a1 if d.a1 > 0 else float("inf"),
        m_exponent=2.0 * d.a2 / d.a1 if d.a1 > 0 else float("inf"),
    )
