"""
Truncated complex power series: the jets of maps used by transport, probe maps and reversion.

A series p with center c stands for sum_j coeffs[j] * (z - c)**j, truncated at `order`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from app.config import SERIES_GROWTH_LIMIT
from app.services.errors import DomainError, OrderRangeError, SingularMapError

logger = logging.getLogger(__name__)

_CENTER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    center: complex
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if arr.size == 0:
            raise OrderRangeError("series needs at least one coefficient")
        if not np.all(np.isfinite(arr)):
            raise DomainError("series coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "center", complex(self.center))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[complex], center: complex = 0) -> "TruncatedSeries":
        return cls(center=center, coeffs=np.asarray(coeffs, dtype=np.complex128))

    @classmethod
    def identity(cls, order: int, center: complex = 0) -> "TruncatedSeries":
        coeffs = np.zeros(order + 1, dtype=np.complex128)
        coeffs[0] = center
        if order >= 1:
            coeffs[1] = 1.0
        return cls(center=center, coeffs=coeffs)

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise OrderRangeError(f"cannot extend order {self.order} to {order}")
        return TruncatedSeries(self.center, self.coeffs[: order + 1])

    def derivative(self) -> "TruncatedSeries":
        """Formal derivative; the result loses one order (order 0 stays a zero constant)."""
        if self.order == 0:
            return TruncatedSeries(self.center, [0.0])
        j = np.arange(1, self.order + 1)
        return TruncatedSeries(self.center, self.coeffs[1:] * j)

    def __call__(self, z):
        return series_eval_derive(self, z, 0)

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return series_arith(self, other, "add")

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return series_arith(self, other, "multiply")

    def growth_warnings(self) -> List[str]:
        """Coefficients whose root growth |coeff[j]|**(1/j) exceeds the conditioning limit."""
        warnings: List[str] = []
        for j in range(1, self.order + 1):
            mag = abs(self.coeffs[j])
            if mag > 0 and mag ** (1.0 / j) > SERIES_GROWTH_LIMIT:
                warnings.append(f"coefficient growth at j={j}: |c|^(1/j)={mag ** (1.0 / j):.3g}")
        return warnings


def _check_center(p: TruncatedSeries, q: TruncatedSeries) -> None:
    if abs(p.center - q.center) > _CENTER_TOL * max(1.0, abs(p.center)):
        raise DomainError(f"series centers differ: {p.center} vs {q.center}")


def _mul_coeffs(x: np.ndarray, y: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(x[: order + 1], y[: order + 1])[: order + 1]


def series_arith(
    p: TruncatedSeries,
    q: TruncatedSeries | None,
    kind: str,
    s: complex = 1.0,
) -> TruncatedSeries:
    """add / multiply / scale. Binary kinds truncate to the smaller operand order."""
    if kind == "scale":
        return TruncatedSeries(p.center, p.coeffs * complex(s))
    if q is None:
        raise DomainError(f"{kind} needs two operands")
    _check_center(p, q)
    order = min(p.order, q.order)
    if kind == "add":
        out = p.coeffs[: order + 1] + q.coeffs[: order + 1]
    elif kind == "multiply":
        out = _mul_coeffs(p.coeffs, q.coeffs, order)
    else:
        raise DomainError(f"unknown series operation: {kind}")
    return TruncatedSeries(p.center, out)


def series_compose(outer: TruncatedSeries, inner: TruncatedSeries) -> TruncatedSeries:
    """
    Jet of outer(inner(z)) at inner's center. inner must send its center to outer's center;
    the result keeps the smaller of the two orders.
    """
    if abs(inner.coeffs[0] - outer.center) > _CENTER_TOL * max(1.0, abs(outer.center)):
        raise DomainError(
            f"inner constant term {inner.coeffs[0]} is not the outer center {outer.center}"
        )
    order = min(outer.order, inner.order)
    shifted = inner.coeffs[: order + 1].copy()
    shifted[0] = 0.0
    # Horner: ((c_N * y + c_{N-1}) * y + ...) + c_0
    acc = np.zeros(order + 1, dtype=np.complex128)
    acc[0] = outer.coeffs[order]
    for j in range(order - 1, -1, -1):
        acc = _mul_coeffs(acc, shifted, order)
        acc[0] += outer.coeffs[j]
    return TruncatedSeries(inner.center, acc)


def series_reciprocal(p: TruncatedSeries) -> TruncatedSeries:
    c = p.coeffs
    if c[0] == 0:
        raise SingularMapError("series with zero constant term has no reciprocal")
    out = np.zeros_like(c)
    out[0] = 1.0 / c[0]
    for n in range(1, c.size):
        out[n] = -np.dot(c[1 : n + 1], out[n - 1 :: -1][:n]) / c[0]
    return TruncatedSeries(p.center, out)


def series_revert(p: TruncatedSeries) -> TruncatedSeries:
    """
    Compositional inverse. The result is centered at p(center) and sends it back to p's center,
    so series_compose(p, series_revert(p)) is the identity jet at p(center).
    """
    if p.order < 1 or p.coeffs[1] == 0:
        raise SingularMapError("series reversion needs a nonzero linear coefficient")
    order = p.order
    target = complex(p.coeffs[0])
    # y(v) solves sum_{j>=1} p_j y^j = v; Newton on jets doubles the correct order each pass.
    lifted = TruncatedSeries(0.0, np.concatenate([[0.0], p.coeffs[1:]]))
    lifted_prime = lifted.derivative()
    variable = TruncatedSeries.identity(order)
    y = TruncatedSeries(0.0, variable.coeffs / p.coeffs[1])
    passes = max(1, math.ceil(math.log2(order + 1))) + 1
    for _ in range(passes):
        value = series_compose(lifted, y)
        residual = TruncatedSeries(0.0, value.coeffs - variable.coeffs)
        slope = series_compose(_pad(lifted_prime, order), y)
        step = series_arith(residual, series_reciprocal(slope), "multiply")
        y = TruncatedSeries(0.0, y.coeffs - step.coeffs)
    coeffs = y.coeffs.copy()
    coeffs[0] = p.center
    result = TruncatedSeries(target, coeffs)
    growth = result.growth_warnings()
    if growth:
        logger.warning("Series reversion ill-conditioned order=%s first=%s", order, growth[0])
    return result


def _pad(p: TruncatedSeries, order: int) -> TruncatedSeries:
    if p.order >= order:
        return p.truncate(order)
    coeffs = np.zeros(order + 1, dtype=np.complex128)
    coeffs[: p.order + 1] = p.coeffs
    return TruncatedSeries(p.center, coeffs)


def series_eval_derive(p: TruncatedSeries, z, m: int = 0):
    """m-th derivative of the truncated polynomial at z (scalar or array)."""
    if m < 0 or m > p.order:
        raise OrderRangeError(f"derivative order {m} outside 0..{p.order}")
    j = np.arange(m, p.order + 1)
    falling = np.array([float(math.perm(int(k), m)) for k in j])
    shifted = p.coeffs[m:] * falling
    u = np.asarray(z, dtype=np.complex128) - p.center
    acc = np.zeros_like(u) + shifted[-1]
    for c in shifted[-2::-1]:
        acc = acc * u + c
    if np.ndim(acc) == 0:
        return complex(acc)
    return acc
