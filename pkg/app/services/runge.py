"""
Runge pole pushing: approximate 1/(z - b) by a polynomial in 1/(z - a) by re-expanding the pole
step by step along a polyline from b to a, and the contour-quadrature sensing identity built from it.

Coefficients live in mpmath at a working precision sized to the weights |A_j| (2 delta)^-j; the
truncation of every re-expanded term is chosen from a rigorous negative-binomial tail bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy.special import gammaln

from app.config import RUNGE_BASE_DPS, RUNGE_MAX_DEGREE
from app.models import Provenance, SensingIdentity, SupCertificate
from app.services.errors import (
    BudgetExceededError,
    CurveError,
    ParameterError,
    StepTooLongError,
)

logger = logging.getLogger(__name__)

_STEP_SLACK = 1e-12
_PRUNE_FRACTION = 1e-3
_SCAN_STEPS = 64


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.complex128).reshape(-1)
        if v.size < 2:
            raise CurveError("a polyline needs at least two vertices")
        seg = np.abs(np.diff(v))
        if np.any(seg == 0) or not np.all(np.isfinite(v)):
            raise CurveError("polyline has a degenerate segment")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "_cumulative", np.concatenate([[0.0], np.cumsum(seg)]))

    @property
    def start(self) -> complex:
        return complex(self.vertices[0])

    @property
    def end(self) -> complex:
        return complex(self.vertices[-1])

    @property
    def length(self) -> float:
        return float(self._cumulative[-1])

    def point_at(self, s: float) -> complex:
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self._cumulative, s, side="right")) - 1
        i = min(i, self.vertices.size - 2)
        seg_len = self._cumulative[i + 1] - self._cumulative[i]
        frac = (s - self._cumulative[i]) / seg_len
        return complex(self.vertices[i] + frac * (self.vertices[i + 1] - self.vertices[i]))

    def distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        start, end = self.vertices[:-1], self.vertices[1:]
        seg = end - start
        rel = z[..., None] - start
        t = np.clip((rel * np.conj(seg)).real / np.abs(seg) ** 2, 0.0, 1.0)
        return np.min(np.abs(rel - t * seg), axis=-1)


def plan_centers(curve: Polyline, delta: float) -> List[complex]:
    """
    Successive centers a_1, a_2, ... each the earliest curve point at distance delta from the
    previous one; once a is within delta the last center is a itself.
    """
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    a = curve.end
    limit = 10 * int(math.ceil(curve.length / delta)) + 10
    centers: List[complex] = []
    s_k, p_k = 0.0, curve.start
    h = delta / _SCAN_STEPS
    while True:
        if abs(a - p_k) <= delta * (1 + _STEP_SLACK):
            centers.append(a)
            return centers
        if len(centers) >= limit:
            raise CurveError("curve bookkeeping does not terminate; parametrization is degenerate")
        lo = s_k
        hi = None
        s = s_k
        while s < curve.length:
            s = min(s + h, curve.length)
            if abs(curve.point_at(s) - p_k) >= delta:
                hi = s
                break
            lo = s
        if hi is None:
            raise CurveError("curve never reaches distance delta from the current center")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if abs(curve.point_at(mid) - p_k) >= delta:
                hi = mid
            else:
                lo = mid
        s_k, p_k = lo, curve.point_at(lo)
        centers.append(p_k)


def truncation_index(
    j: int, log_weight: float, q: float, log_tau: float, max_k: int
) -> Tuple[int, float]:
    """
    Smallest K with weight * sum_{k>K} C(j-1+k, k) q^k <= tau, using
    sum_{k>K} t_k <= t_{K+1} / (1 - t_{K+2}/t_{K+1}) (ratios decrease in k).
    Returns (K, log of the bound).
    """
    if q == 0.0:
        return 0, -math.inf
    if max_k < 0:
        raise BudgetExceededError(f"term j={j} exceeds the degree budget")
    k = np.arange(1, max_k + 2, dtype=float)  # k = K + 1 for K = 0..max_k
    log_term = gammaln(j + k) - gammaln(k + 1) - gammaln(j) + k * math.log(q)
    ratio = q * (j + k) / (k + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_bound = log_weight + log_term - np.log1p(-ratio)
    ok = (ratio < 1) & (log_bound <= log_tau)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        raise BudgetExceededError(
            f"term j={j} needs more than {max_k} re-expansion terms (degree budget exhausted)"
        )
    K = int(hits[0])
    return K, float(log_bound[K])


def _log_weights(coeffs: Sequence, delta: float) -> np.ndarray:
    """log(|A_j| (2 delta)^-j), -inf for zero terms; index 0 is unused."""
    out = np.full(len(coeffs), -np.inf)
    log2d = math.log(2 * delta)
    for j in range(1, len(coeffs)):
        if coeffs[j] != 0:
            out[j] = float(mpmath.log(abs(coeffs[j]))) - j * log2d
    return out


def working_dps(coeffs: Sequence, delta: float, q: float = 0.0, base: int = RUNGE_BASE_DPS) -> int:
    """Digits covering the largest weight amplified by the re-expansion factor (1-q)^-j."""
    logs = _log_weights(coeffs, delta)
    j = np.arange(len(coeffs))
    amplified = logs - j * math.log1p(-q)
    finite = amplified[np.isfinite(amplified)]
    if finite.size == 0:
        return base
    top = float(np.max(finite))
    total = top + math.log(float(np.sum(np.exp(finite - top))))
    return base + max(0, int(math.ceil(total / math.log(10))))


@dataclass(frozen=True)
class RecenterResult:
    coeffs: List
    truncation: Tuple[int, ...]
    tail_bound: float


def recenter(
    coeffs: Sequence,
    c: complex,
    c_next: complex,
    delta: float,
    eta: float,
    *,
    dps: Optional[int] = None,
    max_degree: int = RUNGE_MAX_DEGREE,
) -> RecenterResult:
    """
    Re-expand sum_j Q_j (z-c)^-j around c_next using
    (z-c)^-j = sum_k C(j-1+k, k) (c-c_next)^k (z-c_next)^-(j+k), each term truncated so the
    total tail is at most eta on |z - c_next| >= 2 delta. coeffs[0] is unused.
    """
    s = complex(c) - complex(c_next)
    if abs(s) > delta * (1 + _STEP_SLACK):
        raise StepTooLongError(f"|c - c_next| = {abs(s):.6g} exceeds delta = {delta:.6g}")
    if eta <= 0:
        raise ParameterError(f"tolerance must be positive, got {eta}")
    q = min(abs(s) / (2 * delta), 0.5)
    nonzero = [j for j in range(1, len(coeffs)) if coeffs[j] != 0]
    if s == 0 or not nonzero:
        return RecenterResult(coeffs=list(coeffs), truncation=tuple(0 for _ in nonzero), tail_bound=0.0)

    logs = _log_weights(coeffs, delta)
    log_tau = math.log(eta / len(nonzero))
    plan = []
    tail = 0.0
    for j in nonzero:
        K, log_bound = truncation_index(j, float(logs[j]), q, log_tau, max_degree - j)
        plan.append((j, K))
        tail += math.exp(log_bound) if math.isfinite(log_bound) else 0.0
    degree = max(j + K for j, K in plan)

    dps = working_dps(coeffs, delta, q) if dps is None else dps
    with mpmath.workdps(dps):
        shift = mpmath.mpc(s)
        out = [mpmath.mpc(0)] * (degree + 1)
        for j, K in plan:
            term = mpmath.mpc(coeffs[j])
            out[j] += term
            for k in range(K):
                term = term * shift * (j + k) / (k + 1)
                out[j + k + 1] += term
    return RecenterResult(coeffs=out, truncation=tuple(K for _, K in plan), tail_bound=tail)


def prune(coeffs: List, delta: float, budget: float) -> Tuple[List, float]:
    """Drop terms whose weight is below budget / (number of terms); returns the dropped mass."""
    logs = _log_weights(coeffs, delta)
    count = int(np.sum(np.isfinite(logs)))
    if count == 0:
        return coeffs, 0.0
    cutoff = math.log(budget / count)
    out = list(coeffs)
    dropped = 0.0
    for j in np.flatnonzero(np.isfinite(logs) & (logs < cutoff)):
        dropped += math.exp(logs[j])
        out[j] = mpmath.mpc(0)
    while len(out) > 2 and out[-1] == 0:
        out.pop()
    return out, dropped


@dataclass(frozen=True)
class StepRecord:
    center: complex
    degree: int
    max_truncation: int
    tail_bound: float
    pruned: float
    dps: int


@dataclass(eq=False)
class RationalApproximant:
    """value(z) = sum_{j>=1} coeffs[j] (z - pole)^-j; eps certifies the error on U_{2 delta}."""

    pole: complex
    coeffs: List = field(repr=False)
    delta: float = 0.0
    curve: Optional[Polyline] = field(default=None, repr=False)
    eps: float = 0.0
    requested_eps: float = 0.0
    centers: Tuple[complex, ...] = ()
    steps: Tuple[StepRecord, ...] = ()
    dps: int = RUNGE_BASE_DPS

    @property
    def degree(self) -> int:
        nz = [j for j in range(1, len(self.coeffs)) if self.coeffs[j] != 0]
        return nz[-1] if nz else 0

    @property
    def b(self) -> complex:
        return self.curve.start

    def complex_coeffs(self) -> np.ndarray:
        """A_1..A_J as complex128."""
        return np.array([complex(c) for c in self.coeffs[1 : self.degree + 1]], dtype=np.complex128)

    def evaluate(self, z: complex) -> complex:
        with mpmath.workdps(self.dps):
            v = 1 / (mpmath.mpc(complex(z)) - mpmath.mpc(self.pole))
            acc = mpmath.mpc(0)
            for j in range(self.degree, 0, -1):
                acc = (acc + self.coeffs[j]) * v
            return complex(acc)

    def evaluate_many(self, z) -> Tuple[np.ndarray, int]:
        """
        Vectorized float Horner where its rounding floor is below 1e-3 * eps, mpmath elsewhere.
        Returns (values, number of points evaluated in mpmath).
        """
        z = np.asarray(z, dtype=np.complex128).reshape(-1)
        A = self.complex_coeffs()
        v = 1.0 / (z - self.pole)
        acc = np.zeros_like(v)
        size = np.zeros(v.shape)
        with np.errstate(over="ignore", invalid="ignore"):
            for coef in A[::-1]:
                acc = (acc + coef) * v
                size = (size + abs(coef)) * np.abs(v)
        floor = 4 * (A.size + 1) * np.finfo(float).eps * size
        precise = ~np.isfinite(floor) | ~np.isfinite(acc) | (floor > _PRUNE_FRACTION * self.eps)
        for i in np.flatnonzero(precise):
            acc[i] = self.evaluate(complex(z[i]))
        return acc, int(np.count_nonzero(precise))


def push_pole(
    curve: Polyline,
    delta: float,
    eps: float,
    *,
    max_degree: int = RUNGE_MAX_DEGREE,
) -> RationalApproximant:
    b, a = curve.start, curve.end
    if not 0 < delta < abs(a - b):
        raise ParameterError(f"need 0 < delta < |a - b| = {abs(a - b):.6g}, got {delta}")
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    centers = plan_centers(curve, delta)
    # 每次重展开分到 eps/(N+1)，其中千分之一留给剪枝
    eta = eps / len(centers)
    logger.info(
        "Runge push start b=%s a=%s delta=%s eps=%s recenterings=%s", b, a, delta, eps, len(centers)
    )
    coeffs: List = [mpmath.mpc(0), mpmath.mpc(1)]
    c = b
    total = 0.0
    steps: List[StepRecord] = []
    dps = RUNGE_BASE_DPS
    for center in centers:
        q = min(abs(c - center) / (2 * delta), 0.5)
        dps = max(dps, working_dps(coeffs, delta, q))
        step = recenter(
            coeffs, c, center, delta, eta * (1 - _PRUNE_FRACTION), dps=dps, max_degree=max_degree
        )
        coeffs, dropped = prune(step.coeffs, delta, _PRUNE_FRACTION * eta)
        total += step.tail_bound + dropped
        record = StepRecord(
            center=complex(center),
            degree=len(coeffs) - 1,
            max_truncation=max(step.truncation, default=0),
            tail_bound=step.tail_bound,
            pruned=dropped,
            dps=dps,
        )
        steps.append(record)
        logger.info(
            "Runge recenter center=%s degree=%s max_K=%s tail=%.3g pruned=%.3g dps=%s",
            record.center,
            record.degree,
            record.max_truncation,
            record.tail_bound,
            record.pruned,
            record.dps,
        )
        c = center
    dps = max(dps, working_dps(coeffs, delta))
    return RationalApproximant(
        pole=a,
        coeffs=coeffs,
        delta=delta,
        curve=curve,
        eps=total,
        requested_eps=eps,
        centers=tuple(complex(x) for x in centers),
        steps=tuple(steps),
        dps=dps,
    )


def runge_weights(
    R: RationalApproximant, boundary_length: float, boundary: Optional[np.ndarray] = None
) -> SensingIdentity:
    """d_m = A_{m+1} / m!, with |h(b) - sum d_m h^(m)(a)| <= eps * length * sup|h| / (2 pi)."""
    if boundary is not None and R.curve is not None:
        gap = float(np.min(R.curve.distance(boundary)))
        if gap < 2 * R.delta:
            raise CurveError(f"boundary comes within {gap:.6g} of the curve, inside U_2delta")
    with mpmath.workdps(R.dps):
        weights = [
            complex(R.coeffs[m + 1] / mpmath.factorial(m)) if m + 1 < len(R.coeffs) else 0j
            for m in range(R.degree)
        ]
    return SensingIdentity(
        domain="runge",
        a=R.pole,
        b=R.b,
        weights=np.array(weights, dtype=np.complex128),
        l2_bound=None,
        provenance=Provenance.RUNGE,
        sup_certificate=SupCertificate(eps=R.eps, boundary_length=float(boundary_length)),
    )


@dataclass(frozen=True)
class ExteriorSupReport:
    max_error: float
    certified: float
    points: int
    precise_points: int


def exterior_sup_error(R: RationalApproximant, n: int = 200, half_width: float = 3.0) -> ExteriorSupReport:
    x = np.linspace(-half_width, half_width, n)
    grid = (x[None, :] + 1j * x[:, None]).reshape(-1)
    keep = grid[R.curve.distance(grid) > 2 * R.delta]
    values, precise = R.evaluate_many(keep)
    errors = np.abs(1.0 / (keep - R.b) - values)
    report = ExteriorSupReport(
        max_error=float(np.max(errors)) if errors.size else 0.0,
        certified=R.eps,
        points=int(keep.size),
        precise_points=precise,
    )
    logger.info(
        "Runge exterior check points=%s precise=%s max_error=%.3g certified=%.3g",
        report.points,
        report.precise_points,
        report.max_error,
        report.certified,
    )
    return report
