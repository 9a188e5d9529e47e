"""
探针区域：过 a、b 的多项式脊线 P，参数矩形 R，圆盘到 R 的共形映射，以及复合映射
phi = P o psi o m0 在 0 处的 Taylor jet（FFT-Cauchy 取系数）。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss

from app.config import (
    DEFAULT_MU,
    JET_CHECK_RADIUS,
    JET_RADIUS,
    JET_TOLERANCE,
    MAX_SIGMA,
    SIGMA_HALVINGS,
    SPINE_GRID,
)
from app.models import ProbeGeometry
from app.services.conformal import Rectangle, RectangleMap
from app.services.errors import (
    GeometryError,
    JetExtractionError,
    ParameterError,
    SpineFitError,
    SpineInfeasibleError,
)
from app.services.series import TruncatedSeries

logger = logging.getLogger(__name__)

_MATCH_TOL = 1e-12


class ParameterMap(Protocol):
    """Disc -> parameter region map returning (value, derivative)."""

    def __call__(self, w): ...

    def preimage_real(self, t: float) -> float: ...


class IdentityParameterMap:
    """psi = identity; parameters must then lie in (-1, 1)."""

    def __call__(self, w):
        w = np.asarray(w, dtype=np.complex128)
        one = np.ones_like(w)
        if w.ndim == 0:
            return complex(w), 1.0 + 0j
        return w, one

    def preimage_real(self, t: float) -> float:
        if not -1 < t < 1:
            raise ParameterError(f"t={t} outside the identity map's range")
        return float(t)


@dataclass(frozen=True, eq=False)
class Spine:
    poly: Polynomial
    t_a: float
    t_b: float
    a: complex
    b: complex
    waypoints: np.ndarray = field(repr=False)
    params: np.ndarray = field(repr=False)

    @property
    def degree(self) -> int:
        return self.poly.degree()

    @property
    def dpoly(self) -> Polynomial:
        return self.poly.deriv()

    def __call__(self, t):
        return self.poly(np.asarray(t, dtype=np.complex128))

    def derivative(self, t):
        return self.dpoly(np.asarray(t, dtype=np.complex128))

    def arclength(self, t0: float, t1: float, nodes: int = 64) -> float:
        x, wts = leggauss(nodes)
        half = 0.5 * (t1 - t0)
        t = t0 + half * (x + 1.0)
        return float(abs(half) * np.sum(wts * np.abs(self.dpoly(t))))


def _match(waypoints: np.ndarray, point: complex, name: str) -> int:
    gaps = np.abs(waypoints - point)
    idx = int(np.argmin(gaps))
    if gaps[idx] > _MATCH_TOL * max(1.0, abs(point)):
        raise SpineInfeasibleError(f"{name}={point} is not among the waypoints")
    return idx


def fit_spine(waypoints: Sequence[complex], a: complex, b: complex, degree: int) -> Spine:
    pts = np.asarray(waypoints, dtype=np.complex128).reshape(-1)
    if pts.size < 2:
        raise SpineInfeasibleError("a spine needs at least two waypoints")
    if degree < 1:
        raise SpineInfeasibleError(f"degree {degree} cannot interpolate both a and b")
    ia, ib = _match(pts, a, "a"), _match(pts, b, "b")
    last = pts.size - 1
    if ia in (0, last) or ib in (0, last):
        raise SpineInfeasibleError("a and b must be interior points of the waypoint curve")
    if ia == ib:
        raise SpineInfeasibleError("a and b map to the same waypoint")

    chords = np.abs(np.diff(pts))
    if np.any(chords == 0):
        raise SpineFitError("repeated consecutive waypoints give a degenerate parametrization")
    t = np.concatenate([[0.0], np.cumsum(chords)]) / np.sum(chords)
    t_a, t_b = float(t[ia]), float(t[ib])

    n = degree + 1
    V = np.vander(t, n, increasing=True)
    C = np.vander(np.array([t_a, t_b]), n, increasing=True)
    if np.linalg.matrix_rank(np.vstack([V, C])) < n:
        raise SpineFitError(f"{pts.size} waypoints cannot determine a degree-{degree} spine")
    # 带约束最小二乘：Lagrange 乘子的 KKT 方程
    kkt = np.zeros((n + 2, n + 2))
    kkt[:n, :n] = V.T @ V
    kkt[:n, n:] = C.T
    kkt[n:, :n] = C
    rhs = np.concatenate([V.T @ pts, [complex(a), complex(b)]])
    try:
        solution = np.linalg.solve(kkt.astype(np.complex128), rhs)
    except np.linalg.LinAlgError as exc:
        raise SpineFitError(f"constrained fit failed: {exc}") from exc
    poly = Polynomial(solution[:n])
    spine = Spine(
        poly=poly, t_a=t_a, t_b=t_b, a=complex(a), b=complex(b), waypoints=pts, params=t
    )
    _check_regular(spine)
    logger.info(
        "Spine fit degree=%s t_a=%.6f t_b=%.6f residual_a=%.3g residual_b=%.3g",
        degree,
        t_a,
        t_b,
        abs(spine(t_a) - a),
        abs(spine(t_b) - b),
    )
    return spine


def _check_regular(spine: Spine) -> None:
    t = np.linspace(0.0, 1.0, SPINE_GRID)
    h = t[1] - t[0]
    slack = float(np.max(np.abs(spine.dpoly.deriv()(t)))) * h / 2 if spine.degree > 1 else 0.0
    margin = float(np.min(np.abs(spine.derivative(t)))) - slack
    if margin <= 0:
        raise SpineInfeasibleError(f"spine derivative may vanish on [0, 1] (margin {margin:.3g})")


@dataclass(eq=False)
class ProbeDomain:
    """phi(w) = P(psi(m0(w))) with m0(0) = preimage of t_a, so phi(0) = a."""

    spine: Spine
    rect: Rectangle
    conformal: ParameterMap
    center_shift: float
    sigma_halvings: int = 0
    jet: Optional[TruncatedSeries] = None
    jet_tolerance: float = 0.0

    @classmethod
    def create(cls, spine: Spine, rect: Rectangle, conformal: Optional[ParameterMap] = None):
        conformal = RectangleMap.for_rectangle(rect) if conformal is None else conformal
        shift = conformal.preimage_real(spine.t_a)
        return cls(spine=spine, rect=rect, conformal=conformal, center_shift=shift)

    @property
    def a(self) -> complex:
        return self.spine.a

    @property
    def b(self) -> complex:
        return self.spine.b

    def _moebius(self, w):
        s = self.center_shift
        denom = 1.0 + s * w
        return (w + s) / denom, (1.0 - s * s) / denom**2

    def parameter(self, w):
        """(psi(m0(w)), d/dw)"""
        u, du = self._moebius(np.asarray(w, dtype=np.complex128))
        tau, dtau = self.conformal(u)
        return tau, dtau * du

    def __call__(self, w) -> Tuple[complex, complex]:
        tau, dtau = self.parameter(w)
        value = self.spine(tau)
        derivative = self.spine.derivative(tau) * dtau
        if np.ndim(value) == 0:
            return complex(value), complex(derivative)
        return value, derivative

    def disc_point(self, t: float) -> complex:
        """Disc preimage of the spine parameter t."""
        u = self.conformal.preimage_real(t)
        s = self.center_shift
        return complex((u - s) / (1.0 - s * u))

    def describe(self) -> dict:
        return {
            "spine": [complex(c) for c in self.spine.poly.coef],
            "t_a": self.spine.t_a,
            "t_b": self.spine.t_b,
            "mu": self.rect.margin,
            "sigma": self.rect.halfheight,
            "modulus": float(getattr(self.conformal, "modulus", 0.0)),
            "center_shift": self.center_shift,
            "sigma_halvings": self.sigma_halvings,
        }


def _cauchy_coefficients(fn: Callable, order: int, radius: float) -> Tuple[np.ndarray, float]:
    count = max(256, 8 * order)
    count = 1 << (count - 1).bit_length()
    w = radius * np.exp(2j * np.pi * np.arange(count) / count)
    values = np.asarray(fn(w)[0], dtype=np.complex128)
    coeffs = np.fft.fft(values)[: order + 1] / count
    return coeffs / radius ** np.arange(order + 1), float(np.max(np.abs(values)))


def probe_jet(
    probe: ProbeDomain,
    order: int,
    radius: float = JET_RADIUS,
    check_radius: float = JET_CHECK_RADIUS,
    tol: float = JET_TOLERANCE,
) -> TruncatedSeries:
    primary, sup_primary = _cauchy_coefficients(probe, order, radius)
    check, sup_check = _cauchy_coefficients(probe, order, check_radius)
    gap = float(np.max(np.abs(primary[1:] - check[1:]))) if order else 0.0
    limit = tol * max(1.0, sup_primary, sup_check)
    if gap > limit:
        raise JetExtractionError(
            f"jet radii disagree by {gap:.3g} > {limit:.3g} at order {order}"
        )
    primary[0] = probe.a
    jet = TruncatedSeries(0.0, primary)
    probe.jet = jet
    probe.jet_tolerance = gap
    logger.info("Probe jet order=%s radius=%s gap=%.3g", order, radius, gap)
    return jet


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    margin: Optional[float]
    detail: str = ""
    offending: Tuple[complex, ...] = ()


@dataclass(frozen=True)
class ProbeDiagnostics:
    containment: CheckResult
    injectivity: CheckResult
    derivative: CheckResult

    @property
    def passed(self) -> bool:
        return self.containment.passed and self.injectivity.passed and self.derivative.passed

    def failures(self) -> List[str]:
        names = ("containment", "injectivity", "derivative")
        return [n for n in names if not getattr(self, n).passed]


def _membership(region) -> Tuple[Callable, Optional[Callable]]:
    if hasattr(region, "contains"):
        return region.contains, getattr(region, "boundary_distance", None)
    return region, None


def winding_numbers(curve: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Winding number of the closed sampled curve about each point."""
    rel = curve[None, :] - points[:, None]
    steps = np.angle(np.roll(rel, -1, axis=1) / rel)
    return np.sum(steps, axis=1) / (2 * np.pi)


def check_probe(probe: ProbeDomain, region, samples: int = 64) -> ProbeDiagnostics:
    contains, distance = _membership(region)
    spine, rect = probe.spine, probe.rect
    grid = rect.grid(samples, max(8, samples // 4))
    boundary = rect.boundary(max(1024, 16 * samples))
    images = np.concatenate([spine(grid), spine(boundary)])

    # (i) P(R) ⊆ Omega，即 phi(D) ⊆ Omega
    inside = np.asarray(contains(images), dtype=bool)
    outside = images[~inside]
    margin = float(np.min(distance(images))) if distance is not None and outside.size == 0 else None
    containment = CheckResult(
        passed=outside.size == 0,
        margin=margin,
        detail=f"{outside.size} sample(s) outside" if outside.size else "",
        offending=tuple(complex(z) for z in outside[:5]),
    )

    # (ii) 辐角原理：P(dR) 绕每个内部探针点恰好一圈
    probes = rect.grid(8, 8, inset=0.25 * min(rect.halfheight, rect.margin))
    edge = spine(boundary)
    windings = winding_numbers(edge, spine(probes))
    rounded = np.rint(windings).astype(int)
    bad = probes[rounded != 1]
    gap = np.min(np.abs(edge[None, :] - spine(probes)[:, None]))
    injectivity = CheckResult(
        passed=bad.size == 0,
        margin=float(gap),
        detail=f"winding != 1 at {bad.size} probe(s)" if bad.size else "",
        offending=tuple(complex(spine(t)) for t in bad[:5]),
    )

    # (iii) min |P'| on the closed rectangle minus a Lipschitz slack
    nx, ny = max(64, samples), max(16, samples // 2)
    dense = rect.grid(nx, ny)
    step = math.hypot((rect.right - rect.left) / (nx - 1), 2 * rect.halfheight / (ny - 1))
    second = spine.dpoly.deriv()
    slack = float(np.max(np.abs(second(dense)))) * step / 2 if spine.degree > 1 else 0.0
    dmin = float(np.min(np.abs(spine.derivative(dense)))) - slack
    derivative = CheckResult(passed=dmin > 0, margin=dmin)

    diagnostics = ProbeDiagnostics(containment, injectivity, derivative)
    if not diagnostics.passed:
        logger.warning("Probe check failed sigma=%s failures=%s", rect.halfheight, diagnostics.failures())
    return diagnostics


def default_sigma(spine: Spine, region, mu: float = DEFAULT_MU) -> float:
    if region is None or not hasattr(region, "boundary_distance"):
        return MAX_SIGMA
    t = np.linspace(-mu, 1 + mu, 1024)
    pts = spine(t)
    if not np.all(region.contains(pts)):
        raise GeometryError("the spine leaves the target domain")
    return min(MAX_SIGMA, 0.5 * float(np.min(region.boundary_distance(pts))))


def build_probe(
    spine: Spine,
    region=None,
    mu: float = DEFAULT_MU,
    sigma: Optional[float] = None,
    samples: int = 64,
) -> Tuple[ProbeDomain, Optional[ProbeDiagnostics]]:
    """Halves sigma (at most SIGMA_HALVINGS times) until every probe check passes."""
    sigma = default_sigma(spine, region, mu) if sigma is None else float(sigma)
    diagnostics = None
    for halvings in range(SIGMA_HALVINGS + 1):
        probe = ProbeDomain.create(spine, Rectangle(mu, sigma))
        probe.sigma_halvings = halvings
        if region is None:
            return probe, None
        diagnostics = check_probe(probe, region, samples)
        if diagnostics.passed:
            logger.info("Probe built mu=%s sigma=%.6g halvings=%s", mu, sigma, halvings)
            return probe, diagnostics
        sigma *= 0.5
    raise GeometryError(
        f"probe checks still fail after {SIGMA_HALVINGS} halvings: {diagnostics.failures()}"
    )


def probe_geometry(probe: ProbeDomain, region) -> ProbeGeometry:
    """Area of P(R), longest spine-then-vertical path from a, and dist(P(dR), dOmega)."""
    spine, rect = probe.spine, probe.rect
    n = spine.degree + 2
    x, wts = leggauss(n)
    hx = 0.5 * (rect.right - rect.left)
    xs = rect.left + hx * (x + 1.0)
    ys = rect.halfheight * x
    tau = xs[None, :] + 1j * ys[:, None]
    area = float(hx * rect.halfheight * np.sum(wts[:, None] * wts[None, :] * np.abs(spine.derivative(tau)) ** 2))

    boundary = rect.boundary(4096)
    dmax = float(np.max(np.abs(spine.derivative(boundary))))
    # 最大模原理：|P'| 的最大值在边界上；加上采样间距的 Lipschitz 余量
    spacing = 2 * (rect.right - rect.left + 2 * rect.halfheight) / boundary.size
    if spine.degree > 1:
        dmax += float(np.max(np.abs(spine.dpoly.deriv()(boundary)))) * spacing
    along = max(spine.arclength(rect.left, spine.t_a), spine.arclength(spine.t_a, rect.right))
    length = along + rect.halfheight * dmax

    edge = spine(boundary)
    gap = float(np.max(np.abs(np.diff(np.append(edge, edge[0])))))
    d1 = float(np.min(region.boundary_distance(edge))) - gap
    if d1 <= 0:
        raise GeometryError(f"probe boundary is within {gap:.3g} of the domain boundary")
    return ProbeGeometry(area=area, max_path_length=length, dist_to_boundary=d1)
