"""
Numerical measurement for identities and tables: circle-integral derivatives, L2 norms of the
null-quadrature residual lambda, seeded test families and residual reports.

Every random draw goes through numpy's seeded Generator; members are drawn sequentially and
only their evaluation is spread over threads, so reports are reproducible for a given seed.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss

from app.config import (
    CIRCLE_NODES,
    HARMONIC_BOUNDARY_SAMPLES,
    HARMONIC_DEGREE,
    QUAD_ANGULAR,
    QUAD_RADIAL,
    THREADS,
)
from app.models import Provenance, RealSensingTable, SensingIdentity
from app.services.disc import DISC, disc_kernel, disc_kernel_deriv, disc_kernel_deriv_at, kernel_tail
from app.services.errors import DomainError, ParameterError, ResolutionError
from app.services.harmonic import table_partials
from app.services.regions import DiscRegion

logger = logging.getLogger(__name__)

UNIT_DISC = DiscRegion(0j, 1.0)

_REL_TOL = 1e-8
_ABS_TOL = 1e-12


# ---------------------------------------------------------------------------
# circle integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CircleSampler:
    center: complex
    radius: float
    nodes: int
    values: np.ndarray = field(repr=False)

    @classmethod
    def sample(
        cls,
        fn: Callable,
        center: complex,
        radius: float,
        nodes: int = CIRCLE_NODES,
        membership: Optional[Callable] = None,
    ) -> "CircleSampler":
        if radius <= 0:
            raise ParameterError(f"radius must be positive, got {radius}")
        if nodes < 64 or nodes & (nodes - 1):
            raise ResolutionError(f"nodes must be a power of two >= 64, got {nodes}")
        z = center + radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
        if membership is not None and not np.all(membership(z)):
            raise DomainError("sampling circle leaves the function's domain")
        return cls(center=complex(center), radius=float(radius), nodes=nodes, values=np.asarray(fn(z)))

    def fourier(self) -> np.ndarray:
        """c_k = (1/n) sum_j values_j e^(-ik theta_j)"""
        return np.fft.fft(self.values) / self.nodes


def _check_resolution(nodes: int, m: int) -> None:
    if nodes < 4 * m:
        raise ResolutionError(f"{nodes} nodes cannot resolve derivative order {m} (need {4 * m})")


def cauchy_deriv(h: Callable, a: complex, rho: float, m: int, nodes: int = CIRCLE_NODES) -> complex:
    """h^(m)(a) = m!/(2 pi) int h(a + rho e^{it}) e^{-imt} rho^-m dt by the trapezoid rule."""
    _check_resolution(nodes, m)
    sampler = CircleSampler.sample(h, a, rho, nodes)
    return complex(math.factorial(m) * sampler.fourier()[m] / rho**m)


def fourier_partials(
    u: Callable, a: complex, rho: float, maxm: int, nodes: int = CIRCLE_NODES
) -> Tuple[np.ndarray, np.ndarray]:
    """
    (px, py) with px[m] = d_x^m u(a), py[m] = d_x^(m-1) d_y u(a); py[0] is 0.
    u = Re(sum alpha_k (z-a)^k) with alpha_0 = c_0, alpha_k = 2 c_k / rho^k.
    """
    _check_resolution(nodes, maxm)
    sampler = CircleSampler.sample(lambda z: np.real(u(z)), a, rho, nodes)
    c = sampler.fourier()[: maxm + 1]
    k = np.arange(maxm + 1)
    alpha = 2.0 * c / rho**k
    alpha[0] = c[0].real
    fact = np.array([math.factorial(j) for j in k], dtype=float)
    return table_partials(fact * alpha)


# ---------------------------------------------------------------------------
# lambda = K_b - sum c_m K_a^m on the unit disc
# ---------------------------------------------------------------------------


def _check_disc_identity(identity: SensingIdentity) -> None:
    if identity.domain != DISC or identity.provenance not in (Provenance.TAYLOR, Provenance.GRAM):
        raise DomainError("lambda is only explicit for taylor or gram identities on the unit disc")


def _lambda_values(identity: SensingIdentity, z: np.ndarray) -> np.ndarray:
    """
    lambda(z) = K(z, b) - sum c_m K_a^m(z), c_m = conj(d_m), in closed form.

    At a = 0 the kernel minus its degree-N Taylor part is the closed tail E_N(z conj(b));
    each weight then contributes its drift from conj(b)^m / m! against K_0^m.
    """
    c = np.conj(identity.weights)
    if identity.a == 0:
        bc = np.conj(identity.b)
        N = c.size - 1
        out = kernel_tail(z * bc, N)
        for m in range(N + 1):
            drift = bc**m / math.factorial(m) - c[m]
            out = out + drift * disc_kernel_deriv(m, z)
        return out
    out = disc_kernel(z, identity.b)
    for m in range(c.size):
        out = out - c[m] * disc_kernel_deriv_at(m, z, identity.a)
    return out


def lambda_l2_quadrature(
    identity: SensingIdentity, radial: int = QUAD_RADIAL, angular: int = QUAD_ANGULAR
) -> float:
    """||lambda||_L2(D) with Gauss-Legendre in r and the trapezoid rule in theta."""
    _check_disc_identity(identity)
    x, w = leggauss(radial)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w * r
    theta = 2 * np.pi * np.arange(angular) / angular
    z = r[:, None] * np.exp(1j * theta)[None, :]
    values = _lambda_values(identity, z)
    total = float(np.sum(wr[:, None] * np.abs(values) ** 2)) * (2 * np.pi / angular)
    return math.sqrt(total)


def lambda_sup_diagnostic(identity: SensingIdentity, r: float = 0.9, n: int = 256) -> float:
    """max |lambda| on |z| <= r measured on a square grid plus the circle |z| = r."""
    _check_disc_identity(identity)
    if not 0 < r < 1:
        raise ParameterError(f"r must lie in (0, 1), got {r}")
    x = np.linspace(-r, r, n)
    grid = (x[None, :] + 1j * x[:, None]).reshape(-1)
    grid = grid[np.abs(grid) <= r]
    circle = r * np.exp(2j * np.pi * np.arange(4 * n) / (4 * n))
    z = np.concatenate([grid, circle])
    return float(np.max(np.abs(_lambda_values(identity, z))))


# ---------------------------------------------------------------------------
# test families
# ---------------------------------------------------------------------------


def _bernstein_inflation(degree: int, samples: int) -> float:
    """max over the circle <= sampled max * factor for trigonometric degree `degree`."""
    gap = degree * math.pi / samples
    if gap >= 1:
        raise ResolutionError(f"{samples} samples cannot bound a degree-{degree} polynomial")
    return 1.0 / (1.0 - gap)


@dataclass(frozen=True, eq=False)
class HarmonicSampler:
    """
    u = Re(sum alpha_k (z - center)^k); alpha_0 real, so v(center) = 0.
    sup_bound is a rigorous bound for |u| on the container; M is the sampled boundary sup.
    """

    center: complex
    alpha: np.ndarray = field(repr=False)
    M: float = 1.0
    seed: Optional[int] = None
    sup_bound: Optional[float] = None

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.alpha)

    def holomorphic(self, z):
        return self.poly(np.asarray(z, dtype=np.complex128) - self.center)

    def __call__(self, z):
        return np.real(self.holomorphic(z))

    def derivatives(self, a: complex, m: int) -> np.ndarray:
        """h^(k)(a) for k = 0..m."""
        poly = self.poly
        out = np.empty(m + 1, dtype=np.complex128)
        for k in range(m + 1):
            out[k] = poly(a - self.center)
            poly = poly.deriv()
        return out

    def partials(self, a: complex, maxm: int) -> Tuple[np.ndarray, np.ndarray]:
        return table_partials(self.derivatives(a, maxm))

    def gradient(self, z):
        """u_x + i u_y = conj(h'(z))"""
        return np.conj(self.poly.deriv()(np.asarray(z, dtype=np.complex128) - self.center))


def random_bounded_harmonic(
    seed,
    M: float,
    container: DiscRegion = UNIT_DISC,
    degree: int = HARMONIC_DEGREE,
    samples: int = HARMONIC_BOUNDARY_SAMPLES,
) -> HarmonicSampler:
    """
    Random harmonic polynomial of degree <= `degree` whose sampled boundary sup equals M.

    The continuous boundary sup lies in [M, M * inflation] by Bernstein's inequality; that
    upper value is kept as `sup_bound` and the maximum principle carries it to the container.
    """
    rng = np.random.default_rng(seed)
    R = container.radius
    alpha = np.empty(degree + 1, dtype=np.complex128)
    alpha[0] = rng.standard_normal()
    for k in range(1, degree + 1):
        alpha[k] = complex(rng.standard_normal(), rng.standard_normal()) / R**k
    label = seed if isinstance(seed, int) else None
    sampled = float(np.max(np.abs(HarmonicSampler(container.center, alpha)(container.boundary(samples)))))
    if sampled == 0:
        return HarmonicSampler(container.center, np.zeros_like(alpha), M, label, 0.0)
    inflation = _bernstein_inflation(degree, samples) if degree else 1.0
    return HarmonicSampler(container.center, alpha * (M / sampled), M, label, M * inflation)


@dataclass(frozen=True, eq=False)
class FamilyMember:
    """Holomorphic member: value, derivatives at a, L2 norm and sup bound over the container."""

    value: Callable
    derivative_fn: Callable[[complex, int], np.ndarray]
    l2_norm: float
    sup_bound: float

    def derivatives(self, a: complex, m: int) -> np.ndarray:
        return self.derivative_fn(a, m)


def _polynomial_member(rng: np.random.Generator, degree: int, container: DiscRegion) -> FamilyMember:
    deg = int(rng.integers(0, degree + 1))
    coeffs = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
    n = np.arange(deg + 1)
    R = container.radius
    norm = math.sqrt(float(np.sum(np.abs(coeffs) ** 2 * math.pi * R ** (2 * n + 2) / (n + 1))))
    poly = Polynomial(coeffs / norm)
    c = container.center
    sampled = float(np.max(np.abs(poly(container.boundary(HARMONIC_BOUNDARY_SAMPLES) - c))))
    sup = sampled * (_bernstein_inflation(deg, HARMONIC_BOUNDARY_SAMPLES) if deg else 1.0)

    def derivatives(a: complex, m: int) -> np.ndarray:
        p = poly
        out = np.empty(m + 1, dtype=np.complex128)
        for k in range(m + 1):
            out[k] = p(a - c)
            p = p.deriv()
        return out

    return FamilyMember(value=lambda z: poly(np.asarray(z) - c), derivative_fn=derivatives, l2_norm=1.0, sup_bound=sup)


def _exterior_member(rng: np.random.Generator, container: DiscRegion) -> FamilyMember:
    """h(z) = 1/(w - z) with w outside the closed container disc."""
    R, c = container.radius, container.center
    rel = (1.0 + rng.uniform(0.05, 1.0)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    w = c + R * rel
    norm = math.sqrt(-math.pi * math.log1p(-1.0 / abs(rel) ** 2))
    sup = 1.0 / (R * (abs(rel) - 1.0))

    def derivatives(a: complex, m: int) -> np.ndarray:
        k = np.arange(m + 1)
        fact = np.array([float(math.factorial(j)) for j in k])
        return fact / (w - a) ** (k + 1)

    return FamilyMember(value=lambda z: 1.0 / (w - np.asarray(z)), derivative_fn=derivatives, l2_norm=norm, sup_bound=sup)


FAMILIES = ("polynomial", "boundary-polynomial", "exterior", "harmonic")


def draw_family(
    family: str,
    samples: int,
    seed: int,
    *,
    degree: int = 10,
    M: float = 1.0,
    container: DiscRegion = UNIT_DISC,
) -> List:
    if family not in FAMILIES:
        raise ParameterError(f"unknown test family: {family}")
    if family == "harmonic":
        children = np.random.SeedSequence(seed).spawn(samples)
        return [random_bounded_harmonic(child, M, container, min(degree, HARMONIC_DEGREE)) for child in children]
    rng = np.random.default_rng(seed)
    if family == "exterior":
        return [_exterior_member(rng, container) for _ in range(samples)]
    return [_polynomial_member(rng, degree, container) for _ in range(samples)]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    family: str
    samples: int
    seed: int
    max_residual: float
    mean_residual: float
    max_certificate: float
    worst_ratio: float
    violations: int
    tolerance: float = 0.0


def _violates(residual: float, certificate: float) -> bool:
    return residual > certificate * (1.0 + _REL_TOL) + _ABS_TOL


def _identity_residual(identity: SensingIdentity, member: FamilyMember, family: str) -> Tuple[float, float]:
    derivs = member.derivatives(identity.a, identity.order)
    residual = abs(complex(member.value(identity.b)) - identity.estimate(derivs))
    if identity.sup_certificate is not None:
        return residual, identity.sup_certificate.bound(member.sup_bound)
    if family == "boundary-polynomial":
        raise DomainError("boundary-polynomial family needs an identity with a sup certificate")
    return residual, identity.l2_bound * member.l2_norm


def _table_residual(table: RealSensingTable, member: HarmonicSampler) -> Tuple[float, float]:
    px, py = member.partials(table.a, table.order)
    residual = abs(float(member(table.b)) - table.estimate(px, py))
    sup = member.M if member.sup_bound is None else member.sup_bound
    return residual, table.certificate.bound_per_M * sup


def _parallel(fn: Callable, items: Sequence) -> List:
    workers = max(1, min(THREADS, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def residual_report(
    target: Union[SensingIdentity, RealSensingTable],
    family: str,
    samples: int = 200,
    seed: int = 7,
    *,
    degree: Optional[int] = None,
    M: float = 1.0,
    container: DiscRegion = UNIT_DISC,
) -> ResidualReport:
    if isinstance(target, RealSensingTable):
        if family != "harmonic":
            raise DomainError("real tables are checked against the harmonic family")
        if target.certificate is None:
            raise DomainError("table has no certificate")
        members = draw_family("harmonic", samples, seed, degree=HARMONIC_DEGREE if degree is None else degree, M=M, container=container)
        evaluate = lambda member: _table_residual(target, member)  # noqa: E731
        tolerance = 0.0
    else:
        if family == "harmonic":
            raise DomainError("holomorphic identities are checked against holomorphic families")
        if target.l2_bound is None and target.sup_certificate is None:
            raise DomainError("identity carries no certificate")
        default_degree = target.order if target.sup_certificate is None else 10
        members = draw_family(family, samples, seed, degree=default_degree if degree is None else degree, container=container)
        evaluate = lambda member: _identity_residual(target, member, family)  # noqa: E731
        tolerance = target.tolerance

    logger.info("Residual report start family=%s samples=%s seed=%s", family, samples, seed)
    pairs = np.array(_parallel(evaluate, members), dtype=float).reshape(-1, 2)
    residuals, certificates = pairs[:, 0], pairs[:, 1]
    violations = sum(_violates(r, c) for r, c in zip(residuals, certificates))
    # 证书为 0 的样本只计入 violations，不参与比值
    positive = certificates > 0
    ratios = residuals[positive] / certificates[positive]
    report = ResidualReport(
        family=family,
        samples=samples,
        seed=seed,
        max_residual=float(np.max(residuals)) if samples else 0.0,
        mean_residual=float(np.mean(residuals)) if samples else 0.0,
        max_certificate=float(np.max(certificates)) if samples else 0.0,
        worst_ratio=float(np.max(ratios)) if ratios.size else 0.0,
        violations=int(violations),
        tolerance=float(tolerance),
    )
    log = logger.warning if report.violations else logger.info
    log(
        "Residual report done family=%s max=%.3g certificate=%.3g violations=%s",
        family,
        report.max_residual,
        report.max_certificate,
        report.violations,
    )
    return report


@dataclass(frozen=True)
class CompareRow:
    index: int
    runge_residual: float
    runge_certificate: float
    bergman_residual: float
    bergman_certificate: float


@dataclass(frozen=True)
class CompareReport:
    a: complex
    b: complex
    seed: int
    runge_order: int
    bergman_order: int
    rows: Tuple[CompareRow, ...]
    runge_violations: int
    bergman_violations: int


def compare_report(
    runge: SensingIdentity,
    bergman: SensingIdentity,
    samples: int = 100,
    seed: int = 7,
    *,
    degree: int = 10,
    container: DiscRegion = UNIT_DISC,
) -> CompareReport:
    """Runge quadrature identity vs an L2 identity on the same (a, b) and the same polynomials."""
    if runge.sup_certificate is None or bergman.l2_bound is None:
        raise DomainError("compare needs a runge identity and an identity with an L2 bound")
    if abs(runge.a - bergman.a) > 1e-12 or abs(runge.b - bergman.b) > 1e-12:
        raise DomainError("identities are anchored at different points")
    members = draw_family("polynomial", samples, seed, degree=degree, container=container)

    def row(item) -> CompareRow:
        i, member = item
        r1, c1 = _identity_residual(runge, member, "boundary-polynomial")
        r2, c2 = _identity_residual(bergman, member, "polynomial")
        return CompareRow(i, r1, c1, r2, c2)

    rows = tuple(_parallel(row, list(enumerate(members))))
    report = CompareReport(
        a=runge.a,
        b=runge.b,
        seed=seed,
        runge_order=runge.order,
        bergman_order=bergman.order,
        rows=rows,
        runge_violations=sum(_violates(r.runge_residual, r.runge_certificate) for r in rows),
        bergman_violations=sum(_violates(r.bergman_residual, r.bergman_certificate) for r in rows),
    )
    logger.info(
        "Compare report rows=%s runge_violations=%s bergman_violations=%s",
        len(rows),
        report.runge_violations,
        report.bergman_violations,
    )
    return report
