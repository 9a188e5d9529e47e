"""
调和函数版本：把全纯恒等式的复权重拆成实系数表，并给出按 sup|u| <= M 缩放的误差证书。

h = u + iv（v(a) = 0）时 h^(m)(a) = d_x^m u - i d_x^(m-1) d_y u，
所以 Re(sum d_m h^(m)(a)) 只依赖 u 的偏导。
"""

import logging
import math

import numpy as np

from app.models import (
    HarmonicCertificate,
    ProbeGeometry,
    RealSensingTable,
    SensingIdentity,
    TableEntry,
)
from app.services.errors import DomainError, GeometryError, ParameterError
from app.services.regions import DiscRegion

logger = logging.getLogger(__name__)


def to_real_table(identity: SensingIdentity) -> RealSensingTable:
    d = identity.weights
    entries = [TableEntry(0, 0, float(d[0].real))]
    for m in range(1, d.size):
        entries.append(TableEntry(m, 0, float(d[m].real)))
        entries.append(TableEntry(m - 1, 1, float(d[m].imag)))
    return RealSensingTable(a=identity.a, b=identity.b, entries=tuple(entries))


def gradient_constant(M: float, distance: float) -> float:
    """Sharp bound on |grad u| at distance `distance` from the boundary when |u| <= M."""
    if distance <= 0:
        raise GeometryError(f"distance to the boundary must be positive, got {distance}")
    return 4.0 * M / (math.pi * distance)


def conjugate_norm_bound(geometry: ProbeGeometry, M: float) -> float:
    """L2 bound for h = u + iv over the probe: |v| <= L * grad bound along paths from a."""
    if geometry.dist_to_boundary <= 0:
        raise GeometryError(f"dist_to_boundary must be positive, got {geometry.dist_to_boundary}")
    if geometry.max_path_length < 0 or geometry.area < 0:
        raise GeometryError("probe geometry has a negative area or path length")
    if M < 0:
        raise ParameterError(f"M must be nonnegative, got {M}")
    g = gradient_constant(M, geometry.dist_to_boundary)
    return math.sqrt(geometry.area) * (M + geometry.max_path_length * g)


def _conj_const(geometry: ProbeGeometry) -> float:
    if geometry.dist_to_boundary <= 0:
        raise GeometryError(f"dist_to_boundary must be positive, got {geometry.dist_to_boundary}")
    return 4.0 * geometry.max_path_length / (math.pi * geometry.dist_to_boundary)


def harmonic_certificate(
    identity: SensingIdentity, table: RealSensingTable, geometry: ProbeGeometry, M: float
) -> RealSensingTable:
    """
    L2 identities: bound_per_M = l2_bound * sqrt(area) * (1 + conj_const).
    Runge identities: |h| <= M + L g on the contour, so bound_per_M = sup factor * (1 + conj_const).
    """
    if (identity.a, identity.b) != (table.a, table.b):
        raise DomainError("table and identity are anchored at different points")
    if identity.l2_bound is not None:
        conj_const = _conj_const(geometry)
        # conjugate_norm_bound(geometry, 1) = sqrt(area) * (1 + conj_const)
        per_M = identity.l2_bound * conjugate_norm_bound(geometry, 1.0)
        certificate = HarmonicCertificate(
            l2_lambda=identity.l2_bound,
            area=geometry.area,
            conj_const=conj_const,
            bound_per_M=per_M,
            M=float(M),
        )
    elif identity.sup_certificate is not None:
        if M < 0:
            raise ParameterError(f"M must be nonnegative, got {M}")
        conj_const = _conj_const(geometry)
        factor = identity.sup_certificate.factor
        per_M = factor * (1.0 + conj_const)
        certificate = HarmonicCertificate(
            l2_lambda=None,
            area=geometry.area,
            conj_const=conj_const,
            bound_per_M=per_M,
            M=float(M),
            form="sup",
            sup_factor=factor,
        )
    else:
        raise DomainError("a harmonic certificate needs an identity with an L2 bound or a sup certificate")
    logger.info(
        "Harmonic certificate form=%s area=%.6g L=%.6g d1=%.6g bound_per_M=%.6g",
        certificate.form,
        geometry.area,
        geometry.max_path_length,
        geometry.dist_to_boundary,
        per_M,
    )
    return RealSensingTable(a=table.a, b=table.b, entries=table.entries, certificate=certificate)


def disc_contour_geometry(a: complex, contour: DiscRegion, container: DiscRegion) -> ProbeGeometry:
    """
    Geometry for a runge table: straight paths from a to the contour circle, |u| <= M on the
    container. L = |a - c| + r, d1 = R - |c - C| - r.
    """
    offset = abs(complex(a) - contour.center)
    if offset >= contour.radius:
        raise GeometryError(f"a={a} is not inside the contour disc")
    d1 = container.radius - abs(contour.center - container.center) - contour.radius
    if d1 <= 0:
        raise GeometryError("contour disc is not compactly inside the container")
    return ProbeGeometry(
        area=math.pi * contour.radius**2,
        max_path_length=offset + contour.radius,
        dist_to_boundary=d1,
    )


def holomorphic_sup_bound(identity: SensingIdentity, area: float, M: float) -> float:
    """|h(b) - estimate| <= l2_bound * M * sqrt(area) when |h| <= M on the domain."""
    if identity.l2_bound is None:
        raise DomainError("identity carries no L2 bound")
    return identity.l2_bound * M * math.sqrt(area)


def table_partials(h_derivatives: np.ndarray) -> tuple:
    """(px, py) from holomorphic derivatives h^(m)(a): px[m] = Re, py[m] = -Im (py[0] unused)."""
    h = np.asarray(h_derivatives, dtype=np.complex128)
    py = -h.imag
    py[0] = 0.0
    return h.real.copy(), py
