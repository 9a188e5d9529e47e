import math

import numpy as np
import pytest

from app.models import ProbeGeometry, Provenance, SensingIdentity, SupCertificate
from app.services.disc import taylor_identity
from app.services.errors import DomainError, GeometryError
from app.services.harmonic import (
    conjugate_norm_bound,
    disc_contour_geometry,
    gradient_constant,
    harmonic_certificate,
    holomorphic_sup_bound,
    table_partials,
    to_real_table,
)
from app.services.regions import DiscRegion
from app.services.runge import Polyline, push_pole, runge_weights
from app.services.verify import random_bounded_harmonic, residual_report

GEOMETRY = ProbeGeometry(area=math.pi / 4, max_path_length=0.6, dist_to_boundary=0.4)


def make_identity(l2=1e-4):
    return SensingIdentity(
        domain="probe",
        a=0j,
        b=0.5,
        weights=np.array([0.5, 0.2 - 0.1j]),
        l2_bound=l2,
        provenance=Provenance.TRANSPORTED,
    )


def test_to_real_table_layout():
    table = to_real_table(make_identity())
    assert [(e.dx, e.dy, e.coeff) for e in table.entries] == [(0, 0, 0.5), (1, 0, 0.2), (0, 1, -0.1)]
    assert table.order == 1
    assert table.certificate is None


def test_harmonic_certificate_values():
    identity = make_identity()
    table = harmonic_certificate(identity, to_real_table(identity), GEOMETRY, 2.0)
    cert = table.certificate
    assert cert.conj_const == pytest.approx(4 * 0.6 / (math.pi * 0.4))
    assert cert.bound_per_M == pytest.approx(2.57879567595e-4, rel=1e-10)
    assert cert.recompute() == pytest.approx(cert.bound_per_M)
    assert cert.bound == pytest.approx(2 * cert.bound_per_M)
    assert conjugate_norm_bound(GEOMETRY, 1.0) * 1e-4 == pytest.approx(cert.bound_per_M)


def test_harmonic_certificate_errors():
    identity = make_identity()
    table = to_real_table(identity)
    identity.l2_bound = None
    with pytest.raises(DomainError):
        harmonic_certificate(identity, table, GEOMETRY, 1.0)
    other = to_real_table(taylor_identity(0.3, 2))
    with pytest.raises(DomainError):
        harmonic_certificate(make_identity(), other, GEOMETRY, 1.0)
    with pytest.raises(GeometryError):
        conjugate_norm_bound(ProbeGeometry(1.0, 1.0, 0.0), 1.0)


def test_holomorphic_sup_bound():
    assert holomorphic_sup_bound(make_identity(), math.pi / 4, 2.0) == pytest.approx(1e-4 * 2 * math.sqrt(math.pi) / 2)


def test_table_partials_signs():
    px, py = table_partials(np.array([1 + 2j, 3 - 4j, -1j]))
    np.testing.assert_array_equal(px, [1, 3, 0])
    np.testing.assert_array_equal(py, [0, 4, 1])


def test_table_estimate_is_real_part_of_identity():
    identity = taylor_identity(0.4 - 0.2j, 12)
    table = to_real_table(identity)
    for seed in range(5):
        sampler = random_bounded_harmonic(seed, 1.0)
        derivs = sampler.derivatives(identity.a, identity.order)
        # 共轭函数取 v(a) = 0
        normalized = derivs.copy()
        normalized[0] = derivs[0].real
        expected = identity.estimate(normalized).real
        assert table.estimate(*table_partials(derivs)) == pytest.approx(expected, abs=1e-12)


def test_disc_table_certificate_holds_for_bounded_harmonics():
    identity = taylor_identity(0.5, 20)
    # u 在半径 1.5 的圆盘上有界；从 0 出发的径向路径长度 <= 1，离边界 0.5
    geometry = ProbeGeometry(area=math.pi, max_path_length=1.0, dist_to_boundary=0.5)
    table = harmonic_certificate(identity, to_real_table(identity), geometry, 1.0)
    report = residual_report(table, "harmonic", 200, seed=3, container=DiscRegion(0j, 1.5))
    assert report.violations == 0
    assert report.max_residual <= table.certificate.bound_per_M


def test_gradient_constant():
    assert gradient_constant(1.0, 0.5) == pytest.approx(8 / math.pi)
    with pytest.raises(GeometryError):
        gradient_constant(1.0, 0.0)



def make_runge_identity(eps=1e-3):
    return SensingIdentity(
        domain="runge",
        a=0j,
        b=0.5,
        weights=np.array([0.5, 0.2 - 0.1j]),
        l2_bound=None,
        provenance=Provenance.RUNGE,
        sup_certificate=SupCertificate(eps, 2 * math.pi),
    )


def test_disc_contour_geometry():
    geometry = disc_contour_geometry(0.2j, DiscRegion(0j, 1.0), DiscRegion(0.1 + 0j, 1.5))
    assert geometry.max_path_length == pytest.approx(1.2)
    assert geometry.dist_to_boundary == pytest.approx(0.4)
    assert geometry.area == pytest.approx(math.pi)
    with pytest.raises(GeometryError):
        disc_contour_geometry(1.2 + 0j, DiscRegion(0j, 1.0), DiscRegion(0j, 2.0))
    with pytest.raises(GeometryError):
        disc_contour_geometry(0j, DiscRegion(0j, 1.0), DiscRegion(0.5 + 0j, 1.5))


def test_sup_form_certificate_for_runge_identity():
    identity = make_runge_identity()
    geometry = disc_contour_geometry(0j, DiscRegion(0j, 1.0), DiscRegion(0j, 1.5))
    cert = harmonic_certificate(identity, to_real_table(identity), geometry, 2.0).certificate
    assert cert.form == "sup"
    assert cert.l2_lambda is None
    assert cert.sup_factor == pytest.approx(1e-3)
    assert cert.conj_const == pytest.approx(8 / math.pi)
    # |h| <= M + L g on the contour with g = 4M / (pi d1)
    assert cert.bound_per_M == pytest.approx(1e-3 * (1 + 8 / math.pi))
    assert cert.recompute() == pytest.approx(cert.bound_per_M)
    assert cert.bound == pytest.approx(2 * cert.bound_per_M)


def test_runge_table_certificate_holds_for_bounded_harmonics():
    R = push_pole(Polyline(np.array([0.4 + 0j, -0.4 + 0j])), 0.25, 1e-3)
    identity = runge_weights(R, 2 * math.pi, boundary=np.exp(2j * np.pi * np.arange(1024) / 1024))
    container = DiscRegion(0j, 1.5)
    geometry = disc_contour_geometry(identity.a, DiscRegion(0j, 1.0), container)
    table = harmonic_certificate(identity, to_real_table(identity), geometry, 1.0)
    report = residual_report(table, "harmonic", 200, seed=5, container=container)
    assert report.violations == 0
    assert report.worst_ratio <= 1.0
