import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from app.services.conformal import Rectangle
from app.services.disc import taylor_identity
from app.services.errors import GeometryError, SpineFitError, SpineInfeasibleError
from app.services.probe import (
    IdentityParameterMap,
    ProbeDomain,
    Spine,
    build_probe,
    check_probe,
    default_sigma,
    fit_spine,
    probe_geometry,
    probe_jet,
    winding_numbers,
)
from app.services.regions import DiscRegion, rectangle_region
from app.services.series import series_eval_derive
from app.services.transport import moebius_series, solve_B, transport_identity

ARC = [-1.5 + 0j, -1 + 0j, 0.2j, 1 + 0j, 1.5 + 0j]


def make_spine(coeffs, t_a, t_b):
    poly = Polynomial(np.asarray(coeffs, dtype=np.complex128))
    return Spine(
        poly=poly,
        t_a=t_a,
        t_b=t_b,
        a=complex(poly(t_a)),
        b=complex(poly(t_b)),
        waypoints=poly(np.array([0.0, t_a, t_b, 1.0])),
        params=np.array([0.0, t_a, t_b, 1.0]),
    )


def test_fit_spine_interpolates_a_and_b():
    spine = fit_spine(ARC, -1, 1, 3)
    assert spine.degree == 3
    assert abs(spine(spine.t_a) - (-1)) < 1e-12
    assert abs(spine(spine.t_b) - 1) < 1e-12
    assert 0 < spine.t_a < spine.t_b < 1


def test_fit_spine_rejections():
    with pytest.raises(SpineInfeasibleError):
        fit_spine(ARC, -0.5, 1, 3)
    with pytest.raises(SpineInfeasibleError):
        fit_spine(ARC, -1.5, 1, 3)
    with pytest.raises(SpineInfeasibleError):
        fit_spine(ARC, -1, 1, 0)
    with pytest.raises(SpineFitError):
        fit_spine([-2, -1, -1, 1, 2], -1, 1, 3)
    with pytest.raises(SpineFitError):
        fit_spine(ARC, -1, 1, 5)


def test_winding_numbers_of_circle():
    circle = np.exp(2j * np.pi * np.arange(256) / 256)
    np.testing.assert_allclose(winding_numbers(circle, np.array([0.0, 0.3j, 2.0])), [1, 1, 0], atol=1e-9)


def test_hairpin_spine_fails_injectivity():
    # P(t) = 4 (t - 1/2)^2 + 0.3 i (t - 1/2)，P' 在 t = 1/2 - 0.0375 i 处为零
    spine = make_spine([1.0 - 0.15j, -4.0 + 0.3j, 4.0], 0.25, 0.75)
    probe = ProbeDomain.create(spine, Rectangle(0.1, 0.2), IdentityParameterMap())
    diagnostics = check_probe(probe, DiscRegion(0j, 10.0))
    assert diagnostics.containment.passed
    assert not diagnostics.injectivity.passed
    assert not diagnostics.derivative.passed
    assert "injectivity" in diagnostics.failures()


def test_linear_spine_jet_is_moebius_series():
    spine = make_spine([0.0, 1.0], 0.25, 0.6)
    probe = ProbeDomain.create(spine, Rectangle(0.1, 0.1), IdentityParameterMap())
    jet = probe_jet(probe, 10)
    np.testing.assert_allclose(jet.coeffs, moebius_series(0.25, 10).coeffs, atol=1e-12)
    assert probe.jet is jet
    assert probe.jet_tolerance < 1e-12

    B, fprime_b = solve_B(probe, 0.6, guess=probe.disc_point(spine.t_b))
    assert B == pytest.approx(0.35 / 0.85, abs=1e-12)
    assert probe.disc_point(spine.t_b) == pytest.approx(B, abs=1e-12)


def test_probe_geometry_of_linear_spine():
    spine = make_spine([0.0, 1.0], 0.25, 0.6)
    probe = ProbeDomain.create(spine, Rectangle(0.1, 0.1), IdentityParameterMap())
    geometry = probe_geometry(probe, DiscRegion(0.5 + 0j, 2.0))
    assert geometry.area == pytest.approx(0.24, rel=1e-12)
    assert geometry.max_path_length == pytest.approx(0.95, rel=1e-10)
    assert geometry.dist_to_boundary == pytest.approx(2 - abs(0.6 + 0.1j) - 2.8 / 4096, abs=1e-9)

    with pytest.raises(GeometryError):
        probe_geometry(probe, DiscRegion(0.5 + 0j, 0.6))


def test_default_sigma_rejects_spine_outside_domain():
    spine = fit_spine(ARC, -1, 1, 3)
    with pytest.raises(GeometryError):
        default_sigma(spine, DiscRegion(0j, 1.2))


def test_build_probe_in_rectangle():
    region = rectangle_region(-2, 2, -1, 1)
    spine = fit_spine(ARC, -1, 1, 3)
    probe, diagnostics = build_probe(spine, region)
    assert diagnostics.passed
    assert diagnostics.containment.margin > 0
    assert probe.rect.halfheight <= 0.2
    value, derivative = probe(0.0)
    assert value == pytest.approx(-1, abs=1e-10)
    assert abs(derivative) > 0

    geometry = probe_geometry(probe, region)
    assert geometry.dist_to_boundary > 0
    assert geometry.area > 0
    assert math.isfinite(geometry.max_path_length)


def test_build_probe_without_region_skips_checks():
    spine = fit_spine(ARC, -1, 1, 3)
    probe, diagnostics = build_probe(spine, None, sigma=0.05)
    assert diagnostics is None
    assert probe.rect.halfheight == 0.05


def test_jet_agrees_with_probe_map_inside_the_disc():
    probe, _ = build_probe(fit_spine(ARC, -1, 1, 3), rectangle_region(-2, 2, -1, 1))
    jet = probe_jet(probe, 24)
    w = 0.3 * np.exp(2j * np.pi * np.arange(32) / 32)
    direct, _ = probe(w)
    assert np.max(np.abs(series_eval_derive(jet, w, 0) - direct)) <= 1e-9


def probe_norm(probe, h, nodes=32):
    # ||h||^2 = ∫_R |h(P(tau))|^2 |P'(tau)|^2 dA，被积函数是多项式，Gauss-Legendre 精确
    x, wts = np.polynomial.legendre.leggauss(nodes)
    rect = probe.rect
    half = 0.5 * (rect.right - rect.left)
    tau = (rect.left + half * (x[None, :] + 1.0)) + 1j * rect.halfheight * x[:, None]
    weights = wts[None, :] * wts[:, None] * half * rect.halfheight
    integrand = np.abs(h(probe.spine(tau))) ** 2 * np.abs(probe.spine.derivative(tau)) ** 2
    return math.sqrt(float(np.sum(weights * integrand)))


def test_probe_norm_of_constant_is_root_area():
    spine = make_spine([0.0, 1.0], 0.25, 0.6)
    probe = ProbeDomain.create(spine, Rectangle(0.1, 0.1), IdentityParameterMap())
    assert probe_norm(probe, Polynomial([1.0])) == pytest.approx(math.sqrt(1.2 * 0.2), rel=1e-12)


def test_transported_certificate_holds_on_the_probe():
    spine = fit_spine(ARC, -1, 1, 3)
    probe, diagnostics = build_probe(spine, rectangle_region(-2, 2, -1, 1))
    assert diagnostics.passed
    N = 20
    B, fprime_b = solve_B(probe, spine.b, guess=probe.disc_point(spine.t_b))
    identity = transport_identity(
        taylor_identity(B, N), probe_jet(probe, N + 1), fprime_b, b=spine.b, tolerance=probe.jet_tolerance
    )
    assert identity.a == pytest.approx(-1, abs=1e-12)

    rng = np.random.default_rng(8)
    for _ in range(200):
        h = Polynomial(rng.standard_normal(6) + 1j * rng.standard_normal(6))
        derivs, q = [], h
        for _ in range(N + 1):
            derivs.append(q(identity.a))
            q = q.deriv()
        residual = abs(h(identity.b) - identity.estimate(derivs))
        assert residual <= identity.l2_bound * probe_norm(probe, h) * (1 + 1e-6) + 1e-9
