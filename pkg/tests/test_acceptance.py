"""
End-to-end properties at desk scale; each case finishes in seconds.
"""

import json
import math

import numpy as np
import pytest

from app.main import main
from app.services.disc import (
    choose_order,
    error_tail_l2,
    error_tail_sup,
    optimal_weights_gram,
    taylor_identity,
    taylor_weights,
)
from app.services.errors import BudgetExceededError
from app.services.harmonic import gradient_constant
from app.services.regions import DiscRegion
from app.services.runge import Polyline, exterior_sup_error, push_pole, runge_weights
from app.services.serializers import load_artifact, load_table
from app.services.transport import moebius_identity
from app.services.verify import draw_family, lambda_l2_quadrature, residual_report

WAYPOINTS = "-1.5,0;-1,0;0,0.2;1,0;1.5,0"


def test_disc_identity_is_exact_on_low_degree_polynomials():
    identity = taylor_identity(0.3, 10)
    rng = np.random.default_rng(1)
    for _ in range(100):
        deg = int(rng.integers(0, 11))
        coeffs = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
        derivs = [math.factorial(m) * coeffs[m] if m <= deg else 0 for m in range(11)]
        assert abs(np.polynomial.polynomial.polyval(0.3, coeffs) - identity.estimate(derivs)) <= 1e-10


def test_sup_order_selection():
    assert choose_order(0.5, 1e-4, "sup", 1.2) == 26
    assert error_tail_sup(0.5, 25, 1.2) > 1e-4


def test_disc_certificate_on_normalized_polynomials():
    identity = taylor_identity(0.5, choose_order(0.5, 1e-4))
    report = residual_report(identity, "polynomial", 1000, seed=7, degree=60)
    assert report.violations == 0


@pytest.mark.parametrize("N", [1, 5, 15, 26])
@pytest.mark.parametrize("b", [0.3, 0.5, 0.8])
def test_closed_form_matches_quadrature(N, b):
    assert lambda_l2_quadrature(taylor_identity(b, N)) == pytest.approx(error_tail_l2(b, N), rel=1e-8, abs=1e-15)


def test_transport_consistency():
    identity = moebius_identity(0.35 - 0.2j, -0.25 + 0.3j, 18)
    assert residual_report(identity, "polynomial", 200, seed=7).violations == 0
    gram = optimal_weights_gram(identity.a, identity.b, 18)
    assert gram.l2_bound <= identity.l2_bound * (1 + 1e-6)


def test_gram_oracle_degenerates_to_taylor():
    for N in range(21):
        gram = optimal_weights_gram(0, 0.45 + 0.2j, N)
        np.testing.assert_allclose(gram.weights, taylor_weights(0.45 + 0.2j, N), rtol=0, atol=1e-12)


def test_runge_end_to_end():
    # delta = 0.25：见 DESIGN.md，delta = 0.1 在 eps = 1e-3 时次数预算不可行
    R = push_pole(Polyline(np.array([0.4 + 0j, -0.4 + 0j])), 0.25, 1e-3)
    assert exterior_sup_error(R).max_error <= 1e-3
    circle = np.exp(2j * np.pi * np.arange(1024) / 1024)
    identity = runge_weights(R, 2 * math.pi, boundary=circle)
    report = residual_report(identity, "boundary-polynomial", 100, seed=7)
    assert report.violations == 0
    assert report.worst_ratio <= 1.0


def test_runge_small_delta_exceeds_degree_budget():
    # 默认预算下 delta = 0.1 的截断次数超出上限
    with pytest.raises(BudgetExceededError):
        push_pole(Polyline(np.array([0.4 + 0j, -0.4 + 0j])), 0.1, 1e-3)


def test_probe_end_to_end(capsys, tmp_path):
    status = main(
        [
            "sense-probe",
            f"--waypoints={WAYPOINTS}",
            "--a=-1,0",
            "--b=1,0",
            "--region",
            "rect:-2,2,-1,1",
            "--degree",
            "3",
            "-o",
            str(tmp_path),
        ]
    )
    capsys.readouterr()
    assert status == 0
    probe = load_artifact(tmp_path / "probe.json")
    assert all(check.passed for check in probe.checks.values())
    assert set(probe.checks) == {"containment", "injectivity", "derivative"}

    table = load_table(tmp_path / "table.json")
    assert table.certificate is not None
    report = residual_report(table, "harmonic", 500, seed=7, M=1.0, container=DiscRegion(0j, 3.0))
    assert report.violations == 0
    assert report.max_residual <= report.max_certificate


def test_gradient_bound_audit():
    rng = np.random.default_rng(9)
    radius = 0.95 * np.sqrt(rng.uniform(size=50))
    probes = radius * np.exp(2j * np.pi * rng.uniform(size=50))
    limits = np.array([gradient_constant(1.0, 1.0 - abs(z)) for z in probes])
    violations = 0
    for sampler in draw_family("harmonic", 1000, 7, M=1.0):
        violations += int(np.count_nonzero(np.abs(sampler.gradient(probes)) > limits * (1 + 1e-12)))
    assert violations == 0


def test_verify_is_byte_identical(capsys, tmp_path):
    identity = tmp_path / "identity.json"
    assert main(["sense-disc", "--b", "0.4,0.3", "-o", str(identity)]) == 0
    capsys.readouterr()

    outputs = []
    for _ in range(2):
        assert main(["verify", str(identity), "--seed", "7", "--samples", "100"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["seed"] == 7
