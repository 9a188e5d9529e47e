import json
import math
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from app.models import Provenance, SensingIdentity
from app.schemas import ApproximantArtifact, IdentityArtifact, JobConfig, TableArtifact
from app.services.disc import DISC, taylor_identity
from app.services.errors import DomainError
from app.services.harmonic import to_real_table
from app.services.runge import Polyline, push_pole
from app.services.serializers import (
    approximant_from_schema,
    approximant_to_schema,
    dump_artifact,
    identity_from_schema,
    identity_to_schema,
    load_artifact,
    load_identity,
    load_table,
    table_from_schema,
    table_to_schema,
)

FIXTURES = Path(__file__).resolve().parent.parent / "docs" / "fixtures"


@pytest.mark.parametrize("name", ["identity", "table", "probe", "approximant", "report", "compare"])
def test_fixtures_load(name):
    data = load_artifact(FIXTURES / f"{name}.json")
    assert data.kind == name
    assert data.schema_version == 1


def test_identity_fixture_round_trip():
    data = load_artifact(FIXTURES / "identity.json")
    identity = identity_from_schema(data)
    assert identity.weights[1] == 0.2 - 0.1j
    assert identity_to_schema(identity, data.config).model_dump() == data.model_dump()


def test_table_fixture_round_trip():
    data = load_artifact(FIXTURES / "table.json")
    table = table_from_schema(data)
    assert table.certificate.bound_per_M == pytest.approx(table.certificate.recompute())
    assert table_to_schema(table, data.config).model_dump() == data.model_dump()


def test_load_helpers_check_kind():
    assert load_table(FIXTURES / "table.json").order == 1
    with pytest.raises(DomainError):
        load_identity(FIXTURES / "table.json")
    with pytest.raises(DomainError):
        load_table(FIXTURES / "identity.json")


def test_dump_is_stable(tmp_path):
    identity = taylor_identity(0.3 + 0.1j, 6)
    path = tmp_path / "nested" / "identity.json"
    text = dump_artifact(identity_to_schema(identity), path)
    assert text.endswith("\n")
    assert path.read_text(encoding="utf-8") == text
    again = identity_from_schema(load_artifact(path))
    np.testing.assert_array_equal(again.weights, identity.weights)
    assert again.l2_bound == identity.l2_bound
    assert dump_artifact(identity_to_schema(again)) == text


def test_table_without_certificate(tmp_path):
    table = to_real_table(taylor_identity(0.5, 3))
    data = table_to_schema(table)
    assert data.certificate is None
    assert TableArtifact.model_validate_json(data.model_dump_json()).model_dump() == data.model_dump()


def test_approximant_keeps_extended_precision():
    R = push_pole(Polyline(np.array([0.2 + 0j, -0.2 + 0j])), 0.15, 1e-6)
    data = approximant_to_schema(R)
    parsed = ApproximantArtifact.model_validate_json(data.model_dump_json())
    restored = approximant_from_schema(parsed)
    assert restored.degree == R.degree
    assert restored.dps == R.dps
    for z in (1.0 + 0.5j, -0.7j):
        assert restored.evaluate(z) == pytest.approx(R.evaluate(z), rel=1e-15)
    # 十进制字符串比 float 更长
    assert max(len(re) for re, _ in data.coeffs) > 17


def test_fixture_approximant_evaluates():
    R = approximant_from_schema(load_artifact(FIXTURES / "approximant.json"))
    assert R.degree == 4
    assert R.b == 0.1
    assert R.evaluate(1.0) == pytest.approx(sum(c * 1.1 ** -(j + 1) for j, c in enumerate([1.0, 0.2, 0.04, 0.008])))


def test_schema_rejections():
    raw = json.loads((FIXTURES / "identity.json").read_text(encoding="utf-8"))
    raw["unexpected"] = 1
    with pytest.raises(ValidationError):
        IdentityArtifact.model_validate(raw)
    raw.pop("unexpected")
    raw["schema_version"] = 2
    with pytest.raises(ValidationError):
        IdentityArtifact.model_validate(raw)
    with pytest.raises(ValidationError):
        JobConfig(command="sense-disc", a=(0.5, 0.0), b=(0.5, 0.0))
    with pytest.raises(ValidationError):
        JobConfig(command="runge", domain={"type": "polyline", "vertices": [(0.4, 0.0), (-0.4, 0.0)]})
    with pytest.raises(ValidationError):
        JobConfig(command="sense-disc", b=(0.5, 0.0), radius=0.9)


def test_reals_round_trip_bit_exact(tmp_path):
    weights = np.array([1.0, complex(1 / 3, math.pi), complex(0.1, 1e-300), complex(5e-324, -2.5e-8)])
    identity = SensingIdentity(DISC, 0j, 1 / 3, weights, 1 / 7, Provenance.TAYLOR)
    text = dump_artifact(identity_to_schema(identity), tmp_path / "identity.json")
    # 最短可往返写法
    assert repr(1 / 3) in text
    assert repr(math.pi) in text
    again = load_identity(tmp_path / "identity.json")
    assert [w.real for w in again.weights] == [w.real for w in weights]
    assert [w.imag for w in again.weights] == [w.imag for w in weights]
    assert again.b == 1 / 3
    assert again.l2_bound == 1 / 7


def test_malformed_file_is_a_validation_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_artifact(bad)
