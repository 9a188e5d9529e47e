"""
Domain objects <-> artifact schemas, plus reading and writing artifact files.
"""

from pathlib import Path
from typing import Any, Dict, Optional

import mpmath
import numpy as np
from pydantic import TypeAdapter

from app.models import (
    HarmonicCertificate,
    ProbeGeometry,
    Provenance,
    RealSensingTable,
    SensingIdentity,
    SupCertificate,
    TableEntry,
)
from app.schemas import (
    ApproximantArtifact,
    Artifact,
    CheckOut,
    CompareArtifact,
    CompareRowOut,
    ExteriorCheckOut,
    HarmonicCertificateOut,
    IdentityArtifact,
    ProbeArtifact,
    ReportArtifact,
    StepOut,
    SupCertificateOut,
    TableArtifact,
    TableEntryOut,
    pair,
    unpair,
)
from app.services.errors import DomainError
from app.services.probe import ProbeDiagnostics, ProbeDomain
from app.services.runge import ExteriorSupReport, Polyline, RationalApproximant, StepRecord
from app.services.verify import CompareReport, ResidualReport

_ARTIFACT = TypeAdapter(Artifact)


def identity_to_schema(identity: SensingIdentity, config: Optional[Dict[str, Any]] = None) -> IdentityArtifact:
    sup = identity.sup_certificate
    return IdentityArtifact(
        config=config or {},
        domain=identity.domain,
        a=pair(identity.a),
        b=pair(identity.b),
        order=identity.order,
        weights=[pair(w) for w in identity.weights],
        l2_bound=identity.l2_bound,
        provenance=identity.provenance.value,
        sup_certificate=SupCertificateOut(eps=sup.eps, boundary_length=sup.boundary_length) if sup else None,
        tolerance=identity.tolerance,
        warnings=list(identity.warnings),
    )


def identity_from_schema(data: IdentityArtifact) -> SensingIdentity:
    sup = data.sup_certificate
    return SensingIdentity(
        domain=data.domain,
        a=unpair(data.a),
        b=unpair(data.b),
        weights=np.array([unpair(w) for w in data.weights], dtype=np.complex128),
        l2_bound=data.l2_bound,
        provenance=Provenance(data.provenance),
        sup_certificate=SupCertificate(sup.eps, sup.boundary_length) if sup else None,
        tolerance=data.tolerance,
        warnings=list(data.warnings),
    )


def table_to_schema(table: RealSensingTable, config: Optional[Dict[str, Any]] = None) -> TableArtifact:
    cert = table.certificate
    return TableArtifact(
        config=config or {},
        a=pair(table.a),
        b=pair(table.b),
        entries=[TableEntryOut(dx=e.dx, dy=e.dy, coeff=e.coeff) for e in table.entries],
        certificate=HarmonicCertificateOut(**cert.__dict__) if cert else None,
    )


def table_from_schema(data: TableArtifact) -> RealSensingTable:
    cert = data.certificate
    return RealSensingTable(
        a=unpair(data.a),
        b=unpair(data.b),
        entries=tuple(TableEntry(e.dx, e.dy, e.coeff) for e in data.entries),
        certificate=HarmonicCertificate(**cert.model_dump()) if cert else None,
    )


def _check_out(result) -> CheckOut:
    return CheckOut(
        passed=result.passed,
        margin=result.margin,
        detail=result.detail,
        offending=[pair(z) for z in result.offending],
    )


def probe_to_schema(
    probe: ProbeDomain,
    diagnostics: Optional[ProbeDiagnostics],
    geometry: ProbeGeometry,
    *,
    B: complex,
    fprime_b: complex,
    order: int,
    order_clipped: bool = False,
    config: Optional[Dict[str, Any]] = None,
) -> ProbeArtifact:
    info = probe.describe()
    checks = {}
    if diagnostics is not None:
        checks = {
            "containment": _check_out(diagnostics.containment),
            "injectivity": _check_out(diagnostics.injectivity),
            "derivative": _check_out(diagnostics.derivative),
        }
    return ProbeArtifact(
        config=config or {},
        a=pair(probe.a),
        b=pair(probe.b),
        spine=[pair(c) for c in info["spine"]],
        t_a=info["t_a"],
        t_b=info["t_b"],
        mu=info["mu"],
        sigma=info["sigma"],
        modulus=info["modulus"],
        center_shift=info["center_shift"],
        sigma_halvings=info["sigma_halvings"],
        B=pair(B),
        fprime_b=pair(fprime_b),
        order=order,
        order_clipped=order_clipped,
        jet_tolerance=probe.jet_tolerance,
        area=geometry.area,
        max_path_length=geometry.max_path_length,
        dist_to_boundary=geometry.dist_to_boundary,
        checks=checks,
    )


def _mp_string(x, dps: int) -> str:
    return mpmath.nstr(x, dps + 5)


def approximant_to_schema(
    R: RationalApproximant,
    exterior: Optional[ExteriorSupReport] = None,
    config: Optional[Dict[str, Any]] = None,
) -> ApproximantArtifact:
    with mpmath.workdps(R.dps):
        coeffs = [
            (_mp_string(mpmath.re(c), R.dps), _mp_string(mpmath.im(c), R.dps))
            for c in R.coeffs[1 : R.degree + 1]
        ]
    return ApproximantArtifact(
        config=config or {},
        pole=pair(R.pole),
        curve=[pair(v) for v in R.curve.vertices],
        delta=R.delta,
        eps=R.eps,
        requested_eps=R.requested_eps,
        dps=R.dps,
        degree=R.degree,
        coeffs=coeffs,
        centers=[pair(c) for c in R.centers],
        steps=[
            StepOut(
                center=pair(s.center),
                degree=s.degree,
                max_truncation=s.max_truncation,
                tail_bound=s.tail_bound,
                pruned=s.pruned,
                dps=s.dps,
            )
            for s in R.steps
        ],
        exterior_check=ExteriorCheckOut(**exterior.__dict__) if exterior else None,
    )


def approximant_from_schema(data: ApproximantArtifact) -> RationalApproximant:
    with mpmath.workdps(data.dps):
        coeffs = [mpmath.mpc(0)] + [mpmath.mpc(mpmath.mpf(re), mpmath.mpf(im)) for re, im in data.coeffs]
    return RationalApproximant(
        pole=unpair(data.pole),
        coeffs=coeffs,
        delta=data.delta,
        curve=Polyline(np.array([unpair(v) for v in data.curve])),
        eps=data.eps,
        requested_eps=data.requested_eps,
        centers=tuple(unpair(c) for c in data.centers),
        steps=tuple(
            StepRecord(unpair(s.center), s.degree, s.max_truncation, s.tail_bound, s.pruned, s.dps)
            for s in data.steps
        ),
        dps=data.dps,
    )


def report_to_schema(
    report: ResidualReport, target: str, config: Optional[Dict[str, Any]] = None
) -> ReportArtifact:
    return ReportArtifact(config=config or {}, target=target, **report.__dict__)


def compare_to_schema(report: CompareReport, config: Optional[Dict[str, Any]] = None) -> CompareArtifact:
    return CompareArtifact(
        config=config or {},
        a=pair(report.a),
        b=pair(report.b),
        seed=report.seed,
        runge_order=report.runge_order,
        bergman_order=report.bergman_order,
        runge_violations=report.runge_violations,
        bergman_violations=report.bergman_violations,
        rows=[CompareRowOut(**row.__dict__) for row in report.rows],
    )


def dump_artifact(artifact, path: Optional[Path] = None) -> str:
    text = artifact.model_dump_json(indent=2) + "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_artifact(path: Path):
    return _ARTIFACT.validate_json(Path(path).read_text(encoding="utf-8"))


def load_identity(path: Path) -> SensingIdentity:
    data = load_artifact(path)
    if not isinstance(data, IdentityArtifact):
        raise DomainError(f"{path} holds a {data.kind} artifact, expected an identity")
    return identity_from_schema(data)


def load_table(path: Path) -> RealSensingTable:
    data = load_artifact(path)
    if not isinstance(data, TableArtifact):
        raise DomainError(f"{path} holds a {data.kind} artifact, expected a table")
    return table_from_schema(data)
