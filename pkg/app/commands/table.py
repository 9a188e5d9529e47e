import logging

from app.commands.common import build_disc, emit, parse_region, resolved
from app.models import ProbeGeometry, Provenance
from app.schemas import DomainSpec, JobConfig, ProbeArtifact
from app.services.errors import DomainError, ParameterError
from app.services.harmonic import disc_contour_geometry, harmonic_certificate, to_real_table
from app.services.serializers import load_artifact, load_identity, table_to_schema
from app.services.verify import UNIT_DISC

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("table", help="convert an identity into a real harmonic table")
    parser.add_argument("identity", help="identity JSON")
    parser.add_argument("--probe", default=None, help="probe JSON supplying the certificate geometry")
    parser.add_argument("--container", type=parse_region, default=None, help="runge: disc:cx,cy,R with |u| <= M")
    parser.add_argument("--contour", type=parse_region, default=None, help="runge: contour disc (default unit disc)")
    parser.add_argument("--M", type=float, default=1.0)
    parser.add_argument("-o", "--output", default=None)
    parser.set_defaults(build=table_config)


def table_config(args) -> JobConfig:
    inputs = [args.identity] + ([args.probe] if args.probe else [])
    return JobConfig(
        command="table",
        M=args.M,
        inputs=inputs,
        container=args.container,
        domain=DomainSpec(type="disc", boundary=args.contour),
        output=args.output,
    )


def _probe_geometry(path: str) -> ProbeGeometry:
    probe = load_artifact(path)
    if not isinstance(probe, ProbeArtifact):
        raise DomainError(f"{path} is not a probe artifact")
    return ProbeGeometry(probe.area, probe.max_path_length, probe.dist_to_boundary)


def run_table(config: JobConfig) -> int:
    if not 1 <= len(config.inputs) <= 2:
        raise ParameterError("table takes an identity file and an optional probe file")
    identity = load_identity(config.inputs[0])
    table = to_real_table(identity)
    if identity.provenance == Provenance.RUNGE:
        # Runge 恒等式走 sup 形式：几何量来自积分围道和 |u| <= M 的容器圆盘
        if config.container is None:
            raise ParameterError("a runge table needs --container, the disc where |u| <= M")
        contour = build_disc(config.domain.boundary, UNIT_DISC)
        geometry = disc_contour_geometry(identity.a, contour, build_disc(config.container, UNIT_DISC))
        table = harmonic_certificate(identity, table, geometry, config.M)
    elif len(config.inputs) > 1:
        table = harmonic_certificate(identity, table, _probe_geometry(config.inputs[1]), config.M)
    logger.info("Table done entries=%s certified=%s", len(table.entries), table.certificate is not None)
    emit(table_to_schema(table, resolved(config)), config.output)
    return 0
