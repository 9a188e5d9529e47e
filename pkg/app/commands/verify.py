import logging

from app.commands.common import build_disc, emit, parse_region, require_input, resolved
from app.schemas import IdentityArtifact, JobConfig, TableArtifact
from app.services.errors import DomainError
from app.services.serializers import identity_from_schema, load_artifact, report_to_schema, table_from_schema
from app.services.verify import FAMILIES, UNIT_DISC, residual_report

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="residual report of an identity or table")
    parser.add_argument("artifact", help="identity or table JSON")
    parser.add_argument("--family", choices=FAMILIES, default=None)
    parser.add_argument("--M", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--degree", type=int, default=None)
    parser.add_argument("--container", type=parse_region, default=None, help="disc:cx,cy,r")
    parser.add_argument("-o", "--output", default=None)
    parser.set_defaults(build=verify_config)


def verify_config(args) -> JobConfig:
    return JobConfig(
        command="verify",
        family=args.family,
        M=args.M,
        seed=args.seed,
        samples=args.samples,
        degree=args.degree,
        container=args.container,
        inputs=[args.artifact],
        output=args.output,
    )


def run_verify(config: JobConfig) -> int:
    data = load_artifact(require_input(config, 1)[0])
    if isinstance(data, TableArtifact):
        target, kind, default_family = table_from_schema(data), "table", "harmonic"
    elif isinstance(data, IdentityArtifact):
        target, kind, default_family = identity_from_schema(data), "identity", "polynomial"
    else:
        raise DomainError(f"cannot verify a {data.kind} artifact")
    family = config.family or default_family
    report = residual_report(
        target,
        family,
        config.samples,
        config.seed,
        degree=config.degree,
        M=config.M,
        container=build_disc(config.container, UNIT_DISC),
    )
    emit(report_to_schema(report, kind, resolved(config)), config.output)
    return 1 if report.violations else 0
