import logging

from app.commands.common import build_disc, emit, parse_region, require_input, resolved
from app.schemas import JobConfig
from app.services.serializers import compare_to_schema, load_identity
from app.services.verify import UNIT_DISC, compare_report

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="Runge identity vs an L2 identity on the same points")
    parser.add_argument("runge", help="runge identity JSON")
    parser.add_argument("bergman", help="taylor / gram / transported identity JSON")
    parser.add_argument("--container", type=parse_region, default=None, help="quadrature disc cx,cy,r")
    parser.add_argument("--samples", type=int, default=100)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--degree", type=int, default=10)
    parser.add_argument("-o", "--output", default=None)
    parser.set_defaults(build=compare_config)


def compare_config(args) -> JobConfig:
    return JobConfig(
        command="compare",
        samples=args.samples,
        seed=args.seed,
        degree=args.degree,
        container=args.container,
        inputs=[args.runge, args.bergman],
        output=args.output,
    )


def run_compare(config: JobConfig) -> int:
    runge_path, bergman_path = require_input(config, 2)
    report = compare_report(
        load_identity(runge_path),
        load_identity(bergman_path),
        config.samples,
        config.seed,
        degree=10 if config.degree is None else config.degree,
        container=build_disc(config.container, UNIT_DISC),
    )
    emit(compare_to_schema(report, resolved(config)), config.output)
    return 1 if report.runge_violations or report.bergman_violations else 0
