import logging

import numpy as np

from app.commands.common import build_disc, emit, parse_points, parse_region, resolved
from app.schemas import DomainSpec, JobConfig, unpair
from app.services.errors import ParameterError
from app.services.runge import Polyline, exterior_sup_error, push_pole, runge_weights
from app.services.serializers import approximant_to_schema, identity_to_schema
from app.services.verify import UNIT_DISC

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("runge", help="push the pole of 1/(z-b) to a along a polyline")
    parser.add_argument("--vertices", type=parse_points, required=True, help="b;...;a as x,y pairs")
    parser.add_argument("--delta", type=float, required=True)
    parser.add_argument("--eps", type=float, default=1e-3)
    parser.add_argument("--boundary", type=parse_region, default=None, help="disc:cx,cy,r (default unit disc)")
    parser.add_argument("--max-degree", type=int, default=None)
    parser.add_argument("--check", action="store_true", help="measure the exterior sup error on a grid")
    parser.add_argument("-o", "--output", required=True, help="output directory")
    parser.set_defaults(build=runge_config)


def runge_config(args) -> JobConfig:
    return JobConfig(
        command="runge",
        a=args.vertices[-1],
        b=args.vertices[0],
        eps=args.eps,
        max_degree=args.max_degree,
        domain=DomainSpec(
            type="polyline",
            vertices=args.vertices,
            delta=args.delta,
            boundary=args.boundary,
        ),
        check=args.check,
        output=args.output,
    )


def run_runge(config: JobConfig) -> int:
    domain = config.domain
    if domain.type != "polyline":
        raise ParameterError("runge needs a polyline domain")
    curve = Polyline(np.array([unpair(v) for v in domain.vertices]))
    boundary = build_disc(domain.boundary, UNIT_DISC)
    kwargs = {} if config.max_degree is None else {"max_degree": config.max_degree}
    R = push_pole(curve, domain.delta, config.eps, **kwargs)
    identity = runge_weights(R, boundary.boundary_length, boundary.boundary(4096))
    exterior = exterior_sup_error(R) if config.check else None

    info = resolved(config)
    emit(approximant_to_schema(R, exterior, info), config.output, "approximant.json")
    emit(identity_to_schema(identity, info), config.output, "identity.json")
    logger.info("Runge done degree=%s eps=%.3g dps=%s", R.degree, R.eps, R.dps)
    if exterior is not None and exterior.max_error > config.eps:
        logger.warning("Runge exterior error %.3g exceeds eps %.3g", exterior.max_error, config.eps)
        return 1
    return 0
