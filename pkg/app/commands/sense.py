import logging
from typing import Tuple

from app.commands.common import build_region, emit, parse_point, parse_points, parse_region, resolved
from app.config import DEFAULT_MU, GRAM_MAX_ORDER, PROBE_MAX_ORDER
from app.schemas import DomainSpec, JobConfig, unpair
from app.services.disc import choose_order, optimal_weights_gram, taylor_identity
from app.services.errors import BudgetExceededError, ParameterError
from app.services.harmonic import harmonic_certificate, to_real_table
from app.services.probe import build_probe, fit_spine, probe_geometry, probe_jet
from app.services.serializers import identity_to_schema, probe_to_schema, table_to_schema
from app.services.transport import moebius_identity, solve_B, transport_identity

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    disc = subparsers.add_parser("sense-disc", help="certified identity on the unit disc")
    disc.add_argument("--a", type=parse_point, default=(0.0, 0.0), help="expansion point re,im")
    disc.add_argument("--b", type=parse_point, required=True, help="target point re,im")
    disc.add_argument("--eps", type=float, default=1e-4)
    disc.add_argument("--mode", choices=["sup", "l2"], default="l2")
    disc.add_argument("--radius", type=float, default=None, help="r for sup mode")
    disc.add_argument("--order", type=int, default=None, help="fixed order instead of eps")
    disc.add_argument("--method", choices=["taylor", "gram"], default="taylor")
    disc.add_argument("-o", "--output", default=None)
    disc.set_defaults(build=disc_config)

    probe = subparsers.add_parser("sense-probe", help="probe domain identity and harmonic table")
    probe.add_argument("--waypoints", type=parse_points, required=True, help="x0,y0;x1,y1;...")
    probe.add_argument("--a", type=parse_point, required=True)
    probe.add_argument("--b", type=parse_point, required=True)
    probe.add_argument("--degree", type=int, default=3)
    probe.add_argument("--region", type=parse_region, required=True, help="rect:x0,x1,y0,y1 | disc:cx,cy,r")
    probe.add_argument("--sigma", type=float, default=None)
    probe.add_argument("--mu", type=float, default=DEFAULT_MU)
    probe.add_argument("--eps", type=float, default=1e-4)
    probe.add_argument("--order", type=int, default=None)
    probe.add_argument("--M", type=float, default=1.0)
    probe.add_argument("-o", "--output", required=True, help="output directory")
    probe.set_defaults(build=probe_config)


def disc_config(args) -> JobConfig:
    return JobConfig(
        command="sense-disc",
        a=args.a,
        b=args.b,
        eps=args.eps,
        mode=args.mode,
        radius=args.radius,
        order=args.order,
        method=args.method,
        output=args.output,
    )


def probe_config(args) -> JobConfig:
    return JobConfig(
        command="sense-probe",
        a=args.a,
        b=args.b,
        eps=args.eps,
        order=args.order,
        M=args.M,
        domain=DomainSpec(
            type="probe",
            waypoints=args.waypoints,
            degree=args.degree,
            sigma=args.sigma,
            mu=args.mu,
            region=args.region,
        ),
        output=args.output,
    )


def _target(config: JobConfig) -> complex:
    if config.b is None:
        raise ParameterError(f"{config.command} needs a target point b")
    return unpair(config.b)


def _capped_order(B: complex, eps: float, cap: int) -> Tuple[int, bool]:
    """Smallest order reaching eps, or (cap, True) when eps is out of reach below the cap."""
    try:
        return choose_order(B, eps, "l2", limit=cap), False
    except BudgetExceededError:
        return cap, True


def run_disc(config: JobConfig) -> int:
    a, b = unpair(config.a), _target(config)
    # 阶数按圆盘内的像点 B 选取（a = 0 时 B = b）
    B = (b - a) / (1.0 - a.conjugate() * b)
    if config.method == "gram":
        N = config.order if config.order is not None else _capped_order(B, config.eps, GRAM_MAX_ORDER)[0]
        identity = optimal_weights_gram(a, b, N)
    else:
        N = config.order if config.order is not None else choose_order(B, config.eps, config.mode, config.radius)
        identity = taylor_identity(b, N) if a == 0 else moebius_identity(a, b, N)
    logger.info(
        "Sense-disc done a=%s b=%s method=%s order=%s l2=%.6g", a, b, config.method, N, identity.l2_bound
    )
    emit(identity_to_schema(identity, resolved(config)), config.output)
    return 0


def run_probe(config: JobConfig) -> int:
    domain = config.domain
    if domain.type != "probe" or domain.region is None:
        raise ParameterError("sense-probe needs a probe domain with a target region")
    a, b = unpair(config.a), _target(config)
    region = build_region(domain.region)
    spine = fit_spine([unpair(p) for p in domain.waypoints], a, b, domain.degree)
    probe, diagnostics = build_probe(spine, region, domain.mu, domain.sigma)
    B, fprime_b = solve_B(probe, b, guess=probe.disc_point(spine.t_b))

    if config.order is not None:
        N, clipped = config.order, config.order > PROBE_MAX_ORDER
    else:
        N, clipped = _capped_order(B, config.eps, PROBE_MAX_ORDER)
    if clipped:
        logger.warning("Probe order clipped to %s eps=%s |B|=%.12f", PROBE_MAX_ORDER, config.eps, abs(B))
        N = PROBE_MAX_ORDER
    jet = probe_jet(probe, N + 1)
    identity = transport_identity(
        taylor_identity(B, N), jet, fprime_b, domain="probe", b=b, tolerance=probe.jet_tolerance
    )
    if clipped:
        identity.warnings.append(f"order clipped to {PROBE_MAX_ORDER}")
    geometry = probe_geometry(probe, region)
    table = harmonic_certificate(identity, to_real_table(identity), geometry, config.M)

    info = resolved(config)
    emit(
        probe_to_schema(
            probe, diagnostics, geometry, B=B, fprime_b=fprime_b, order=N, order_clipped=clipped, config=info
        ),
        config.output,
        "probe.json",
    )
    emit(identity_to_schema(identity, info), config.output, "identity.json")
    emit(table_to_schema(table, info), config.output, "table.json")
    logger.info(
        "Sense-probe done order=%s l2=%.6g bound_per_M=%.6g sigma=%s",
        N,
        identity.l2_bound,
        table.certificate.bound_per_M,
        probe.rect.halfheight,
    )
    return 0
