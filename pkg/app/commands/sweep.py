import csv
import io
import logging
import sys
from pathlib import Path

from app.commands.common import parse_point
from app.schemas import JobConfig, unpair
from app.services.disc import taylor_identity
from app.services.errors import ParameterError
from app.services.verify import residual_report

logger = logging.getLogger(__name__)

COLUMNS = ("N", "l2_bound", "max_residual")


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="CSV of certificate and measured residual per order")
    parser.add_argument("--b", type=parse_point, required=True)
    parser.add_argument("--n-max", type=int, default=30)
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--degree", type=int, default=60, help="test polynomial degree cap")
    parser.add_argument("-o", "--output", default=None, help="CSV path (stdout when omitted)")
    parser.set_defaults(build=sweep_config)


def sweep_config(args) -> JobConfig:
    return JobConfig(
        command="sweep",
        b=args.b,
        n_max=args.n_max,
        samples=args.samples,
        seed=args.seed,
        degree=args.degree,
        output=args.output,
    )


def sweep_rows(config: JobConfig):
    if config.b is None:
        raise ParameterError("sweep needs a target point b")
    b = unpair(config.b)
    degree = 60 if config.degree is None else config.degree
    for N in range(config.n_max + 1):
        identity = taylor_identity(b, N)
        report = residual_report(identity, "polynomial", config.samples, config.seed, degree=degree)
        yield N, identity.l2_bound, report.max_residual


def run_sweep(config: JobConfig) -> int:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for N, bound, residual in sweep_rows(config):
        writer.writerow([N, repr(bound), repr(residual)])
    if config.output:
        Path(config.output).parent.mkdir(parents=True, exist_ok=True)
        Path(config.output).write_text(buffer.getvalue(), encoding="utf-8", newline="")
    else:
        sys.stdout.write(buffer.getvalue())
    logger.info("Sweep done b=%s n_max=%s", config.b, config.n_max)
    return 0
