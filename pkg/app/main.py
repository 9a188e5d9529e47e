import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from app.commands import compare, runge, sense, sweep, table, verify
from app.config import LOG_LEVEL
from app.schemas import JobConfig
from app.services.errors import SensingError

logger = logging.getLogger(__name__)

RUNNERS: Dict[str, Callable[[JobConfig], int]] = {
    "sense-disc": sense.run_disc,
    "sense-probe": sense.run_probe,
    "runge": runge.run_runge,
    "table": table.run_table,
    "verify": verify.run_verify,
    "sweep": sweep.run_sweep,
    "compare": compare.run_compare,
}


def configure_logging(level: str = LOG_LEVEL) -> None:
    # 统一日志格式，输出到 stderr，stdout 只留给产物
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
        force=True,
    )


def _job_config(args) -> JobConfig:
    return JobConfig.model_validate_json(Path(args.job).read_text(encoding="utf-8"))


def create_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bergman-sense", description="Certified remote sensing identities")
    parser.add_argument("--log-level", default=LOG_LEVEL)
    subparsers = parser.add_subparsers(dest="command", required=True)

    # 命令注册
    sense.register(subparsers)
    runge.register(subparsers)
    table.register(subparsers)
    verify.register(subparsers)
    sweep.register(subparsers)
    compare.register(subparsers)

    job = subparsers.add_parser("run", help="run a JobConfig JSON file")
    job.add_argument("job", help="JobConfig JSON")
    job.set_defaults(build=_job_config)
    return parser


def run(config: JobConfig) -> int:
    logger.info("Job start command=%s", config.command)
    status = RUNNERS[config.command](config)
    logger.info("Job done command=%s status=%s", config.command, status)
    return status


def _fail(code: str, message: str) -> int:
    sys.stderr.write(json.dumps({"code": code, "message": message}, ensure_ascii=False) + "\n")
    return 2


def main(argv: Optional[List[str]] = None) -> int:
    args = create_cli().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return run(args.build(args))
    except SensingError as exc:
        logger.error("Job failed code=%s message=%s", exc.code, exc)
        sys.stderr.write(json.dumps(exc.detail(), ensure_ascii=False) + "\n")
        return 2
    except ValidationError as exc:
        return _fail("invalid_config", str(exc))
    except OSError as exc:
        return _fail("io", str(exc))
