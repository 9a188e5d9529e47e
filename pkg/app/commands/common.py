"""
Shared helpers for the command modules: flag parsing, region construction, artifact output.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import List, Optional

from app.schemas import ComplexPair, JobConfig, RegionSpec, unpair
from app.services.errors import ParameterError
from app.services.regions import DiscRegion, region_from_description
from app.services.serializers import dump_artifact


def parse_point(text: str) -> ComplexPair:
    """'re,im' -> (re, im); a bare number is read as real."""
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return (float(parts[0]), 0.0)
        if len(parts) == 2:
            return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise ParameterError(f"cannot read point {text!r}: {exc}") from exc
    raise ParameterError(f"cannot read point {text!r}; expected re,im")


def parse_points(text: str) -> List[ComplexPair]:
    """'x0,y0;x1,y1;...'"""
    return [parse_point(item) for item in text.split(";") if item.strip()]


def parse_region(text: str) -> RegionSpec:
    """rect:x0,x1,y0,y1 | disc:cx,cy,r | polygon:x0,y0;x1,y1;..."""
    kind, _, body = text.partition(":")
    try:
        if kind == "rect":
            x0, x1, y0, y1 = (float(v) for v in body.split(","))
            corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
            return RegionSpec(type="polygon", vertices=corners)
        if kind == "disc":
            cx, cy, r = (float(v) for v in body.split(","))
            return RegionSpec(type="disc", center=(cx, cy), radius=r)
        if kind == "polygon":
            return RegionSpec(type="polygon", vertices=parse_points(body))
    except ValueError as exc:
        raise ParameterError(f"cannot read region {text!r}: {exc}") from exc
    raise ParameterError(f"unknown region {text!r}; use rect:, disc: or polygon:")


def _description(spec: RegionSpec) -> dict:
    return {
        "type": spec.type,
        "center": unpair(spec.center),
        "radius": spec.radius,
        "vertices": [unpair(v) for v in spec.vertices or []],
    }


def build_region(spec: Optional[RegionSpec]):
    if spec is None:
        return None
    return region_from_description(_description(spec))


def build_disc(spec: Optional[RegionSpec], default: DiscRegion) -> DiscRegion:
    if spec is None:
        return default
    if spec.type != "disc":
        raise ParameterError("containers and quadrature boundaries must be discs")
    return region_from_description(_description(spec))


def resolved(config: JobConfig) -> dict:
    return config.model_dump(mode="json")


def emit(artifact, output: Optional[str], name: Optional[str] = None) -> Optional[Path]:
    """Write to output (a directory when name is given), or to stdout when output is empty."""
    if not output:
        sys.stdout.write(dump_artifact(artifact))
        return None
    path = Path(output) / name if name else Path(output)
    dump_artifact(artifact, path)
    return path


def require_input(config: JobConfig, count: int) -> List[str]:
    if len(config.inputs) != count:
        raise ParameterError(f"{config.command} takes {count} input file(s), got {len(config.inputs)}")
    return config.inputs
