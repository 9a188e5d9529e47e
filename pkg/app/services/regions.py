"""
Target domains Omega: membership and distance to the boundary, vectorized over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Protocol

import numpy as np

from app.services.errors import GeometryError


class Region(Protocol):
    def contains(self, z) -> np.ndarray: ...

    def boundary_distance(self, z) -> np.ndarray: ...

    def describe(self) -> Dict[str, object]: ...


@dataclass(frozen=True)
class DiscRegion:
    center: complex
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError(f"disc radius must be positive, got {self.radius}")

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius

    def boundary_distance(self, z) -> np.ndarray:
        return np.abs(self.radius - np.abs(np.asarray(z) - self.center))

    def boundary(self, n: int) -> np.ndarray:
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(n) / n)

    @property
    def boundary_length(self) -> float:
        return 2 * np.pi * self.radius

    def describe(self) -> Dict[str, object]:
        return {"type": "disc", "center": complex(self.center), "radius": float(self.radius)}


@dataclass(frozen=True, eq=False)
class PolygonRegion:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.complex128).reshape(-1)
        if v.size < 3:
            raise GeometryError("polygon needs at least three vertices")
        object.__setattr__(self, "vertices", v)

    def _edges(self):
        return self.vertices, np.roll(self.vertices, -1)

    def contains(self, z) -> np.ndarray:
        """Even-odd ray casting; points on the boundary count as outside when the distance is 0."""
        z = np.asarray(z, dtype=np.complex128)
        start, end = self._edges()
        x, y = z.real[..., None], z.imag[..., None]
        y0, y1 = start.imag, end.imag
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = start.real + (y - y0) * (end.real - start.real) / (y1 - y0)
        inside = np.count_nonzero(crosses & (x < x_cross), axis=-1) % 2 == 1
        return inside & (self.boundary_distance(z) > 0)

    def boundary_distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        start, end = self._edges()
        seg = end - start
        rel = z[..., None] - start
        t = np.clip((rel * np.conj(seg)).real / np.abs(seg) ** 2, 0.0, 1.0)
        return np.min(np.abs(rel - t * seg), axis=-1)

    @property
    def boundary_length(self) -> float:
        start, end = self._edges()
        return float(np.sum(np.abs(end - start)))

    def describe(self) -> Dict[str, object]:
        return {"type": "polygon", "vertices": [complex(v) for v in self.vertices]}


def rectangle_region(x0: float, x1: float, y0: float, y1: float) -> PolygonRegion:
    if not (x1 > x0 and y1 > y0):
        raise GeometryError("rectangle corners out of order")
    return PolygonRegion(np.array([complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]))


def region_from_description(data: Dict[str, object]):
    kind = data.get("type")
    if kind == "disc":
        return DiscRegion(complex(data["center"]), float(data["radius"]))
    if kind == "polygon":
        return PolygonRegion(np.array([complex(v) for v in data["vertices"]]))
    raise GeometryError(f"unknown region type: {kind}")
