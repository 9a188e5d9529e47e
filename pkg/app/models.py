import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.services.errors import DegeneratePointsError, DomainError


class Provenance(str, Enum):
    TAYLOR = "taylor"
    TRANSPORTED = "transported"
    GRAM = "gram-optimal"
    RUNGE = "runge"


@dataclass(frozen=True)
class SupCertificate:
    """|h(b) - sum d_m h^(m)(a)| <= eps * boundary_length / (2 pi) * sup over the boundary of |h|"""

    eps: float
    boundary_length: float

    @property
    def factor(self) -> float:
        return self.eps * self.boundary_length / (2 * math.pi)

    def bound(self, sup_h: float) -> float:
        return self.factor * sup_h


@dataclass(eq=False)
class SensingIdentity:
    """
    Derivative weights with h(b) ~ sum_m weights[m] * h^(m)(a).

    weights are the conjugates of the kernel-combination coefficients, so nothing downstream
    conjugates again. l2_bound certifies |h(b) - estimate| <= l2_bound * ||h||_L2(domain);
    runge identities carry a sup certificate instead and leave l2_bound empty.
    """

    domain: str
    a: complex
    b: complex
    weights: np.ndarray
    l2_bound: Optional[float]
    provenance: Provenance
    sup_certificate: Optional[SupCertificate] = None
    tolerance: float = 0.0  # 非严格：探针 jet 的数值误差
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.a = complex(self.a)
        self.b = complex(self.b)
        self.provenance = Provenance(self.provenance)
        self.weights = np.asarray(self.weights, dtype=np.complex128).reshape(-1)
        if self.a == self.b:
            raise DegeneratePointsError("a and b must differ")
        if self.weights.size == 0 or not np.all(np.isfinite(self.weights)):
            raise DomainError("weights must be a nonempty finite sequence")
        if self.l2_bound is not None:
            if not (math.isfinite(self.l2_bound) and self.l2_bound >= 0):
                raise DomainError(f"l2_bound must be finite and nonnegative, got {self.l2_bound}")
            self.l2_bound = float(self.l2_bound)

    @property
    def order(self) -> int:
        return self.weights.size - 1

    def estimate(self, derivatives: Sequence[complex]) -> complex:
        derivs = np.asarray(derivatives, dtype=np.complex128)[: self.weights.size]
        return complex(np.dot(self.weights[: derivs.size], derivs))


@dataclass(frozen=True)
class ProbeGeometry:
    area: float
    max_path_length: float
    dist_to_boundary: float


@dataclass(frozen=True)
class HarmonicCertificate:
    """
    |u(b) - table estimate| <= bound_per_M * M for |u| <= M.
    form "l2": l2_lambda * sqrt(area) * (1 + conj_const); form "sup": sup_factor * (1 + conj_const).
    """

    l2_lambda: Optional[float]
    area: float
    conj_const: float
    bound_per_M: float
    M: float
    form: str = "l2"
    sup_factor: Optional[float] = None

    @property
    def bound(self) -> float:
        return self.bound_per_M * self.M

    def recompute(self) -> float:
        if self.form == "sup":
            return self.sup_factor * (1.0 + self.conj_const)
        return self.l2_lambda * math.sqrt(self.area) * (1.0 + self.conj_const)


@dataclass(frozen=True)
class TableEntry:
    dx: int
    dy: int
    coeff: float


@dataclass(eq=False)
class RealSensingTable:
    """
    Real weights on u(a), d_x^m u(a) and d_x^(m-1) d_y u(a) estimating u(b).
    Entries come in the order (0,0), then (m,0), (m-1,1) for m = 1..N.
    """

    a: complex
    b: complex
    entries: Tuple[TableEntry, ...]
    certificate: Optional[HarmonicCertificate] = None

    def __post_init__(self):
        self.a = complex(self.a)
        self.b = complex(self.b)
        self.entries = tuple(self.entries)
        for entry in self.entries:
            shape_ok = (entry.dx, entry.dy) == (0, 0) or (entry.dy == 0 and entry.dx >= 1) or entry.dy == 1
            if not shape_ok or entry.dx < 0 or not math.isfinite(entry.coeff):
                raise DomainError(f"unsupported table entry {entry}")

    @property
    def order(self) -> int:
        return max((e.dx + e.dy for e in self.entries), default=0)

    def estimate(self, px: Sequence[float], py: Sequence[float]) -> float:
        """
        px[m] = d_x^m u(a) (px[0] = u(a)); py[m] = d_x^(m-1) d_y u(a) for m >= 1.
        """
        total = 0.0
        for entry in self.entries:
            m = entry.dx + entry.dy
            value = py[m] if entry.dy == 1 else px[m]
            total += entry.coeff * float(value)
        return total
