from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import DEFAULT_MU, SCHEMA_VERSION

# 复数统一写成 [re, im]
ComplexPair = Tuple[float, float]
# mpmath 系数保留为十进制字符串，避免截断到双精度
DecimalPair = Tuple[str, str]


def pair(z: complex) -> ComplexPair:
    z = complex(z)
    return (z.real, z.imag)


def unpair(p) -> complex:
    return complex(float(p[0]), float(p[1]))


class RegionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["disc", "polygon"]
    center: ComplexPair = (0.0, 0.0)
    radius: float = Field(1.0, gt=0)
    vertices: Optional[List[ComplexPair]] = None

    @model_validator(mode="after")
    def _check_vertices(self):
        if self.type == "polygon" and (not self.vertices or len(self.vertices) < 3):
            raise ValueError("polygon regions need at least three vertices")
        return self


class DomainSpec(BaseModel):
    """disc | probe{waypoints, degree, sigma, mu, region} | polyline{vertices, delta, boundary}"""

    model_config = ConfigDict(extra="forbid")

    type: Literal["disc", "probe", "polyline"] = "disc"
    waypoints: Optional[List[ComplexPair]] = None
    degree: int = Field(3, ge=1)
    sigma: Optional[float] = Field(None, gt=0)
    mu: float = Field(DEFAULT_MU, gt=0)
    region: Optional[RegionSpec] = None
    vertices: Optional[List[ComplexPair]] = None
    delta: Optional[float] = Field(None, gt=0)
    boundary: Optional[RegionSpec] = None

    @model_validator(mode="after")
    def _check_shape(self):
        if self.type == "probe" and (not self.waypoints or len(self.waypoints) < 2):
            raise ValueError("probe domains need at least two waypoints")
        if self.type == "polyline":
            if not self.vertices or len(self.vertices) < 2:
                raise ValueError("polyline domains need at least two vertices")
            if self.delta is None:
                raise ValueError("polyline domains need delta")
        return self


Command = Literal["sense-disc", "sense-probe", "runge", "table", "verify", "sweep", "compare"]


class JobConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command
    a: ComplexPair = (0.0, 0.0)
    b: Optional[ComplexPair] = None
    eps: float = Field(1e-4, gt=0)
    mode: Literal["sup", "l2"] = "l2"
    radius: Optional[float] = Field(None, gt=1)
    order: Optional[int] = Field(None, ge=0)
    method: Literal["taylor", "gram"] = "taylor"
    domain: DomainSpec = Field(default_factory=DomainSpec)
    M: float = Field(1.0, ge=0)
    seed: int = 7
    samples: int = Field(200, ge=1)
    family: Optional[str] = None
    container: Optional[RegionSpec] = None
    max_degree: Optional[int] = Field(None, ge=1)
    check: bool = False
    degree: Optional[int] = Field(None, ge=0)
    n_max: int = Field(30, ge=0)
    inputs: List[str] = Field(default_factory=list)
    output: Optional[str] = None

    @model_validator(mode="after")
    def _check_points(self):
        if self.b is not None and tuple(self.a) == tuple(self.b):
            raise ValueError("a and b must differ")
        return self


class ArtifactBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    config: Dict[str, Any] = Field(default_factory=dict)


class SupCertificateOut(BaseModel):
    eps: float
    boundary_length: float


class IdentityArtifact(ArtifactBase):
    kind: Literal["identity"] = "identity"
    domain: str
    a: ComplexPair
    b: ComplexPair
    order: int
    weights: List[ComplexPair]
    l2_bound: Optional[float] = None
    provenance: Literal["taylor", "transported", "gram-optimal", "runge"]
    sup_certificate: Optional[SupCertificateOut] = None
    tolerance: float = 0.0
    warnings: List[str] = Field(default_factory=list)


class TableEntryOut(BaseModel):
    dx: int = Field(..., ge=0)
    dy: int = Field(..., ge=0, le=1)
    coeff: float


class HarmonicCertificateOut(BaseModel):
    l2_lambda: Optional[float] = None
    area: float
    conj_const: float
    bound_per_M: float
    M: float
    form: Literal["l2", "sup"] = "l2"
    sup_factor: Optional[float] = None


class TableArtifact(ArtifactBase):
    kind: Literal["table"] = "table"
    a: ComplexPair
    b: ComplexPair
    entries: List[TableEntryOut]
    certificate: Optional[HarmonicCertificateOut] = None


class CheckOut(BaseModel):
    passed: bool
    margin: Optional[float] = None
    detail: str = ""
    offending: List[ComplexPair] = Field(default_factory=list)


class ProbeArtifact(ArtifactBase):
    kind: Literal["probe"] = "probe"
    a: ComplexPair
    b: ComplexPair
    spine: List[ComplexPair]
    t_a: float
    t_b: float
    mu: float
    sigma: float
    modulus: float
    center_shift: float
    sigma_halvings: int
    B: ComplexPair
    fprime_b: ComplexPair
    order: int
    order_clipped: bool = False
    jet_tolerance: float
    area: float
    max_path_length: float
    dist_to_boundary: float
    checks: Dict[str, CheckOut] = Field(default_factory=dict)


class StepOut(BaseModel):
    center: ComplexPair
    degree: int
    max_truncation: int
    tail_bound: float
    pruned: float
    dps: int


class ExteriorCheckOut(BaseModel):
    max_error: float
    certified: float
    points: int
    precise_points: int


class ApproximantArtifact(ArtifactBase):
    kind: Literal["approximant"] = "approximant"
    pole: ComplexPair
    curve: List[ComplexPair]
    delta: float
    eps: float
    requested_eps: float
    dps: int
    degree: int
    coeffs: List[DecimalPair]
    centers: List[ComplexPair]
    steps: List[StepOut]
    exterior_check: Optional[ExteriorCheckOut] = None


class ReportArtifact(ArtifactBase):
    kind: Literal["report"] = "report"
    target: Literal["identity", "table"]
    family: str
    samples: int
    seed: int
    max_residual: float
    mean_residual: float
    max_certificate: float
    worst_ratio: float
    violations: int
    tolerance: float = 0.0


class CompareRowOut(BaseModel):
    index: int
    runge_residual: float
    runge_certificate: float
    bergman_residual: float
    bergman_certificate: float


class CompareArtifact(ArtifactBase):
    kind: Literal["compare"] = "compare"
    a: ComplexPair
    b: ComplexPair
    seed: int
    runge_order: int
    bergman_order: int
    runge_violations: int
    bergman_violations: int
    rows: List[CompareRowOut]


Artifact = Annotated[
    Union[
        IdentityArtifact,
        TableArtifact,
        ProbeArtifact,
        ApproximantArtifact,
        ReportArtifact,
        CompareArtifact,
    ],
    Field(discriminator="kind"),
]
