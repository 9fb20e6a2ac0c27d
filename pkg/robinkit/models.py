"""
Pydantic models for robinkit.
Defines the JSON-facing data structures: points, balls, domain documents,
charge configurations, reports, search problems and run manifests.
"""

import math
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_serializer, model_validator


class Point(BaseModel):
    """A point of R^n, n >= 3. Serialises as a bare list of coordinates."""

    model_config = ConfigDict(frozen=True)

    coords: Tuple[float, ...] = Field(..., description="Cartesian coordinates")

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple, np.ndarray)):
            return {"coords": [float(v) for v in data]}
        return data

    @model_validator(mode="after")
    def _check_coords(self) -> "Point":
        if len(self.coords) < 3:
            raise ValueError(f"points need at least 3 coordinates, got {len(self.coords)}")
        if not all(math.isfinite(v) for v in self.coords):
            raise ValueError("coordinates must be finite")
        return self

    @model_serializer
    def _as_list(self) -> List[float]:
        return list(self.coords)

    @property
    def n(self) -> int:
        return len(self.coords)

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


PointLike = Union[Point, Sequence[float], np.ndarray]


def as_vector(p: PointLike) -> np.ndarray:
    """Coordinates of a point-like value as a float array."""
    if isinstance(p, Point):
        return p.array()
    return np.asarray(p, dtype=float)


class Constants(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(..., ge=3, description="Space dimension")
    omega: float = Field(..., gt=0, description="Area of the unit sphere S(0,1)")
    lam: float = Field(..., gt=0, alias="lambda", description="1/((n-2) omega)")


class BallSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    center: Point
    radius: float = Field(..., gt=0)

    @property
    def n(self) -> int:
        return self.center.n

    def center_vector(self) -> np.ndarray:
        return self.center.array()


class GammaKind(str, Enum):
    FULL = "full"
    NONE = "none"


class BoundaryLabel(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class CapSelection(BaseModel):
    """Γ is the cap of boundary points x with (x - center) . normal >= offset."""

    model_config = ConfigDict(frozen=True)

    cap_normal: Point
    cap_offset: float


GammaRule = Union[GammaKind, CapSelection]


class HalfSpaceClip(BaseModel):
    """Keeps the part of a ball with (x - center) . normal < offset."""

    model_config = ConfigDict(frozen=True)

    normal: Point
    offset: float = 0.0
    label: BoundaryLabel = Field(BoundaryLabel.NEUMANN, description="Label of the flat face")


class BallDomain(BallSpec):
    type: Literal["ball"] = "ball"
    gamma: GammaRule = GammaKind.FULL
    h: Optional[float] = Field(None, gt=0, description="Voxel spacing when solved on a grid")
    clip: Optional[HalfSpaceClip] = None

    @property
    def closed_form(self) -> bool:
        return self.clip is None and isinstance(self.gamma, GammaKind)

    def ball(self) -> BallSpec:
        return BallSpec(center=self.center, radius=self.radius)


class VoxelDocument(BaseModel):
    """Serialized voxel domain; masks are base64 run-length encodings."""

    model_config = ConfigDict(frozen=True)

    type: Literal["voxel"] = "voxel"
    origin: Point
    h: float = Field(..., gt=0)
    shape: Tuple[int, int, int]
    occupancy: str
    dirichlet: str


DomainDocument = Annotated[Union[BallDomain, VoxelDocument], Field(discriminator="type")]


class ChargeConfig(BaseModel):
    """Charge points Z with real weights Δ."""

    model_config = ConfigDict(frozen=True)

    points: List[Point] = Field(..., min_length=1)
    weights: List[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_lengths(self) -> "ChargeConfig":
        if len(self.points) != len(self.weights):
            raise ValueError(
                f"points and weights differ in length ({len(self.points)} != {len(self.weights)})"
            )
        if not all(math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite")
        dims = {p.n for p in self.points}
        if len(dims) != 1:
            raise ValueError("all points must share one dimension")
        return self

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return self.points[0].n

    def point_array(self) -> np.ndarray:
        return np.array([p.coords for p in self.points], dtype=float)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def scaled(self, factor: float) -> "ChargeConfig":
        return ChargeConfig(points=self.points, weights=[factor * w for w in self.weights])


class ModulusResult(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    M: float = Field(..., description="Reduced modulus")
    pair_terms: List[List[float]] = Field(..., description="delta_k delta_l g(z_l, z_k)")
    a: List[float] = Field(..., description="Expansion constants a_k")
    error_bar: float = Field(0.0, ge=0)


class AsymptoticTrace(BaseModel):
    model_config = ConfigDict(frozen=True)

    radii: List[float]
    values: List[float]
    limit: float
    error_estimate: Optional[float] = None

    @model_validator(mode="after")
    def _check_radii(self) -> "AsymptoticTrace":
        if len(self.radii) != len(self.values):
            raise ValueError("radii and values differ in length")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("trace values must be finite")
        return self


class VerificationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    case: str
    lhs: float
    rhs: float
    slack: float = Field(..., description="Signed; >= 0 means the inequality holds")
    error_bar: float = Field(..., ge=0)
    holds: bool
    slack_with_corrections: Optional[float] = None
    cross_check: Optional[float] = Field(None, description="Disagreement between independent paths")
    inputs: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_holds(self) -> "VerificationReport":
        if self.holds != (self.slack >= -self.error_bar):
            raise ValueError("holds must equal slack >= -error_bar")
        return self

    @classmethod
    def from_sides(cls, case: str, lhs: float, rhs: float, slack: float, error_bar: float, **extra) -> "VerificationReport":
        return cls(
            case=case,
            lhs=lhs,
            rhs=rhs,
            slack=slack,
            error_bar=error_bar,
            holds=bool(slack >= -error_bar),
            **extra,
        )


class SearchObjective(str, Enum):
    COR25_SLACK = "cor25_slack"
    KUFAREV_SLACK = "kufarev_slack"
    SUM_OF_MODULI = "sum_of_moduli"


class SearchFamily(str, Enum):
    BALLS = "balls"
    SYMMETRIC_PAIR = "symmetric_pair"


class SearchProblem(BaseModel):
    """
    Variables for BALLS: centers of the m balls (m*n values) then the m radii;
    points sit at the centers. For SYMMETRIC_PAIR: [t, rho] with
    a1 = t e1, a2 = -t e1 and both radii rho (n = 3, m = 2).
    """

    model_config = ConfigDict(frozen=True)

    objective: SearchObjective
    family: SearchFamily = SearchFamily.BALLS
    m: int = Field(2, ge=1)
    n: int = Field(3, ge=3)
    weights: List[float]
    lower: List[float]
    upper: List[float]
    free: Optional[List[bool]] = None
    initial: Optional[List[float]] = None
    margin: float = Field(0.0, ge=0)
    penalty: float = Field(1e6, gt=0)

    @model_validator(mode="after")
    def _check_layout(self) -> "SearchProblem":
        size = self.size
        if len(self.lower) != size or len(self.upper) != size:
            raise ValueError(f"bounds must have {size} entries")
        if not all(math.isfinite(v) for v in self.lower + self.upper):
            raise ValueError("bounds must be finite")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound above upper bound")
        if self.free is not None and len(self.free) != size:
            raise ValueError(f"free mask must have {size} entries")
        if self.initial is not None and len(self.initial) != size:
            raise ValueError(f"initial vector must have {size} entries")
        if len(self.weights) != self.m:
            raise ValueError("one weight per ball required")
        if self.objective == SearchObjective.KUFAREV_SLACK and (self.m != 2 or self.n != 3):
            raise ValueError("the two-point Neumann objective needs m = 2 and n = 3")
        if self.family == SearchFamily.SYMMETRIC_PAIR and (self.m != 2 or self.n != 3):
            raise ValueError("the symmetric pair family needs m = 2 and n = 3")
        return self

    @property
    def size(self) -> int:
        if self.family == SearchFamily.SYMMETRIC_PAIR:
            return 2
        return self.m * self.n + self.m

    def free_mask(self) -> np.ndarray:
        if self.free is None:
            return np.ones(self.size, dtype=bool)
        return np.asarray(self.free, dtype=bool)


class TraceEntry(BaseModel):
    """One objective evaluation; `objective` is the best feasible value so far."""

    model_config = ConfigDict(frozen=True)

    iteration: int
    objective: float
    value: float
    feasible: bool = True


class SearchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    best: List[float]
    best_objective: float
    slack: float
    iterations: int
    improving_steps: int
    trace: List[TraceEntry]


class RunManifest(BaseModel):
    subcommand: str
    parameters: Dict[str, Any]
    input_digests: Dict[str, str] = Field(default_factory=dict)
    version: str
    started_at: str
    wall_time_s: float


class CompositionMode(str, Enum):
    SUBDOMAINS = "subdomains"
    GAMMA_SUBSET = "gamma_subset"


class ExtensionDirection(str, Enum):
    ACROSS_GAMMA = "across_gamma"
    ACROSS_FREE = "across_free"


class PartSpec(BaseModel):
    """A domain with its boundary selection and the charges it carries."""

    model_config = ConfigDict(frozen=True)

    domain: DomainDocument
    charges: ChargeConfig


class DecompositionSpec(BaseModel):
    """
    Parent configuration and pairwise non-overlapping parts. `index_map[i][j]`
    is the parent index k(i, j) of point j of part i; derived by matching
    coordinates when omitted.
    """

    model_config = ConfigDict(frozen=True)

    parent: PartSpec
    parts: List[PartSpec] = Field(..., min_length=1)
    index_map: Optional[List[List[int]]] = None
    mode: CompositionMode = CompositionMode.SUBDOMAINS
    corrections: bool = False
    h: Optional[float] = Field(None, gt=0, description="Shared grid spacing for grid-backed parts")


class ExtensionSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    inner: DomainDocument
    outer: DomainDocument
    charges: ChargeConfig
    direction: ExtensionDirection
    h: Optional[float] = Field(None, gt=0)


class KufarevSpec(BaseModel):
    """Two balls inside the unit ball of R³ with one point in each."""

    model_config = ConfigDict(frozen=True)

    d1: BallSpec
    d2: BallSpec
    a1: Point
    a2: Point


class DisjointBallsSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    balls: List[BallSpec] = Field(..., min_length=1)
    points: List[Point]
    weights: List[float]
    rhos: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_lengths(self) -> "DisjointBallsSpec":
        if not (len(self.balls) == len(self.points) == len(self.weights)):
            raise ValueError("balls, points and weights differ in length")
        return self


class ModulusRequest(BaseModel):
    """Input document of the `modulus` subcommand."""

    model_config = ConfigDict(frozen=True)

    domain: DomainDocument
    charges: ChargeConfig
    radii: Optional[List[float]] = Field(None, description="Exclusion radii for the asymptotic trace")
    h: Optional[float] = Field(None, gt=0)
