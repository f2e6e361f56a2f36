# restoration_engine/models.py
import math
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import InvalidRegionError

# --- Enumerations ---
# str mixin so members compare equal to their values and dump as plain strings.


class RegionShape(str, Enum):
    """Shape of the service region the demand nodes are scattered over."""

    SQUARE = "square"
    RECTANGLE = "rectangle"
    CIRCLE = "circle"

    @classmethod
    def parse(cls, text: str) -> "RegionShape":
        """Accepts the CLI spelling `rect` as well as the enum values."""
        aliases = {"rect": cls.RECTANGLE}
        key = text.strip().lower()
        return aliases.get(key) or cls(key)


class AggregationMode(str, Enum):
    """
    Post-decision state representations used as lookup-table keys.

    FULL keeps the whole state; SA1 keeps the known-faulty set and counts of
    everything else; SA2 keeps only counts; SA3 keeps location, |U+| and |U1|.
    """

    FULL = "full"
    SA1 = "sa1"
    SA2 = "sa2"
    SA3 = "sa3"


# --- Geometry ---


class GeoPoint(BaseModel):
    """A location in the plane, in length units."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float

    def distance(self, other: "GeoPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


ORIGIN = GeoPoint(x=0.0, y=0.0)


class Region(BaseModel):
    """
    Service region. For square/rectangle `origin` is the lower-left corner,
    for a circle it is the centre.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    shape: RegionShape
    width: Optional[float] = None
    height: Optional[float] = None
    radius: Optional[float] = None
    origin: GeoPoint = ORIGIN

    @model_validator(mode="after")
    def _check_dimensions(self) -> "Region":
        self.dimensions()
        return self

    @classmethod
    def square(cls, side: float, origin: GeoPoint = ORIGIN) -> "Region":
        return cls(shape=RegionShape.SQUARE, width=side, height=side, origin=origin)

    @classmethod
    def rectangle(cls, width: float, height: float, origin: GeoPoint = ORIGIN) -> "Region":
        return cls(shape=RegionShape.RECTANGLE, width=width, height=height, origin=origin)

    @classmethod
    def circle(cls, radius: float, origin: GeoPoint = ORIGIN) -> "Region":
        return cls(shape=RegionShape.CIRCLE, radius=radius, origin=origin)

    @classmethod
    def from_dims(cls, shape: RegionShape, dims: List[float]) -> "Region":
        """Builds a region from the CLI / manifest vocabulary (`--dims 10` or `--dims 10,5`)."""
        shape = RegionShape(shape)
        if shape is RegionShape.SQUARE and len(dims) == 1:
            return cls.square(dims[0])
        if shape is RegionShape.RECTANGLE and len(dims) == 2:
            return cls.rectangle(dims[0], dims[1])
        if shape is RegionShape.CIRCLE and len(dims) == 1:
            return cls.circle(dims[0])
        raise InvalidRegionError(f"Dimensions {dims} do not describe a {shape.value} region")

    def dimensions(self) -> tuple[float, float]:
        """
        Returns (width, height) for polygons or (radius, radius) for circles.

        Raises:
            InvalidRegionError: if a required dimension is missing or not positive.
        """
        if self.shape is RegionShape.CIRCLE:
            if self.radius is None or not self.radius > 0:
                raise InvalidRegionError(f"Circle radius must be positive, got {self.radius}")
            return self.radius, self.radius
        width = self.width
        height = self.width if self.shape is RegionShape.SQUARE else self.height
        if width is None or height is None or not (width > 0 and height > 0):
            raise InvalidRegionError(
                f"{self.shape.value} dimensions must be positive, got {width}x{height}"
            )
        if self.shape is RegionShape.SQUARE and self.height not in (None, width):
            raise InvalidRegionError(f"Square sides differ: {width} vs {self.height}")
        return width, height

    def contains(self, point: GeoPoint, tol: float = 1e-9) -> bool:
        if self.shape is RegionShape.CIRCLE:
            return point.distance(self.origin) <= self.radius + tol
        width, height = self.dimensions()
        return (
            self.origin.x - tol <= point.x <= self.origin.x + width + tol
            and self.origin.y - tol <= point.y <= self.origin.y + height + tol
        )


# --- Configuration blocks ---


class GenerationConfig(BaseModel):
    """Parameters for one random instance (one row of the experiment grid)."""

    nodes: int = Field(ge=1, le=64)
    region: Region = Region.square(10.0)
    degree_bound: int = Field(default=3, ge=2)
    reduce: int = Field(default=0, ge=0)
    repair_time: float = Field(default=0.0, ge=0.0)
    fault_prob: float = Field(default=0.5, gt=0.0, lt=1.0)
    seed: int = 0
    radial: Literal["area", "uniform-radius"] = "area"
    crossing_attempts: int = Field(default=50, ge=1)
    max_rounds: int = Field(default=500, ge=1)


class TrainConfig(BaseModel):
    """Learner settings. Defaults follow the batch protocol of the method."""

    warmup_iterations: int = Field(default=100_000, gt=0)
    batch_size: int = Field(default=10_000, gt=0)
    frequent_fraction: float = Field(default=0.75, gt=0.0, lt=1.0)
    stop_threshold: float = Field(default=0.5, gt=0.0)
    exploration_constant: float = Field(default=1.0, gt=0.0)
    max_iterations: int = Field(default=5_000_000, ge=0)
    seed: int = 0
    trace_keys: int = Field(default=0, ge=0)


DEFAULT_MIN_VISITS = 10


class EvaluationConfig(BaseModel):
    policies: List[str] = Field(default_factory=lambda: ["snrr", "ps", "nn"])
    realizations: int = Field(default=1000, ge=1)
    seed: int = 0
    # Table keys visited fewer times than this are ignored when routing.
    min_visits: int = Field(default=DEFAULT_MIN_VISITS, ge=0)

    @field_validator("policies")
    @classmethod
    def _unique(cls, names: List[str]) -> List[str]:
        lowered = [name.strip().lower() for name in names]
        if len(set(lowered)) != len(lowered):
            raise ValueError(f"Duplicate policy names in {names}")
        return lowered


# --- Experiment manifest ---


class TrainSpec(BaseModel):
    """One learner run per network/parameter case."""

    mode: AggregationMode
    pruning: bool = True
    name: Optional[str] = None

    def label(self) -> str:
        if self.name:
            return self.name
        if self.mode is AggregationMode.FULL:
            return "snrr" if self.pruning else "nrr"
        return self.mode.value


class NetworkEntry(BaseModel):
    """
    One network of the experiment grid. Either generated from the
    same vocabulary as `gen` or loaded from an existing instance file.
    """

    name: str
    instance: Optional[Path] = None
    nodes: Optional[int] = Field(default=None, ge=1, le=64)
    shape: RegionShape = RegionShape.SQUARE
    dims: List[float] = Field(default_factory=lambda: [10.0])
    degree: int = Field(default=3, ge=2)
    reduce: int = Field(default=0, ge=0)
    seed: Optional[int] = None
    p: List[float] = Field(default_factory=lambda: [0.5])
    s: List[float] = Field(default_factory=lambda: [0.0])

    @field_validator("shape", mode="before")
    @classmethod
    def _shape_alias(cls, value):
        return RegionShape.parse(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def _source(self) -> "NetworkEntry":
        if self.instance is None and self.nodes is None:
            raise ValueError(f"Network '{self.name}' needs either 'instance' or 'nodes'")
        if any(not 0.0 < p < 1.0 for p in self.p):
            raise ValueError(f"Network '{self.name}': fault probabilities must lie in (0, 1)")
        if any(s < 0 for s in self.s):
            raise ValueError(f"Network '{self.name}': repair times must be non-negative")
        if self.instance is None:
            Region.from_dims(self.shape, self.dims)
        return self


class ExperimentManifest(BaseModel):
    seed: int = 0
    output_dir: Path
    networks: List[NetworkEntry] = Field(min_length=1)
    training: List[TrainSpec] = Field(default_factory=list)
    train_config: TrainConfig = Field(default_factory=TrainConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    @model_validator(mode="after")
    def _unique_names(self) -> "ExperimentManifest":
        names = [entry.name for entry in self.networks]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate network names: {names}")
        labels = [spec.label() for spec in self.training]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Duplicate training labels: {labels}")
        return self


# --- File documents ---


class InstanceDocument(BaseModel):
    """On-disk form of an instance. Distances are recomputed on load."""

    format: Literal["trnrp-instance"] = "trnrp-instance"
    version: int = 1
    tool_version: str
    nodes: int = Field(ge=1)
    region: Optional[Region] = None
    seed: int
    degree_bound: int
    reduce_requested: int = 0
    reduce_applied: int = 0
    repair_time: float = Field(ge=0.0)
    fault_prob: float = Field(gt=0.0, lt=1.0)
    points: List[GeoPoint]  # index 0 is the depot
    parents: List[Optional[int]]  # index = node id; depot and source have none
    depth: int


class TableEntry(BaseModel):
    key: List[int]
    value: float = Field(ge=0.0, allow_inf_nan=False)
    visits: int = Field(ge=1)


class KeyTrace(BaseModel):
    key: List[int]
    points: List[tuple[int, float]]


class ValueTableDocument(BaseModel):
    format: Literal["trnrp-value-table"] = "trnrp-value-table"
    version: int = 1
    tool_version: str
    mode: AggregationMode
    pruning: bool
    nodes: int
    seed: int
    iterations: int
    config: Optional[TrainConfig] = None
    batch_deltas: List[float] = Field(default_factory=list)
    entries: List[TableEntry] = Field(default_factory=list)
    traces: List[KeyTrace] = Field(default_factory=list)
