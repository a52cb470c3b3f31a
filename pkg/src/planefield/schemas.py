"""Schemas for planefield."""

import json
import math
from collections.abc import Mapping
from functools import cached_property
from typing import Annotated, Any, Literal, Self, cast

import numpy as np
import numpy.typing as npt
import pydantic

FloatArray = npt.NDArray[np.float64]


def _float_array(value: Any) -> FloatArray:  # noqa: ANN401
    return np.asarray(value, dtype=np.float64)


def _any_array(value: Any) -> npt.NDArray[Any]:  # noqa: ANN401
    return np.asarray(value)


def _to_list(value: npt.NDArray[Any]) -> list[Any]:
    return value.tolist()


FloatArrayField = Annotated[
    FloatArray,
    pydantic.PlainValidator(_float_array),
    pydantic.PlainSerializer(_to_list, when_used="json"),
]
AnyArrayField = Annotated[
    npt.NDArray[Any],
    pydantic.PlainValidator(_any_array),
    pydantic.PlainSerializer(_to_list, when_used="json"),
]

Order = Annotated[float, pydantic.Field(gt=0.0, le=1.0)]
"""Fractional order in (0, 1]."""
NonNegative = Annotated[float, pydantic.Field(ge=0.0)]


class BaseModel(pydantic.BaseModel):
    """`pydantic.BaseModel` wrapper, immutable and strict about unknown fields."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")


class ArrayModel(BaseModel):
    """Model holding numpy arrays."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)


####################################################################################################
# Series
####################################################################################################


class SeriesControl(BaseModel):
    """Truncation policy shared by every special-function and pmf series."""

    tol: pydantic.PositiveFloat = 1e-13
    """Absolute truncation target."""
    max_terms: pydantic.PositiveInt = 500
    """Term budget."""
    alternating_guard: bool = True
    """Monitor cancellation of alternating series."""


class WrightSpec(BaseModel):
    """Parameters (a_i, alpha_i) and (b_j, beta_j) of a generalized Wright function."""

    upper: tuple[tuple[float, float], ...]
    lower: tuple[tuple[float, float], ...]

    @pydantic.field_validator("upper", "lower")
    @classmethod
    def _nonzero_scales(
        cls: type[Self], value: tuple[tuple[float, float], ...]
    ) -> tuple[tuple[float, float], ...]:
        if any(scale == 0.0 for _, scale in value):
            msg = "Gamma argument scales must be nonzero"
            raise ValueError(msg)
        return value

    def shifted(self: Self) -> "WrightSpec":
        """Parameters of the derivative: every a_i, b_j moves by its own scale."""
        return WrightSpec(
            upper=tuple((a + alpha, alpha) for a, alpha in self.upper),
            lower=tuple((b + beta, beta) for b, beta in self.lower),
        )


####################################################################################################
# Field parameters
####################################################################################################


class FieldParams(BaseModel):
    """Rate and fractional orders; the (1, 1, 1) orders give the plain Poisson random field."""

    lam: pydantic.PositiveFloat = 1.0
    """Rate, points per unit area."""
    alpha1: Order = 1.0
    """Time-fractional order along the first axis."""
    alpha2: Order = 1.0
    """Time-fractional order along the second axis."""
    beta: Order = 1.0
    """Space-fractional order."""

    def time_scale(self: Self, t1: Any, t2: Any) -> Any:  # noqa: ANN401
        """t1^alpha1 * t2^alpha2, elementwise."""
        return np.power(t1, self.alpha1) * np.power(t2, self.alpha2)

    @property
    def is_plain(self: Self) -> bool:
        """All orders equal to 1."""
        return self.alpha1 == self.alpha2 == self.beta == 1.0


class CompoundParams(BaseModel):
    """Law of the marks attached to the points."""

    kind: Literal["normal", "exponential", "mittag_leffler"] = "normal"
    sigma: pydantic.PositiveFloat = 1.0
    """Rate of exponential and Mittag-Leffler marks (ignored for normal marks)."""
    beta_c: Order = 1.0
    """Mittag-Leffler order of the marks, 1 for exponential marks."""


####################################################################################################
# Geometry
####################################################################################################


class Rect(BaseModel):
    """Rectangle (s1, t1] x (s2, t2]."""

    s1: NonNegative = 0.0
    t1: NonNegative
    s2: NonNegative = 0.0
    t2: NonNegative

    @pydantic.model_validator(mode="after")
    def _ordered(self: Self) -> Self:
        if self.s1 > self.t1 or self.s2 > self.t2:
            msg = f"Expected s1 <= t1 and s2 <= t2, got {self!r}"
            raise ValueError(msg)
        return self

    @property
    def area(self: Self) -> float:
        """Rectangle area."""
        return (self.t1 - self.s1) * (self.t2 - self.s2)

    def translated(self: Self, dx: float, dy: float) -> "Rect":
        """Same rectangle moved by (dx, dy)."""
        return Rect(s1=self.s1 + dx, t1=self.t1 + dx, s2=self.s2 + dy, t2=self.t2 + dy)

    def is_disjoint(self: Self, other: "Rect") -> bool:
        """No common interior."""
        return (
            self.t1 <= other.s1
            or other.t1 <= self.s1
            or self.t2 <= other.s2
            or other.t2 <= self.s2
        )

    def same_shape(self: Self, other: "Rect") -> bool:
        """Same side lengths."""
        return math.isclose(self.t1 - self.s1, other.t1 - other.s1) and math.isclose(
            self.t2 - self.s2, other.t2 - other.s2
        )


class GridSpec(BaseModel):
    """Uniform grid of [0, t1_max] x [0, t2_max] with n1 x n2 cells."""

    t1_max: pydantic.PositiveFloat
    t2_max: pydantic.PositiveFloat
    n1: pydantic.PositiveInt
    n2: pydantic.PositiveInt

    @classmethod
    def from_step(cls: type[Self], t1_max: float, t2_max: float, h: float) -> Self:
        """Grid with step close to h on both axes."""
        return cls(
            t1_max=t1_max,
            t2_max=t2_max,
            n1=max(1, round(t1_max / h)),
            n2=max(1, round(t2_max / h)),
        )

    @property
    def h1(self: Self) -> float:
        """Step along the first axis."""
        return self.t1_max / self.n1

    @property
    def h2(self: Self) -> float:
        """Step along the second axis."""
        return self.t2_max / self.n2

    @property
    def cell_area(self: Self) -> float:
        """Area of one cell."""
        return self.h1 * self.h2

    def nodes1(self: Self) -> FloatArray:
        """Node coordinates along the first axis, 0 included."""
        return np.arange(self.n1 + 1, dtype=np.float64) * self.h1

    def nodes2(self: Self) -> FloatArray:
        """Node coordinates along the second axis, 0 included."""
        return np.arange(self.n2 + 1, dtype=np.float64) * self.h2

    def mesh(self: Self) -> tuple[FloatArray, FloatArray]:
        """Node coordinates, indexed [i, j]."""
        return np.meshgrid(self.nodes1(), self.nodes2(), indexing="ij")

    def refined(self: Self) -> "GridSpec":
        """Same domain, half the step."""
        return GridSpec(t1_max=self.t1_max, t2_max=self.t2_max, n1=2 * self.n1, n2=2 * self.n2)


####################################################################################################
# Samples
####################################################################################################


class PointSet(ArrayModel):
    """Planar points drawn in a generating rectangle."""

    points: FloatArrayField
    """Array of shape (K, 2)."""
    rect: Rect
    lam: pydantic.PositiveFloat

    @pydantic.field_validator("points")
    @classmethod
    def _shape(cls: type[Self], value: FloatArray) -> FloatArray:
        if value.ndim != 2 or value.shape[1] != 2:
            msg = f"Expected points of shape (K, 2), got {value.shape}"
            raise ValueError(msg)
        return value

    def __len__(self: Self) -> int:
        return int(self.points.shape[0])


class SampleBatch(ArrayModel):
    """Seeded batch of i.i.d. realizations of a scalar observable."""

    seed: int
    values: AnyArrayField
    descriptor: str

    @property
    def n(self: Self) -> int:
        """Number of realizations."""
        return int(self.values.shape[0])


####################################################################################################
# Reports
####################################################################################################

Detail = float | int | str | bool | list[float] | list[int] | list[str] | None


class ComparisonReport(BaseModel):
    """Outcome of a statistical or numerical check."""

    statistic_name: str
    value: float
    threshold: float
    n_samples: int
    passed: bool = False
    details: dict[str, Detail] = pydantic.Field(default_factory=dict)

    @pydantic.model_validator(mode="before")
    @classmethod
    def _set_passed(cls: type[Self], data: Any) -> Any:  # noqa: ANN401
        if isinstance(data, Mapping):
            fields = cast(dict[str, Any], dict(data))  # pyright: ignore[reportUnknownArgumentType]
            fields["passed"] = bool(float(fields["value"]) <= float(fields["threshold"]))
            return fields
        return data

    def to_json(self: Self) -> str:
        """JSON with sorted keys."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)

    def summary(self: Self) -> str:
        """One line human summary."""
        status = "PASS" if self.passed else "FAIL"
        name = self.details.get("check", self.statistic_name)
        return (
            f"{status} {name}: {self.statistic_name}={self.value:.6g} "
            f"threshold={self.threshold:.6g} n={self.n_samples}"
        )


class ResidualGrid(ArrayModel):
    """Residuals of a governing system on the interior nodes of a window of a grid."""

    grid: GridSpec
    name: str
    states: tuple[int, ...]
    axis1: FloatArrayField
    """Coordinates of the residual nodes along the first axis."""
    axis2: FloatArrayField
    """Coordinates of the residual nodes along the second axis."""
    values: FloatArrayField
    """Residuals, shape (len(states), len(axis1), len(axis2))."""

    @pydantic.model_validator(mode="after")
    def _aligned(self: Self) -> Self:
        expected = (len(self.states), self.axis1.shape[0], self.axis2.shape[0])
        if self.values.shape != expected:
            msg = f"Residual array of shape {self.values.shape} does not match {expected}"
            raise ValueError(msg)
        return self

    @cached_property
    def norm(self: Self) -> float:
        """Max-abs residual."""
        if self.values.size == 0:
            return 0.0
        return float(np.max(np.abs(self.values)))

    def state_norms(self: Self) -> dict[int, float]:
        """Max-abs residual per state."""
        return {
            n: float(np.max(np.abs(values))) if values.size else 0.0
            for n, values in zip(self.states, self.values, strict=True)
        }


####################################################################################################
# Run configuration
####################################################################################################

Command = Literal["pmf", "simulate", "verify", "pde", "converge"]
OutputFormat = Literal["csv", "json"]


class RunConfig(BaseModel):
    """Fully resolved configuration of one command line run."""

    command: Command
    family: str | None = None
    check: str | None = None
    variant: str | None = None
    params: FieldParams = FieldParams()
    compounding: CompoundParams | None = None
    grid: GridSpec | None = None
    seed: int = 0
    n_samples: pydantic.PositiveInt = 100_000
    nmax: pydantic.NonNegativeInt = 10
    t1: NonNegative = 1.0
    t2: NonNegative = 1.0
    h: pydantic.PositiveFloat = 1 / 64
    scales: tuple[pydantic.PositiveInt, ...] = (5, 20, 100)
    u_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    workers: pydantic.PositiveInt = 1
    trials: pydantic.PositiveInt = 1
    """Seeded repetitions of a check, judged by their failure rate when above 1."""
    output_path: str = "-"
    format: OutputFormat = "csv"
