"""Pydantic request/response models for the service (and the thin CLI client).

Exact rationals travel as JSON integers or "p/q" strings, mirroring the
instance file schema, so values survive the wire byte-exactly.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from ..experiments import TrialStats, format_value
from ..instance_files import instance_from_dict, instance_to_dict
from ..problems import Instance

Rational = Union[int, str]


class InstanceModel(BaseModel):
    """One problem instance, in the instance file schema."""

    model_config = ConfigDict(extra="forbid")

    family: str
    n: Optional[int] = None
    k: Optional[int] = None
    d: Optional[int] = None
    m: Optional[int] = None
    weights: Optional[list[Rational]] = None
    weight_matrix: Optional[list[list[Rational]]] = None
    optimum: Optional[Rational] = None

    def to_instance(self) -> Instance:
        return instance_from_dict(self.model_dump(exclude_none=True))

    @classmethod
    def from_instance(cls, inst: Instance) -> "InstanceModel":
        return cls(**instance_to_dict(inst))


class TrialStatsModel(BaseModel):
    cell: str
    family: str
    n: int
    k: Optional[int] = None
    d: Optional[int] = None
    r: Optional[int] = None
    m: Optional[int] = None
    trials: int
    censored: int
    mean: str
    median: str
    stddev: float
    stderr: float
    q05: str
    q95: str
    max_evaluations: int
    lower_bound: bool

    @classmethod
    def from_stats(cls, stats: TrialStats) -> "TrialStatsModel":
        return cls(
            cell=stats.cell,
            family=stats.family,
            n=stats.n,
            k=stats.k,
            d=stats.d,
            r=stats.r,
            m=stats.m,
            trials=stats.trials,
            censored=stats.censored,
            mean=format_value(stats.mean),
            median=format_value(stats.median),
            stddev=stats.stddev,
            stderr=stats.stderr,
            q05=format_value(stats.q05),
            q95=format_value(stats.q95),
            max_evaluations=stats.max_evaluations,
            lower_bound=stats.is_lower_bound,
        )


class RunRequest(BaseModel):
    instance: InstanceModel
    seed: int = 0
    trials: int = Field(default=1, ge=1)
    max_evaluations: int = Field(default=10**9, ge=1)
    stop_on_optimum: bool = True
    workers: int = Field(default=1, ge=1)


class RunResponse(BaseModel):
    stats: TrialStatsModel
    record: str
    csv: str


class SweepSpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: str
    grid: Optional[dict[str, list[int]]] = None
    cells: Optional[list[dict[str, int]]] = None
    trials: int = 100
    master_seed: int = 0
    max_evaluations: int = 10**9
    max_seconds_per_cell: Optional[float] = None


class SweepRequest(BaseModel):
    spec: SweepSpecModel
    workers: int = Field(default=1, ge=1)


class SkippedCell(BaseModel):
    cell: str
    reason: str


class SweepResponse(BaseModel):
    rows: list[TrialStatsModel]
    skipped: list[SkippedCell]
    csv: str


class EfhtRequest(BaseModel):
    kind: Literal["deletion-onemax", "accept-all"]
    n: int = Field(ge=1)
    k: Optional[int] = None
    d: int = 0
    init: Union[Literal["uniform"], int] = "uniform"
    full: bool = False
    mode: Literal["auto", "exact", "mp", "float"] = "auto"
    include_table: bool = False


class EfhtResponse(BaseModel):
    kind: str
    states: str
    mode: str
    init: str
    mean_evaluations: str
    residual: Optional[float] = None
    table_csv: Optional[str] = None


class BruteRequest(BaseModel):
    instance: InstanceModel
    mode: Literal["optimum", "check-F"]
    samples: int = Field(default=512, ge=1)  # check-F sample count for n > 12
    seed: int = 0


class BruteResponse(BaseModel):
    mode: str
    optimum: Optional[str] = None
    stored_optimum: Optional[str] = None
    matches_stored: Optional[bool] = None
    checked: Optional[int] = None
    agree: Optional[bool] = None


class DriftRequest(BaseModel):
    family: Literal[
        "walk-piecewise",
        "walk-linear",
        "ones-gap",
        "leading-block",
        "leading-ones-gap",
        "objective-gap",
    ]
    n: Optional[int] = None
    k: Optional[int] = None
    d: Optional[int] = None
    r: Optional[int] = None
    instance: Optional[InstanceModel] = None
    states: str = Field(description="ones:A..B | ones:j1,j2,... | exhaustive:A..B")
    samples: int = Field(default=10_000, ge=1)
    kind: Literal["additive", "multiplicative"] = "additive"
    c: Union[float, str] = 0.0
    seed: int = 0


class DriftRow(BaseModel):
    state: str
    ones: int
    distance: str
    drift: float
    stderr: float
    required: float
    margin: float
    flagged: bool


class DriftResponse(BaseModel):
    family: str
    kind: str
    c: float
    all_pass: bool
    v_min: Optional[str] = None
    implied_evaluations_bound: Optional[float] = None
    rows: list[DriftRow]
    csv: str


class VerifyRequest(BaseModel):
    quick: bool = False
    criteria: Optional[list[int]] = None


class CriterionModel(BaseModel):
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


class VerifyResponse(BaseModel):
    passed: bool
    profile: str
    results: list[CriterionModel]


class HealthResponse(BaseModel):
    status: str
    version: str
