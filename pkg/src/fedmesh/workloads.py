"""Synthetic task/thread workload generation and run metrics.

Workloads mirror parameter-sweep applications partitioned into rows x cols
independent units. The two programming models behave identically in the
simulator except for the execution-service label their claims request.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .coordination import AllocationDecision
from .engine import RngStream
from .errors import InvalidArgumentError

TASK = "task"
THREAD = "thread"
MODELS = (TASK, THREAD)

SERVICE_LABELS = {TASK: "P2PTaskExecution", THREAD: "P2PThreadExecution"}

SWEEP_SIZES = (5, 7, 9, 11, 13)


@dataclass(frozen=True)
class DemandDistribution:
    """Per-unit service demand in GHz-seconds: constant or uniform[lo, hi]."""

    kind: str
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "uniform"):
            raise InvalidArgumentError(f"unknown demand distribution {self.kind!r}")
        if self.lo <= 0 or self.hi < self.lo:
            raise InvalidArgumentError("demand bounds must satisfy 0 < lo <= hi")

    @classmethod
    def constant(cls, value: float) -> "DemandDistribution":
        return cls("constant", value, value)

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "DemandDistribution":
        return cls("uniform", lo, hi)


@dataclass(frozen=True)
class WorkloadSpec:
    model: str
    rows: int
    cols: int
    unit_demand: DemandDistribution
    submit_cloud: str
    submit_time_ms: int = 0
    app_id: str | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise InvalidArgumentError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.rows < 1 or self.cols < 1:
            raise InvalidArgumentError("rows and cols must be >= 1")
        if self.submit_time_ms < 0:
            raise InvalidArgumentError("submit_time_ms must be >= 0")

    @property
    def unit_count(self) -> int:
        return self.rows * self.cols

    @property
    def resolved_app_id(self) -> str:
        if self.app_id is not None:
            return self.app_id
        return f"{self.submit_cloud}/{self.model}-{self.rows}x{self.cols}"


@dataclass(frozen=True)
class WorkUnit:
    unit_id: str
    app_id: str
    model: str
    demand_ghz_s: float


def generate_units(spec: WorkloadSpec, seed: int) -> list[WorkUnit]:
    """rows x cols independent units with seeded per-unit demands."""
    app_id = spec.resolved_app_id
    stream = RngStream(seed, f"workload/{app_id}")
    units = []
    for k in range(spec.unit_count):
        if spec.unit_demand.kind == "constant":
            demand = spec.unit_demand.lo
        else:
            demand = stream.uniform(spec.unit_demand.lo, spec.unit_demand.hi)
        units.append(
            WorkUnit(unit_id=f"{app_id}#{k}", app_id=app_id, model=spec.model, demand_ghz_s=demand)
        )
    return units


def granularity_sweep(model: str, base: WorkloadSpec) -> list[WorkloadSpec]:
    """The five observation points: square sizes 5, 7, 9, 11, 13."""
    return [replace(base, model=model, rows=s, cols=s) for s in SWEEP_SIZES]


@dataclass
class MetricsSink:
    """Aggregates emitted by one simulation run.

    Everything here is a pure aggregation of the event trace; counters only
    ever grow while the run is in flight.
    """

    response_times: dict[str, float] = field(default_factory=dict)
    completed_jobs: dict[tuple[str, str], int] = field(default_factory=dict)
    completed_by_model: dict[tuple[str, str], int] = field(default_factory=dict)
    submitted_units: dict[str, int] = field(default_factory=dict)
    completed_units: dict[str, int] = field(default_factory=dict)
    decisions: list[AllocationDecision] = field(default_factory=list)
    stale_tickets: int = 0
    tickets_published: int = 0

    def record_submitted(self, model: str, count: int) -> None:
        self.submitted_units[model] = self.submitted_units.get(model, 0) + count

    def record_decision(self, decision: AllocationDecision) -> None:
        self.decisions.append(decision)

    def record_completion(self, cloud_id: str, service_label: str, model: str) -> None:
        key = (cloud_id, service_label)
        self.completed_jobs[key] = self.completed_jobs.get(key, 0) + 1
        mkey = (cloud_id, model)
        self.completed_by_model[mkey] = self.completed_by_model.get(mkey, 0) + 1
        self.completed_units[model] = self.completed_units.get(model, 0) + 1

    def record_response(self, app_id: str, seconds: float) -> None:
        self.response_times[app_id] = seconds


@dataclass(frozen=True)
class JobShare:
    """Per-cloud completed-job percentages, one column per model."""

    shares: dict[str, tuple[float, float]]
    zero_models: tuple[str, ...]


def job_share_percent(sink: MetricsSink, cloud_ids: tuple[str, ...]) -> JobShare:
    """Normalize per-cloud completed counts to 100% per model.

    A model that ran no jobs at all reports 0 for every cloud and is flagged
    instead of dividing by zero.
    """
    totals = {model: sum(
        count for (cloud, m), count in sink.completed_by_model.items() if m == model
    ) for model in MODELS}
    zero_models = tuple(m for m in MODELS if totals[m] == 0)
    shares: dict[str, tuple[float, float]] = {}
    for cloud in cloud_ids:
        row = []
        for model in MODELS:
            done = sink.completed_by_model.get((cloud, model), 0)
            row.append(0.0 if totals[model] == 0 else 100.0 * done / totals[model])
        shares[cloud] = (row[0], row[1])
    return JobShare(shares=shares, zero_models=zero_models)
