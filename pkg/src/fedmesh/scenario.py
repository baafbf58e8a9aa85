"""Scenario files: a line-oriented format describing one federation setup.

Grammar (hand-editable, diff-friendly):

    # comment lines and blank lines are ignored
    schema_version = 1            # top-level keys come before any section
    seed = 42
    eager_tickets = true
    inbox_capacity = 1000
    max_virtual_ms = 1000000000

    [space]
    f_min = 3
    f_max = 3

    [dimension speed_ghz]         # order of dimension sections is the
    kind = numeric                # dimension order of the attribute space
    bounds = 0, 4

    [dimension service_type]
    kind = categorical
    labels = P2PTaskExecution, P2PThreadExecution

    [latency]
    intra_cloud_ms = 1
    inter_cloud_ms = 5

    [cloud cloud-1]
    nodes = 4
    speed_ghz = 2.4
    cpu_type = Intel
    service_types = P2PTaskExecution, P2PThreadExecution
    status_update_interval_ms = 5000, 40000
    topology = hub                # or full_p2p

    [workload cloud-1-task]       # the section id is the application id
    model = task                  # or thread
    rows = 5
    cols = 5
    unit_demand = uniform, 3.0, 6.0   # or: constant, 4.8
    submit_cloud = cloud-1
    submit_time_ms = 0

Scenarios that declare clouds must define the four dimensions the scheduling
services build claims from: service_type and cpu_type (categorical),
processors and speed_ghz (numeric).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .errors import FedmeshError
from .federation import (
    DIM_CPU,
    DIM_PROCESSORS,
    DIM_SERVICE,
    DIM_SPEED,
    DEFAULT_MAX_VIRTUAL_MS,
    TOPOLOGIES,
    CloudConfig,
    LatencyModel,
)
from .spatial import CATEGORICAL, NUMERIC, AttributeSpace, DimensionSpec
from .workloads import MODELS, SERVICE_LABELS, DemandDistribution, WorkloadSpec

SCHEMA_VERSION = 1
MAX_CELLS = 100_000

REQUIRED_DIMS = {
    DIM_SERVICE: CATEGORICAL,
    DIM_CPU: CATEGORICAL,
    DIM_PROCESSORS: NUMERIC,
    DIM_SPEED: NUMERIC,
}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    field: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.field}: {self.message}"


class ScenarioError(FedmeshError):
    """Raised when a scenario fails to parse or validate."""

    def __init__(self, source: str, diagnostics: list[Diagnostic]) -> None:
        self.source = source
        self.diagnostics = diagnostics
        summary = "; ".join(str(d) for d in diagnostics[:5])
        extra = "" if len(diagnostics) <= 5 else f" (+{len(diagnostics) - 5} more)"
        super().__init__(f"{source}: {summary}{extra}")


@dataclass(frozen=True)
class Scenario:
    schema_version: int
    seed: int
    eager_tickets: bool
    inbox_capacity: int
    max_virtual_ms: int
    f_min: int
    f_max: int
    dims: tuple[DimensionSpec, ...]
    latency: LatencyModel
    clouds: tuple[CloudConfig, ...]
    workloads: tuple[WorkloadSpec, ...]

    def space(self) -> AttributeSpace:
        return AttributeSpace(dims=self.dims, f_min=self.f_min, f_max=self.f_max)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)

    def with_workloads(self, workloads: tuple[WorkloadSpec, ...]) -> "Scenario":
        return replace(self, workloads=workloads)


class _Section:
    def __init__(self, line: int, kind: str, name: str) -> None:
        self.line = line
        self.kind = kind
        self.name = name
        self.entries: dict[str, tuple[int, str]] = {}


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse and fully validate scenario text; raises ScenarioError."""
    diags: list[Diagnostic] = []
    top = _Section(0, "top", "")
    sections: list[_Section] = []
    current = top

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                diags.append(Diagnostic(lineno, "section", "missing closing ']'"))
                continue
            header = line[1:-1].strip()
            parts = header.split(None, 1)
            kind = parts[0] if parts else ""
            name = parts[1].strip() if len(parts) > 1 else ""
            if kind not in ("space", "dimension", "latency", "cloud", "workload"):
                diags.append(Diagnostic(lineno, "section", f"unknown section type {kind!r}"))
                current = _Section(lineno, "ignored", name)
                continue
            if kind in ("dimension", "cloud", "workload") and not name:
                diags.append(Diagnostic(lineno, "section", f"[{kind}] needs a name"))
            current = _Section(lineno, kind, name)
            sections.append(current)
            continue
        if "=" not in line:
            diags.append(Diagnostic(lineno, "syntax", f"expected 'key = value', got {line!r}"))
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in current.entries:
            diags.append(Diagnostic(lineno, key, "duplicate key in this section"))
        current.entries[key] = (lineno, value)

    builder = _Builder(diags)
    scenario = builder.build(top, sections)
    if diags:
        raise ScenarioError(source, diags)
    assert scenario is not None
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_scenario(text, source=str(path))


def builtin_scenario_path(name: str = "melbourne-5") -> Path:
    """Filesystem path of a scenario shipped with the package."""
    filename = name.replace("-", "") + ".scenario"
    ref = resources.files("fedmesh") / "scenarios" / filename
    return Path(str(ref))


class _Builder:
    def __init__(self, diags: list[Diagnostic]) -> None:
        self.diags = diags

    def error(self, line: int, field: str, message: str) -> None:
        self.diags.append(Diagnostic(line, field, message))

    def get_int(self, section: _Section, key: str, default: int | None = None) -> int | None:
        if key not in section.entries:
            if default is None:
                self.error(section.line, key, "required key missing")
            return default
        line, raw = section.entries.pop(key)
        try:
            return int(raw)
        except ValueError:
            self.error(line, key, f"expected an integer, got {raw!r}")
            return default

    def get_float(self, section: _Section, key: str, default: float | None = None) -> float | None:
        if key not in section.entries:
            if default is None:
                self.error(section.line, key, "required key missing")
            return default
        line, raw = section.entries.pop(key)
        try:
            return float(raw)
        except ValueError:
            self.error(line, key, f"expected a number, got {raw!r}")
            return default

    def get_str(self, section: _Section, key: str, default: str | None = None) -> str | None:
        if key not in section.entries:
            if default is None:
                self.error(section.line, key, "required key missing")
            return default
        _, raw = section.entries.pop(key)
        return raw

    def get_bool(self, section: _Section, key: str, default: bool) -> bool:
        if key not in section.entries:
            return default
        line, raw = section.entries.pop(key)
        if raw in ("true", "false"):
            return raw == "true"
        self.error(line, key, f"expected true or false, got {raw!r}")
        return default

    def get_list(self, section: _Section, key: str) -> tuple[int, list[str]] | None:
        if key not in section.entries:
            self.error(section.line, key, "required key missing")
            return None
        line, raw = section.entries.pop(key)
        items = [item.strip() for item in raw.split(",")]
        if any(not item for item in items):
            self.error(line, key, "empty list item")
            return None
        return line, items

    def leftover(self, section: _Section) -> None:
        for key, (line, _) in section.entries.items():
            self.error(line, key, "unknown key for this section")

    def build(self, top: _Section, sections: list[_Section]) -> Scenario | None:
        version = self.get_int(top, "schema_version")
        seed = self.get_int(top, "seed")
        eager = self.get_bool(top, "eager_tickets", True)
        inbox = self.get_int(top, "inbox_capacity", 1000)
        horizon = self.get_int(top, "max_virtual_ms", DEFAULT_MAX_VIRTUAL_MS)
        self.leftover(top)
        if version is not None and version != SCHEMA_VERSION:
            self.error(top.line, "schema_version", f"unsupported version {version}")
        if inbox is not None and inbox < 1:
            self.error(top.line, "inbox_capacity", "must be >= 1")

        f_min, f_max = 0, 0
        space_sections = [s for s in sections if s.kind == "space"]
        if not space_sections:
            self.error(0, "space", "missing [space] section")
        else:
            if len(space_sections) > 1:
                self.error(space_sections[1].line, "space", "duplicate [space] section")
            sec = space_sections[0]
            f_min = self.get_int(sec, "f_min") or 0
            f_max = self.get_int(sec, "f_max") or 0
            self.leftover(sec)
            if f_min < 1:
                self.error(sec.line, "f_min", f"must be >= 1, got {f_min}")
            if f_max < f_min:
                self.error(sec.line, "f_max", f"must be >= f_min, got {f_max}")

        dims = self.build_dims([s for s in sections if s.kind == "dimension"])
        if dims and f_min >= 1 and f_min ** len(dims) > MAX_CELLS:
            self.error(
                space_sections[0].line if space_sections else 0,
                "f_min",
                f"f_min**dim = {f_min ** len(dims)} exceeds the {MAX_CELLS} cell guard",
            )

        latency = self.build_latency([s for s in sections if s.kind == "latency"])
        clouds = self.build_clouds([s for s in sections if s.kind == "cloud"], dims)
        service_labels: tuple[str, ...] = ()
        for spec in dims:
            if spec.name == DIM_SERVICE and spec.labels is not None:
                service_labels = spec.labels
        workloads = self.build_workloads(
            [s for s in sections if s.kind == "workload"],
            {c.cloud_id for c in clouds},
            service_labels,
        )

        if self.diags:
            return None
        return Scenario(
            schema_version=version or SCHEMA_VERSION,
            seed=seed if seed is not None else 0,
            eager_tickets=eager,
            inbox_capacity=inbox or 1000,
            max_virtual_ms=horizon or DEFAULT_MAX_VIRTUAL_MS,
            f_min=f_min,
            f_max=f_max,
            dims=tuple(dims),
            latency=latency,
            clouds=tuple(clouds),
            workloads=tuple(workloads),
        )

    def build_dims(self, sections: list[_Section]) -> list[DimensionSpec]:
        dims: list[DimensionSpec] = []
        seen: set[str] = set()
        for sec in sections:
            if sec.name in seen:
                self.error(sec.line, "dimension", f"duplicate dimension {sec.name!r}")
                continue
            seen.add(sec.name)
            kind = self.get_str(sec, "kind")
            if kind == NUMERIC:
                got = self.get_list(sec, "bounds")
                self.leftover(sec)
                if got is None:
                    continue
                line, items = got
                if len(items) != 2:
                    self.error(line, "bounds", "expected 'lo, hi'")
                    continue
                try:
                    lo, hi = float(items[0]), float(items[1])
                except ValueError:
                    self.error(line, "bounds", f"expected numbers, got {items}")
                    continue
                if not lo < hi:
                    self.error(line, "bounds", f"need lo < hi, got {lo}, {hi}")
                    continue
                dims.append(DimensionSpec(name=sec.name, kind=NUMERIC, bounds=(lo, hi)))
            elif kind == CATEGORICAL:
                got = self.get_list(sec, "labels")
                self.leftover(sec)
                if got is None:
                    continue
                line, items = got
                if len(set(items)) != len(items):
                    self.error(line, "labels", "labels must be unique")
                    continue
                dims.append(DimensionSpec(name=sec.name, kind=CATEGORICAL, labels=tuple(items)))
            elif kind is not None:
                self.error(sec.line, "kind", f"expected numeric or categorical, got {kind!r}")
                self.leftover(sec)
        return dims

    def build_latency(self, sections: list[_Section]) -> LatencyModel:
        if not sections:
            return LatencyModel()
        if len(sections) > 1:
            self.error(sections[1].line, "latency", "duplicate [latency] section")
        sec = sections[0]
        intra = self.get_int(sec, "intra_cloud_ms", 1)
        inter = self.get_int(sec, "inter_cloud_ms", 5)
        self.leftover(sec)
        if intra is not None and intra < 0 or inter is not None and inter < 0:
            self.error(sec.line, "latency", "latencies must be >= 0")
            return LatencyModel()
        return LatencyModel(intra_cloud_ms=intra, inter_cloud_ms=inter)

    def build_clouds(
        self, sections: list[_Section], dims: list[DimensionSpec]
    ) -> list[CloudConfig]:
        by_name = {d.name: d for d in dims}
        if sections:
            for name, kind in REQUIRED_DIMS.items():
                spec = by_name.get(name)
                if spec is None:
                    self.error(0, "dimension", f"clouds require a {kind} dimension {name!r}")
                elif spec.kind != kind:
                    self.error(0, "dimension", f"dimension {name!r} must be {kind}")
        clouds: list[CloudConfig] = []
        seen: set[str] = set()
        for sec in sections:
            if sec.name in seen:
                self.error(sec.line, "cloud", f"duplicate cloud id {sec.name!r}")
                continue
            seen.add(sec.name)
            nodes = self.get_int(sec, "nodes")
            speed = self.get_float(sec, "speed_ghz")
            cpu = self.get_str(sec, "cpu_type")
            services = self.get_list(sec, "service_types")
            interval = self.get_list(sec, "status_update_interval_ms")
            topology = self.get_str(sec, "topology", "hub")
            self.leftover(sec)
            if None in (nodes, speed, cpu) or services is None or interval is None:
                continue
            if nodes < 1:
                self.error(sec.line, "nodes", f"must be >= 1, got {nodes}")
                continue
            if topology not in TOPOLOGIES:
                self.error(sec.line, "topology", f"expected hub or full_p2p, got {topology!r}")
                continue
            iline, iitems = interval
            try:
                lo, hi = int(iitems[0]), int(iitems[1])
            except (ValueError, IndexError):
                self.error(iline, "status_update_interval_ms", "expected 'lo, hi' integers")
                continue
            if lo < 1 or hi < lo:
                self.error(iline, "status_update_interval_ms", f"need 1 <= lo <= hi, got {lo}, {hi}")
                continue
            sline, slabels = services
            sdim = by_name.get(DIM_SERVICE)
            if sdim is not None and sdim.labels is not None:
                for label in slabels:
                    if label not in sdim.labels:
                        self.error(sline, "service_types", f"{label!r} not a {DIM_SERVICE} label")
            cdim = by_name.get(DIM_CPU)
            if cdim is not None and cdim.labels is not None and cpu not in cdim.labels:
                self.error(sec.line, "cpu_type", f"{cpu!r} not a {DIM_CPU} label")
            vdim = by_name.get(DIM_SPEED)
            if vdim is not None and vdim.bounds is not None:
                lo_b, hi_b = vdim.bounds
                if not lo_b <= speed <= hi_b:
                    self.error(sec.line, "speed_ghz", f"{speed} outside {DIM_SPEED} bounds")
            pdim = by_name.get(DIM_PROCESSORS)
            if pdim is not None and pdim.bounds is not None:
                lo_b, hi_b = pdim.bounds
                if not lo_b <= 1 <= hi_b:
                    self.error(sec.line, "nodes", f"{DIM_PROCESSORS} bounds must include 1")
            clouds.append(
                CloudConfig(
                    cloud_id=sec.name,
                    node_count=nodes,
                    node_speed_ghz=speed,
                    cpu_type=cpu,
                    service_types=tuple(slabels),
                    status_update_interval_ms=(lo, hi),
                    topology=topology,
                )
            )
        return clouds

    def build_workloads(
        self, sections: list[_Section], cloud_ids: set[str], service_labels: tuple[str, ...]
    ) -> list[WorkloadSpec]:
        workloads: list[WorkloadSpec] = []
        seen: set[str] = set()
        for sec in sections:
            if sec.name in seen:
                self.error(sec.line, "workload", f"duplicate workload id {sec.name!r}")
                continue
            seen.add(sec.name)
            model = self.get_str(sec, "model")
            rows = self.get_int(sec, "rows")
            cols = self.get_int(sec, "cols")
            demand = self.get_list(sec, "unit_demand")
            submit_cloud = self.get_str(sec, "submit_cloud")
            submit_time = self.get_int(sec, "submit_time_ms", 0)
            self.leftover(sec)
            if None in (model, rows, cols, submit_cloud) or demand is None:
                continue
            if model not in MODELS:
                self.error(sec.line, "model", f"expected one of {MODELS}, got {model!r}")
                continue
            if service_labels and SERVICE_LABELS[model] not in service_labels:
                self.error(
                    sec.line, "model",
                    f"{SERVICE_LABELS[model]!r} is not a {DIM_SERVICE} label, "
                    f"so {model} claims could never be expressed",
                )
                continue
            if rows < 1 or cols < 1:
                self.error(sec.line, "rows", "rows and cols must be >= 1")
                continue
            if submit_cloud not in cloud_ids:
                self.error(sec.line, "submit_cloud", f"unknown cloud {submit_cloud!r}")
                continue
            if submit_time < 0:
                self.error(sec.line, "submit_time_ms", "must be >= 0")
                continue
            dline, ditems = demand
            dist = self.parse_demand(dline, ditems)
            if dist is None:
                continue
            workloads.append(
                WorkloadSpec(
                    model=model,
                    rows=rows,
                    cols=cols,
                    unit_demand=dist,
                    submit_cloud=submit_cloud,
                    submit_time_ms=submit_time,
                    app_id=sec.name,
                )
            )
        return workloads

    def parse_demand(self, line: int, items: list[str]) -> DemandDistribution | None:
        try:
            if items[0] == "constant" and len(items) == 2:
                return DemandDistribution.constant(float(items[1]))
            if items[0] == "uniform" and len(items) == 3:
                lo, hi = float(items[1]), float(items[2])
                if not 0 < lo <= hi:
                    self.error(line, "unit_demand", f"need 0 < lo <= hi, got {lo}, {hi}")
                    return None
                return DemandDistribution.uniform(lo, hi)
        except ValueError:
            pass
        self.error(line, "unit_demand", "expected 'constant, X' or 'uniform, LO, HI'")
        return None
