"""Coordinator services wiring schedulers, execution nodes, and the overlay.

Message flow for one work unit (all delays are per-link scenario constants):

  1. a client submission reaches the cloud's scheduling service directly;
  2. the scheduler wraps each unit in a resource claim and posts it to every
     index cell the claim's region intersects (one message per cell owner);
  3. idle execution nodes periodically advertise themselves with resource
     tickets, one per hosted service type, routed to their single cell owner;
  4. the owning peer allocates the ticket against the cell's waiting claims;
     replicas of a served claim are retired from every other cell before any
     further event fires, which makes service exactly-once by construction;
  5. the peer notifies the claim's scheduler, the scheduler dispatches the
     unit to the granted node, the node executes for demand/speed seconds and
     returns the result; on completion the node (optionally) re-advertises.

A node with an allocation in flight is "committed": its stale tickets are
discarded by the coordination peers until the unit finishes, so a node never
executes two units at once even though status tickets are periodic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, ClassVar, NamedTuple

from .coordination import AllocationDecision, ClaimStore
from .engine import RngStream, SimEvent, SimulationEngine
from .errors import (
    ConsistencyError,
    InvalidArgumentError,
    NotReadyError,
    SimulationError,
)
from .overlay import OverlayMembership
from .spatial import (
    AttributeSpace,
    Eq,
    Ge,
    IndexCell,
    ResourceClaim,
    ResourceTicket,
    build_base_cells,
    map_claim,
    map_ticket,
    point_satisfies,
)
from .workloads import (
    SERVICE_LABELS,
    MetricsSink,
    WorkloadSpec,
    WorkUnit,
    generate_units,
)

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario

log = logging.getLogger("fedmesh.federation")

HUB = "hub"
FULL_P2P = "full_p2p"
TOPOLOGIES = (HUB, FULL_P2P)

DEFAULT_MAX_VIRTUAL_MS = 1_000_000_000

# Dimension names the scheduling services rely on when building claims and
# tickets; scenario validation guarantees they exist with the right kinds.
DIM_SERVICE = "service_type"
DIM_PROCESSORS = "processors"
DIM_CPU = "cpu_type"
DIM_SPEED = "speed_ghz"


@dataclass(frozen=True)
class LatencyModel:
    intra_cloud_ms: int = 1
    inter_cloud_ms: int = 5

    def between(self, cloud_a: str, cloud_b: str) -> int:
        return self.intra_cloud_ms if cloud_a == cloud_b else self.inter_cloud_ms


@dataclass(frozen=True)
class CloudConfig:
    cloud_id: str
    node_count: int
    node_speed_ghz: float
    cpu_type: str
    service_types: tuple[str, ...]
    status_update_interval_ms: tuple[int, int]
    topology: str = HUB

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise InvalidArgumentError(f"{self.cloud_id}: node_count must be >= 1")
        if self.topology not in TOPOLOGIES:
            raise InvalidArgumentError(f"{self.cloud_id}: unknown topology {self.topology!r}")
        lo, hi = self.status_update_interval_ms
        if lo < 1 or hi < lo:
            raise InvalidArgumentError(f"{self.cloud_id}: bad status interval [{lo}, {hi}]")
        if not self.service_types:
            raise InvalidArgumentError(f"{self.cloud_id}: at least one service type required")


@dataclass
class ExecutionNode:
    """One compute node; busy while executing, committed from allocation to
    completion (the window in which its old tickets are stale)."""

    node_id: str
    cloud_id: str
    speed_ghz: float
    cpu_type: str
    busy: bool = False
    committed: bool = False
    current_job: str | None = None


# Simulation message payloads.


@dataclass(frozen=True)
class SubmitApp:
    kind: ClassVar[str] = "submit"
    spec: WorkloadSpec


@dataclass(frozen=True)
class ClaimPost:
    kind: ClassVar[str] = "claim-post"
    claim: ResourceClaim
    cell_coords: tuple[int, ...]


@dataclass(frozen=True)
class TicketPost:
    kind: ClassVar[str] = "ticket-post"
    ticket: ResourceTicket
    cell_coords: tuple[int, ...]


@dataclass(frozen=True)
class MatchNotify:
    kind: ClassVar[str] = "match-notify"
    decision: AllocationDecision


@dataclass(frozen=True)
class Dispatch:
    kind: ClassVar[str] = "dispatch"
    decision: AllocationDecision
    claim: ResourceClaim
    unit: WorkUnit


@dataclass(frozen=True)
class ExecDone:
    kind: ClassVar[str] = "exec-done"
    unit: WorkUnit
    claim: ResourceClaim


@dataclass(frozen=True)
class ResultMsg:
    kind: ClassVar[str] = "result"
    unit: WorkUnit
    node_id: str
    service_label: str


@dataclass(frozen=True)
class TimerTick:
    kind: ClassVar[str] = "timer"
    node_id: str


class _PendingUnit(NamedTuple):
    claim: ResourceClaim
    unit: WorkUnit
    app_id: str


@dataclass
class ApplicationHandle:
    app_id: str
    model: str
    submit_cloud: str
    granularity: int
    submit_time_ms: int
    unit_count: int
    completions: dict[str, int] = field(default_factory=dict)
    stranded: set[str] = field(default_factory=set)

    @property
    def complete(self) -> bool:
        return len(self.completions) == self.unit_count


class FederationState:
    """All simulation state owned by one engine's event loop."""

    def __init__(
        self,
        *,
        engine: SimulationEngine,
        space: AttributeSpace,
        cells: tuple[IndexCell, ...],
        membership: OverlayMembership,
        peer_cloud: dict[str, str],
        clouds: dict[str, CloudConfig],
        nodes: dict[str, ExecutionNode],
        latency: LatencyModel,
        eager_tickets: bool,
        seed: int,
        max_virtual_ms: int,
    ) -> None:
        self.engine = engine
        self.space = space
        self.cells = cells
        self.cells_by_coords = {c.coords: c for c in cells}
        self.membership = membership
        self.peer_cloud = peer_cloud
        self.clouds = clouds
        self.nodes = nodes
        self.latency = latency
        self.eager_tickets = eager_tickets
        self.seed = seed
        self.max_virtual_ms = max_virtual_ms
        self.metrics = MetricsSink()
        self.stores: dict[str, ClaimStore] = {name: ClaimStore() for name in peer_cloud}
        self.cell_owner: dict[tuple[int, ...], str] = {}
        self.apps: dict[str, ApplicationHandle] = {}
        self.pending: dict[str, _PendingUnit] = {}
        self.claim_locations: dict[str, list[tuple[str, tuple[int, ...]]]] = {}
        self.served: set[str] = set()
        self.dispatched: set[str] = set()
        self.stranded_ids: set[str] = set()
        self.pending_submits = 0
        self.submitted_total = 0
        self.completed_total = 0
        self.stranded_total = 0
        self.node_points: dict[tuple[str, str], tuple[object, ...]] = {}
        self.ticket_streams: dict[str, RngStream] = {}
        recompute_cell_assignment(self)

    @property
    def finished(self) -> bool:
        """No submissions outstanding and every unit completed or stranded."""
        return (
            self.pending_submits == 0
            and self.completed_total + self.stranded_total >= self.submitted_total
        )

    def node_point(self, node: ExecutionNode, service_label: str) -> tuple[object, ...]:
        key = (node.node_id, service_label)
        point = self.node_points.get(key)
        if point is None:
            values = {
                DIM_SERVICE: service_label,
                DIM_PROCESSORS: 1,
                DIM_CPU: node.cpu_type,
                DIM_SPEED: node.speed_ghz,
            }
            point = tuple(values[d.name] for d in self.space.dims)
            self.node_points[key] = point
        return point


@dataclass(frozen=True)
class RunReport:
    events_processed: int
    virtual_time_ms: int
    stranded_claim_ids: tuple[str, ...]


def recompute_cell_assignment(state: FederationState) -> None:
    """Re-derive the cell-to-peer map from the current overlay membership."""
    state.cell_owner = {
        cell.coords: state.membership.name_of(state.membership.owner_of(cell.key))
        for cell in state.cells
    }


def deploy_federation(scenario: "Scenario") -> FederationState:
    """Instantiate coordinators, build the index, and arm the timers.

    Under the hub model one coordinator peer joins per cloud; under full_p2p
    every node joins as an autonomous coordinator. Scheduling services stay
    one per cloud (they are the submission entry points), and the cell-owner
    map is derived deterministically from the membership.
    """
    clouds: dict[str, CloudConfig] = {}
    for cloud in scenario.clouds:
        if cloud.cloud_id in clouds:
            raise InvalidArgumentError(f"duplicate cloud id {cloud.cloud_id!r}")
        clouds[cloud.cloud_id] = cloud
    clouds = {cid: clouds[cid] for cid in sorted(clouds)}

    engine = SimulationEngine(default_inbox_capacity=scenario.inbox_capacity)
    space = scenario.space()
    cells = build_base_cells(space)

    membership = OverlayMembership()
    peer_cloud: dict[str, str] = {}
    nodes: dict[str, ExecutionNode] = {}
    for cloud in clouds.values():
        if cloud.topology == HUB:
            membership.join(cloud.cloud_id)
            peer_cloud[cloud.cloud_id] = cloud.cloud_id
        for i in range(cloud.node_count):
            node_id = f"{cloud.cloud_id}/n{i}"
            nodes[node_id] = ExecutionNode(
                node_id=node_id,
                cloud_id=cloud.cloud_id,
                speed_ghz=cloud.node_speed_ghz,
                cpu_type=cloud.cpu_type,
            )
            if cloud.topology == FULL_P2P:
                membership.join(node_id)
                peer_cloud[node_id] = cloud.cloud_id

    state = FederationState(
        engine=engine,
        space=space,
        cells=cells,
        membership=membership,
        peer_cloud=peer_cloud,
        clouds=clouds,
        nodes=nodes,
        latency=scenario.latency,
        eager_tickets=scenario.eager_tickets,
        seed=scenario.seed,
        max_virtual_ms=scenario.max_virtual_ms,
    )

    for cloud_id in clouds:
        engine.register(f"scheduler/{cloud_id}", _scheduler_handler(state, cloud_id))
    for peer_name in peer_cloud:
        engine.register(f"peer/{peer_name}", _peer_handler(state, peer_name))
    for node_id in nodes:
        engine.register(f"node/{node_id}", _node_handler(state, node_id))

    for node_id, node in nodes.items():
        stream = RngStream(scenario.seed, f"ticket/{node_id}")
        state.ticket_streams[node_id] = stream
        lo, hi = clouds[node.cloud_id].status_update_interval_ms
        delay = int(round(stream.uniform(lo, hi)))
        engine.schedule(delay, f"node/{node_id}", TimerTick(node_id=node_id))

    for spec in scenario.workloads:
        if spec.submit_cloud not in clouds:
            raise InvalidArgumentError(f"workload targets unknown cloud {spec.submit_cloud!r}")
        state.pending_submits += 1
        engine.schedule(spec.submit_time_ms, f"scheduler/{spec.submit_cloud}", SubmitApp(spec))

    log.info(
        "deployed federation: %d clouds, %d nodes, %d peers, %d cells",
        len(clouds), len(nodes), len(peer_cloud), len(cells),
    )
    return state


def submit_application(
    state: FederationState, cloud_id: str, spec: WorkloadSpec
) -> ApplicationHandle:
    """Create one claim per work unit and post each to its index cells.

    The claims pin the submitting cloud's own attributes: service type and
    CPU type as equalities, one processor, and speed at least as fast as the
    local nodes. Units no node in the federation can ever satisfy are marked
    stranded up front (their claims are still posted and reported at the
    end of the run).
    """
    cloud = state.clouds.get(cloud_id)
    if cloud is None:
        raise InvalidArgumentError(f"unknown cloud {cloud_id!r}")
    if spec.unit_count < 1:
        raise InvalidArgumentError("application must carry at least one unit")
    app_id = spec.resolved_app_id
    if app_id in state.apps:
        raise InvalidArgumentError(f"application {app_id!r} already submitted")

    now = state.engine.now
    units = generate_units(spec, state.seed)
    handle = ApplicationHandle(
        app_id=app_id,
        model=spec.model,
        submit_cloud=cloud_id,
        granularity=spec.unit_count,
        submit_time_ms=now,
        unit_count=len(units),
    )
    state.apps[app_id] = handle
    state.metrics.record_submitted(spec.model, len(units))
    state.submitted_total += len(units)

    scheduler_cloud = cloud_id
    for unit in units:
        claim = _build_claim(state, cloud, unit, now)
        if not _claim_satisfiable(state, claim):
            handle.stranded.add(unit.unit_id)
            state.stranded_ids.add(claim.claim_id)
            state.stranded_total += 1
        state.pending[claim.claim_id] = _PendingUnit(claim=claim, unit=unit, app_id=app_id)
        targets = map_claim(state.space, state.cells, claim)
        locations = []
        for cell in targets:
            owner = state.cell_owner[cell.coords]
            delay = state.latency.between(scheduler_cloud, state.peer_cloud[owner])
            state.engine.schedule(delay, f"peer/{owner}", ClaimPost(claim, cell.coords))
            locations.append((owner, cell.coords))
        state.claim_locations[claim.claim_id] = locations
    return handle


def publish_ticket(state: FederationState, node: ExecutionNode | str) -> None:
    """Advertise an idle node: one point ticket per hosted service type.

    A busy or committed node publishes nothing. Each ticket carries one free
    processor and routes to the single cell containing the node's attribute
    point.
    """
    if isinstance(node, str):
        node = state.nodes[node]
    if state.finished:
        return
    if node.busy or node.committed:
        return
    now = state.engine.now
    cloud = state.clouds[node.cloud_id]
    for label in sorted(cloud.service_types):
        point = state.node_point(node, label)
        ticket = ResourceTicket(
            ticket_id=f"{node.node_id}@{now}/{label}",
            point=point,
            available_units=1,
            origin=node.node_id,
            issue_time=now,
        )
        cell = map_ticket(state.space, state.cells, ticket)
        owner = state.cell_owner[cell.coords]
        delay = state.latency.between(node.cloud_id, state.peer_cloud[owner])
        state.engine.schedule(delay, f"peer/{owner}", TicketPost(ticket, cell.coords))
        state.metrics.tickets_published += 1


def on_allocation(state: FederationState, decision: AllocationDecision) -> None:
    """Scheduler-side handling of a match notification: dispatch the unit."""
    if decision.claim_id in state.dispatched:
        raise ConsistencyError(f"claim {decision.claim_id} allocated twice")
    state.dispatched.add(decision.claim_id)
    pending = state.pending.pop(decision.claim_id, None)
    if pending is None:
        raise ConsistencyError(f"allocation for unknown claim {decision.claim_id}")
    node = state.nodes[decision.target]
    delay = state.latency.between(pending.claim.origin, node.cloud_id)
    state.engine.schedule(
        delay, f"node/{node.node_id}", Dispatch(decision, pending.claim, pending.unit)
    )


def response_time(state: FederationState, app: ApplicationHandle | str) -> float:
    """Seconds from submission to the last unit's result arrival."""
    handle = state.apps[app] if isinstance(app, str) else app
    if not handle.complete:
        raise NotReadyError(
            f"application {handle.app_id!r}: {len(handle.completions)}/{handle.unit_count} units done"
        )
    last = max(handle.completions.values())
    return (last - handle.submit_time_ms) / 1000.0


def run_to_quiescence(state: FederationState, max_virtual_ms: int | None = None) -> RunReport:
    """Drive the event loop until nothing remains to do.

    Periodic timers stop rescheduling once every unit is completed or
    stranded, so the queue drains naturally; hitting the virtual-time horizon
    with events still pending is reported as an error. Any claim left waiting
    must be one that was marked unsatisfiable at submission.
    """
    limit = state.max_virtual_ms if max_virtual_ms is None else max_virtual_ms
    processed = state.engine.run(until_ms=limit)
    if state.engine.has_pending_events:
        raise SimulationError(
            f"virtual-time horizon {limit} ms reached with events still pending"
        )
    leftover: set[str] = set()
    for store in state.stores.values():
        leftover.update(store.waiting_claim_ids())
    unexpected = leftover - state.stranded_ids
    if unexpected:
        raise ConsistencyError(
            f"satisfiable claims left waiting at quiescence: {sorted(unexpected)[:5]}"
        )
    return RunReport(
        events_processed=processed,
        virtual_time_ms=state.engine.now,
        stranded_claim_ids=tuple(sorted(leftover)),
    )


# Event handlers (one closure per entity).


def _scheduler_handler(state: FederationState, cloud_id: str):
    def handle(event: SimEvent) -> None:
        payload = event.payload
        if isinstance(payload, SubmitApp):
            state.pending_submits -= 1
            submit_application(state, payload.spec.submit_cloud, payload.spec)
        elif isinstance(payload, MatchNotify):
            on_allocation(state, payload.decision)
        elif isinstance(payload, ResultMsg):
            handle_result(payload)
        else:
            raise ConsistencyError(f"scheduler/{cloud_id}: unexpected {type(payload).__name__}")

    def handle_result(payload: ResultMsg) -> None:
        handle = state.apps[payload.unit.app_id]
        handle.completions[payload.unit.unit_id] = state.engine.now
        state.completed_total += 1
        if handle.complete:
            state.metrics.record_response(handle.app_id, response_time(state, handle))

    return handle


def _peer_handler(state: FederationState, peer_name: str):
    store = state.stores[peer_name]

    def handle(event: SimEvent) -> None:
        payload = event.payload
        if isinstance(payload, ClaimPost):
            if payload.claim.claim_id in state.served:
                return  # replica still in flight when the claim was served
            cell = state.cells_by_coords[payload.cell_coords]
            store.post_claim(cell, payload.claim)
        elif isinstance(payload, TicketPost):
            handle_ticket(payload)
        else:
            raise ConsistencyError(f"peer/{peer_name}: unexpected {type(payload).__name__}")

    def handle_ticket(payload: TicketPost) -> None:
        if state.finished:
            return
        node = state.nodes[payload.ticket.origin]
        if node.busy or node.committed:
            state.metrics.stale_tickets += 1
            return
        cell = state.cells_by_coords[payload.cell_coords]
        decisions = store.post_ticket(cell, payload.ticket, now_ms=state.engine.now)
        for decision in decisions:
            if decision.claim_id in state.served:
                raise ConsistencyError(f"claim {decision.claim_id} served twice")
            state.served.add(decision.claim_id)
            node.committed = True
            # Retire every replica before any further event can observe it.
            for owner, coords in state.claim_locations.pop(decision.claim_id, ()):
                if owner == peer_name and coords == payload.cell_coords:
                    continue  # the matched copy is already gone
                state.stores[owner].discard(coords, decision.claim_id)
            state.metrics.record_decision(decision)
            delay = state.latency.between(state.peer_cloud[peer_name], decision.notify)
            state.engine.schedule(
                delay, f"scheduler/{decision.notify}", MatchNotify(decision)
            )

    return handle


def _node_handler(state: FederationState, node_id: str):
    def handle(event: SimEvent) -> None:
        payload = event.payload
        node = state.nodes[node_id]
        if isinstance(payload, TimerTick):
            if state.finished:
                return
            publish_ticket(state, node)
            lo, hi = state.clouds[node.cloud_id].status_update_interval_ms
            delay = int(round(state.ticket_streams[node_id].uniform(lo, hi)))
            state.engine.schedule(delay, f"node/{node_id}", TimerTick(node_id=node_id))
        elif isinstance(payload, Dispatch):
            handle_dispatch(node, payload)
        elif isinstance(payload, ExecDone):
            handle_done(node, payload)
        else:
            raise ConsistencyError(f"node/{node_id}: unexpected {type(payload).__name__}")

    def handle_dispatch(node: ExecutionNode, payload: Dispatch) -> None:
        if node.busy:
            raise ConsistencyError(f"node {node.node_id} dispatched while busy")
        label = SERVICE_LABELS[payload.unit.model]
        if not point_satisfies(payload.claim, state.node_point(node, label)):
            raise ConsistencyError(
                f"unit {payload.unit.unit_id} dispatched to node {node.node_id} "
                "that fails its claim constraints"
            )
        node.busy = True
        node.current_job = payload.unit.unit_id
        exec_ms = max(1, round(payload.unit.demand_ghz_s / node.speed_ghz * 1000))
        state.engine.schedule(
            exec_ms, f"node/{node.node_id}", ExecDone(payload.unit, payload.claim)
        )

    def handle_done(node: ExecutionNode, payload: ExecDone) -> None:
        node.busy = False
        node.committed = False
        node.current_job = None
        label = SERVICE_LABELS[payload.unit.model]
        state.metrics.record_completion(node.cloud_id, label, payload.unit.model)
        delay = state.latency.between(node.cloud_id, payload.claim.origin)
        state.engine.schedule(
            delay,
            f"scheduler/{payload.claim.origin}",
            ResultMsg(payload.unit, node.node_id, label),
        )
        if state.eager_tickets:
            publish_ticket(state, node)

    return handle


# Claim construction helpers.


def _build_claim(
    state: FederationState, cloud: CloudConfig, unit: WorkUnit, now: int
) -> ResourceClaim:
    values = {
        DIM_SERVICE: Eq(SERVICE_LABELS[unit.model]),
        DIM_PROCESSORS: Eq(1),
        DIM_CPU: Eq(cloud.cpu_type),
        DIM_SPEED: Ge(cloud.node_speed_ghz),
    }
    try:
        constraints = tuple(values[d.name] for d in state.space.dims)
    except KeyError as exc:
        raise InvalidArgumentError(f"attribute space lacks required dimension {exc}") from None
    return ResourceClaim(
        claim_id=unit.unit_id,
        constraints=constraints,
        requested_units=1,
        origin=cloud.cloud_id,
        arrival_time=now,
        job_ref=unit.unit_id,
    )


def _claim_satisfiable(state: FederationState, claim: ResourceClaim) -> bool:
    for node in state.nodes.values():
        for label in state.clouds[node.cloud_id].service_types:
            if point_satisfies(claim, state.node_point(node, label)):
                return True
    return False
