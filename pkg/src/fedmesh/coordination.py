"""Per-cell claim queues and capacity-respecting ticket allocation.

A ClaimStore belongs to one coordination peer and holds, for each index cell
the peer owns, the claims waiting there in (arrival_time, claim_id) order.
Tickets are transient: on arrival they are allocated against the waiting
claims of their single cell and any leftover capacity is discarded, since a
fresh status ticket will follow.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass

from .errors import InvalidArgumentError
from .spatial import IndexCell, ResourceClaim, ResourceTicket, matches


@dataclass(frozen=True)
class AllocationDecision:
    """One claim granted against one ticket."""

    ticket_id: str
    claim_id: str
    units_granted: int
    decided_at: int
    target: str  # ticket origin: the execution node gaining the work
    notify: str  # claim origin: the scheduler to inform


class _CellQueue:
    __slots__ = ("order", "claims", "ids")

    def __init__(self) -> None:
        self.order: list[tuple[int, str]] = []
        self.claims: dict[tuple[int, str], ResourceClaim] = {}
        self.ids: set[str] = set()

    def insert(self, claim: ResourceClaim) -> None:
        key = (claim.arrival_time, claim.claim_id)
        insort(self.order, key)
        self.claims[key] = claim
        self.ids.add(claim.claim_id)

    def remove(self, claim: ResourceClaim) -> None:
        key = (claim.arrival_time, claim.claim_id)
        i = bisect_left(self.order, key)
        del self.order[i]
        del self.claims[key]
        self.ids.discard(claim.claim_id)

    def remove_id(self, claim_id: str) -> bool:
        if claim_id not in self.ids:
            return False
        for key in self.order:
            if key[1] == claim_id:
                self.remove(self.claims[key])
                return True
        return False

    def listed(self) -> list[ResourceClaim]:
        return [self.claims[key] for key in self.order]


class ClaimStore:
    """Ordered claim lists keyed by index-cell coordinates."""

    def __init__(self) -> None:
        self._cells: dict[tuple[int, ...], _CellQueue] = {}

    def post_claim(self, cell: IndexCell, claim: ResourceClaim) -> None:
        """Insert in (arrival_time, claim_id) order; duplicates are ignored."""
        queue = self._cells.setdefault(cell.coords, _CellQueue())
        if claim.claim_id in queue.ids:
            return
        queue.insert(claim)

    def post_ticket(
        self, cell: IndexCell, ticket: ResourceTicket, now_ms: int | None = None
    ) -> list[AllocationDecision]:
        """Allocate the ticket against this cell's waiting claims.

        Scans stored order; a claim is served when it matches the ticket and
        its requested units fit the remaining capacity (first fit, so a large
        claim does not block later smaller ones). Served claims leave this
        cell; the scan stops as soon as capacity reaches zero. Leftover
        capacity is discarded rather than parked.
        """
        decided_at = ticket.issue_time if now_ms is None else now_ms
        queue = self._cells.get(cell.coords)
        remaining = ticket.available_units
        decisions: list[AllocationDecision] = []
        if queue is None or remaining <= 0:
            return decisions
        for claim in queue.listed():
            if remaining <= 0:
                break
            if not matches(claim, ticket):
                continue
            if claim.requested_units > remaining:
                continue
            decisions.append(
                AllocationDecision(
                    ticket_id=ticket.ticket_id,
                    claim_id=claim.claim_id,
                    units_granted=claim.requested_units,
                    decided_at=decided_at,
                    target=ticket.origin,
                    notify=claim.origin,
                )
            )
            remaining -= claim.requested_units
            queue.remove(claim)
        granted = sum(d.units_granted for d in decisions)
        if granted > ticket.available_units:
            raise InvalidArgumentError(
                f"over-provisioned ticket {ticket.ticket_id}: {granted} > {ticket.available_units}"
            )
        return decisions

    def remove_claim(self, claim_id: str) -> int:
        """Drop every replica of a claim; returns how many cells held it."""
        removed = 0
        for queue in self._cells.values():
            if queue.remove_id(claim_id):
                removed += 1
        return removed

    def discard(self, cell_coords: tuple[int, ...], claim_id: str) -> bool:
        """Targeted single-cell removal (replica cleanup fast path)."""
        queue = self._cells.get(cell_coords)
        return queue.remove_id(claim_id) if queue is not None else False

    def snapshot(self, cell: IndexCell) -> list[ResourceClaim]:
        """Read-only copy of one cell's queue, in stored order."""
        queue = self._cells.get(cell.coords)
        return queue.listed() if queue is not None else []

    def waiting_claim_ids(self) -> tuple[str, ...]:
        """Distinct ids of all claims still stored, sorted."""
        ids: set[str] = set()
        for queue in self._cells.values():
            ids.update(queue.ids)
        return tuple(sorted(ids))

    def replica_count(self, claim_id: str) -> int:
        return sum(1 for queue in self._cells.values() if claim_id in queue.ids)

    def is_empty(self) -> bool:
        return all(not queue.order for queue in self._cells.values())
