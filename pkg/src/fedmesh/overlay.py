"""Pastry-flavored key-based routing on a 160-bit circular identifier space.

Peers and keys live on the same ring. A global membership registry is the
source of truth; each peer's routing state (hex-digit prefix table plus a
leaf set of ring neighbors) is derived deterministically from the full
membership, so identical join sequences always produce identical tables.
Routing is still performed hop by hop through those tables, which keeps the
logarithmic-hop behavior observable instead of assumed.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_left
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

from .errors import (
    AlreadyMemberError,
    ConsistencyError,
    IdCollisionError,
    InvalidArgumentError,
    InvalidSourceError,
    NoRouteError,
    NotAMemberError,
)

RING_BITS = 160
RING_SIZE = 1 << RING_BITS
ID_HEX_DIGITS = 40
ROUTING_BASE = 16
LEAF_SET_SIZE = 8


def circular_distance(a: int, b: int) -> int:
    """Shortest arc between two points on the identifier ring."""
    d = a - b if a >= b else b - a
    return d if d <= RING_SIZE - d else RING_SIZE - d


@dataclass(frozen=True, order=True)
class NodeId:
    """A 160-bit ring identifier; ordering is plain unsigned ordering."""

    value: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or not 0 <= self.value < RING_SIZE:
            raise InvalidArgumentError(f"node id must be a {RING_BITS}-bit unsigned integer")

    @cached_property
    def hex(self) -> str:
        """Canonical text form: exactly 40 lowercase hex digits."""
        return format(self.value, "040x")

    @classmethod
    def from_hex(cls, text: str) -> "NodeId":
        if len(text) != ID_HEX_DIGITS:
            raise InvalidArgumentError(f"expected {ID_HEX_DIGITS} hex digits, got {len(text)}")
        try:
            return cls(int(text, 16))
        except ValueError as exc:
            raise InvalidArgumentError(f"not a hex id: {text!r}") from exc

    def distance(self, other: "NodeId") -> int:
        return circular_distance(self.value, other.value)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"NodeId({self.hex})"


def hash_name(name: str) -> NodeId:
    """Map a textual name onto the ring via SHA-1 of its UTF-8 bytes."""
    if not isinstance(name, str) or name == "":
        raise InvalidArgumentError("name must be non-empty text")
    digest = hashlib.sha1(name.encode("utf-8")).digest()
    return NodeId(int.from_bytes(digest, "big"))


def shared_prefix_len(a: str, b: str) -> int:
    """Number of leading hex digits two canonical ids share."""
    n = 0
    for ca, cb in zip(a, b):
        if ca != cb:
            break
        n += 1
    return n


def _closeness(target: NodeId):
    """Total order 'closer to target'; distance ties break toward smaller id."""
    tv = target.value

    def key(nid: NodeId) -> tuple[int, int]:
        return (circular_distance(nid.value, tv), nid.value)

    return key


@dataclass(frozen=True)
class RoutingState:
    """One peer's deterministic view: prefix table and split leaf set.

    ``prefix_table[(i, d)]`` shares exactly the first ``i`` hex digits with
    ``owner`` and has digit ``d`` at position ``i``. The leaf set holds up to
    ``LEAF_SET_SIZE`` ring neighbors, half clockwise and half counterclockwise
    (nearest first), so the immediate successor and predecessor are always
    present; that is what makes greedy routing land on the true owner.
    """

    owner: NodeId
    prefix_table: dict[tuple[int, str], NodeId]
    leaf_predecessors: tuple[NodeId, ...]
    leaf_successors: tuple[NodeId, ...]
    covers_all: bool

    @property
    def leaf_set(self) -> tuple[NodeId, ...]:
        seen: dict[int, NodeId] = {}
        for nid in self.leaf_successors + self.leaf_predecessors:
            seen.setdefault(nid.value, nid)
        return tuple(seen.values())

    def covers(self, key: NodeId) -> bool:
        """Whether key falls inside the ring arc spanned by the leaf set."""
        if self.covers_all:
            return True
        far_pred = self.leaf_predecessors[-1]
        far_succ = self.leaf_successors[-1]
        span = (far_succ.value - far_pred.value) % RING_SIZE
        return (key.value - far_pred.value) % RING_SIZE <= span

    def view(self) -> Iterator[NodeId]:
        """Every peer this node knows about (leaf set plus table entries)."""
        seen: set[int] = set()
        for nid in self.leaf_set:
            if nid.value not in seen:
                seen.add(nid.value)
                yield nid
        for nid in self.prefix_table.values():
            if nid.value not in seen:
                seen.add(nid.value)
                yield nid


class OverlayMembership:
    """Global registry of named peers with derived routing state.

    Mutations (join/leave) bump a version counter and invalidate the cached
    per-peer routing states; states are rebuilt lazily, which keeps repeated
    join sequences cheap for large memberships.
    """

    def __init__(self) -> None:
        self._peers: dict[str, NodeId] = {}
        self._by_value: dict[int, tuple[str, NodeId]] = {}
        self._version = 0
        self._ring: list[int] | None = None
        self._states: dict[int, RoutingState] = {}

    @property
    def version(self) -> int:
        return self._version

    def __len__(self) -> int:
        return len(self._peers)

    def __contains__(self, name: str) -> bool:
        return name in self._peers

    def members(self) -> tuple[NodeId, ...]:
        """All peer ids, sorted ascending."""
        return tuple(self._by_value[v][1] for v in self._ring_values())

    def name_of(self, node_id: NodeId) -> str:
        try:
            return self._by_value[node_id.value][0]
        except KeyError:
            raise NotAMemberError(f"no peer with id {node_id.hex}") from None

    def id_of(self, name: str) -> NodeId:
        try:
            return self._peers[name]
        except KeyError:
            raise NotAMemberError(f"no peer named {name!r}") from None

    def join(self, name: str) -> NodeId:
        """Add a named peer; its id is the hash of the name."""
        if name in self._peers:
            raise AlreadyMemberError(f"peer {name!r} already joined")
        nid = hash_name(name)
        if nid.value in self._by_value:
            other = self._by_value[nid.value][0]
            raise IdCollisionError(f"{name!r} collides with {other!r} at {nid.hex}")
        self._peers[name] = nid
        self._by_value[nid.value] = (name, nid)
        self._bump()
        return nid

    def leave(self, node_id: NodeId) -> None:
        if node_id.value not in self._by_value:
            raise NotAMemberError(f"no peer with id {node_id.hex}")
        name, _ = self._by_value.pop(node_id.value)
        del self._peers[name]
        self._bump()

    def owner_of(self, key: NodeId) -> NodeId:
        """Peer circularly nearest to key; exact ties go to the smaller id."""
        ring = self._ring_values()
        if not ring:
            raise NoRouteError("empty membership owns no keys")
        i = bisect_left(ring, key.value)
        n = len(ring)
        candidates = {ring[i % n], ring[(i - 1) % n]}
        best = min(candidates, key=lambda v: (circular_distance(v, key.value), v))
        return self._by_value[best][1]

    def routing_state(self, node_id: NodeId) -> RoutingState:
        if node_id.value not in self._by_value:
            raise NotAMemberError(f"no peer with id {node_id.hex}")
        state = self._states.get(node_id.value)
        if state is None:
            state = self._build_state(node_id)
            self._states[node_id.value] = state
        return state

    def route(self, source: NodeId, key: NodeId) -> tuple[NodeId, int]:
        """Greedy prefix routing from source toward the owner of key.

        Returns (owner, hops). Each hop either resolves one more hex digit of
        the key through the prefix table or moves strictly closer along the
        leaf set; the walk ends at the peer with minimal circular distance,
        which is independent of the source.
        """
        if not self._peers:
            raise NoRouteError("cannot route in an empty membership")
        if source.value not in self._by_value:
            raise InvalidSourceError(f"source {source.hex} is not a member")
        closeness = _closeness(key)
        cur = source
        hops = 0
        while True:
            state = self.routing_state(cur)
            if state.covers(key):
                best = min([cur, *state.leaf_set], key=closeness)
                if best.value == cur.value:
                    return cur, hops
                return best, hops + 1
            depth = shared_prefix_len(cur.hex, key.hex)
            nxt = state.prefix_table.get((depth, key.hex[depth]))
            if nxt is None:
                candidates = [
                    nid
                    for nid in state.view()
                    if shared_prefix_len(nid.hex, key.hex) >= depth
                    and closeness(nid) < closeness(cur)
                ]
                if not candidates:
                    # Unreachable for consistent global tables: a split leaf
                    # set always supplies a strictly closer peer here.
                    raise ConsistencyError(f"routing stuck at {cur.hex} for key {key.hex}")
                nxt = min(candidates, key=closeness)
            cur = nxt
            hops += 1

    def dump(self) -> str:
        """Deterministic text table: one ``hexid name`` line, sorted by id."""
        lines = [f"{self._by_value[v][1].hex} {self._by_value[v][0]}" for v in self._ring_values()]
        return "\n".join(lines)

    # internals

    def _bump(self) -> None:
        self._version += 1
        self._ring = None
        self._states.clear()

    def _ring_values(self) -> list[int]:
        if self._ring is None:
            self._ring = sorted(self._by_value)
        return self._ring

    def _build_state(self, owner: NodeId) -> RoutingState:
        ring = self._ring_values()
        n = len(ring)
        idx = bisect_left(ring, owner.value)
        half = LEAF_SET_SIZE // 2
        succs = []
        preds = []
        for j in range(1, min(half, n - 1) + 1):
            succs.append(self._by_value[ring[(idx + j) % n]][1])
            preds.append(self._by_value[ring[(idx - j) % n]][1])
        table: dict[tuple[int, str], NodeId] = {}
        best_key: dict[tuple[int, str], tuple[int, int]] = {}
        owner_hex = owner.hex
        for value in ring:
            if value == owner.value:
                continue
            member = self._by_value[value][1]
            depth = shared_prefix_len(owner_hex, member.hex)
            slot = (depth, member.hex[depth])
            rank = (circular_distance(owner.value, value), value)
            if slot not in best_key or rank < best_key[slot]:
                best_key[slot] = rank
                table[slot] = member
        return RoutingState(
            owner=owner,
            prefix_table=table,
            leaf_predecessors=tuple(preds),
            leaf_successors=tuple(succs),
            covers_all=(n - 1) <= LEAF_SET_SIZE,
        )
