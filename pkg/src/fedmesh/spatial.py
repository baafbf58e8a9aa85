"""d-dimensional attribute space, base index cells, and claim/ticket mapping.

Every resource attribute is one dimension of a normalized unit cube. The cube
is divided into ``f_min`` equal slices per dimension, giving ``f_min ** dim``
base index cells; each cell's midpoint (its control point) is hashed into the
overlay key space, which assigns the cell to a peer.

Claims are range objects: they are replicated to every base cell their region
intersects. Tickets are point objects: they map to exactly one cell. Matching
therefore happens only at the ticket's cell, and any claim/ticket pair that
matches is guaranteed to meet there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

from .errors import DomainError, InvalidArgumentError
from .overlay import NodeId, hash_name

NUMERIC = "numeric"
CATEGORICAL = "categorical"

CONTROL_POINT_PREFIX = "cp|"


@dataclass(frozen=True)
class DimensionSpec:
    """One attribute dimension: numeric with bounds, or categorical labels."""

    name: str
    kind: str
    bounds: tuple[float, float] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise InvalidArgumentError("dimension needs a name")
        if self.kind == NUMERIC:
            if self.labels is not None:
                raise InvalidArgumentError(f"{self.name}: numeric dimension takes no labels")
            if self.bounds is None or not self.bounds[0] < self.bounds[1]:
                raise InvalidArgumentError(f"{self.name}: numeric bounds must satisfy lo < hi")
        elif self.kind == CATEGORICAL:
            if self.bounds is not None:
                raise InvalidArgumentError(f"{self.name}: categorical dimension takes no bounds")
            if not self.labels:
                raise InvalidArgumentError(f"{self.name}: categorical dimension needs labels")
            if len(set(self.labels)) != len(self.labels):
                raise InvalidArgumentError(f"{self.name}: labels must be unique")
        else:
            raise InvalidArgumentError(f"{self.name}: unknown dimension kind {self.kind!r}")


@dataclass(frozen=True)
class AttributeSpace:
    """Ordered dimensions plus the division levels of the index grid."""

    dims: tuple[DimensionSpec, ...]
    f_min: int
    f_max: int

    def __post_init__(self) -> None:
        if len(self.dims) < 1:
            raise InvalidArgumentError("attribute space needs at least one dimension")
        if not 1 <= self.f_min <= self.f_max:
            raise InvalidArgumentError("division levels must satisfy 1 <= f_min <= f_max")
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise InvalidArgumentError("dimension names must be unique")

    @property
    def dim(self) -> int:
        return len(self.dims)

    def index_of(self, name: str) -> int:
        for i, d in enumerate(self.dims):
            if d.name == name:
                return i
        raise InvalidArgumentError(f"no dimension named {name!r}")


# Per-dimension claim constraints. Categorical dimensions admit only Eq.


@dataclass(frozen=True)
class Eq:
    value: object


@dataclass(frozen=True)
class Ge:
    value: float


@dataclass(frozen=True)
class Le:
    value: float


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise InvalidArgumentError(f"range lo {self.lo} exceeds hi {self.hi}")


Constraint = Union[Eq, Ge, Le, Range]


@dataclass(frozen=True)
class IndexCell:
    """One base cell of the grid, identified by its control-point hash."""

    coords: tuple[int, ...]
    bounds: tuple[tuple[float, float], ...]
    control_point: tuple[float, ...]
    key: NodeId


@dataclass(frozen=True)
class ResourceClaim:
    """A range look-up query: one constraint per dimension plus capacity."""

    claim_id: str
    constraints: tuple[Constraint, ...]
    requested_units: int
    origin: str
    arrival_time: int
    job_ref: str

    def __post_init__(self) -> None:
        if self.requested_units < 1:
            raise InvalidArgumentError("requested_units must be >= 1")


@dataclass(frozen=True)
class ResourceTicket:
    """A point update query: a node's attribute values plus free capacity."""

    ticket_id: str
    point: tuple[object, ...]
    available_units: int
    origin: str
    issue_time: int

    def __post_init__(self) -> None:
        if self.available_units < 0:
            raise InvalidArgumentError("available_units must be >= 0")


def serialize_control_point(point: tuple[float, ...]) -> str:
    """Canonical, bit-exact text form fed to the spatial hash."""
    return CONTROL_POINT_PREFIX + ",".join(f"{c:.6f}" for c in point)


def build_base_cells(space: AttributeSpace) -> tuple[IndexCell, ...]:
    """All f_min**dim base cells in row-major order of their coordinates."""
    f = space.f_min
    cells = []
    for coords in itertools.product(range(f), repeat=space.dim):
        bounds = tuple((c / f, (c + 1) / f) for c in coords)
        control = tuple((lo + hi) / 2 for lo, hi in bounds)
        cells.append(
            IndexCell(
                coords=coords,
                bounds=bounds,
                control_point=control,
                key=hash_name(serialize_control_point(control)),
            )
        )
    return tuple(cells)


def spatial_hash(cell: IndexCell) -> NodeId:
    """Overlay key of a cell: hash of its canonical control-point text."""
    return hash_name(serialize_control_point(cell.control_point))


def normalize(space: AttributeSpace, dim_index: int, value: object) -> float:
    """Map a native attribute value into [0, 1].

    Numeric values scale linearly over their bounds. Categorical labels map
    to slice midpoints ``(rank + 0.5) / len(labels)`` so no label ever sits on
    a grid boundary.
    """
    spec = space.dims[dim_index]
    if spec.kind == NUMERIC:
        lo, hi = spec.bounds  # type: ignore[misc]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise DomainError(f"{spec.name}: expected a number, got {value!r}")
        if value < lo or value > hi:
            raise DomainError(f"{spec.name}: {value} outside bounds [{lo}, {hi}]")
        return (value - lo) / (hi - lo)
    labels = spec.labels  # type: ignore[assignment]
    try:
        rank = labels.index(value)
    except ValueError:
        raise DomainError(f"{spec.name}: unknown label {value!r}") from None
    return (rank + 0.5) / len(labels)


def denormalize(space: AttributeSpace, dim_index: int, coordinate: float) -> object:
    """Inverse of :func:`normalize` (exact for labels, linear for numbers)."""
    spec = space.dims[dim_index]
    if not 0.0 <= coordinate <= 1.0:
        raise DomainError(f"{spec.name}: coordinate {coordinate} outside [0, 1]")
    if spec.kind == NUMERIC:
        lo, hi = spec.bounds  # type: ignore[misc]
        return lo + coordinate * (hi - lo)
    labels = spec.labels  # type: ignore[assignment]
    rank = min(int(coordinate * len(labels)), len(labels) - 1)
    return labels[rank]


def validate_claim(space: AttributeSpace, claim: ResourceClaim) -> None:
    """Check the claim's constraints against the space's dimensions."""
    if len(claim.constraints) != space.dim:
        raise InvalidArgumentError(
            f"claim {claim.claim_id}: {len(claim.constraints)} constraints for {space.dim} dims"
        )
    for spec, constraint in zip(space.dims, claim.constraints):
        if spec.kind == CATEGORICAL and not isinstance(constraint, Eq):
            raise InvalidArgumentError(
                f"claim {claim.claim_id}: categorical dimension {spec.name} admits only Eq"
            )


def validate_ticket(space: AttributeSpace, ticket: ResourceTicket) -> None:
    if len(ticket.point) != space.dim:
        raise InvalidArgumentError(
            f"ticket {ticket.ticket_id}: {len(ticket.point)} coordinates for {space.dim} dims"
        )
    for i in range(space.dim):
        normalize(space, i, ticket.point[i])


def claim_region(space: AttributeSpace, claim: ResourceClaim) -> tuple[tuple[float, float], ...]:
    """The claim's closed per-dimension interval in normalized space."""
    validate_claim(space, claim)
    region = []
    for i, constraint in enumerate(claim.constraints):
        if isinstance(constraint, Eq):
            x = normalize(space, i, constraint.value)
            region.append((x, x))
        elif isinstance(constraint, Ge):
            region.append((normalize(space, i, constraint.value), 1.0))
        elif isinstance(constraint, Le):
            region.append((0.0, normalize(space, i, constraint.value)))
        else:
            region.append((normalize(space, i, constraint.lo), normalize(space, i, constraint.hi)))
    return tuple(region)


def map_claim(
    space: AttributeSpace, cells: tuple[IndexCell, ...], claim: ResourceClaim
) -> tuple[IndexCell, ...]:
    """Every base cell whose bounds intersect the claim's region.

    Closed-interval intersection per dimension, so a region touching a slice
    boundary lands in both adjacent cells; the matching ticket's single cell
    is always among them.
    """
    region = claim_region(space, claim)
    f = space.f_min
    per_dim: list[list[int]] = []
    for lo, hi in region:
        indices = [a for a in range(f) if lo <= (a + 1) / f and a / f <= hi]
        assert indices, "a region inside the unit cube always meets at least one slice"
        per_dim.append(indices)
    selected = []
    for coords in itertools.product(*per_dim):
        selected.append(cells[_flat_index(coords, f)])
    return tuple(selected)


def map_ticket(
    space: AttributeSpace, cells: tuple[IndexCell, ...], ticket: ResourceTicket
) -> IndexCell:
    """The unique cell containing the ticket's normalized point.

    Slices are half-open below the top of the space; the upper boundary of
    the whole space belongs to the last slice.
    """
    validate_ticket(space, ticket)
    f = space.f_min
    coords = []
    for i in range(space.dim):
        x = normalize(space, i, ticket.point[i])
        a = min(int(x * f), f - 1)
        # Guard against multiplication rounding right at slice boundaries:
        # keep the index consistent with the bounds arithmetic used by cells.
        if a > 0 and x < a / f:
            a -= 1
        elif a < f - 1 and x >= (a + 1) / f:
            a += 1
        coords.append(a)
    return cells[_flat_index(tuple(coords), f)]


def constraint_satisfied(constraint: Constraint, value: object) -> bool:
    """Whether one native value satisfies one per-dimension constraint."""
    if isinstance(constraint, Eq):
        return value == constraint.value
    if isinstance(constraint, Ge):
        return value >= constraint.value
    if isinstance(constraint, Le):
        return value <= constraint.value
    return constraint.lo <= value <= constraint.hi


def point_satisfies(claim: ResourceClaim, point: tuple[object, ...]) -> bool:
    if len(claim.constraints) != len(point):
        raise InvalidArgumentError("constraint/point dimensionality mismatch")
    return all(
        constraint_satisfied(c, v) for c, v in zip(claim.constraints, point)
    )


def matches(claim: ResourceClaim, ticket: ResourceTicket) -> bool:
    """True iff every constraint holds for the ticket's native values.

    Capacity is deliberately not checked here; the coordination layer owns
    capacity accounting.
    """
    return point_satisfies(claim, ticket.point)


def _flat_index(coords: tuple[int, ...], f: int) -> int:
    idx = 0
    for c in coords:
        idx = idx * f + c
    return idx
