"""Slot indexing for iterated derivative coordinates.

A derivative coordinate of order k over n independent variables is
addressed by a slot h with 1 <= h <= n**k.  Slots refine the usual
multi-index notation: the base-n digits of h-1 (most significant digit
first, k digits) name the axes of the individual first order
derivatives, the first axis being the one applied first.  Applying one
more derivative along axis i to slot h of order k lands in slot
n*(h-1)+i of order k+1, which appends i to the axis word.

Slots that share a multi-index represent the same mixed partial for
smooth functions; the canonical representative is the smallest such
slot, i.e. the one whose axis word is sorted ascending.
"""

from dataclasses import dataclass

from .errors import CapacityExceeded

MAX_SLOTS = 2**63 - 1

MultiIndex = tuple[int, ...]


def slot_count(n: int, k: int) -> int:
    """Number of order-k derivative slots, n**k, guarded against overflow."""
    if n < 1 or k < 0:
        raise ValueError(f"need n >= 1 and k >= 0, got n={n}, k={k}")
    count = 1
    for _ in range(k):
        count *= n
        if count > MAX_SLOTS:
            raise CapacityExceeded(f"slot count n**k with n={n}, k={k} exceeds 2**63-1")
    return count


def jet_size(n: int, m: int, s: int) -> int:
    """Dimension of the order-s jet fiber: m*(1 + n + ... + n**s)."""
    if m < 1:
        raise ValueError(f"need m >= 1, got m={m}")
    total = sum(slot_count(n, k) for k in range(s + 1))
    if m * total > MAX_SLOTS:
        raise CapacityExceeded(f"jet size for n={n}, m={m}, s={s} exceeds 2**63-1")
    return m * total


@dataclass(frozen=True)
class DerivIndex:
    """Order k and slot h of a derivative coordinate over n variables."""

    k: int
    h: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        if self.k < 0:
            raise ValueError(f"need k >= 0, got {self.k}")
        if not 1 <= self.h <= slot_count(self.n, self.k):
            raise ValueError(
                f"slot {self.h} out of range 1..{slot_count(self.n, self.k)} "
                f"for order {self.k} over {self.n} variables"
            )

    def __repr__(self):
        return f"DerivIndex({self.k}, {self.h}, n={self.n})"


def index_to_axes(d: DerivIndex) -> tuple[int, ...]:
    """Axis word of a slot: k axes in application order, innermost first."""
    digits = []
    rem = d.h - 1
    for _ in range(d.k):
        digits.append(rem % d.n + 1)
        rem //= d.n
    digits.reverse()
    return tuple(digits)


def axes_to_index(axes, n: int) -> DerivIndex:
    """Slot addressed by an axis word (inverse of index_to_axes)."""
    h = 0
    for a in axes:
        if not 1 <= a <= n:
            raise ValueError(f"axis {a} out of range 1..{n}")
        h = h * n + (a - 1)
        if h + 1 > MAX_SLOTS:
            raise CapacityExceeded(f"slot for axis word of length {len(axes)} over n={n}")
    return DerivIndex(len(axes), h + 1, n)


def compose_index(axis: int, d: DerivIndex) -> DerivIndex:
    """Slot of the axis-i derivative applied on top of slot d."""
    if not 1 <= axis <= d.n:
        raise ValueError(f"axis {axis} out of range 1..{d.n}")
    slot_count(d.n, d.k + 1)
    return DerivIndex(d.k + 1, d.n * (d.h - 1) + axis, d.n)


def decompose_index(d: DerivIndex) -> tuple[int, DerivIndex]:
    """Peel the outermost derivative: returns (axis, inner slot)."""
    if d.k == 0:
        raise ValueError("order-0 slot has no outermost derivative")
    axis = (d.h - 1) % d.n + 1
    inner = DerivIndex(d.k - 1, (d.h - 1) // d.n + 1, d.n)
    return axis, inner


def index_to_multiindex(d: DerivIndex) -> MultiIndex:
    """Counts per axis; the order of application is forgotten."""
    counts = [0] * d.n
    for a in index_to_axes(d):
        counts[a - 1] += 1
    return tuple(counts)


def multiindex_to_index(mu, n: int) -> DerivIndex:
    """Canonical slot of a multi-index (axis word sorted ascending)."""
    if len(mu) != n:
        raise ValueError(f"multi-index length {len(mu)} does not match n={n}")
    axes = []
    for a, count in enumerate(mu, start=1):
        if count < 0:
            raise ValueError(f"negative count in multi-index {mu}")
        axes.extend([a] * count)
    return axes_to_index(axes, n)


def canonical_slot(d: DerivIndex) -> DerivIndex:
    """Smallest slot with the same multi-index as d."""
    return axes_to_index(sorted(index_to_axes(d)), d.n)
