"""Action-space arithmetic: mixed-radix translation and cardinalities.

Aggregated policies emit a single categorical action which the environment
translates back into one sub-decision per core or slot. The little-endian
convention is fixed here: digit i has radix r[i] and weight prod(r[:i]).
"""

from __future__ import annotations

# Acting-unit kinds, one per row of the cardinality table.
DIST_OFFER = "DIST_OFFER"
DIST_ACCEPT = "DIST_ACCEPT"
SEMI_OFFER = "SEMI_OFFER"
SEMI_ACCEPT = "SEMI_ACCEPT"
FULL = "FULL"

UNIT_KINDS = (DIST_OFFER, DIST_ACCEPT, SEMI_OFFER, SEMI_ACCEPT, FULL)


def space_size(radices: list[int] | tuple[int, ...]) -> int:
    n = 1
    for r in radices:
        if r < 1:
            raise ValueError(f"radix must be >= 1, got {r}")
        n *= r
    return n


def mixed_radix_decode(index: int, radices: list[int] | tuple[int, ...]) -> list[int]:
    """Little-endian digits of ``index`` in the given radices."""
    if not 0 <= index < space_size(radices):
        raise ValueError(f"index {index} out of range for radices {list(radices)}")
    digits = []
    rest = index
    for r in radices:
        digits.append(rest % r)
        rest //= r
    return digits


def mixed_radix_encode(digits: list[int] | tuple[int, ...], radices: list[int] | tuple[int, ...]) -> int:
    if len(digits) != len(radices):
        raise ValueError("digit/radix length mismatch")
    index = 0
    weight = 1
    for d, r in zip(digits, radices):
        if not 0 <= d < r:
            raise ValueError(f"digit {d} out of range for radix {r}")
        index += d * weight
        weight *= r
    return index


def cardinality(unit_kind: str, num_cores: int, num_agents: int, num_slots: int) -> int:
    """Action-space size of one acting unit.

    An offer decision picks a target core or none; an accept decision picks
    one of the num_agents * num_slots possible offers or declines.
    Aggregated units take the product over the cores/slots they cover.
    """
    if min(num_cores, num_agents, num_slots) < 1:
        raise ValueError("num_cores, num_agents and num_slots must be >= 1")
    offers = num_cores + 1
    accepts = num_agents * num_slots + 1
    if unit_kind == DIST_OFFER:
        return offers
    if unit_kind == DIST_ACCEPT:
        return accepts
    if unit_kind == SEMI_OFFER:
        return offers**num_slots
    if unit_kind == SEMI_ACCEPT:
        return accepts**num_cores
    if unit_kind == FULL:
        return offers**num_slots * accepts**num_cores
    raise ValueError(f"unknown unit kind {unit_kind!r}")
