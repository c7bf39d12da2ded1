"""Committee sortition from a request and the hash of the block that committed it.

Slot ``i`` (1-based) draws ``hash(i | R | b) mod N``. With ``distinct=True``
a slot whose draw collides with an earlier slot re-draws from
``hash(i | R | b | j)`` for ``j = 1, 2, ...``; collision-free committees are
identical under both rules, and the distinct rule yields a uniformly random
k-subset, which is what the hypergeometric attack analysis assumes.
"""
from __future__ import annotations

from dataclasses import dataclass

from .crypto import Digest, digest, index_from_digest, u64


class CommitteeError(ValueError):
    pass


@dataclass(frozen=True)
class Committee:
    request_id: int
    members: tuple[int, ...]

    @property
    def distinct_members(self) -> frozenset[int]:
        return frozenset(self.members)

    @property
    def duplicates(self) -> int:
        return len(self.members) - len(self.distinct_members)

    def slots_of(self, subject_id: int) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.members, start=1) if m == subject_id)


def _check(n: int, k: int, distinct: bool) -> None:
    if n < 1:
        raise CommitteeError("population N must be >= 1")
    if k < 1:
        raise CommitteeError("committee size k must be >= 1")
    if distinct and k > n:
        raise CommitteeError(f"cannot draw {k} distinct members from N={n}")


def draw(request: bytes, block_hash: Digest, n: int, slot: int, attempt: int = 0) -> int:
    parts = [u64(slot), request, block_hash]
    if attempt:
        parts.append(u64(attempt))
    return index_from_digest(digest(parts), n)


def select(
    request: bytes,
    block_hash: Digest,
    n: int,
    k: int,
    *,
    distinct: bool = False,
    request_id: int = -1,
) -> Committee:
    _check(n, k, distinct)
    members: list[int] = []
    taken: set[int] = set()
    for slot in range(1, k + 1):
        member = draw(request, block_hash, n, slot)
        attempt = 0
        while distinct and member in taken:
            attempt += 1
            member = draw(request, block_hash, n, slot, attempt)
        members.append(member)
        taken.add(member)
    return Committee(request_id, tuple(members))


def is_member(
    request: bytes,
    block_hash: Digest,
    n: int,
    k: int,
    subject_id: int,
    *,
    distinct: bool = False,
) -> tuple[bool, tuple[int, ...]]:
    """Whether ``subject_id`` sits on the committee, and at which slots."""
    if not distinct:
        _check(n, k, distinct)
        slots = tuple(s for s in range(1, k + 1) if draw(request, block_hash, n, s) == subject_id)
    else:
        # re-draws depend on earlier slots, so the whole committee is needed
        slots = select(request, block_hash, n, k, distinct=True).slots_of(subject_id)
    return bool(slots), slots
