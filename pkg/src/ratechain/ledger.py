"""Deterministic like/dislike rating ledger.

This is the contract-level state machine: five storage structures plus the
list of rated resources, mutated only through :func:`rate`. Every replica
that applies the same sequence of ``rate`` calls ends up with an identical
state, which :func:`state_digest` makes checkable.

Storage semantics mirror contract storage: boolean mappings default to
``False`` and an absent entry is indistinguishable from a stored default.
We therefore encode the boolean mappings as sets of the pairs that are
``True``; writing ``False`` is the same as deleting the entry.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

__all__ = [
    "IndexOutOfRangeError",
    "LedgerState",
    "RateOutcome",
    "ResourceRating",
    "StorageTouches",
    "TOUCHES_BY_OUTCOME",
    "canonical_serialization",
    "get_number_of_rated_resources",
    "get_rated_resource",
    "get_resource_information",
    "is_valid_resource_id",
    "is_valid_user_id",
    "rate",
    "state_digest",
    "storage_touches_for",
]

USER_ID_LENGTH = 32
_HEX_DIGITS = frozenset("0123456789abcdef")


class IndexOutOfRangeError(IndexError):
    """Raised when a rated-resource index is outside the stored list."""


class RateOutcome(Enum):
    """Which branch of the rating function a call took."""

    NEW_RESOURCE = "new_resource"  # first rating ever for this resource
    NEW_RATER = "new_rater"        # known resource, first rating by this user
    FLIPPED = "flipped"            # user reversed an earlier rating
    NO_OP = "no_op"                # same vote repeated; state unchanged


def is_valid_user_id(value: str) -> bool:
    """True iff ``value`` is exactly 32 lowercase hex characters."""
    return (
        isinstance(value, str)
        and len(value) == USER_ID_LENGTH
        and all(c in _HEX_DIGITS for c in value)
    )


def is_valid_resource_id(value: str) -> bool:
    """Cheap structural check for an already-canonicalized resource URL.

    Full canonicalization (and the produced canonical form) lives in
    :mod:`ratechain.validation`; the ledger only insists that a resource
    identifier is a non-empty http(s) URL string.
    """
    if not isinstance(value, str) or not value:
        return False
    return value.startswith("http://") or value.startswith("https://")


@dataclass
class ResourceRating:
    """Like/dislike counters for one resource."""

    likes: int = 0
    dislikes: int = 0

    def copy(self) -> "ResourceRating":
        return ResourceRating(self.likes, self.dislikes)


@dataclass
class LedgerState:
    """Full contract storage.

    ``resources`` keeps first-rating insertion order. The three boolean
    mappings are stored as true-key sets (see module docstring); use
    :meth:`has_rated` and :meth:`current_vote` for the mapping-with-default
    view.
    """

    resources_information: dict[str, ResourceRating] = field(default_factory=dict)
    resources: list[str] = field(default_factory=list)
    rated_resources: set[str] = field(default_factory=set)
    ratings_information: set[tuple[str, str]] = field(default_factory=set)
    users_to_resources: set[tuple[str, str]] = field(default_factory=set)

    def copy(self) -> "LedgerState":
        return LedgerState(
            resources_information={
                res: info.copy() for res, info in self.resources_information.items()
            },
            resources=list(self.resources),
            rated_resources=set(self.rated_resources),
            ratings_information=set(self.ratings_information),
            users_to_resources=set(self.users_to_resources),
        )

    def has_rated(self, cred: str, res: str) -> bool:
        """Whether this user has ever rated this resource."""
        return (cred, res) in self.users_to_resources

    def current_vote(self, cred: str, res: str) -> bool:
        """The stored rating value for (user, resource); defaults to False."""
        return (cred, res) in self.ratings_information

    def raters_of(self, res: str) -> list[str]:
        """Users who rated ``res``, in sorted order."""
        return sorted(cred for cred, r in self.users_to_resources if r == res)


def rate(
    state: LedgerState, cred: str, res: str, vote: bool
) -> tuple[LedgerState, RateOutcome]:
    """Apply one rating and return the successor state plus the branch taken.

    Total on valid inputs: no provenance or history checks happen here
    (those are application-level). A repeated identical vote leaves the
    state untouched and reports :attr:`RateOutcome.NO_OP`.

    The input state is never mutated.
    """
    if state.has_rated(cred, res):
        current = state.current_vote(cred, res)
        if current and not vote:
            new = state.copy()
            new.ratings_information.discard((cred, res))
            info = new.resources_information[res]
            info.likes -= 1
            info.dislikes += 1
            return new, RateOutcome.FLIPPED
        if not current and vote:
            new = state.copy()
            new.ratings_information.add((cred, res))
            info = new.resources_information[res]
            info.likes += 1
            info.dislikes -= 1
            return new, RateOutcome.FLIPPED
        return state, RateOutcome.NO_OP

    new = state.copy()
    if res not in new.rated_resources:
        new.rated_resources.add(res)
        new.resources.append(res)
        new.users_to_resources.add((cred, res))
        if vote:
            new.resources_information[res] = ResourceRating(1, 0)
            new.ratings_information.add((cred, res))
        else:
            new.resources_information[res] = ResourceRating(0, 1)
        return new, RateOutcome.NEW_RESOURCE

    # Known resource, first rating by this user. The rating value is
    # recorded here as well: without it a later like by the same user would
    # be misread as a flip and drive the dislike counter negative.
    new.users_to_resources.add((cred, res))
    info = new.resources_information[res]
    if vote:
        info.likes += 1
        new.ratings_information.add((cred, res))
    else:
        info.dislikes += 1
    return new, RateOutcome.NEW_RATER


def get_resource_information(state: LedgerState, res: str) -> ResourceRating:
    """Like/dislike counts for ``res``; (0, 0) if it was never rated."""
    info = state.resources_information.get(res)
    return info.copy() if info is not None else ResourceRating(0, 0)


def get_number_of_rated_resources(state: LedgerState) -> int:
    """How many distinct resources have been rated."""
    return len(state.resources)


def get_rated_resource(state: LedgerState, index: int) -> str:
    """The ``index``-th rated resource, in first-rating order."""
    if not 0 <= index < len(state.resources):
        raise IndexOutOfRangeError(
            f"resource index {index} out of range [0, {len(state.resources)})"
        )
    return state.resources[index]


def canonical_serialization(state: LedgerState) -> bytes:
    """Byte-stable encoding of the full state.

    One entry per resource in insertion order: the resource id, its
    counters, and its raters in sorted user-id order with their current
    vote. Two states are equal iff their serializations are equal.
    """
    payload = [
        [
            res,
            state.resources_information[res].likes,
            state.resources_information[res].dislikes,
            [[cred, state.current_vote(cred, res)] for cred in state.raters_of(res)],
        ]
        for res in state.resources
    ]
    return json.dumps(payload, separators=(",", ":")).encode("utf-8")


def state_digest(state: LedgerState) -> bytes:
    """32-byte SHA-256 digest of the canonical serialization."""
    return hashlib.sha256(canonical_serialization(state)).digest()


@dataclass(frozen=True)
class StorageTouches:
    """Storage-slot accesses a rating branch performs, at slot granularity.

    Reads count distinct slots read, writes are split by whether the slot
    previously held its default value (``writes_new``) or not
    (``writes_update``). The counts are constants per branch, which is what
    keeps gas per rating independent of ledger size.
    """

    reads: int
    writes_new: int
    writes_update: int


# Derived by walking each branch of `rate` over the contract storage layout:
# the user/resource flag slots, the per-resource counter pair, and the
# rated-resource list (element slot counted as new, length slot as update).
TOUCHES_BY_OUTCOME: dict[RateOutcome, StorageTouches] = {
    RateOutcome.NEW_RESOURCE: StorageTouches(reads=2, writes_new=6, writes_update=1),
    RateOutcome.NEW_RATER: StorageTouches(reads=3, writes_new=2, writes_update=1),
    RateOutcome.FLIPPED: StorageTouches(reads=4, writes_new=0, writes_update=3),
    RateOutcome.NO_OP: StorageTouches(reads=2, writes_new=0, writes_update=0),
}


def storage_touches_for(outcome: RateOutcome) -> StorageTouches:
    """Storage-touch summary for a rating call that took ``outcome``."""
    return TOUCHES_BY_OUTCOME[outcome]
