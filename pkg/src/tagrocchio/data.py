"""Domain types for POIs, tags, user profiles, requests, judgments and runs."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

_WHITESPACE = re.compile(r"\s+")

# rating given by the user -> scaled rating used by the weighted profile
RATING_SCALE = MappingProxyType({0: -3, 1: -2, 2: 1, 3: 2, 4: 3})

POSITIVE_RATINGS = frozenset({3, 4})
NEUTRAL_RATINGS = frozenset({2})
NEGATIVE_RATINGS = frozenset({0, 1})


def normalize_text(raw: str) -> str:
    text = raw.strip()
    if not text:
        raise ValueError(f"tag is empty after trimming: {raw!r}")
    return _WHITESPACE.sub("-", text).lower()


@dataclass(frozen=True)
class Tag:
    raw: str
    normalized: str

    def __str__(self) -> str:
        return self.normalized


def normalize_tag(raw: str) -> Tag:
    """Lowercase ``raw`` and join its whitespace-separated words with hyphens.

    >>> normalize_tag("Family Friendly").normalized
    'family-friendly'
    """
    return Tag(raw=raw, normalized=normalize_text(raw))


@dataclass(frozen=True)
class Poi:
    id: str
    tags: tuple[Tag, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("POI id must be non-empty")

    @classmethod
    def from_raw(cls, poi_id: str, raw_tags: Iterable[str]) -> "Poi":
        return cls(poi_id, tuple(normalize_tag(t) for t in raw_tags))

    @property
    def tag_names(self) -> tuple[str, ...]:
        return tuple(t.normalized for t in self.tags)


@dataclass(frozen=True)
class ProfileEntry:
    poi: Poi
    rating: int

    def __post_init__(self) -> None:
        if self.rating not in RATING_SCALE:
            raise ValueError(f"rating must be in 0..4, got {self.rating!r}")


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    entries: tuple[ProfileEntry, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for entry in self.entries:
            if entry.poi.id in seen:
                raise ValueError(f"user {self.user_id}: POI {entry.poi.id} rated twice")
            seen.add(entry.poi.id)


@dataclass(frozen=True)
class Context:
    city: str = ""
    trip_type: str = ""
    trip_duration: str = ""
    group_type: str = ""
    season: str = ""

    def as_tuple(self) -> tuple[str, str, str, str, str]:
        return (self.city, self.trip_type, self.trip_duration, self.group_type, self.season)


@dataclass(frozen=True)
class Request:
    request_id: str
    profile: UserProfile
    context: Context
    candidates: tuple[Poi, ...]


@dataclass(frozen=True)
class Qrels:
    """Graded judgments keyed by ``(request_id, poi_id)``."""

    judgments: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, grade in self.judgments.items():
            if not isinstance(grade, (int, np.integer)) or grade < 0:
                raise ValueError(f"grade for {key} must be a non-negative integer, got {grade!r}")
        object.__setattr__(self, "judgments", MappingProxyType(dict(self.judgments)))
        by_request: dict[str, dict[str, int]] = {}
        for (rid, pid), grade in self.judgments.items():
            by_request.setdefault(rid, {})[pid] = int(grade)
        object.__setattr__(self, "_by_request", by_request)

    def __len__(self) -> int:
        return len(self.judgments)

    def request_ids(self) -> list[str]:
        return list(self._by_request)

    def __contains__(self, request_id: object) -> bool:
        return request_id in self._by_request

    def for_request(self, request_id: str) -> dict[str, int]:
        return dict(self._by_request.get(request_id, {}))


@dataclass(frozen=True)
class RunRow:
    request_id: str
    poi_id: str
    rank: int
    score: float
    run_tag: str


@dataclass(frozen=True)
class RunFile:
    rows: tuple[RunRow, ...] = ()

    def __post_init__(self) -> None:
        # rows may come in any order; ranks are checked per request
        for rid, rows in self.by_request().items():
            ordered = sorted(rows, key=lambda r: r.rank)
            if [r.rank for r in ordered] != list(range(1, len(ordered) + 1)):
                raise ValueError(f"request {rid}: ranks must be 1..{len(ordered)} without gaps or repeats")
            for prev, row in zip(ordered, ordered[1:]):
                if row.score > prev.score:
                    raise ValueError(f"request {rid}: scores increase at rank {row.rank}")

    def __len__(self) -> int:
        return len(self.rows)

    def request_ids(self) -> list[str]:
        return list(dict.fromkeys(r.request_id for r in self.rows))

    def by_request(self) -> dict[str, list[RunRow]]:
        out: dict[str, list[RunRow]] = {}
        for row in self.rows:
            out.setdefault(row.request_id, []).append(row)
        return out


def scale_rating(rating: int) -> int:
    if isinstance(rating, bool) or rating not in RATING_SCALE:
        raise ValueError(f"rating must be an integer in 0..4, got {rating!r}")
    return RATING_SCALE[rating]


def partition_profile(
    profile: UserProfile,
) -> tuple[list[ProfileEntry], list[ProfileEntry], list[ProfileEntry]]:
    """Split a profile into (positive, neutral, negative) entries, keeping order."""
    positive, neutral, negative = [], [], []
    for entry in profile.entries:
        if entry.rating in POSITIVE_RATINGS:
            positive.append(entry)
        elif entry.rating in NEUTRAL_RATINGS:
            neutral.append(entry)
        else:
            negative.append(entry)
    return positive, neutral, negative


def build_tag_sentences(
    pois: Sequence[Poi], permutations_per_poi: int = 1, seed: int = 0
) -> list[list[str]]:
    """One sentence of normalized tags per tagged POI, in input order.

    With ``permutations_per_poi > 1`` up to that many distinct orderings are
    emitted per POI: the canonical one first, then seeded random ones.
    """
    if permutations_per_poi < 1:
        raise ValueError("permutations_per_poi must be >= 1")
    rng = np.random.default_rng(seed)
    sentences: list[list[str]] = []
    for poi in pois:
        canonical = list(poi.tag_names)
        if not canonical:
            continue
        sentences.append(canonical)
        if permutations_per_poi == 1:
            continue
        available = _distinct_permutation_count(canonical)
        wanted = min(permutations_per_poi, available)
        seen = {tuple(canonical)}
        if available <= 5040:
            # small tag sets: sample without replacement from the full enumeration
            pool = [p for p in dict.fromkeys(itertools.permutations(canonical)) if p not in seen]
            picks = rng.permutation(len(pool))[: wanted - 1]
            sentences.extend(list(pool[i]) for i in picks)
        else:
            while len(seen) < wanted:
                perm = tuple(canonical[i] for i in rng.permutation(len(canonical)))
                if perm not in seen:
                    seen.add(perm)
                    sentences.append(list(perm))
    return sentences


def _distinct_permutation_count(tokens: Sequence[str]) -> int:
    counts: dict[str, int] = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    total = math.factorial(len(tokens))
    for c in counts.values():
        total //= math.factorial(c)
    return total
