"""Seeded synthetic datasets with a known latent preference structure.

Tags are grouped into clusters. Within each cluster a share of the tags are
"synonyms": they never appear on profile POIs, only on candidate POIs and on
bridge POIs that also carry the cluster's profile tags. Co-occurrence on the
bridge POIs is the only link between a profile tag and its synonyms, so a
co-occurrence embedding can relate them while one-hot vectors cannot.

Each user likes one cluster, dislikes another and is indifferent to the
rest; ratings and judgments follow from that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data import Context, Poi, ProfileEntry, Qrels, Request, UserProfile

TAGS_PER_POI = (1, 2, 3, 4, 5, 6)
# mean 2.75 tags per POI
TAGS_PER_POI_WEIGHTS = (0.25, 0.25, 0.20, 0.15, 0.10, 0.05)

RELEVANT_GRADE = 2

_CITIES = ("Amsterdam", "Boston", "Cambridge", "Milan", "Singapore")
_TRIP_TYPES = ("leisure", "business", "other")
_DURATIONS = ("night out", "day trip", "weekend trip", "longer")
_GROUPS = ("alone", "friends", "family", "other")
_SEASONS = ("winter", "spring", "summer", "autumn")


class InfeasibleFixtureError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterSpec:
    n_clusters: int = 3
    synonym_fraction: float = 0.5
    profile_size: int = 10
    candidates_per_request: int = 20
    profile_pool_fraction: float = 0.3
    candidate_pool_fraction: float = 0.4


@dataclass(frozen=True)
class Fixture:
    pois: tuple[Poi, ...]
    profiles: tuple[UserProfile, ...]
    requests: tuple[Request, ...]
    qrels: Qrels
    tag_cluster: Mapping[str, int] = field(repr=False)
    poi_cluster: Mapping[str, int] = field(repr=False)
    # user id -> (liked cluster, disliked cluster)
    user_preference: Mapping[str, tuple[int, int]] = field(repr=False)


def _check(n_users: int, n_pois: int, n_tags: int, spec: ClusterSpec) -> None:
    if spec.n_clusters < 2:
        raise InfeasibleFixtureError("need at least 2 clusters")
    if n_tags < spec.n_clusters:
        raise InfeasibleFixtureError(f"{n_tags} tags cannot fill {spec.n_clusters} clusters")
    if not 0.0 <= spec.synonym_fraction < 1.0:
        raise InfeasibleFixtureError("synonym_fraction must be in [0, 1)")
    if spec.synonym_fraction > 0 and n_tags < 2 * spec.n_clusters:
        raise InfeasibleFixtureError("synonyms need at least 2 tags per cluster")
    if n_users < 0 or n_pois < 1:
        raise InfeasibleFixtureError("need n_users >= 0 and n_pois >= 1")
    n_profile = math.floor(n_pois * spec.profile_pool_fraction)
    n_cand = math.floor(n_pois * spec.candidate_pool_fraction)
    if n_users and (n_profile < spec.profile_size or n_cand < spec.candidates_per_request):
        raise InfeasibleFixtureError(
            f"{n_pois} POIs give pools of {n_profile} profile and {n_cand} candidate POIs; "
            f"need {spec.profile_size} and {spec.candidates_per_request}"
        )


def _raw_tag(cluster: int, index: int, synonym: bool) -> str:
    return f"Cluster{cluster} {'Synonym' if synonym else 'Tag'}{index}"


def generate_fixture(
    seed: int,
    n_users: int = 10,
    n_pois: int = 200,
    n_tags: int = 30,
    cluster_spec: ClusterSpec = ClusterSpec(),
) -> Fixture:
    _check(n_users, n_pois, n_tags, cluster_spec)
    spec = cluster_spec
    rng = np.random.default_rng(seed)
    k = spec.n_clusters

    # tags: round-robin over clusters, the tail of each cluster are synonyms
    cluster_tags: list[list[int]] = [list(range(c, n_tags, k)) for c in range(k)]
    profile_tags: list[list[str]] = []
    synonym_tags: list[list[str]] = []
    tag_cluster: dict[str, int] = {}
    for c, members in enumerate(cluster_tags):
        n_syn = math.floor(len(members) * spec.synonym_fraction)
        if spec.synonym_fraction > 0:
            n_syn = min(max(n_syn, 1), len(members) - 1)
        plain = [_raw_tag(c, i, False) for i in range(len(members) - n_syn)]
        syn = [_raw_tag(c, i, True) for i in range(n_syn)]
        profile_tags.append(plain)
        synonym_tags.append(syn)
        for t in plain + syn:
            tag_cluster[Poi.from_raw("x", [t]).tag_names[0]] = c

    n_profile = math.floor(n_pois * spec.profile_pool_fraction)
    n_cand = math.floor(n_pois * spec.candidate_pool_fraction)
    if not any(synonym_tags):
        roles = ["any"] * n_pois
    else:
        roles = ["profile"] * n_profile + ["candidate"] * n_cand + ["bridge"] * (n_pois - n_profile - n_cand)

    drafts: list[tuple[str, int, list[str]]] = []
    for role in roles:
        c = int(rng.integers(k))
        n = int(rng.choice(TAGS_PER_POI, p=TAGS_PER_POI_WEIGHTS))
        if role == "profile":
            pool = profile_tags[c]
        elif role == "candidate":
            pool = synonym_tags[c]
        else:
            pool = profile_tags[c] + synonym_tags[c]
        n = min(n, len(pool))
        if role == "bridge":
            n = max(n, 2)
            first = [
                profile_tags[c][int(rng.integers(len(profile_tags[c])))],
                synonym_tags[c][int(rng.integers(len(synonym_tags[c])))],
            ]
            rest = [t for t in pool if t not in first]
            extra = [rest[i] for i in rng.permutation(len(rest))[: n - 2]]
            tags = first + extra
            tags = [tags[i] for i in rng.permutation(len(tags))]
        else:
            tags = [pool[i] for i in rng.permutation(len(pool))[:n]]
        drafts.append((role, c, tags))

    # ids are assigned in shuffled order so they carry no cluster information
    order = rng.permutation(n_pois)
    width = max(4, len(str(n_pois - 1)))
    pois_by_draft: list[Poi] = [None] * n_pois  # type: ignore[list-item]
    for new_index, draft_index in enumerate(order):
        _, _, tags = drafts[draft_index]
        pois_by_draft[draft_index] = Poi.from_raw(f"poi{new_index:0{width}d}", tags)
    pois = tuple(sorted(pois_by_draft, key=lambda p: p.id))
    poi_cluster = {pois_by_draft[i].id: drafts[i][1] for i in range(n_pois)}
    profile_pool = [pois_by_draft[i] for i in range(n_pois) if drafts[i][0] in ("profile", "any")]
    cand_pool = [pois_by_draft[i] for i in range(n_pois) if drafts[i][0] in ("candidate", "any")]

    profiles: list[UserProfile] = []
    requests: list[Request] = []
    judgments: dict[tuple[str, str], int] = {}
    user_preference: dict[str, tuple[int, int]] = {}
    uwidth = max(3, len(str(max(n_users - 1, 0))))
    for u in range(n_users):
        user_id = f"u{u:0{uwidth}d}"
        liked = int(rng.integers(k))
        disliked = int((liked + 1 + rng.integers(k - 1)) % k)
        user_preference[user_id] = (liked, disliked)
        picks = rng.permutation(len(profile_pool))[: spec.profile_size]
        entries = []
        for i in sorted(picks):
            poi = profile_pool[i]
            c = poi_cluster[poi.id]
            if c == liked:
                rating = int(rng.choice((3, 4)))
            elif c == disliked:
                rating = int(rng.choice((0, 1)))
            else:
                rating = 2
            entries.append(ProfileEntry(poi, rating))
        profile = UserProfile(user_id, tuple(entries))
        profiles.append(profile)

        request_id = f"r{u:0{uwidth}d}"
        cand_idx = sorted(rng.permutation(len(cand_pool))[: spec.candidates_per_request])
        candidates = tuple(cand_pool[i] for i in cand_idx)
        context = Context(
            _CITIES[int(rng.integers(len(_CITIES)))],
            _TRIP_TYPES[int(rng.integers(len(_TRIP_TYPES)))],
            _DURATIONS[int(rng.integers(len(_DURATIONS)))],
            _GROUPS[int(rng.integers(len(_GROUPS)))],
            _SEASONS[int(rng.integers(len(_SEASONS)))],
        )
        requests.append(Request(request_id, profile, context, candidates))
        for poi in candidates:
            judgments[(request_id, poi.id)] = RELEVANT_GRADE if poi_cluster[poi.id] == liked else 0

    return Fixture(
        pois=pois,
        profiles=tuple(profiles),
        requests=tuple(requests),
        qrels=Qrels(judgments),
        tag_cluster=tag_cluster,
        poi_cluster=poi_cluster,
        user_preference=user_preference,
    )
