"""Line-oriented readers and writers for the on-disk dataset and TREC files.

Formats (tab separated unless noted)::

    pois.tsv       poi_id  tag1|tag2|...
    profiles.tsv   user_id  poi_id  rating  tag1|tag2|...
    requests.tsv   request_id  user_id  city,trip_type,duration,group,season  cand1|cand2|...
    qrels          request_id 0 poi_id grade            (whitespace separated)
    run            request_id Q0 poi_id rank score tag  (whitespace separated)
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .data import Context, Poi, ProfileEntry, Qrels, Request, RunFile, RunRow, UserProfile

PathLike = str | os.PathLike


class ParseError(ValueError):
    """A malformed line in one of the input files."""

    def __init__(self, path: PathLike, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


def _lines(path: PathLike) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def _split_pipe(field: str) -> list[str]:
    return field.split("|") if field else []


def _join_tags(poi: Poi) -> str:
    for t in poi.tags:
        if "|" in t.raw or "\t" in t.raw or "\n" in t.raw:
            raise ValueError(f"tag {t.raw!r} cannot be serialized")
    return "|".join(t.raw for t in poi.tags)


def _tagged_poi(path: PathLike, lineno: int, poi_id: str, tag_field: str) -> Poi:
    try:
        return Poi.from_raw(poi_id, _split_pipe(tag_field))
    except ValueError as exc:
        raise ParseError(path, lineno, str(exc)) from None


# ---------------------------------------------------------------- POIs


def load_pois(path: PathLike) -> list[Poi]:
    pois: list[Poi] = []
    seen: set[str] = set()
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 2 tab-separated fields, got {len(parts)}")
        poi_id, tag_field = parts
        if not poi_id:
            raise ParseError(path, lineno, "empty POI id")
        if poi_id in seen:
            raise ParseError(path, lineno, f"duplicate POI id {poi_id}")
        seen.add(poi_id)
        pois.append(_tagged_poi(path, lineno, poi_id, tag_field))
    return pois


def write_pois(pois: Sequence[Poi], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for poi in pois:
            fh.write(f"{poi.id}\t{_join_tags(poi)}\n")


# ---------------------------------------------------------------- profiles


def load_profiles(path: PathLike) -> list[UserProfile]:
    entries: dict[str, list[ProfileEntry]] = {}
    seen: set[tuple[str, str]] = set()
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(path, lineno, f"expected 4 tab-separated fields, got {len(parts)}")
        user_id, poi_id, rating_field, tag_field = parts
        if not user_id or not poi_id:
            raise ParseError(path, lineno, "empty user or POI id")
        try:
            rating = int(rating_field)
        except ValueError:
            raise ParseError(path, lineno, f"rating is not an integer: {rating_field!r}") from None
        if (user_id, poi_id) in seen:
            raise ParseError(path, lineno, f"user {user_id} rates POI {poi_id} twice")
        seen.add((user_id, poi_id))
        poi = _tagged_poi(path, lineno, poi_id, tag_field)
        try:
            entry = ProfileEntry(poi, rating)
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        entries.setdefault(user_id, []).append(entry)
    return [UserProfile(uid, tuple(es)) for uid, es in entries.items()]


def write_profiles(profiles: Sequence[UserProfile], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for profile in profiles:
            for e in profile.entries:
                fh.write(f"{profile.user_id}\t{e.poi.id}\t{e.rating}\t{_join_tags(e.poi)}\n")


# ---------------------------------------------------------------- requests


def load_requests(
    path: PathLike, profiles: Sequence[UserProfile], pois: Sequence[Poi]
) -> list[Request]:
    """Read requests, resolving user ids against ``profiles`` and candidates against ``pois``."""
    by_user = {p.user_id: p for p in profiles}
    by_poi = {p.id: p for p in pois}
    requests: list[Request] = []
    seen: set[str] = set()
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(path, lineno, f"expected 4 tab-separated fields, got {len(parts)}")
        request_id, user_id, context_field, cand_field = parts
        if not request_id:
            raise ParseError(path, lineno, "empty request id")
        if request_id in seen:
            raise ParseError(path, lineno, f"duplicate request id {request_id}")
        seen.add(request_id)
        if user_id not in by_user:
            raise ParseError(path, lineno, f"unknown user {user_id}")
        ctx = context_field.split(",")
        if len(ctx) != 5:
            raise ParseError(path, lineno, f"context needs 5 comma-separated fields, got {len(ctx)}")
        candidates = []
        for cid in _split_pipe(cand_field):
            if cid not in by_poi:
                raise ParseError(path, lineno, f"unknown candidate POI {cid}")
            candidates.append(by_poi[cid])
        requests.append(Request(request_id, by_user[user_id], Context(*ctx), tuple(candidates)))
    return requests


def write_requests(requests: Sequence[Request], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in requests:
            ctx = r.context.as_tuple()
            if any(("," in c) or ("\t" in c) for c in ctx):
                raise ValueError(f"request {r.request_id}: context fields cannot contain ',' or tabs")
            cands = "|".join(p.id for p in r.candidates)
            fh.write(f"{r.request_id}\t{r.profile.user_id}\t{','.join(ctx)}\t{cands}\n")


# ---------------------------------------------------------------- qrels


def load_qrels(path: PathLike) -> Qrels:
    judgments: dict[tuple[str, str], int] = {}
    for lineno, line in _lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(path, lineno, f"expected 4 fields, got {len(parts)}")
        request_id, _iteration, poi_id, grade_field = parts
        try:
            grade = int(grade_field)
        except ValueError:
            raise ParseError(path, lineno, f"grade is not an integer: {grade_field!r}") from None
        if grade < 0:
            raise ParseError(path, lineno, f"negative grade {grade}")
        key = (request_id, poi_id)
        if key in judgments:
            raise ParseError(path, lineno, f"duplicate judgment for {request_id} {poi_id}")
        judgments[key] = grade
    return Qrels(judgments)


def write_qrels(qrels: Qrels, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for (rid, pid), grade in qrels.judgments.items():
            fh.write(f"{rid} 0 {pid} {grade}\n")


# ---------------------------------------------------------------- runs


def format_run(run: RunFile) -> str:
    return "".join(
        f"{r.request_id} Q0 {r.poi_id} {r.rank} {r.score:.6f} {r.run_tag}\n" for r in run.rows
    )


def read_run(path: PathLike) -> RunFile:
    rows: list[RunRow] = []
    for lineno, line in _lines(path):
        parts = line.split()
        if len(parts) != 6:
            raise ParseError(path, lineno, f"expected 6 fields, got {len(parts)}")
        request_id, _q0, poi_id, rank_field, score_field, tag = parts
        try:
            rows.append(RunRow(request_id, poi_id, int(rank_field), float(score_field), tag))
        except ValueError:
            raise ParseError(path, lineno, "rank must be an integer and score a real") from None
    try:
        return RunFile(tuple(rows))
    except ValueError as exc:
        raise ParseError(path, 0, str(exc)) from None


def write_run(run: RunFile, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_run(run))


# ---------------------------------------------------------------- dataset directories

POIS_FILE = "pois.tsv"
PROFILES_FILE = "profiles.tsv"
REQUESTS_FILE = "requests.tsv"
QRELS_FILE = "qrels.txt"


def write_dataset(
    directory: PathLike,
    pois: Sequence[Poi],
    profiles: Sequence[UserProfile],
    requests: Sequence[Request],
    qrels: Qrels | None,
) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_pois(pois, out / POIS_FILE)
    write_profiles(profiles, out / PROFILES_FILE)
    write_requests(requests, out / REQUESTS_FILE)
    if qrels is not None:
        write_qrels(qrels, out / QRELS_FILE)
    return out


def read_dataset(directory: PathLike) -> Mapping[str, object]:
    """Load the four dataset files; ``qrels`` is ``None`` when the file is absent."""
    d = Path(directory)
    pois = load_pois(d / POIS_FILE)
    profiles = load_profiles(d / PROFILES_FILE)
    requests = load_requests(d / REQUESTS_FILE, profiles, pois)
    qrels = load_qrels(d / QRELS_FILE) if (d / QRELS_FILE).exists() else None
    return {"pois": pois, "profiles": profiles, "requests": requests, "qrels": qrels}
