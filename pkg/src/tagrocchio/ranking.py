"""Cosine scoring of candidate POIs against a user vector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import RunFile, RunRow
from .modeling import PoiVector, UserModel


@dataclass(frozen=True)
class RankedList:
    request_id: str
    items: tuple[tuple[str, float], ...]


def cosine_matrix(queries: np.ndarray, docs: np.ndarray) -> np.ndarray:
    """Pairwise cosine between rows of ``queries`` (m, d) and ``docs`` (n, d).

    Zero-norm rows score 0.0 against everything. Each entry is computed the
    same way regardless of how many rows are passed, so batched and single
    evaluations agree bit for bit.
    """
    q = np.asarray(queries, dtype=np.float64)
    p = np.asarray(docs, dtype=np.float64)
    if q.ndim != 2 or p.ndim != 2 or q.shape[1] != p.shape[1]:
        raise ValueError(f"dimension mismatch: {q.shape} vs {p.shape}")
    dots = (q[:, None, :] * p[None, :, :]).sum(axis=-1)
    qn = np.sqrt((q * q).sum(axis=-1))
    pn = np.sqrt((p * p).sum(axis=-1))
    denom = qn[:, None] * pn[None, :]
    out = np.zeros_like(dots)
    np.divide(dots, denom, out=out, where=denom > 0)
    return out


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(cosine_matrix(a[None, :], b[None, :])[0, 0])


def rank_vectors(
    user_vector: np.ndarray, candidates: Sequence[PoiVector]
) -> list[tuple[str, float]]:
    if not candidates:
        return []
    docs = np.stack([c.vector for c in candidates])
    scores = cosine_matrix(np.asarray(user_vector)[None, :], docs)[0]
    items = [(c.poi_id, float(s)) for c, s in zip(candidates, scores)]
    items.sort(key=lambda it: (-it[1], it[0]))
    return items


def rank_candidates(
    user: UserModel, candidates: Sequence[PoiVector], request_id: str | None = None
) -> RankedList:
    """Order candidates by cosine with the combined user vector, ties by ascending POI id."""
    ids = [c.poi_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError("candidate POI ids must be unique")
    rid = user.user_id if request_id is None else request_id
    return RankedList(rid, tuple(rank_vectors(user.combined, candidates)))


def emit_run(ranked: Sequence[RankedList], run_tag: str) -> RunFile:
    if not run_tag or any(ch.isspace() for ch in run_tag):
        raise ValueError(f"run tag must be a non-empty token, got {run_tag!r}")
    rows = [
        RunRow(rl.request_id, poi_id, rank, score, run_tag)
        for rl in ranked
        for rank, (poi_id, score) in enumerate(rl.items, 1)
    ]
    return RunFile(tuple(rows))
