"""POI vectors and Rocchio-style user models built from rated profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Poi, ProfileEntry, UserProfile, partition_profile, scale_rating
from .embedding import EmbeddingModel

WEIGHTED = "weighted"
UNWEIGHTED = "unweighted"
WEIGHTINGS = (WEIGHTED, UNWEIGHTED)

POSITIVE = "positive"
NEUTRAL = "neutral"
NEGATIVE = "negative"
_CLASS_RATINGS = {POSITIVE: {3, 4}, NEUTRAL: {2}, NEGATIVE: {0, 1}}


@dataclass(frozen=True)
class PoiVector:
    poi_id: str
    vector: np.ndarray


@dataclass(frozen=True)
class RocchioParams:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class UserModel:
    user_id: str
    weighting: str
    pos: np.ndarray
    neu: np.ndarray
    neg: np.ndarray
    combined: np.ndarray
    params: RocchioParams


def poi_vector(model: EmbeddingModel, poi: Poi) -> PoiVector:
    """Sum of the POI's tag vectors; out-of-vocabulary tags are skipped."""
    vec = np.zeros(model.dim)
    for tag in poi.tag_names:
        tv = model.vocab.get(tag)
        if tv is not None:
            vec = vec + tv
    return PoiVector(poi.id, vec)


def _check_class(entries: Sequence[ProfileEntry], cls: str) -> None:
    if cls not in _CLASS_RATINGS:
        raise ValueError(f"unknown profile class {cls!r}")
    allowed = _CLASS_RATINGS[cls]
    for e in entries:
        if e.rating not in allowed:
            raise ValueError(f"entry for {e.poi.id} rated {e.rating} does not belong to {cls}")


def profile_unweighted(
    model: EmbeddingModel, entries: Sequence[ProfileEntry], cls: str
) -> np.ndarray:
    """Centroid of the entries' POI vectors; zero vector for an empty class."""
    _check_class(entries, cls)
    total = np.zeros(model.dim)
    for e in entries:
        total = total + poi_vector(model, e.poi).vector
    return total / len(entries) if entries else total


def profile_weighted(
    model: EmbeddingModel, entries: Sequence[ProfileEntry], cls: str
) -> np.ndarray:
    """Centroid of POI vectors each multiplied by its scaled rating.

    The divisor is the number of entries, not the sum of weights.
    """
    _check_class(entries, cls)
    total = np.zeros(model.dim)
    for e in entries:
        total = total + poi_vector(model, e.poi).vector * scale_rating(e.rating)
    return total / len(entries) if entries else total


def combine_rocchio(
    pos: np.ndarray, neu: np.ndarray, neg: np.ndarray, params: RocchioParams
) -> np.ndarray:
    pos, neu, neg = (np.asarray(v, dtype=np.float64) for v in (pos, neu, neg))
    if not (pos.shape == neu.shape == neg.shape):
        raise ValueError(f"dimension mismatch: {pos.shape}, {neu.shape}, {neg.shape}")
    return params.alpha * pos + params.beta * neu - params.gamma * neg


def class_profiles(
    model: EmbeddingModel, profile: UserProfile, weighting: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    build = profile_weighted if weighting == WEIGHTED else profile_unweighted
    positive, neutral, negative = partition_profile(profile)
    return (
        build(model, positive, POSITIVE),
        build(model, neutral, NEUTRAL),
        build(model, negative, NEGATIVE),
    )


def build_user_model(
    model: EmbeddingModel,
    profile: UserProfile,
    weighting: str = WEIGHTED,
    params: RocchioParams = RocchioParams(),
) -> UserModel:
    pos, neu, neg = class_profiles(model, profile, weighting)
    combined = combine_rocchio(pos, neu, neg, params)
    return UserModel(profile.user_id, weighting, pos, neu, neg, combined, params)
