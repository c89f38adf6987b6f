"""Tuning of the positive and negative Rocchio weights with the neutral weight fixed.

The training signal is a self-ranking score: a user's own profile POIs are
ranked by the user model built from that profile and evaluated against the
profile ratings. A real-coded genetic algorithm locates a promising region,
then every point of a regular lattice inside it is evaluated.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import Qrels, UserProfile
from .embedding import EmbeddingModel
from .evaluation import compute_metric, evaluate_run, parse_metric
from .modeling import RocchioParams, build_user_model, class_profiles, poi_vector
from .ranking import cosine_matrix, emit_run, rank_candidates

log = logging.getLogger(__name__)

SAME_FOR_ALL = "same_for_all"
PER_USER = "per_user"
STRATEGIES = (SAME_FOR_ALL, PER_USER)

GRID_GA_BOX = "ga_box"
GRID_FULL = "full"

# profile ratings >= 3 are relevant when a profile serves as its own judgments
SELF_RELEVANCE_THRESHOLD = 3

# an objective maps arrays of alpha and gamma values to an array of scores
Objective = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OptConfig:
    objective: str = "ndcg_cut_5"
    strategy: str = SAME_FOR_ALL
    range_lo: float = -8.0
    range_hi: float = 8.0
    grid_step: float = 0.2
    ga_population: int = 40
    ga_generations: int = 30
    seed: int = 1
    beta: float = 1.0
    grid_region: str = GRID_GA_BOX

    def __post_init__(self) -> None:
        object.__setattr__(self, "objective", parse_metric(self.objective))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if not self.range_lo < self.range_hi:
            raise ValueError("range_lo must be < range_hi")
        if not self.grid_step > 0:
            raise ValueError("grid_step must be > 0")
        if self.ga_population < 4:
            raise ValueError("ga_population must be >= 4")
        if self.ga_generations < 1:
            raise ValueError("ga_generations must be >= 1")
        if self.grid_region not in (GRID_GA_BOX, GRID_FULL):
            raise ValueError(f"grid_region must be {GRID_GA_BOX!r} or {GRID_FULL!r}")


@dataclass(frozen=True)
class Box:
    alpha_lo: float
    alpha_hi: float
    gamma_lo: float
    gamma_hi: float

    def contains(self, alpha: float, gamma: float) -> bool:
        return self.alpha_lo <= alpha <= self.alpha_hi and self.gamma_lo <= gamma <= self.gamma_hi

    @classmethod
    def full(cls, config: OptConfig) -> "Box":
        return cls(config.range_lo, config.range_hi, config.range_lo, config.range_hi)


@dataclass(frozen=True)
class TracePoint:
    user_id: str  # "*" for the mean over all users
    alpha: float
    gamma: float
    score: float


@dataclass(frozen=True)
class SearchResult:
    strategy: str
    objective: str
    params: RocchioParams | None
    per_user_params: Mapping[str, RocchioParams]
    objective_value: float
    per_user_scores: Mapping[str, float]
    box: Box
    trace: tuple[TracePoint, ...] = field(repr=False, default=())

    def params_for(self, user_id: str) -> RocchioParams:
        if user_id in self.per_user_params:
            return self.per_user_params[user_id]
        if self.params is None:
            raise KeyError(f"no parameters for user {user_id}")
        return self.params

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["user_id", "alpha", "gamma", self.objective])
        for p in self.trace:
            writer.writerow([p.user_id, repr(p.alpha), repr(p.gamma), repr(p.score)])
        return buf.getvalue()


# ---------------------------------------------------------------- self-ranking score


def _self_qrels(profile: UserProfile) -> Qrels:
    return Qrels({(profile.user_id, e.poi.id): e.rating for e in profile.entries})


def profile_self_score(
    model: EmbeddingModel,
    profile: UserProfile,
    weighting: str,
    params: RocchioParams,
    objective: str,
) -> float:
    """Rank the profile's own POIs with its user model and score the ranking by its ratings."""
    if not profile.entries:
        raise ValueError(f"profile {profile.user_id} is empty")
    objective = parse_metric(objective)
    if not any(e.rating >= SELF_RELEVANCE_THRESHOLD for e in profile.entries):
        log.warning("profile %s has no positive entry; self score is 0", profile.user_id)
        return 0.0
    user = build_user_model(model, profile, weighting, params)
    candidates = [poi_vector(model, e.poi) for e in profile.entries]
    ranked = rank_candidates(user, candidates, request_id=profile.user_id)
    report = evaluate_run(
        emit_run([ranked], "self"), _self_qrels(profile), SELF_RELEVANCE_THRESHOLD, [objective]
    )
    return report.per_request[profile.user_id][objective]


class SelfRankingProblem:
    """Vectorized :func:`profile_self_score` over many (alpha, gamma) pairs for one user.

    Produces exactly the same values as the scalar path: class vectors,
    cosines and tie-breaking are computed identically.
    """

    def __init__(
        self,
        model: EmbeddingModel,
        profile: UserProfile,
        weighting: str,
        objective: str,
        beta: float = 1.0,
    ):
        if not profile.entries:
            raise ValueError(f"profile {profile.user_id} is empty")
        self.user_id = profile.user_id
        self.objective = parse_metric(objective)
        self.beta = beta
        self.has_positive = any(e.rating >= SELF_RELEVANCE_THRESHOLD for e in profile.entries)
        if not self.has_positive:
            log.warning("profile %s has no positive entry; self score is 0", profile.user_id)
        self.pos, self.neu, self.neg = class_profiles(model, profile, weighting)
        # candidates sorted by id so a stable sort on -score breaks ties by id
        entries = sorted(profile.entries, key=lambda e: e.poi.id)
        self.docs = np.stack([poi_vector(model, e.poi).vector for e in entries])
        self.grades = np.array([e.rating for e in entries])
        self.judged = [int(g) for g in self.grades]
        self._memo: dict[bytes, float] = {}

    def user_vectors(self, alphas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        a = np.asarray(alphas, dtype=np.float64)[:, None]
        g = np.asarray(gammas, dtype=np.float64)[:, None]
        return a * self.pos + self.beta * self.neu - g * self.neg

    def __call__(self, alphas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        alphas = np.atleast_1d(np.asarray(alphas, dtype=np.float64))
        gammas = np.atleast_1d(np.asarray(gammas, dtype=np.float64))
        if not self.has_positive:
            return np.zeros(len(alphas))
        scores = cosine_matrix(self.user_vectors(alphas, gammas), self.docs)
        order = np.argsort(-scores, axis=1, kind="stable")
        ranked = self.grades[order]
        out = np.empty(len(alphas))
        for i, row in enumerate(ranked):
            key = row.tobytes()
            value = self._memo.get(key)
            if value is None:
                value = compute_metric(
                    self.objective, [int(x) for x in row], self.judged, SELF_RELEVANCE_THRESHOLD
                )
                self._memo[key] = value
            out[i] = value
        return out


def mean_objective(problems: Sequence[SelfRankingProblem]) -> Objective:
    def objective(alphas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        total = np.zeros(len(np.atleast_1d(alphas)))
        for p in problems:
            total = total + p(alphas, gammas)
        return total / len(problems)

    return objective


# ---------------------------------------------------------------- genetic range search


def _snap_out(lo: float, hi: float, step: float, clip_lo: float, clip_hi: float) -> tuple[float, float]:
    lo = max(clip_lo, math.floor(lo / step + 1e-9) * step)
    hi = min(clip_hi, math.ceil(hi / step - 1e-9) * step)
    return round(lo, 10), round(hi, 10)


def genetic_search(
    objective: Objective,
    config: OptConfig,
    trace: list[TracePoint] | None = None,
) -> Box:
    """Maximize ``objective`` over the clip square with a real-coded GA and return a box.

    Tournament selection, blend (BLX-0.5) crossover, Gaussian mutation and
    two elites. The initial population contains the four corners of the clip
    square. The box encloses every evaluated point scoring at least the
    top-decile score of the final population, padded and snapped outward to
    the grid, then clipped.
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = config.range_lo, config.range_hi
    width = hi - lo
    n = config.ga_population
    corners = np.array([[lo, lo], [lo, hi], [hi, lo], [hi, hi]])
    pop = np.vstack([corners, rng.uniform(lo, hi, size=(n - 4, 2))])
    seen_x: list[np.ndarray] = []
    seen_f: list[np.ndarray] = []

    def evaluate(x: np.ndarray) -> np.ndarray:
        f = np.asarray(objective(x[:, 0], x[:, 1]), dtype=np.float64)
        seen_x.append(x.copy())
        seen_f.append(f)
        if trace is not None:
            trace.extend(TracePoint("*", float(a), float(g), float(s)) for (a, g), s in zip(x, f))
        return f

    fit = evaluate(pop)
    n_elite = 2
    sigma = 0.05 * width
    for _ in range(config.ga_generations - 1):
        elite = np.argsort(-fit, kind="stable")[:n_elite]
        n_children = n - n_elite
        # binary tournaments
        a = rng.integers(0, n, size=(n_children, 2))
        b = rng.integers(0, n, size=(n_children, 2))
        parents = np.where(fit[a] >= fit[b], a, b)
        p1, p2 = pop[parents[:, 0]], pop[parents[:, 1]]
        span = np.abs(p1 - p2)
        cmin = np.minimum(p1, p2) - 0.5 * span
        children = cmin + rng.random((n_children, 2)) * (2.0 * span)
        mutate = rng.random((n_children, 2)) < 0.2
        children = children + mutate * rng.normal(0.0, sigma, size=(n_children, 2))
        children = np.clip(children, lo, hi)
        pop = np.vstack([pop[elite], children])
        fit = np.concatenate([fit[elite], evaluate(children)])

    k = max(1, math.ceil(0.1 * n))
    threshold = np.sort(fit)[::-1][k - 1]
    xs = np.vstack(seen_x)
    fs = np.concatenate(seen_f)
    top = xs[fs >= threshold]
    pad = max(0.05 * width, 2 * config.grid_step)
    a_lo, a_hi = _snap_out(top[:, 0].min() - pad, top[:, 0].max() + pad, config.grid_step, lo, hi)
    g_lo, g_hi = _snap_out(top[:, 1].min() - pad, top[:, 1].max() + pad, config.grid_step, lo, hi)
    return Box(a_lo, a_hi, g_lo, g_hi)


def build_problems(
    model: EmbeddingModel,
    profiles: Sequence[UserProfile],
    weighting: str,
    config: OptConfig,
) -> list[SelfRankingProblem]:
    problems = [
        SelfRankingProblem(model, p, weighting, config.objective, config.beta)
        for p in profiles
        if p.entries
    ]
    if not problems:
        raise ValueError("no non-empty profiles to optimize on")
    return problems


def genetic_range_search(
    model: EmbeddingModel,
    profiles: Sequence[UserProfile],
    weighting: str,
    config: OptConfig,
) -> Box:
    return genetic_search(mean_objective(build_problems(model, profiles, weighting, config)), config)


# ---------------------------------------------------------------- grid search


def lattice(lo: float, hi: float, step: float) -> np.ndarray:
    """Multiples of ``step`` inside ``[lo, hi]`` (inclusive, 1e-9 slack)."""
    first = math.ceil(lo / step - 1e-9)
    last = math.floor(hi / step + 1e-9)
    return np.array([round(i * step, 10) for i in range(first, last + 1)])


def _grid_points(box: Box, step: float) -> tuple[np.ndarray, np.ndarray]:
    alphas = lattice(box.alpha_lo, box.alpha_hi, step)
    gammas = lattice(box.gamma_lo, box.gamma_hi, step)
    if len(alphas) == 0 or len(gammas) == 0:
        raise ValueError(f"no lattice point with step {step} inside {box}")
    aa, gg = np.meshgrid(alphas, gammas, indexing="ij")
    return aa.ravel(), gg.ravel()


def _argmax(alphas: np.ndarray, gammas: np.ndarray, scores: np.ndarray) -> int:
    """Best score; ties go to the smaller norm of (alpha, gamma), then lexicographic order."""
    best = scores.max()
    tied = np.flatnonzero(scores == best)
    return int(min(tied, key=lambda i: (alphas[i] ** 2 + gammas[i] ** 2, alphas[i], gammas[i])))


def grid_argmax(objective: Objective, box: Box, step: float) -> tuple[float, float, float, list[TracePoint]]:
    alphas, gammas = _grid_points(box, step)
    scores = np.asarray(objective(alphas, gammas), dtype=np.float64)
    i = _argmax(alphas, gammas, scores)
    trace = [TracePoint("*", float(a), float(g), float(s)) for a, g, s in zip(alphas, gammas, scores)]
    return float(alphas[i]), float(gammas[i]), float(scores[i]), trace


def _check_box(box: Box, config: OptConfig) -> None:
    eps = 1e-9
    if not (
        config.range_lo - eps <= box.alpha_lo <= box.alpha_hi <= config.range_hi + eps
        and config.range_lo - eps <= box.gamma_lo <= box.gamma_hi <= config.range_hi + eps
    ):
        raise ValueError(f"{box} is not inside the clip range [{config.range_lo}, {config.range_hi}]")


def grid_search(
    model: EmbeddingModel,
    profiles: Sequence[UserProfile],
    box: Box,
    config: OptConfig,
    weighting: str,
    problems: Sequence[SelfRankingProblem] | None = None,
) -> SearchResult:
    """Evaluate every lattice point in ``box`` (neutral weight fixed) and keep the best.

    ``same_for_all`` maximizes the mean self score over users; ``per_user``
    picks the best point for each user independently.
    """
    _check_box(box, config)
    if problems is None:
        problems = build_problems(model, profiles, weighting, config)
    alphas, gammas = _grid_points(box, config.grid_step)
    per_user = {p.user_id: p(alphas, gammas) for p in problems}
    beta = config.beta
    trace: list[TracePoint] = []
    if config.strategy == SAME_FOR_ALL:
        mean = sum(per_user.values()) / len(per_user)
        i = _argmax(alphas, gammas, mean)
        params = RocchioParams(float(alphas[i]), beta, float(gammas[i]))
        trace = [TracePoint("*", float(a), float(g), float(s)) for a, g, s in zip(alphas, gammas, mean)]
        return SearchResult(
            strategy=SAME_FOR_ALL,
            objective=config.objective,
            params=params,
            per_user_params={},
            objective_value=float(mean[i]),
            per_user_scores={uid: float(s[i]) for uid, s in per_user.items()},
            box=box,
            trace=tuple(trace),
        )
    chosen: dict[str, RocchioParams] = {}
    best: dict[str, float] = {}
    for uid, s in per_user.items():
        i = _argmax(alphas, gammas, s)
        chosen[uid] = RocchioParams(float(alphas[i]), beta, float(gammas[i]))
        best[uid] = float(s[i])
        trace.extend(TracePoint(uid, float(a), float(g), float(v)) for a, g, v in zip(alphas, gammas, s))
    return SearchResult(
        strategy=PER_USER,
        objective=config.objective,
        params=None,
        per_user_params=chosen,
        objective_value=sum(best.values()) / len(best),
        per_user_scores=best,
        box=box,
        trace=tuple(trace),
    )


def optimize(
    model: EmbeddingModel,
    profiles: Sequence[UserProfile],
    weighting: str,
    config: OptConfig,
) -> SearchResult:
    """GA range finding on the mean self score followed by grid search per ``config.strategy``."""
    problems = build_problems(model, profiles, weighting, config)
    if config.grid_region == GRID_FULL:
        box = Box.full(config)
    else:
        box = genetic_search(mean_objective(problems), config)
    return grid_search(model, profiles, box, config, weighting, problems=problems)
