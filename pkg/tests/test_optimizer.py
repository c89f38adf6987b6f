import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from tagrocchio.data import Poi, ProfileEntry, UserProfile
from tagrocchio.embedding import DENSE, EmbeddingModel, TrainConfig
from tagrocchio.experiments import Dataset, build_representation
from tagrocchio.fixtures import generate_fixture
from tagrocchio.modeling import UNWEIGHTED, WEIGHTED, RocchioParams
from tagrocchio.optimizer import (
    PER_USER,
    SAME_FOR_ALL,
    Box,
    OptConfig,
    SelfRankingProblem,
    genetic_range_search,
    genetic_search,
    grid_argmax,
    grid_search,
    lattice,
    optimize,
    profile_self_score,
)

AXES = EmbeddingModel(DENSE, 3, {"x": [1.0, 0.0, 0.0], "y": [0.0, 1.0, 0.0], "z": [0.0, 0.0, 1.0]})


def peak(a0, g0, width=0.3):
    def f(alphas, gammas):
        a, g = np.asarray(alphas), np.asarray(gammas)
        return np.exp(-((a - a0) ** 2 + (g - g0) ** 2) / (2 * width**2))

    return f


def entry(pid, tags, rating):
    return ProfileEntry(Poi.from_raw(pid, tags), rating)


@pytest.fixture(scope="module")
def trained():
    fx = generate_fixture(2, n_users=5, n_pois=100, n_tags=15)
    ds = Dataset.from_fixture(fx)
    return build_representation(DENSE, ds.corpus_pois(), TrainConfig(iterations=200)), ds


class TestSelfScore:
    def test_separable_profile_is_perfect(self):
        profile = UserProfile(
            "u",
            (entry("a", ["x"], 4), entry("b", ["x"], 3), entry("c", ["y"], 2), entry("d", ["z"], 0), entry("e", ["z"], 1)),
        )
        assert profile_self_score(AXES, profile, UNWEIGHTED, RocchioParams(1, 1, 1), "ndcg_cut_5") > 0.95

    def test_single_poi_mrr(self):
        for rating in (0, 4):
            profile = UserProfile("u", (entry("a", ["x"], rating),))
            score = profile_self_score(AXES, profile, WEIGHTED, RocchioParams(), "MRR")
            assert score in (0.0, 1.0)

    def test_p5_on_four_pois_divides_by_five(self):
        profile = UserProfile("u", (entry("a", ["x"], 4), entry("b", ["x"], 4), entry("c", ["y"], 3), entry("d", ["z"], 3)))
        assert profile_self_score(AXES, profile, UNWEIGHTED, RocchioParams(), "P_5") == pytest.approx(0.8, abs=1e-12)

    def test_no_positive_is_zero(self, caplog):
        profile = UserProfile("u", (entry("a", ["x"], 2), entry("b", ["y"], 0)))
        assert profile_self_score(AXES, profile, WEIGHTED, RocchioParams(), "ndcg") == 0.0
        assert "no positive" in caplog.text

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-8, 8), st.floats(-8, 8), st.sampled_from(["ndcg_cut_5", "P_5", "recip_rank", "map", "bpref"]), st.sampled_from([WEIGHTED, UNWEIGHTED]))
    def test_vectorized_is_exact(self, trained, a, g, objective, weighting):
        model, ds = trained
        for profile in ds.profiles:
            problem = SelfRankingProblem(model, profile, weighting, objective)
            scalar = profile_self_score(model, profile, weighting, RocchioParams(a, 1.0, g), objective)
            assert problem(np.array([a]), np.array([g]))[0] == scalar


class TestGenetic:
    def test_planted_optimum(self):
        for seed in range(10):
            box = genetic_search(peak(2.0, -1.0), OptConfig(seed=seed))
            assert box.contains(2.0, -1.0), (seed, box)

    def test_constant_objective_full_box(self):
        box = genetic_search(lambda a, g: np.zeros(len(a)), OptConfig())
        assert box == Box(-8.0, 8.0, -8.0, 8.0)

    def test_deterministic(self, trained):
        model, ds = trained
        cfg = OptConfig(seed=3, ga_generations=5, ga_population=10)
        assert genetic_range_search(model, ds.profiles, WEIGHTED, cfg) == genetic_range_search(model, ds.profiles, WEIGHTED, cfg)

    def test_box_on_grid_and_clipped(self):
        box = genetic_search(peak(7.9, -7.9), OptConfig(seed=4))
        for v in (box.alpha_lo, box.alpha_hi, box.gamma_lo, box.gamma_hi):
            assert -8.0 <= v <= 8.0
            assert abs(v / 0.2 - round(v / 0.2)) < 1e-9


class TestGrid:
    def test_lattice(self):
        pts = lattice(-0.3, 0.5, 0.2)
        assert pts.tolist() == [-0.2, 0.0, 0.2, 0.4]
        assert len(lattice(-8, 8, 0.2)) == 81

    def test_one_point_box(self):
        a, g, _, trace = grid_argmax(peak(0, 0), Box(1.2, 1.2, -0.4, -0.4), 0.2)
        assert (a, g) == (1.2, -0.4) and len(trace) == 1

    def test_empty_lattice(self):
        with pytest.raises(ValueError):
            grid_argmax(peak(0, 0), Box(0.05, 0.1, 0.05, 0.1), 0.2)

    @pytest.mark.parametrize(
        "fn",
        [
            lambda a, g: -np.abs(a - 1.4) - (g + 1.6) ** 2,
            lambda a, g: np.sin(a) * np.cos(g),
            lambda a, g: np.round(np.cos(a) + np.sin(g), 1),
            lambda a, g: np.zeros_like(np.asarray(a)),
        ],
    )
    def test_matches_exhaustive(self, fn):
        box = Box(-3.0, 2.4, -2.0, 3.0)
        a, g, s, _ = grid_argmax(fn, box, 0.2)
        want = oracles.exhaustive_grid_argmax(
            lambda x, y: fn(np.array([x]), np.array([y]))[0], lattice(-3.0, 2.4, 0.2), lattice(-2.0, 3.0, 0.2)
        )
        assert (a, g, s) == want

    def test_zero_objective_prefers_origin(self):
        a, g, _, _ = grid_argmax(lambda a, g: np.zeros(len(a)), Box(-1, 1, -1, 1), 0.2)
        assert (a, g) == (0.0, 0.0)

    def test_result_reproducible(self, trained):
        model, ds = trained
        cfg = OptConfig(objective="ndcg_cut_5")
        box = Box(-2.0, 2.0, -2.0, 2.0)
        result = grid_search(model, ds.profiles, box, cfg, WEIGHTED)
        again = [profile_self_score(model, p, WEIGHTED, result.params, cfg.objective) for p in ds.profiles]
        assert result.objective_value == sum(again) / len(again)
        assert result.objective_value == max(p.score for p in result.trace)
        for p in result.trace:
            assert box.contains(p.alpha, p.gamma)
            assert abs(p.alpha / 0.2 - round(p.alpha / 0.2)) < 1e-9

    def test_box_outside_clip(self, trained):
        model, ds = trained
        with pytest.raises(ValueError):
            grid_search(model, ds.profiles, Box(-9, 0, 0, 1), OptConfig(), WEIGHTED)

    def test_per_user_opposite_optima(self):
        # u1 likes x and dislikes y; u2 the reverse; both rate z neutral
        p1 = UserProfile("u1", (entry("a", ["x"], 4), entry("b", ["y"], 0), entry("c", ["z"], 2), entry("d", ["x", "z"], 3), entry("e", ["y", "z"], 1)))
        p2 = UserProfile("u2", (entry("a", ["y"], 4), entry("b", ["x"], 0), entry("c", ["z"], 2), entry("d", ["y", "x"], 1), entry("e", ["z", "x"], 3)))
        cfg = OptConfig(strategy=PER_USER, objective="ndcg")
        result = grid_search(AXES, [p1, p2], Box(-2, 2, -2, 2), cfg, UNWEIGHTED)
        assert result.params_for("u1") != result.params_for("u2")
        gains = []
        for uid, other, profile in (("u1", "u2", p1), ("u2", "u1", p2)):
            own = profile_self_score(AXES, profile, UNWEIGHTED, result.params_for(uid), "ndcg")
            swapped = profile_self_score(AXES, profile, UNWEIGHTED, result.params_for(other), "ndcg")
            assert own == result.per_user_scores[uid]
            gains.append(own - swapped)
        assert min(gains) >= 0 and max(gains) > 0


class TestOptimize:
    def test_per_user_dominates(self, trained):
        model, ds = trained
        for weighting in (WEIGHTED, UNWEIGHTED):
            same = optimize(model, ds.profiles, weighting, OptConfig(strategy=SAME_FOR_ALL))
            uniq = optimize(model, ds.profiles, weighting, OptConfig(strategy=PER_USER))
            assert uniq.objective_value >= same.objective_value
            assert same.box == uniq.box

    def test_beta_fixed(self, trained):
        model, ds = trained
        result = optimize(model, ds.profiles, WEIGHTED, OptConfig())
        assert result.params.beta == 1.0

    def test_full_region(self, trained):
        model, ds = trained
        result = optimize(model, ds.profiles, WEIGHTED, OptConfig(grid_region="full"))
        assert result.box == Box(-8.0, 8.0, -8.0, 8.0)
        assert len(result.trace) == 81 * 81

    def test_trace_csv(self, trained):
        model, ds = trained
        csv_text = grid_search(model, ds.profiles, Box(0, 0.2, 0, 0), OptConfig(), WEIGHTED).trace_csv()
        lines = csv_text.splitlines()
        assert lines[0] == "user_id,alpha,gamma,ndcg_cut_5" and len(lines) == 3

    @pytest.mark.parametrize("kwargs", [dict(range_lo=1, range_hi=1), dict(grid_step=0), dict(ga_population=3), dict(strategy="x"), dict(objective="nope")])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            OptConfig(**kwargs)
