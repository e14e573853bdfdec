import numpy as np
import pytest

from cmawizard.errors import ConfigurationError
from cmawizard.racing import (
    CatParam,
    IntParam,
    RealParam,
    TunerSettings,
    default_cma_space,
    plan_iterations,
    race,
    refine,
    sample_initial,
    tune,
)
from cmawizard.suites import generate_suite, order_blocks, suite_spec
from cmawizard.util import derive_seed


def synthetic_runner(offset_key="offset"):
    """Deterministic pseudo-losses plus a per-candidate offset."""

    def runner(params, inst, seed):
        base = derive_seed(inst.key(), seed) % 997 / 997.0
        return base + params.get(offset_key, 0.0)

    return runner


def ordered_blocks(n, seed=5, suite="YATUNINGBBOB"):
    return order_blocks(generate_suite(suite_spec(suite), n, seed=seed))


class TestSampleInitial:
    def test_domain_containment(self):
        cands = sample_initial(default_cma_space(), 100, seed=0)
        assert all(0.1 < c["scale"] < 10.0 for c in cands)
        assert all(c["popsize_factor"] in range(1, 10) for c in cands)
        assert all(isinstance(c["elitist"], bool) for c in cands)
        assert all(isinstance(c["diagonal"], bool) for c in cands)

    def test_deterministic(self):
        assert sample_initial(default_cma_space(), 20, seed=3) == sample_initial(
            default_cma_space(), 20, seed=3
        )

    def test_scale_mean_matches_uniform(self):
        # Analytic mean of uniform(0.1, 10) is 5.05.
        cands = sample_initial(default_cma_space(), 10000, seed=1)
        assert np.mean([c["scale"] for c in cands]) == pytest.approx(5.05, abs=0.1)


class TestRefine:
    SPACE = default_cma_space()

    def test_domain_containment(self):
        elites = [{"scale": 5.0, "popsize_factor": 5, "elitist": True, "diagonal": False}]
        children = refine(elites, self.SPACE, iteration=1, n_new=2000, seed=2)
        assert all(0.1 < c["scale"] < 10.0 for c in children)
        assert all(1 <= c["popsize_factor"] <= 9 for c in children)

    def test_spread_shrinks_to_parent(self):
        elites = [{"scale": 5.0, "popsize_factor": 5, "elitist": True, "diagonal": False}]
        children = refine(elites, self.SPACE, iteration=30, n_new=50, seed=3)
        for child in children:
            assert child["scale"] == pytest.approx(5.0, abs=1e-6)
            assert child["popsize_factor"] == 5
            assert child["elitist"] is True and child["diagonal"] is False

    def test_first_iteration_spread(self):
        # Nominal sd is (10 - 0.1) / 4 = 2.475; domain truncation trims the tails.
        elites = [{"scale": 5.0, "popsize_factor": 5, "elitist": True, "diagonal": False}]
        children = refine(elites, self.SPACE, iteration=1, n_new=10000, seed=4)
        scales = np.array([c["scale"] for c in children])
        assert scales.mean() == pytest.approx(5.0, abs=0.1)
        assert 2.0 < scales.std() < 2.5

    def test_categorical_keep_probability(self):
        elites = [{"scale": 5.0, "popsize_factor": 5, "elitist": True, "diagonal": True}]
        children = refine(elites, self.SPACE, iteration=1, n_new=10000, seed=5)
        kept = np.mean([c["elitist"] for c in children])
        # keep prob 0.5 plus half of the uniform fallback -> 0.75 expected
        assert kept == pytest.approx(0.75, abs=0.03)


class TestRace:
    def test_shifted_candidate_eliminated_at_first_test(self):
        settings = TunerSettings(seed=3)
        cands = {"A": {"offset": 0.0}, "B": {"offset": 100.0}}
        survivors, state = race(cands, ordered_blocks(12), settings, runner=synthetic_runner())
        assert survivors == ["A"]
        assert state.eliminated_at == {"B": 5}
        assert state.blocks_seen == 5

    def test_no_elimination_before_first_test(self):
        settings = TunerSettings(seed=3, first_test_after_blocks=7)
        cands = {"A": {"offset": 0.0}, "B": {"offset": 100.0}}
        _, state = race(cands, ordered_blocks(12), settings, runner=synthetic_runner())
        assert state.eliminated_at == {"B": 7}

    def test_identical_candidates_never_eliminated(self):
        settings = TunerSettings(seed=3)
        cands = {c: {"offset": 1.0} for c in "ABC"}
        survivors, state = race(cands, ordered_blocks(12), settings, runner=synthetic_runner())
        assert survivors == ["A", "B", "C"]
        assert state.blocks_seen == 12

    def test_budget_arithmetic(self):
        # 10 alive candidates x 10 instances x 5 blocks = 500 experiments.
        settings = TunerSettings(seed=1)
        cands = {f"c{i}": {"offset": 0.0} for i in range(10)}
        _, state = race(cands, ordered_blocks(5), settings, runner=synthetic_runner())
        assert state.experiments_used == 500

    def test_partial_block_never_started(self):
        settings = TunerSettings(seed=1, max_experiments=230)
        cands = {f"c{i}": {"offset": float(i)} for i in range(5)}
        _, state = race(cands, ordered_blocks(12), settings, runner=synthetic_runner())
        # 5 x 10 = 50 per block; only 4 full blocks fit in 230.
        assert state.experiments_used == 200
        assert state.blocks_seen == 4

    def test_needs_two_candidates(self):
        with pytest.raises(ConfigurationError):
            race({"A": {}}, ordered_blocks(3), TunerSettings(), runner=synthetic_runner())

    def test_losses_frozen_after_elimination(self):
        settings = TunerSettings(seed=3)
        cands = {"A": {"offset": 0.0}, "B": {"offset": 100.0}}
        _, state = race(cands, ordered_blocks(12), settings, runner=synthetic_runner())
        assert len(state.losses["B"]) == 5 * 10
        assert len(state.losses["A"]) == 5 * 10


class TestTune:
    def test_iteration_count_for_cma_space(self):
        assert plan_iterations(default_cma_space()) == 4

    def test_budget_respected(self):
        def quad(params, inst, seed):
            return (params["scale"] - 2.0) ** 2

        for seed in range(3):
            result = tune(
                default_cma_space(),
                suite_spec("YATUNINGBBOB"),
                TunerSettings(max_experiments=3000, seed=seed),
                runner=quad,
            )
            assert result.state.experiments_used <= 3000
            assert len(result.state.log) == result.state.experiments_used

    def test_synthetic_quadratic_recovery(self):
        def quad(params, inst, seed):
            return (params["scale"] - 2.0) ** 2

        for seed in range(3):
            result = tune(
                default_cma_space(),
                suite_spec("YATUNINGBBOB"),
                TunerSettings(max_experiments=10000, seed=seed),
                runner=quad,
            )
            assert 1.5 < result.elites[0].params["scale"] < 2.5

    def test_budget_too_small_raises_at_startup(self):
        with pytest.raises(ConfigurationError):
            tune(
                default_cma_space(),
                suite_spec("YATUNINGBBOB"),
                TunerSettings(max_experiments=100, seed=0),
                runner=synthetic_runner(),
            )

    def test_no_elimination_before_first_test_anywhere(self):
        result = tune(
            default_cma_space(),
            suite_spec("YATUNINGBBOB"),
            TunerSettings(max_experiments=2000, seed=5),
            runner=synthetic_runner(),
        )
        assert all(v >= 5 for v in result.state.eliminated_at.values())

    def test_best_elite_carried_forward(self):
        def quad(params, inst, seed):
            return (params["scale"] - 2.0) ** 2

        result = tune(
            default_cma_space(),
            suite_spec("YATUNINGBBOB"),
            TunerSettings(max_experiments=4000, seed=2),
            runner=quad,
        )
        by_iteration = {}
        for entry in result.state.log:
            by_iteration.setdefault(entry["iteration"], set()).add(entry["candidate"])
        iterations = sorted(by_iteration)
        assert len(iterations) > 1
        for earlier, later in zip(iterations, iterations[1:]):
            assert by_iteration[earlier] & by_iteration[later], "no elite carried over"

    def test_deterministic(self):
        def quad(params, inst, seed):
            return (params["scale"] - 2.0) ** 2

        settings = TunerSettings(max_experiments=2000, seed=9)
        a = tune(default_cma_space(), suite_spec("YATUNINGBBOB"), settings, runner=quad)
        b = tune(default_cma_space(), suite_spec("YATUNINGBBOB"), settings, runner=quad)
        assert [e.params for e in a.elites] == [e.params for e in b.elites]
        assert a.state.log == b.state.log


def test_settings_validation():
    with pytest.raises(ConfigurationError):
        TunerSettings(first_test_after_blocks=0)
    with pytest.raises(ConfigurationError):
        TunerSettings(alpha=1.5)


def test_space_descriptor_types():
    space = default_cma_space()
    assert isinstance(space[0], RealParam) and space[0].name == "scale"
    assert isinstance(space[1], IntParam) and (space[1].lower, space[1].upper) == (1, 9)
    assert isinstance(space[2], CatParam) and set(space[2].values) == {True, False}
