import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmawizard.engine import (
    CmaConfig,
    CmaEs,
    DEFAULT_CONFIG,
    RunRecord,
    population_size,
    run,
    run_baseline,
)
from cmawizard.errors import (
    BudgetTooSmallError,
    InvalidDomainError,
    InvalidLossError,
    UnknownBaselineError,
)
from cmawizard.suites import InstanceSpec, evaluate
from cmawizard.util import monotone_history


def sphere_instance(dimension, budget, rotation_seed=11, **kw):
    return InstanceSpec("sphere", dimension, rotation_seed, budget, **kw)


def oracle_popsize(factor: int, dimension: int) -> int:
    """Arbitrary-precision reference for floor(4 + factor * ln d)."""
    with mpmath.workdps(50):
        return int(mpmath.floor(4 + factor * mpmath.log(dimension)))


class TestConfig:
    def test_defaults(self):
        assert DEFAULT_CONFIG == CmaConfig(1.0, 3, False, False)

    @pytest.mark.parametrize("scale", [0.05, 0.1, 10.0, 25.0])
    def test_scale_domain_is_open(self, scale):
        with pytest.raises(InvalidDomainError):
            CmaConfig(scale=scale)

    @pytest.mark.parametrize("factor", [0, 10, 2.5])
    def test_popsize_factor_domain(self, factor):
        with pytest.raises(InvalidDomainError):
            CmaConfig(popsize_factor=factor)

    def test_params_round_trip(self):
        cfg = CmaConfig(0.4151, 9, False, True)
        assert CmaConfig.from_params(cfg.to_params()) == cfg


class TestPopulationSize:
    def test_dimension_one_is_four(self):
        assert population_size(CmaConfig(popsize_factor=3), 1) == 4

    def test_examples_against_oracle(self):
        assert population_size(CmaConfig(popsize_factor=3), 10) == oracle_popsize(3, 10) == 10
        assert population_size(CmaConfig(popsize_factor=9), 50) == oracle_popsize(9, 50) == 39

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 3000), st.integers(1, 9))
    def test_matches_oracle(self, dimension, factor):
        cfg = CmaConfig(popsize_factor=factor)
        assert population_size(cfg, dimension) == oracle_popsize(factor, dimension)


class TestInit:
    def test_unbounded_defaults(self):
        es = CmaEs(DEFAULT_CONFIG, 5, seed=0)
        assert np.array_equal(es.mean, np.zeros(5))
        assert es.sigma == 1.0
        assert np.array_equal(es.covariance, np.eye(5))
        assert np.array_equal(es.p_sigma, np.zeros(5))
        assert np.array_equal(es.p_c, np.zeros(5))
        assert es.generation == 0 and es.evals_used == 0

    def test_small_scale_concentrates_near_center(self):
        es = CmaEs(CmaConfig(scale=0.1000001), 5, seed=1)
        assert es.sigma == pytest.approx(0.1000001)
        points = np.array(es.ask())
        assert np.abs(points).max() < 1.0

    def test_bounded_scale_example(self):
        # Table-4 bounded configuration value drives the initial step size.
        es = CmaEs(CmaConfig(scale=1.5884, popsize_factor=1, elitist=True, diagonal=True),
                   10, box=(-5.0, 5.0), seed=7)
        assert np.array_equal(es.mean, np.zeros(10))
        assert es.sigma == pytest.approx(1.5884)

    def test_box_reference_step_is_quarter_width(self):
        es = CmaEs(DEFAULT_CONFIG, 2, box=((0.0, 8.0), (-2.0, 2.0)), seed=3)
        assert np.allclose(es.mean, [4.0, 0.0])
        assert np.allclose(es._width, [2.0, 1.0])

    def test_degenerate_box_rejected(self):
        with pytest.raises(InvalidDomainError):
            CmaEs(DEFAULT_CONFIG, 2, box=((1.0, 1.0), (-1.0, 1.0)), seed=0)

    def test_deterministic_given_seed(self):
        a = CmaEs(DEFAULT_CONFIG, 4, seed=9)
        b = CmaEs(DEFAULT_CONFIG, 4, seed=9)
        assert np.array_equal(np.array(a.ask()), np.array(b.ask()))


class TestAsk:
    def test_population_cardinality(self):
        es = CmaEs(DEFAULT_CONFIG, 1, seed=0)  # popsize 4
        assert len(es.ask()) == 4

    def test_diagonal_state_stays_linear_in_dimension(self):
        es = CmaEs(CmaConfig(diagonal=True), 1000, seed=0)
        points = es.ask()
        losses = np.linalg.norm(points, axis=1)
        es.tell(points, losses)
        assert es.covariance.ndim == 1 and es.covariance.shape == (1000,)

    def test_sigma_zero_collapses_to_mean(self):
        es = CmaEs(DEFAULT_CONFIG, 3, seed=2)
        es.sigma = 0.0
        for p in es.ask():
            assert np.array_equal(p, es.mean)

    def test_bounded_points_inside_box(self):
        es = CmaEs(CmaConfig(scale=9.99), 4, box=(-5.0, 5.0), seed=5)
        for _ in range(10):
            pts = np.array(es.ask())
            assert np.all(pts >= -5.0) and np.all(pts <= 5.0)


class TestTell:
    def test_equal_losses_keep_best_seen(self):
        es = CmaEs(DEFAULT_CONFIG, 3, seed=4)
        pts = es.ask()
        es.tell(pts, np.ones(len(pts)))
        best_before = es.best_seen.loss
        pts = es.ask()
        es.tell(pts, np.full(len(pts), 5.0))
        assert es.best_seen.loss == best_before
        assert np.isfinite(es.sigma) and es.sigma > 0

    def test_elitist_preserves_best(self):
        es = CmaEs(CmaConfig(elitist=True), 4, seed=6)
        pts = es.ask()
        losses = [0.5] + [2.0] * (len(pts) - 1)
        es.tell(pts, losses)
        assert es.best_seen.loss == 0.5
        pts = es.ask()
        info = es.tell(pts, np.full(len(pts), 1.0))
        # The preserved point joins the pool, so the pool best matches it.
        assert es.best_seen.loss == 0.5
        assert info["pool_best_loss"] == 0.5

    def test_non_elitist_pool_excludes_history(self):
        es = CmaEs(CmaConfig(elitist=False), 4, seed=6)
        pts = es.ask()
        es.tell(pts, [0.5] + [2.0] * (len(pts) - 1))
        pts = es.ask()
        info = es.tell(pts, np.full(len(pts), 1.0))
        assert info["pool_best_loss"] == 1.0
        assert es.best_seen.loss == 0.5  # best-seen still monotone

    def test_nan_loss_rejected(self):
        es = CmaEs(DEFAULT_CONFIG, 2, seed=0)
        pts = es.ask()
        losses = np.ones(len(pts))
        losses[0] = np.nan
        with pytest.raises(InvalidLossError):
            es.tell(pts, losses)

    def test_length_mismatch_rejected(self):
        es = CmaEs(DEFAULT_CONFIG, 2, seed=0)
        pts = es.ask()
        with pytest.raises(ValueError):
            es.tell(pts[:-1], np.ones(len(pts) - 1))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.booleans())
    def test_best_seen_monotone_under_random_losses(self, seed, elitist):
        rng = np.random.default_rng(seed)
        es = CmaEs(CmaConfig(elitist=elitist), 3, seed=seed)
        previous = math.inf
        for _ in range(5):
            pts = es.ask()
            es.tell(pts, rng.uniform(-5, 5, len(pts)))
            assert es.best_seen.loss <= previous
            previous = es.best_seen.loss

    def test_covariance_stays_positive(self):
        es = CmaEs(DEFAULT_CONFIG, 4, seed=8)
        rng = np.random.default_rng(0)
        for _ in range(50):
            pts = es.ask()
            es.tell(pts, rng.uniform(0, 1, len(pts)))
            assert np.linalg.eigvalsh((es.covariance + es.covariance.T) / 2).min() > 0

    def test_diagonal_covariance_stays_positive(self):
        es = CmaEs(CmaConfig(diagonal=True), 6, seed=8)
        rng = np.random.default_rng(1)
        for _ in range(100):
            pts = es.ask()
            es.tell(pts, rng.uniform(0, 1, len(pts)))
            assert es.covariance.min() > 0


class TestRun:
    def test_generation_arithmetic(self):
        cfg = CmaConfig(popsize_factor=3)
        inst = sphere_instance(10, 50)  # popsize 10
        record = run(cfg, inst, seed=0)
        assert record.evals_used == 50
        assert len(record.history) == 5
        assert record.history[-1][0] == 50

    def test_truncated_final_generation(self):
        inst = sphere_instance(10, 55)
        record = run(DEFAULT_CONFIG, inst, seed=0)
        assert record.evals_used == 55

    def test_budget_below_popsize_rejected(self):
        inst = sphere_instance(10, 9)
        with pytest.raises(BudgetTooSmallError):
            run(DEFAULT_CONFIG, inst, seed=0)

    def test_deterministic(self):
        inst = sphere_instance(5, 300)
        assert run(DEFAULT_CONFIG, inst, seed=3) == run(DEFAULT_CONFIG, inst, seed=3)

    def test_cmasmall_on_tiny_budget_completes(self):
        cfg = CmaConfig(scale=0.4151, popsize_factor=9, elitist=False, diagonal=False)
        inst = sphere_instance(10, 40)  # popsize 24: one full + one truncated generation
        record = run(cfg, inst, seed=1)
        assert record.evals_used == 40

    def test_sphere_convergence(self):
        inst = sphere_instance(5, 2000)
        record = run(DEFAULT_CONFIG, inst, seed=12)
        assert record.final_loss < 1e-6

    def test_history_invariants(self):
        inst = sphere_instance(3, 400)
        record = run(DEFAULT_CONFIG, inst, seed=5)
        assert monotone_history(record.history)

    def test_final_loss_matches_recommendation(self):
        inst = sphere_instance(4, 200)
        record = run(DEFAULT_CONFIG, inst, seed=7)
        assert evaluate(inst, np.array(record.recommendation)) == pytest.approx(
            record.final_loss, rel=1e-12
        )

    def test_bounded_run_inside_box(self):
        inst = sphere_instance(3, 150, fully_bounded=True, box=(-5.0, 5.0))
        record = run(CmaConfig(scale=1.5884, popsize_factor=1, elitist=True, diagonal=True),
                     inst, seed=2)
        assert all(-5.0 <= v <= 5.0 for v in record.recommendation)

    def test_convergence_sanity_medians_decrease(self):
        # Median best-so-far over 20 seeds falls monotonically with budget.
        for dim in (2, 5, 10):
            inst = sphere_instance(dim, 400 * dim)
            histories = [run(DEFAULT_CONFIG, inst, seed=s).history for s in range(20)]
            checkpoints = [0.25, 0.5, 1.0]
            medians = []
            for frac in checkpoints:
                limit = frac * inst.budget
                values = []
                for hist in histories:
                    best = hist[0][1]
                    for evals, loss in hist:
                        if evals > limit:
                            break
                        best = loss
                    values.append(best)
                medians.append(float(np.median(values)))
            assert medians[0] >= medians[1] >= medians[2]

    def test_record_round_trip(self):
        inst = sphere_instance(3, 100)
        record = run(DEFAULT_CONFIG, inst, seed=9, algorithm="cma", config_name="CMAstd")
        assert RunRecord.from_dict(record.to_dict()) == record


class TestBaselines:
    def test_unknown_name(self):
        with pytest.raises(UnknownBaselineError):
            run_baseline("simulated-annealing", sphere_instance(2, 50), 0)

    def test_random_search_contract(self):
        inst = sphere_instance(3, 200)
        record = run_baseline("random-search", inst, 4)
        assert record.evals_used == 200
        assert record.history[-1][0] == 200
        assert monotone_history(record.history)

    def test_one_plus_one_improves(self):
        # Brute-force check over 100 seeds: final beats initial essentially always.
        inst = sphere_instance(2, 500)
        improved = sum(
            run_baseline("one-plus-one-es", inst, s).final_loss
            < run_baseline("one-plus-one-es", inst, s).history[0][1]
            for s in range(100)
        )
        assert improved == 100

    def test_differential_evolution_deterministic(self):
        inst = sphere_instance(4, 300)
        assert run_baseline("differential-evolution", inst, 6) == run_baseline(
            "differential-evolution", inst, 6
        )

    @pytest.mark.parametrize("name", ["random-search", "one-plus-one-es", "differential-evolution"])
    def test_bounded_baselines_stay_inside(self, name):
        inst = sphere_instance(3, 120, fully_bounded=True, box=(-5.0, 5.0))
        record = run_baseline(name, inst, 3)
        assert all(-5.0 <= v <= 5.0 for v in record.recommendation)
        assert monotone_history(record.history)
