import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from abn_forge import (
    AbnParams,
    Dag,
    Dataset,
    GaussianPrior,
    HessianNotPositiveDefinite,
    ScoreCache,
    SeparationStatus,
    StrongGaussianPrior,
    StudentTPrior,
    build_score_cache,
    design_rows,
    fit_node,
    log_marginal_likelihood,
    prior_from_name,
    random_dag,
    sample,
    weakly_informative,
)
from abn_forge.score import describe_prior, parent_masks
from oracles import (
    gauss_hermite_log_marginal,
    newton_mle,
    quad_log_marginal,
    ref_log_posterior,
)


def gaussian_spec(prior: GaussianPrior, d: int) -> dict:
    mean, variance = prior.resolve(d)
    return {"kind": "gaussian", "mean": mean, "variance": variance}


def student_spec(prior: StudentTPrior, d: int) -> dict:
    _, scales = prior.resolve(d)
    return {"kind": "student", "df": prior.df, "scales": scales}


def bernoulli_design(rng, n_obs, coefs):
    """n_obs rows of [1, x1, ...] with y drawn from the logistic model."""
    d = len(coefs) - 1
    X = np.column_stack([np.ones(n_obs)] + [rng.integers(0, 2, n_obs) for _ in range(d)])
    y = (rng.uniform(size=n_obs) < expit(X @ np.asarray(coefs))).astype(float)
    return X.astype(float), y


class TestPriorTypes:
    def test_gaussian_broadcasts_scalars(self):
        mean, var = GaussianPrior(mean=0.0, variance=1000.0).resolve(3)
        assert np.array_equal(mean, np.zeros(3))
        assert np.array_equal(var, np.full(3, 1000.0))

    def test_gaussian_keeps_vectors(self):
        prior = GaussianPrior(mean=np.array([1.0, 2.0]), variance=np.array([0.1, 5.0]))
        mean, var = prior.resolve(2)
        assert np.array_equal(mean, [1.0, 2.0])
        assert np.array_equal(var, [0.1, 5.0])

    def test_gaussian_rejects_nonpositive_variance(self):
        with pytest.raises(ValueError):
            GaussianPrior(mean=0.0, variance=0.0).resolve(2)

    def test_student_scales_put_wide_slot_on_intercept(self):
        loc, scales = StudentTPrior().resolve(3)
        assert np.array_equal(loc, np.zeros(3))
        assert scales[0] == 10.0
        assert np.all(scales[1:] == 2.5)

    def test_student_rejects_bad_df(self):
        with pytest.raises(ValueError):
            StudentTPrior(df=0.0)

    def test_weakly_informative_shorthand(self):
        prior = weakly_informative()
        assert isinstance(prior, GaussianPrior)
        mean, var = prior.resolve(2)
        assert np.all(mean == 0.0) and np.all(var == 1000.0)


class TestStrongGaussianPrior:
    @pytest.fixture
    def truth(self):
        dag = Dag.from_edges(3, [(0, 2), (1, 2)])
        return AbnParams(
            dag=dag,
            intercepts=(0.25, 0.0, -0.5),
            edge_coef={(0, 2): 5.0, (1, 2): 3.0},
        )

    def test_true_parent_gets_tight_informed_slot(self, truth):
        prior = StrongGaussianPrior(truth=truth)
        concrete = prior.for_node(2, 0b011)
        mean, var = concrete.resolve(3)
        assert np.array_equal(mean, [-0.5, 5.0, 3.0])
        assert np.array_equal(var, [0.1, 0.1, 0.1])

    def test_absent_parent_gets_diffuse_slot(self, truth):
        prior = StrongGaussianPrior(truth=truth)
        concrete = prior.for_node(1, 0b101)
        mean, var = concrete.resolve(3)
        assert np.array_equal(mean, [0.0, 0.0, 0.0])
        assert np.array_equal(var, [0.1, 1000.0, 1000.0])

    def test_absent_variance_is_configurable(self, truth):
        prior = StrongGaussianPrior(truth=truth, absent_variance=50.0)
        _, var = prior.for_node(0, 0b010).resolve(2)
        assert var[1] == 50.0

    def test_rejects_bad_variances(self, truth):
        with pytest.raises(ValueError):
            StrongGaussianPrior(truth=truth, variance=-1.0)

    def test_rejects_out_of_range_node(self, truth):
        with pytest.raises(ValueError):
            StrongGaussianPrior(truth=truth).for_node(3, 0)


class TestPriorFromName:
    def test_round_trip_names(self):
        assert isinstance(prior_from_name("wi"), GaussianPrior)
        assert isinstance(prior_from_name("ST"), StudentTPrior)
        dag = Dag.from_edges(2, [(0, 1)])
        truth = AbnParams.uniform(dag)
        si = prior_from_name("si", truth=truth, si_absent_variance=123.0)
        assert isinstance(si, StrongGaussianPrior)
        assert si.absent_variance == 123.0

    def test_si_requires_truth(self):
        with pytest.raises(ValueError):
            prior_from_name("si")

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            prior_from_name("jeffreys")

    def test_describe_strings_are_stable(self):
        assert "gaussian" in describe_prior(weakly_informative())
        assert "student_t" in describe_prior(StudentTPrior())
        truth = AbnParams.uniform(Dag.from_edges(2, [(0, 1)]))
        assert "absent_variance" in describe_prior(StrongGaussianPrior(truth=truth))


class TestFitNode:
    def test_tight_prior_pins_coefficients(self):
        rng = np.random.default_rng(0)
        X, y = bernoulli_design(rng, 60, [0.0, 0.0])
        m = np.array([0.3, -1.2])
        fit = fit_node(X, y, GaussianPrior(mean=m, variance=1e-8))
        assert fit.converged
        assert np.abs(fit.coef - m).max() < 1e-3

    def test_diffuse_prior_recovers_unpenalised_mle(self):
        rng = np.random.default_rng(1)
        X, y = bernoulli_design(rng, 400, [-0.3, 1.2])
        fit = fit_node(X, y, weakly_informative())
        assert fit.separation == SeparationStatus.NONE
        assert np.abs(fit.coef - newton_mle(X, y)).max() < 1e-3

    def test_student_prior_tames_complete_separation(self):
        X = np.column_stack([np.ones(12), np.repeat([0.0, 1.0], 6)])
        y = np.repeat([0.0, 1.0], 6)
        fit = fit_node(X, y, StudentTPrior())
        assert fit.converged
        assert fit.separation == SeparationStatus.COMPLETE
        assert np.all(np.isfinite(fit.coef))
        assert np.abs(fit.coef).max() < 15.0

    def test_mode_maximises_the_exact_posterior(self):
        rng = np.random.default_rng(2)
        X, y = bernoulli_design(rng, 80, [0.2, -0.8])
        for prior, spec in [
            (weakly_informative(), gaussian_spec(weakly_informative(), 2)),
            (StudentTPrior(), student_spec(StudentTPrior(), 2)),
        ]:
            fit = fit_node(X, y, prior)
            at_mode = ref_log_posterior(fit.coef, X, y, spec)
            for _ in range(40):
                probe = fit.coef + rng.normal(scale=0.05, size=2)
                assert ref_log_posterior(probe, X, y, spec) <= at_mode + 1e-9

    def test_student_gradient_vanishes_at_mode(self):
        rng = np.random.default_rng(3)
        X, y = bernoulli_design(rng, 120, [0.1, 0.9])
        prior = StudentTPrior()
        fit = fit_node(X, y, prior)
        _, scales = prior.resolve(2)
        u = fit.coef
        p = expit(X @ u)
        grad = X.T @ (y - p) - (prior.df + 1.0) * u / (prior.df * scales**2 + u * u)
        assert np.abs(grad).max() < 1e-4

    def test_neg_hessian_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        X, y = bernoulli_design(rng, 90, [0.0, 0.7])
        for prior, spec in [
            (weakly_informative(), gaussian_spec(weakly_informative(), 2)),
            (StudentTPrior(), student_spec(StudentTPrior(), 2)),
        ]:
            fit = fit_node(X, y, prior)
            h = 1e-5
            fd = np.empty((2, 2))
            for i in range(2):
                for j in range(2):
                    ei, ej = np.zeros(2), np.zeros(2)
                    ei[i], ej[j] = h, h
                    fd[i, j] = -(
                        ref_log_posterior(fit.coef + ei + ej, X, y, spec)
                        - ref_log_posterior(fit.coef + ei - ej, X, y, spec)
                        - ref_log_posterior(fit.coef - ei + ej, X, y, spec)
                        + ref_log_posterior(fit.coef - ei - ej, X, y, spec)
                    ) / (4 * h * h)
            assert np.allclose(fit.neg_hessian, fd, rtol=1e-3, atol=1e-4)

    def test_converged_curvature_is_positive_definite(self):
        rng = np.random.default_rng(5)
        X, y = bernoulli_design(rng, 70, [0.4, -0.4])
        fit = fit_node(X, y, weakly_informative())
        np.linalg.cholesky(fit.neg_hessian)
        assert np.allclose(fit.neg_hessian, fit.neg_hessian.T)

    def test_rejects_design_without_intercept(self):
        X = np.zeros((5, 2))
        with pytest.raises(ValueError):
            fit_node(X, np.zeros(5), weakly_informative())

    def test_rejects_non_binary_outcome(self):
        X = np.ones((4, 1))
        with pytest.raises(ValueError):
            fit_node(X, np.array([0.0, 1.0, 2.0, 0.0]), weakly_informative())

    @given(st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_row_permutation_leaves_fit_unchanged(self, seed):
        rng = np.random.default_rng(seed)
        X, y = bernoulli_design(rng, 50, [0.0, 0.5])
        perm = rng.permutation(50)
        a = fit_node(X, y, weakly_informative())
        b = fit_node(X[perm], y[perm], weakly_informative())
        assert np.array_equal(a.coef, b.coef)
        assert a.log_marginal == b.log_marginal


class TestLogMarginal:
    def test_empty_dataset_scores_exactly_zero(self):
        X = np.ones((0, 1))
        y = np.zeros(0)
        for prior in (weakly_informative(), StudentTPrior(), GaussianPrior(0.0, 0.1)):
            fit = fit_node(X, y, prior)
            assert log_marginal_likelihood(fit, X, y, prior) == 0.0

    def test_intercept_only_gaussian_matches_quadrature(self):
        rng = np.random.default_rng(6)
        for _ in range(4):
            X = np.ones((50, 1))
            y = (rng.uniform(size=50) < 0.65).astype(float)
            prior = weakly_informative()
            fit = fit_node(X, y, prior)
            exact = quad_log_marginal(X, y, gaussian_spec(prior, 1))
            assert abs(fit.log_marginal - exact) < 0.05

    def test_one_predictor_gaussian_matches_quadrature(self):
        rng = np.random.default_rng(7)
        for _ in range(3):
            X, y = bernoulli_design(rng, 50, [0.3, 1.0])
            prior = weakly_informative()
            fit = fit_node(X, y, prior)
            exact = quad_log_marginal(X, y, gaussian_spec(prior, 2))
            assert abs(fit.log_marginal - exact) < 0.05

    def test_one_predictor_student_matches_quadrature(self):
        rng = np.random.default_rng(8)
        for _ in range(3):
            X, y = bernoulli_design(rng, 50, [-0.2, 0.8])
            prior = StudentTPrior()
            fit = fit_node(X, y, prior)
            exact = quad_log_marginal(X, y, student_spec(prior, 2))
            assert abs(fit.log_marginal - exact) < 0.1

    def test_fit_carries_the_same_value(self):
        rng = np.random.default_rng(9)
        X, y = bernoulli_design(rng, 60, [0.0, 0.6])
        prior = weakly_informative()
        fit = fit_node(X, y, prior)
        assert np.isclose(fit.log_marginal, log_marginal_likelihood(fit, X, y, prior))

    def test_non_positive_definite_curvature_is_reported(self):
        rng = np.random.default_rng(10)
        X, y = bernoulli_design(rng, 30, [0.0, 0.0])
        prior = weakly_informative()
        fit = fit_node(X, y, prior)
        broken = type(fit)(
            coef=fit.coef,
            neg_hessian=-np.eye(2),
            log_posterior=fit.log_posterior,
            log_marginal=fit.log_marginal,
            converged=fit.converged,
            iterations=fit.iterations,
            separation=fit.separation,
            n_obs=fit.n_obs,
        )
        with pytest.raises(HessianNotPositiveDefinite):
            log_marginal_likelihood(broken, X, y, prior)


@pytest.fixture(scope="module")
def small_study_data():
    dag = Dag.from_edges(4, [(0, 2), (1, 2), (2, 3)])
    params = AbnParams.uniform(dag, edge_coef=5.0, intercept=0.0)
    data = sample(params, 300, np.random.default_rng(20))
    return dag, params, data


class TestScoreCache:
    def test_covers_every_parent_set(self, small_study_data):
        _, _, data = small_study_data
        cache = build_score_cache(data, weakly_informative())
        assert cache.total_entries() == 4 * 2**3
        for node in range(4):
            for mask in parent_masks(4, node, 3):
                assert np.isfinite(cache.score(node, mask))

    def test_max_parents_trims_the_lattice(self, small_study_data):
        _, _, data = small_study_data
        cache = build_score_cache(data, weakly_informative(), max_parents=1)
        assert cache.total_entries() == 4 * 4
        with pytest.raises(KeyError):
            cache.score(0, 0b0110)

    def test_entries_match_single_fits(self, small_study_data):
        _, _, data = small_study_data
        prior = weakly_informative()
        cache = build_score_cache(data, prior)
        for node, mask in [(2, 0b0011), (3, 0b0100), (0, 0)]:
            X, y = design_rows(data, node, mask)
            fit = fit_node(X, y, prior)
            assert np.isclose(cache.score(node, mask), fit.log_marginal, rtol=1e-12)

    def test_student_cache_matches_single_fits(self, small_study_data):
        _, _, data = small_study_data
        prior = StudentTPrior()
        cache = build_score_cache(data, prior)
        X, y = design_rows(data, 2, 0b0011)
        fit = fit_node(X, y, prior)
        assert np.isclose(cache.score(2, 0b0011), fit.log_marginal, rtol=1e-12)

    def test_informed_cache_uses_per_set_priors(self, small_study_data):
        _, params, data = small_study_data
        prior = StrongGaussianPrior(truth=params)
        cache = build_score_cache(data, prior)
        X, y = design_rows(data, 2, 0b0011)
        fit = fit_node(X, y, prior.for_node(2, 0b0011))
        assert np.isclose(cache.score(2, 0b0011), fit.log_marginal, rtol=1e-12)

    def test_csv_round_trip(self, small_study_data):
        _, _, data = small_study_data
        cache = build_score_cache(data, StudentTPrior())
        again = ScoreCache.from_csv(cache.to_csv())
        assert again.n_vars == cache.n_vars
        assert again.max_parents == cache.max_parents
        assert again.entries == cache.entries

    def test_rebuild_is_byte_identical(self, small_study_data):
        _, _, data = small_study_data
        a = build_score_cache(data, weakly_informative()).to_csv()
        b = build_score_cache(data, weakly_informative()).to_csv()
        assert a == b

    def test_failed_fits_get_floor_score_and_diagnostics(self):
        # an improper flat prior on separated data cannot converge
        values = np.repeat([[0, 0], [1, 1]], 8, axis=0).astype(np.uint8)
        data = Dataset(values=values)
        cache = build_score_cache(data, GaussianPrior(mean=0.0, variance=float("inf")))
        assert cache.score(1, 0b01) == float("-inf")
        assert any(node == 1 and mask == 0b01 for node, mask, _ in cache.diagnostics)

    def test_scores_prefer_true_parents(self, small_study_data):
        _, _, data = small_study_data
        cache = build_score_cache(data, weakly_informative())
        assert cache.score(2, 0b0011) > cache.score(2, 0)
        assert cache.score(2, 0b0011) > cache.score(2, 0b0001)


class TestCacheAgainstQuadrature:
    def test_argmax_parent_sets_match_quadrature_oracle(self):
        prior = StudentTPrior()
        hits = 0
        total = 0
        for rep in range(20):
            rng = np.random.default_rng(1000 + rep)
            dag = random_dag(5, 0.8, rng)
            params = AbnParams.uniform(dag, edge_coef=5.0, intercept=0.0)
            data = sample(params, 1000, rng)
            cache = build_score_cache(data, prior)
            for node in range(5):
                masks = list(parent_masks(5, node, 4))
                cache_best = max(masks, key=lambda m: cache.score(node, m))
                oracle_scores = {}
                for mask in masks:
                    X, y = design_rows(data, node, mask)
                    spec = student_spec(prior, X.shape[1])
                    patterns, successes, trials = _aggregate(X, y)
                    oracle_scores[mask] = gauss_hermite_log_marginal(
                        patterns, successes, spec, points=10, trials=trials
                    )
                oracle_best = max(masks, key=lambda m: oracle_scores[m])
                hits += cache_best == oracle_best
                total += 1
        assert total == 100
        assert hits >= 90


def _aggregate(X, y):
    from abn_forge import aggregate_design

    return aggregate_design(X, y)
