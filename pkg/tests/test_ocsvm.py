"""One-class SVM training, decision values, and dual invariants."""

import math

import numpy as np
import pytest

from lingsel import (
    DataError,
    OcSvmConfig,
    SplitMix64,
    UsageError,
    gamma_scale,
    ocsvm_decision,
    ocsvm_train,
    rbf_gram,
)
from lingsel.ocsvm import dual_objective
from lingsel.serde import model_from_obj, model_to_obj


def gaussian_cloud(n, d, seed):
    return SplitMix64(seed).gaussian_block(n * d).reshape(n, d)


class TestClosedForms:
    def test_two_identical_points_nu_one(self):
        x = np.ones((2, 3))
        model = ocsvm_train(x, OcSvmConfig(nu=1.0, gamma=0.5))
        assert np.allclose(model.alphas, [0.5, 0.5], atol=1e-9)
        # k(x, x) = 1 everywhere, so f = 1 - rho = 0 exactly
        assert abs(model.rho - 1.0) <= 1e-9
        assert abs(ocsvm_decision(model, x[0])) <= 1e-9

    def test_nu_one_forces_uniform_alphas(self):
        for n in (4, 9, 17):
            x = gaussian_cloud(n, 3, n)
            model = ocsvm_train(x, OcSvmConfig(nu=1.0))
            # box is [0, 1/n] and the sum is 1: the only feasible point
            assert np.allclose(model.alphas, 1.0 / n, atol=1e-12)

    def test_far_query_scores_minus_rho(self):
        x = gaussian_cloud(40, 2, 5)
        model = ocsvm_train(x, OcSvmConfig(nu=0.2, gamma=1.0))
        far = np.full(2, 1e6)
        assert ocsvm_decision(model, far) == pytest.approx(-model.rho, abs=1e-12)


class TestDualInvariants:
    @pytest.mark.parametrize("dim", [2, 512])
    def test_nu_property_and_constraints(self, dim):
        nu, n = 0.01, 200
        for seed in range(5):
            x = gaussian_cloud(n, dim, seed * 13 + dim)
            model = ocsvm_train(x, OcSvmConfig(nu=nu))
            upper = 1.0 / (nu * n)
            assert abs(float(model.alphas.sum()) - 1.0) <= 1e-9
            assert np.all(model.alphas >= 0.0)
            assert np.all(model.alphas <= upper + 1e-12)
            scores = ocsvm_decision(model, x)
            frac_neg = float(np.mean(scores < 0.0))
            assert frac_neg <= nu + 1.0 / n
            # margin/error vectors: at least floor(nu*n) alphas above tol level
            n_sv = int(np.sum(model.alphas > 1e-6))
            assert n_sv >= math.floor(nu * n)

    def test_objective_never_increases_with_more_iterations(self):
        x = gaussian_cloud(120, 4, 42)
        K = rbf_gram(x, x, gamma_scale(x))
        prev = None
        for budget in (1, 5, 25, 125, 625, 100_000):
            model = ocsvm_train(x, OcSvmConfig(nu=0.1, max_iter=budget))
            obj = dual_objective(model.alphas, K)
            if prev is not None:
                assert obj <= prev + 1e-15
            prev = obj

    def test_iteration_starved_model_still_valid(self):
        x = gaussian_cloud(100, 3, 7)
        model = ocsvm_train(x, OcSvmConfig(nu=0.1, max_iter=1))
        assert model.converged is False
        model.check_invariants()

    def test_converges_on_easy_data(self):
        x = gaussian_cloud(60, 2, 1)
        model = ocsvm_train(x, OcSvmConfig(nu=0.5))
        assert model.converged is True

    def test_permutation_invariance_of_decisions(self):
        # the pivot sequence depends on row order, so agreement is only up
        # to solver resolution; a tight tol makes that resolution tight
        x = gaussian_cloud(80, 3, 3)
        queries = gaussian_cloud(50, 3, 4)
        perm = np.arange(80)
        SplitMix64(99).shuffle(perm)
        config = OcSvmConfig(nu=0.2, tol=1e-10)
        base = ocsvm_decision(ocsvm_train(x, config), queries)
        other = ocsvm_decision(ocsvm_train(x[perm], config), queries)
        assert np.allclose(base, other, atol=1e-9)

    def test_high_dim_boundary_resolved_to_zero(self):
        # at gamma="scale" in d=512 the whole cloud sits inside the
        # solver's tolerance band; those values must read exactly 0.0
        x = gaussian_cloud(200, 512, 17)
        model = ocsvm_train(x, OcSvmConfig(nu=0.01))
        scores = ocsvm_decision(model, x)
        assert np.all((scores == 0.0) | (np.abs(scores) > 2.0 * model.tol))
        assert float(np.mean(scores < 0.0)) <= 0.01 + 1.0 / 200


class TestDecisionInterface:
    def test_single_vector_returns_float(self):
        x = gaussian_cloud(30, 2, 0)
        model = ocsvm_train(x, OcSvmConfig(nu=0.3))
        out = ocsvm_decision(model, x[0])
        assert isinstance(out, float)

    def test_batch_matches_singles(self):
        # dgemv vs dgemm reduction order: agreement to a ULP, not bitwise
        x = gaussian_cloud(30, 2, 0)
        model = ocsvm_train(x, OcSvmConfig(nu=0.3))
        batch = ocsvm_decision(model, x)
        singles = np.array([ocsvm_decision(model, row) for row in x])
        assert np.allclose(batch, singles, atol=1e-12)

    def test_dim_mismatch_rejected(self):
        x = gaussian_cloud(30, 2, 0)
        model = ocsvm_train(x)
        with pytest.raises(DataError):
            ocsvm_decision(model, np.zeros(3))


class TestValidation:
    @pytest.mark.parametrize("nu", [0.0, -0.1, 1.5])
    def test_bad_nu(self, nu):
        with pytest.raises(UsageError):
            ocsvm_train(np.zeros((5, 2)), OcSvmConfig(nu=nu))

    @pytest.mark.parametrize("gamma", [0.0, -1.0, "auto", float("nan")])
    def test_bad_gamma(self, gamma):
        with pytest.raises(UsageError):
            ocsvm_train(np.zeros((5, 2)), OcSvmConfig(gamma=gamma))

    def test_bad_tol_and_max_iter(self):
        with pytest.raises(UsageError):
            ocsvm_train(np.zeros((5, 2)), OcSvmConfig(tol=0.0))
        with pytest.raises(UsageError):
            ocsvm_train(np.zeros((5, 2)), OcSvmConfig(max_iter=0))

    def test_too_few_rows(self):
        with pytest.raises(DataError):
            ocsvm_train(np.zeros((1, 4)))

    def test_non_finite_rows(self):
        x = np.zeros((5, 2))
        x[3, 1] = np.nan
        with pytest.raises(DataError):
            ocsvm_train(x)


class TestSerde:
    def test_round_trip_preserves_scores_bitwise(self):
        x = gaussian_cloud(70, 6, 12)
        queries = gaussian_cloud(40, 6, 13)
        model = ocsvm_train(x, OcSvmConfig(nu=0.15))
        back = model_from_obj(model_to_obj(model))
        assert np.array_equal(
            ocsvm_decision(model, queries), ocsvm_decision(back, queries)
        )
        assert back.rho == model.rho
        assert back.gamma == model.gamma
        assert back.tol == model.tol
        assert back.converged == model.converged
