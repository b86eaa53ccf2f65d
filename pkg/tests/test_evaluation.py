"""Error-rate bookkeeping and deterministic synthetic benchmarks."""

import numpy as np
import pytest

from lingsel import (
    DataError,
    SplitMix64,
    UsageError,
    evaluate_classifier,
    gen_synthetic_suite,
)
from lingsel.evaluation import format_report_table, make_report


class TestErrorRates:
    def test_hand_counted_rates(self):
        pos = [1.0, 2.0, -1.0, 0.5, -0.2]  # 2 of 5 below 0
        neg = [-3.0, -0.1, 0.0, 4.0]  # 2 of 4 at or above 0
        rates = evaluate_classifier(pos, neg, 0.0)
        assert rates.pos_err == 2 / 5
        assert rates.neg_err == 2 / 4
        assert (rates.n_pos, rates.n_neg) == (5, 4)

    def test_ratio_denominators_are_exact(self):
        pos = np.concatenate([np.full(20, -1.0), np.full(91, 1.0)])
        rates = evaluate_classifier(pos, [1.0], 0.0)
        assert rates.pos_err == 20 / 111

    def test_identical_sets_sum_to_one(self):
        scores = SplitMix64(3).gaussian_block(257)
        for threshold in (-0.5, 0.0, 0.7):
            rates = evaluate_classifier(scores, scores, threshold)
            # the >= / < split is a partition, so the sum is exactly 1
            assert rates.pos_err + rates.neg_err == 1.0

    def test_threshold_tradeoff_is_monotone(self):
        pos = SplitMix64(4).gaussian_block(300) + 1.0
        neg = SplitMix64(5).gaussian_block(300) - 1.0
        grid = np.linspace(-3, 3, 25)
        pos_errs = [evaluate_classifier(pos, neg, t).pos_err for t in grid]
        neg_errs = [evaluate_classifier(pos, neg, t).neg_err for t in grid]
        assert all(b >= a for a, b in zip(pos_errs, pos_errs[1:]))
        assert all(b <= a for a, b in zip(neg_errs, neg_errs[1:]))

    def test_empty_sets_rejected(self):
        with pytest.raises(DataError):
            evaluate_classifier([], [1.0], 0.0)
        with pytest.raises(DataError):
            evaluate_classifier([1.0], [], 0.0)

    @pytest.mark.parametrize("threshold", [float("nan"), float("inf"), "0"])
    def test_bad_threshold_rejected(self, threshold):
        with pytest.raises(UsageError):
            evaluate_classifier([1.0], [0.0], threshold)


class TestSyntheticSuite:
    def test_deterministic_in_seed(self):
        a_t, a_o = gen_synthetic_suite(7, 20, 30, 8, 0.5)
        b_t, b_o = gen_synthetic_suite(7, 20, 30, 8, 0.5)
        assert a_t.records == b_t.records
        assert a_o.records == b_o.records
        c_t, _ = gen_synthetic_suite(8, 20, 30, 8, 0.5)
        assert a_t.records != c_t.records

    def test_streams_are_independent(self):
        small_t, small_o = gen_synthetic_suite(1, 15, 10, 4, 0.1)
        big_t, big_o = gen_synthetic_suite(1, 15, 50, 4, 0.1)
        assert small_t.records == big_t.records
        assert small_o.records == big_o.records[:10]

    def test_ids_and_durations(self):
        target, other = gen_synthetic_suite(2, 12, 34, 3, 0.0)
        assert [r.id for r in target.records] == [f"t{i:06d}" for i in range(12)]
        assert [r.id for r in other.records] == [f"o{i:06d}" for i in range(34)]
        for rec in target.records + other.records:
            assert 5.0 <= rec.duration_sec < 25.0

    def test_separation_shifts_every_coordinate(self):
        base_t, base_o = gen_synthetic_suite(3, 10, 10, 6, 0.0)
        _, far_o = gen_synthetic_suite(3, 10, 10, 6, 2.5)
        shift = far_o.embedding_matrix() - base_o.embedding_matrix()
        assert np.allclose(shift, 2.5, atol=1e-12)
        assert np.array_equal(
            base_t.embedding_matrix(),
            gen_synthetic_suite(3, 10, 10, 6, 2.5)[0].embedding_matrix(),
        )

    def test_wide_separation_separates_clouds(self):
        target, other = gen_synthetic_suite(4, 40, 40, 512, 10.0)
        t = target.embedding_matrix()
        o = other.embedding_matrix()
        intra = np.linalg.norm(t[:, None, :] - t[None, :, :], axis=2)
        inter = np.linalg.norm(t[:, None, :] - o[None, :, :], axis=2)
        assert inter.min() > intra.max()

    def test_bad_arguments_rejected(self):
        with pytest.raises(UsageError):
            gen_synthetic_suite(0, 0, 5, 2, 0.1)
        with pytest.raises(UsageError):
            gen_synthetic_suite(0, 5, 5, 0, 0.1)
        with pytest.raises(UsageError):
            gen_synthetic_suite(0, 5, 5, 2, -1.0)
        with pytest.raises(UsageError):
            gen_synthetic_suite(0, 5, 5, 2, float("nan"))


class TestReport:
    def test_schema_and_optional_quantile(self):
        rates = evaluate_classifier([1.0, -1.0], [0.5], 0.0)
        report = make_report("ocsvm", 0.0, rates)
        assert set(report) == {
            "classifier", "threshold", "pos_err", "neg_err", "n_pos", "n_neg",
        }
        with_q = make_report("dsvdd", -2.0, rates, quantile=0.95)
        assert with_q["quantile"] == 0.95

    def test_table_contains_rates(self):
        rates = evaluate_classifier([1.0, -1.0], [0.5], 0.0)
        text = format_report_table(make_report("iforest", 0.0, rates))
        assert "iforest" in text
        assert "0.5000" in text
        assert "1.0000" in text
