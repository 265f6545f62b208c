"""Loss values, gradient checks, and cross-term identities.

Every gradient is validated against central finite differences of its own
forward value; the checks sweep batch sizes {2, 4, 8} and temperatures
{0.0125, 0.05, 1.0} because the small temperatures are where naive
implementations break.
"""

import math

import numpy as np
import pytest

from rankdistill.errors import (
    AlphaOutOfRange,
    BatchTooSmall,
    DimensionMismatch,
    IndexOutOfRange,
    NonPositiveTemperature,
)
from rankdistill.losses import (
    LossBreakdown,
    LossWeights,
    Temperatures,
    blend_teacher_scores,
    combined_loss,
    exclude_positive,
    info_nce,
    js_consistency,
    listmle_loss,
    listnet_loss,
)
from rankdistill.rankprob import argsort_desc, top_one_distribution

from oracles import central_difference, relative_error

SWEEP = [(n, tau) for n in (2, 4, 8) for tau in (0.0125, 0.05, 1.0)]


def random_sim(rng, n):
    """Random matrix with cosine-like entries in [-1, 1]."""
    return rng.uniform(-1.0, 1.0, size=(n, n))


class TestInfoNce:
    def test_identity_matrix_hand_value(self):
        loss, _ = info_nce(np.eye(2), 1.0)
        assert loss == pytest.approx(2.0 * (math.log(math.e + 1.0) - 1.0), abs=1e-12)

    def test_constant_matrix_gives_log_n(self):
        for n in (2, 3, 5):
            loss, _ = info_nce(np.full((n, n), 0.37), 0.05)
            assert loss == pytest.approx(n * math.log(n), abs=1e-10)

    def test_grad_rows_sum_to_zero(self):
        rng = np.random.default_rng(21)
        _, grad = info_nce(random_sim(rng, 6), 0.05)
        assert np.allclose(grad.sum(axis=1), 0.0, atol=1e-12)

    def test_equals_negative_log_diagonal_top_one(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            sim = random_sim(rng, n)
            tau = float(rng.choice([0.0125, 0.05, 1.0]))
            loss, _ = info_nce(sim, tau)
            by_rows = -sum(
                math.log(top_one_distribution(sim[i], tau)[i]) for i in range(n)
            )
            assert loss == pytest.approx(by_rows, abs=1e-12 * max(1.0, abs(loss)))

    @pytest.mark.parametrize("n,tau", SWEEP)
    def test_gradient_matches_finite_differences(self, n, tau):
        rng = np.random.default_rng(1000 + n * 7 + int(tau * 10000))
        for _ in range(12):
            sim = random_sim(rng, n)
            _, grad = info_nce(sim, tau)
            fd = central_difference(lambda m: info_nce(m, tau)[0], sim)
            assert relative_error(grad, fd) <= 1e-4

    def test_shift_invariance(self):
        rng = np.random.default_rng(23)
        sim = random_sim(rng, 4)
        base, _ = info_nce(sim, 0.05)
        shifted, _ = info_nce(sim + 0.83, 0.05)
        assert shifted == pytest.approx(base, abs=1e-10)

    def test_errors(self):
        with pytest.raises(BatchTooSmall):
            info_nce(np.ones((1, 1)), 1.0)
        with pytest.raises(NonPositiveTemperature):
            info_nce(np.eye(2), 0.0)


class TestJsConsistency:
    def test_identical_views_zero(self):
        rng = np.random.default_rng(31)
        sim = random_sim(rng, 5)
        loss, grad_ab, grad_ba = js_consistency(sim, sim.copy(), 0.05)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(grad_ab, 0.0, atol=1e-12)
        assert np.allclose(grad_ba, 0.0, atol=1e-12)

    def test_maximal_disagreement_approaches_ln2(self):
        # Rows whose top-one distributions concentrate on opposite items.
        big = 40.0
        sim_ab = np.array([[big, -big], [big, -big]])
        sim_ba = np.array([[-big, big], [-big, big]])
        loss, _, _ = js_consistency(sim_ab, sim_ba, 1.0)
        assert loss == pytest.approx(2.0 * math.log(2.0), abs=1e-9)

    def test_symmetry_in_arguments(self):
        rng = np.random.default_rng(32)
        a = random_sim(rng, 4)
        b = random_sim(rng, 4)
        loss_ab, grad_ab, grad_ba = js_consistency(a, b, 0.05)
        loss_ba, grad_ba2, grad_ab2 = js_consistency(b, a, 0.05)
        assert loss_ab == pytest.approx(loss_ba, abs=1e-12)
        assert np.allclose(grad_ab, grad_ab2, atol=1e-12)
        assert np.allclose(grad_ba, grad_ba2, atol=1e-12)

    def test_rows_bounded_by_ln2_and_nonnegative(self):
        # Tiling one row into a square matrix isolates that row's JS value.
        rng = np.random.default_rng(33)
        for tau in (0.0125, 0.05, 1.0):
            for _ in range(30):
                n = int(rng.integers(2, 9))
                row_a = rng.uniform(-1.0, 1.0, size=n)
                row_b = rng.uniform(-1.0, 1.0, size=n)
                loss, _, _ = js_consistency(
                    np.tile(row_a, (n, 1)), np.tile(row_b, (n, 1)), tau
                )
                per_row = loss / n
                assert -1e-12 <= per_row <= math.log(2.0) + 1e-12

    @pytest.mark.parametrize("n,tau", SWEEP)
    def test_gradients_match_finite_differences(self, n, tau):
        rng = np.random.default_rng(2000 + n * 11 + int(tau * 10000))
        for _ in range(12):
            a = random_sim(rng, n)
            b = random_sim(rng, n)
            _, grad_ab, grad_ba = js_consistency(a, b, tau)
            fd_ab = central_difference(lambda m: js_consistency(m, b, tau)[0], a)
            fd_ba = central_difference(lambda m: js_consistency(a, m, tau)[0], b)
            assert relative_error(grad_ab, fd_ab) <= 1e-4
            assert relative_error(grad_ba, fd_ba) <= 1e-4

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            js_consistency(np.eye(2), np.eye(3), 1.0)


class TestExcludePositive:
    def test_removes_first(self):
        row, kept = exclude_positive([0.9, 0.2, 0.4], 0)
        assert row.tolist() == [0.2, 0.4]
        assert kept.tolist() == [1, 2]

    def test_removes_last(self):
        row, kept = exclude_positive([0.1, 0.7], 1)
        assert row.tolist() == [0.1]
        assert kept.tolist() == [0]

    def test_errors(self):
        with pytest.raises(BatchTooSmall):
            exclude_positive([0.5], 0)
        with pytest.raises(IndexOutOfRange):
            exclude_positive([0.5, 0.6], 2)


class TestListNet:
    def test_matching_rows_give_target_entropy(self):
        rng = np.random.default_rng(41)
        row = rng.uniform(-1.0, 1.0, size=6)
        t = top_one_distribution(row, 0.05)
        loss, _ = listnet_loss(row, row, 0.05, 0.05)
        assert loss == pytest.approx(-float(np.dot(t, np.log(t))), abs=1e-12)

    def test_gibbs_inequality(self):
        rng = np.random.default_rng(42)
        teacher = rng.uniform(-1.0, 1.0, size=8)
        t = top_one_distribution(teacher, 0.1)
        entropy = -float(np.dot(t, np.log(t)))
        for _ in range(50):
            student = rng.uniform(-1.0, 1.0, size=8)
            loss, _ = listnet_loss(student, teacher, 0.1, 0.1)
            assert loss >= entropy - 1e-12

    def test_single_item_degenerate(self):
        loss, grad = listnet_loss([0.3], [0.9], 1.0, 1.0)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(grad, [0.0], atol=1e-12)

    def test_hand_value(self):
        loss, _ = listnet_loss([0.0, 0.0], [math.log(3.0), 0.0], 1.0, 1.0)
        assert loss == pytest.approx(math.log(2.0), abs=1e-12)

    @pytest.mark.parametrize("n,tau", SWEEP)
    def test_gradient_matches_finite_differences(self, n, tau):
        rng = np.random.default_rng(3000 + n * 13 + int(tau * 10000))
        for _ in range(12):
            student = rng.uniform(-1.0, 1.0, size=n)
            teacher = rng.uniform(-1.0, 1.0, size=n)
            _, grad = listnet_loss(student, teacher, tau, tau / 2.0)
            fd = central_difference(
                lambda s: listnet_loss(s, teacher, tau, tau / 2.0)[0], student
            )
            assert relative_error(grad, fd) <= 1e-4

    def test_shift_invariance(self):
        rng = np.random.default_rng(43)
        student = rng.normal(size=5)
        teacher = rng.normal(size=5)
        base, _ = listnet_loss(student, teacher, 0.05, 0.025)
        shifted, _ = listnet_loss(student + 2.5, teacher, 0.05, 0.025)
        assert shifted == pytest.approx(base, abs=1e-10)


class TestListMle:
    def test_single_item(self):
        loss, grad = listmle_loss([4.0], [0], 1.0)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(grad, [0.0], atol=1e-12)

    def test_hand_value(self):
        loss, _ = listmle_loss([math.log(2.0), 0.0], [0, 1], 1.0)
        assert loss == pytest.approx(-math.log(2.0 / 3.0), abs=1e-10)

    def test_grad_sums_to_zero(self):
        rng = np.random.default_rng(51)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            row = rng.uniform(-1.0, 1.0, size=n)
            _, grad = listmle_loss(row, rng.permutation(n), 0.025)
            assert abs(grad.sum()) < 1e-12

    def test_minimized_at_descending_order(self):
        import itertools

        rng = np.random.default_rng(52)
        for n in (2, 3, 4, 5):
            row = rng.uniform(-1.0, 1.0, size=n)
            best_loss, _ = listmle_loss(row, argsort_desc(row), 0.5)
            for perm in itertools.permutations(range(n)):
                other, _ = listmle_loss(row, perm, 0.5)
                assert best_loss <= other + 1e-12

    @pytest.mark.parametrize("n,tau", SWEEP)
    def test_gradient_matches_finite_differences(self, n, tau):
        rng = np.random.default_rng(4000 + n * 17 + int(tau * 10000))
        for _ in range(12):
            row = rng.uniform(-1.0, 1.0, size=n)
            perm = rng.permutation(n)
            _, grad = listmle_loss(row, perm, tau)
            fd = central_difference(lambda s: listmle_loss(s, perm, tau)[0], row)
            assert relative_error(grad, fd) <= 1e-4

    def test_shift_invariance(self):
        rng = np.random.default_rng(53)
        row = rng.normal(size=6)
        perm = rng.permutation(6)
        base, _ = listmle_loss(row, perm, 0.025)
        shifted, _ = listmle_loss(row - 7.1, perm, 0.025)
        assert shifted == pytest.approx(base, abs=1e-10)


class TestBlendTeacherScores:
    def test_alpha_one_returns_first(self):
        s1 = np.array([0.9, 0.3])
        assert np.array_equal(blend_teacher_scores(s1, [0.0, 0.0], 1.0), s1)

    def test_one_third_hand_value(self):
        blended = blend_teacher_scores([0.9, 0.3], [0.6, 0.6], 1.0 / 3.0)
        assert np.allclose(blended, [0.7, 0.5], atol=1e-12)

    def test_identical_inputs_fixed_point(self):
        s = np.array([0.2, -0.4, 0.9])
        for alpha in (0.0, 0.25, 1.0):
            assert np.allclose(blend_teacher_scores(s, s, alpha), s, atol=1e-12)

    def test_errors(self):
        with pytest.raises(DimensionMismatch):
            blend_teacher_scores([1.0], [1.0, 2.0], 0.5)
        with pytest.raises(AlphaOutOfRange):
            blend_teacher_scores([1.0], [2.0], 1.5)


class TestCombinedLoss:
    def setup_method(self):
        rng = np.random.default_rng(61)
        self.n = 5
        self.sim_ab = random_sim(rng, self.n)
        self.sim_ba = random_sim(rng, self.n)
        self.teacher = random_sim(rng, self.n)
        self.temps = Temperatures()

    def test_weights_collapse_to_info_nce(self):
        weights = LossWeights(beta=0.0, gamma=0.0)
        breakdown, grad_ab, grad_ba = combined_loss(
            self.sim_ab, self.sim_ba, self.teacher, self.temps, weights
        )
        nce, nce_grad = info_nce(self.sim_ab, self.temps.tau1)
        assert breakdown.total == pytest.approx(nce, abs=1e-12)
        assert breakdown.consistency == 0.0
        assert breakdown.rank == 0.0
        assert np.allclose(grad_ab, nce_grad, atol=1e-12)
        assert np.allclose(grad_ba, 0.0, atol=1e-12)

    @pytest.mark.parametrize("method", ["listnet", "listmle"])
    def test_total_is_weighted_sum(self, method):
        weights = LossWeights(beta=1.0, gamma=1.0)
        breakdown, _, _ = combined_loss(
            self.sim_ab, self.sim_ba, self.teacher, self.temps, weights, method
        )
        assert breakdown.total == pytest.approx(
            breakdown.info_nce + breakdown.consistency + breakdown.rank, abs=1e-10
        )

    @pytest.mark.parametrize("method", ["listnet", "listmle"])
    def test_gradient_linearity(self, method):
        weights = LossWeights(beta=0.7, gamma=1.3)
        _, grad_ab, grad_ba = combined_loss(
            self.sim_ab, self.sim_ba, self.teacher, self.temps, weights, method
        )
        _, nce_grad = info_nce(self.sim_ab, self.temps.tau1)
        _, js_ab, js_ba = js_consistency(self.sim_ab, self.sim_ba, self.temps.tau1)
        _, only_rank_ab, _ = combined_loss(
            self.sim_ab,
            self.sim_ba,
            self.teacher,
            self.temps,
            LossWeights(beta=0.0, gamma=1.0),
            method,
        )
        rank_grad = only_rank_ab - nce_grad
        assert np.allclose(
            grad_ab, nce_grad + 0.7 * js_ab + 1.3 * rank_grad, atol=1e-12
        )
        assert np.allclose(grad_ba, 0.7 * js_ba, atol=1e-12)

    @pytest.mark.parametrize("method", ["listnet", "listmle"])
    def test_gradients_match_finite_differences(self, method):
        weights = LossWeights(beta=1.0, gamma=1.0)
        temps = Temperatures(tau1=0.05, tau2=0.05, tau3=0.025)

        def forward_ab(m):
            return combined_loss(m, self.sim_ba, self.teacher, temps, weights, method)[
                0
            ].total

        def forward_ba(m):
            return combined_loss(self.sim_ab, m, self.teacher, temps, weights, method)[
                0
            ].total

        _, grad_ab, grad_ba = combined_loss(
            self.sim_ab, self.sim_ba, self.teacher, temps, weights, method
        )
        assert relative_error(grad_ab, central_difference(forward_ab, self.sim_ab)) <= 1e-4
        assert relative_error(grad_ba, central_difference(forward_ba, self.sim_ba)) <= 1e-4

    def test_breakdown_reports_paper_default_weights(self):
        weights = LossWeights()
        assert weights.beta == 1.0 and weights.gamma == 1.0
        assert weights.alpha == pytest.approx(1.0 / 3.0)
        breakdown, _, _ = combined_loss(
            self.sim_ab, self.sim_ba, self.teacher, self.temps, weights
        )
        assert isinstance(breakdown, LossBreakdown)
        assert math.isfinite(breakdown.total)

    def test_student_shift_invariance_all_terms(self):
        weights = LossWeights(beta=1.0, gamma=1.0)
        for method in ("listnet", "listmle"):
            base, _, _ = combined_loss(
                self.sim_ab, self.sim_ba, self.teacher, self.temps, weights, method
            )
            shifted, _, _ = combined_loss(
                self.sim_ab + 0.31,
                self.sim_ba + 0.31,
                self.teacher,
                self.temps,
                weights,
                method,
            )
            assert shifted.total == pytest.approx(base.total, abs=1e-10)

    def test_default_temperatures(self):
        temps = Temperatures()
        assert (temps.tau1, temps.tau2, temps.tau3) == (0.05, 0.025, 0.0125)
        assert temps.tau2 / temps.tau3 == pytest.approx(2.0)
