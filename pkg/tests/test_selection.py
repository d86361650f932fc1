import itertools

import numpy as np
import pytest
from scipy import stats

from neuroskill.datagen import synthetic_feature_matrix
from neuroskill.selection import (
    SelectionError,
    fisher_criterion,
    forward_select,
    premier_subsets,
    select,
    ttest_filter,
    ttest_pvalues,
)


def labels(n_pos, n_neg):
    return np.array([1] * n_pos + [0] * n_neg)


class TestTTest:
    def test_tiny_noise_not_selected(self):
        kept = 0
        for seed in range(200):
            x = np.random.default_rng(seed).normal(0, 0.01, (40, 1))
            kept += bool(ttest_filter(x, labels(20, 20), [1]).filtered_ids)
        assert kept / 200 <= 0.05 + 1.96 * np.sqrt(0.05 * 0.95 / 200)

    def test_large_shift_selected(self):
        rng = np.random.default_rng(0)
        x = np.concatenate([10 + rng.normal(0, 0.1, 20), np.zeros(20)])[:, None]
        p, _ = ttest_pvalues(x, labels(20, 20))
        assert p[0] < 1e-10

    def test_matches_scipy_welch(self, rng):
        x = rng.standard_normal((30, 5))
        y = labels(10, 20)
        p, _ = ttest_pvalues(x, y)
        ref = stats.ttest_ind(x[y == 1], x[y == 0], equal_var=False).pvalue
        np.testing.assert_allclose(p, ref, rtol=1e-12)

    def test_affine_invariance(self, rng):
        x = rng.standard_normal((40, 6)) + np.linspace(0, 1, 40)[:, None]
        y = labels(15, 25)
        a = rng.uniform(0.1, 10, 6) * rng.choice([-1, 1], 6)
        b = rng.uniform(-100, 100, 6)
        p1, _ = ttest_pvalues(x, y)
        p2, _ = ttest_pvalues(a * x + b, y)
        np.testing.assert_allclose(p2, p1, rtol=1e-9)

    def test_degenerate_columns(self):
        x = np.array([[1.0, 2.0, 0.0]] * 3 + [[1.0, 5.0, 1.0]] * 3)
        res = ttest_filter(x, labels(3, 3), [1, 2, 3])
        assert res.p_values[0] == 1.0 and res.p_values[1] == 0.0
        assert res.degenerate_ids == (1, 2, 3)

    def test_alpha_extremes(self, rng):
        x = rng.standard_normal((20, 8))
        x[:, 0] = 1.0
        y = labels(10, 10)
        assert set(ttest_filter(x, y, range(1, 9), alpha=1.0).filtered_ids) == set(range(2, 9))
        assert ttest_filter(x, y, range(1, 9), alpha=1e-300).filtered_ids == ()
        with pytest.raises(SelectionError):
            ttest_filter(x, y, range(1, 9), alpha=0.0)

    def test_permutation_null(self):
        # shuffled labels: pooled selection rate inside the binomial 95% band around alpha
        n_sel = n_tot = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x = rng.standard_normal((115, 68)) + rng.uniform(0, 3, 68)
            y = rng.permutation(labels(23, 92))
            n_sel += len(ttest_filter(x, y, range(1, 69)).filtered_ids)
            n_tot += 68
        lo, hi = stats.binom.interval(0.95, n_tot, 0.05)
        assert lo <= n_sel <= hi


def exhaustive_step(values, y, chosen, candidates):
    best, best_val = None, -np.inf
    for c in candidates:
        if c in chosen:
            continue
        val = fisher_criterion(values[:, [f - 1 for f in chosen + [c]]], y)
        if val > best_val:
            best, best_val = c, val
    return best


class TestForwardSelect:
    @pytest.mark.parametrize("seed", range(20))
    def test_each_step_matches_exhaustive(self, seed):
        rng = np.random.default_rng(seed)
        n = 40
        x = rng.standard_normal((n, 8)) @ rng.standard_normal((8, 8))
        y = labels(15, 25)
        x[y == 1] += rng.uniform(0, 1, 8)
        ranking, trace = forward_select(x, y, range(1, 9), 3)
        chosen = []
        for step in range(3):
            assert ranking[step] == exhaustive_step(x, y, chosen, range(1, 9))
            chosen.append(ranking[step])
            assert trace[step] == pytest.approx(fisher_criterion(x[:, [f - 1 for f in chosen]], y), rel=1e-9)

    def test_full_ranking_is_permutation(self, rng):
        x = rng.standard_normal((30, 6))
        ranking, _ = forward_select(x, labels(10, 20), [3, 5, 7, 9, 11, 13], 6)
        assert sorted(ranking) == [3, 5, 7, 9, 11, 13]

    def test_label_plus_noise_ranked_first(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            y = labels(20, 30)
            x = rng.standard_normal((50, 10))
            x[:, 6] = y + rng.normal(0, 0.01, 50)
            assert forward_select(x, y, range(1, 11), 3)[0][0] == 7

    def test_trace_non_decreasing(self, rng):
        x = rng.standard_normal((60, 12))
        _, trace = forward_select(x, labels(20, 40), range(1, 13), 12)
        assert np.all(np.diff(trace) >= -1e-12)

    def test_candidates_respected(self, rng):
        x = rng.standard_normal((30, 5))
        ranking, _ = forward_select(x, labels(10, 20), range(1, 6), 2, candidates=[2, 4])
        assert set(ranking) == {2, 4}

    def test_k_too_large(self, rng):
        with pytest.raises(SelectionError):
            forward_select(rng.standard_normal((30, 3)), labels(10, 20), [1, 2, 3], 4)

    def test_exact_ties_go_to_lower_id(self):
        y = labels(5, 5)
        col = np.array([1.0, 2, 3, 4, 5, 0, 1, 2, 1, 0])
        x = np.stack([col, col, col], axis=1)
        assert forward_select(x, y, [9, 4, 6], 1)[0] == (4,)


class TestPremierSubsets:
    def test_nested(self):
        x, y = synthetic_feature_matrix(23, 92, informative=range(1, 41), effect=1.0, seed=3)
        subsets = premier_subsets(x, (y == "skilled").astype(int), range(1, 69))
        sizes = sorted(subsets)
        assert sizes == [5, 10, 15, 20, 25, 30]
        for a, b in zip(sizes, sizes[1:]):
            assert subsets[b][:a] == subsets[a]

    def test_truncated_with_warning(self, caplog):
        x, y = synthetic_feature_matrix(23, 92, informative=range(1, 8), effect=2.0, seed=0)
        with caplog.at_level("WARNING"):
            subsets = premier_subsets(x, (y == "skilled").astype(int), range(1, 69))
        assert max(subsets) < 30
        assert "unavailable" in caplog.text

    def test_best_five_from_ground_truth(self):
        informative = [3, 8, 9, 17, 20, 31, 40, 45, 47, 50, 53, 62]
        hits = 0
        for seed in range(50):
            x, y = synthetic_feature_matrix(23, 92, informative=informative, effect=1.0, seed=seed)
            best5 = premier_subsets(x, (y == "skilled").astype(int), range(1, 69), sizes=(5,))[5]
            hits += set(best5) <= set(informative)
        assert hits / 50 >= 0.9

    def test_select_result_serializable(self, rng):
        x, y = synthetic_feature_matrix(10, 20, informative=[1, 2], effect=3.0, seed=1)
        res = select(x, (y == "skilled").astype(int), range(1, 69), k_max=2)
        d = res.to_dict()
        assert d["forward_ranking"] == list(res.forward_ranking) and len(d["p_values"]) == 68
