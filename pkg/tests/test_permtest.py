import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plspower.errors import InvalidInput, TooFewPerClass
from plspower.kernels import STAT_KINDS
from plspower.permtest import (
    adjust_bonferroni,
    compute_statistic,
    draw_permutations,
    normalize_kind,
    p_value_from_null,
    permutation_pvalue,
    permutation_stats,
    permutation_test,
    stat_mcc,
    stat_r2,
    stat_score_t,
)
from plspower.plsc import fit_plsc

from conftest import centered_random, separated_clouds


def hand_pooled_t(s, labels):
    a, b = s[labels == 1], s[labels == 2]
    sp2 = (((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum()) / (a.size + b.size - 2)
    return abs(a.mean() - b.mean()) / np.sqrt(sp2 * (1 / a.size + 1 / b.size))


def test_mcc_separated_clouds():
    X, labels = separated_clouds()
    assert stat_mcc(X, labels, 1).value == 1.0


def test_mcc_null_is_small(rng):
    # the in-sample fit aligns with the labels, so E[MCC] ~ sqrt(2 / (pi N)) at P = 1
    X = centered_random(rng, 200, 1)
    vals = [stat_mcc(X, rng.permutation(np.repeat([1, 2], 100)), 1).value for _ in range(100)]
    assert abs(np.mean(vals)) < 0.1


def test_statistics_deterministic(rng):
    X = centered_random(rng, 12, 6)
    labels = np.repeat([1, 2], 6)
    for kind in STAT_KINDS:
        assert compute_statistic(X, labels, 2, kind) == compute_statistic(X, labels, 2, kind)


def test_score_t_duplicate_rows_is_zero(rng):
    half = rng.standard_normal((4, 3))
    X = np.vstack([half, half])
    X -= X.mean(axis=0)
    assert stat_score_t(X, np.repeat([1, 2], 4), 1).value == 0.0


def test_score_t_zero_within_variance_is_infinite():
    v = np.array([1.0, 2.0, -0.5])
    X = np.vstack([np.tile(v, (3, 1)), np.tile(-v, (3, 1))])
    assert stat_score_t(X, np.repeat([1, 2], 3), 1).value == np.inf


def test_score_t_matches_hand_formula_on_scores(rng):
    X = centered_random(rng, 13, 5)
    labels = np.repeat([1, 2], [6, 7])
    t_p = fit_plsc(X, labels, 2).pt.T_P[:, 0]
    assert np.isclose(stat_score_t(X, labels, 2).value, hand_pooled_t(t_p, labels), rtol=1e-12)


def test_score_t_needs_two_per_class(rng):
    with pytest.raises(TooFewPerClass):
        stat_score_t(centered_random(rng, 5, 3), np.array([1, 2, 2, 2, 2]), 1)


def test_r2_noiseless_rank_one():
    labels = np.repeat([1, 2], 5)
    ind = np.where(labels == 1, 1.0, -1.0)
    X = np.outer(ind, [1.0, -2.0, 0.5])
    assert abs(stat_r2(X, labels, 1).value - 1.0) <= 1e-8


def test_r2_orthogonal_response_is_zero():
    X = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    assert stat_r2(X, np.array([1, 1, 2, 2]), 1).value == 0.0


def test_r2_invariant_to_coding_scale(rng):
    X = centered_random(rng, 12, 4)
    labels = np.repeat([1, 2], [5, 7])
    values = [stat_r2(X, labels, 2, e).value for e in (0.01, 0.1, 0.3)]
    assert np.allclose(values, values[0], rtol=1e-10)


def test_p_value_examples():
    assert p_value_from_null([3.0, 3.0]) == 1.0
    assert p_value_from_null([5.0, 1, 2, 3, 7]) == pytest.approx(0.4)


@given(st.integers(0, 10_000), st.integers(2, 40))
def test_p_value_support_and_reproducibility(seed, J):
    r = np.random.default_rng(seed)
    X = centered_random(r, 10, 4)
    labels = np.repeat([1, 2], 5)
    a = permutation_test(X, labels, 1, J=J, rng=seed)
    b = permutation_test(X, labels, 1, J=J, rng=seed)
    for kind in STAT_KINDS:
        res = a[kind]
        assert res.null_values[0] == res.observed.value
        assert res.p_value >= 1.0 / J
        assert np.isclose(res.p_value * J, round(res.p_value * J))
        assert res.p_value == np.count_nonzero(res.null_values >= res.observed.value) / J
        assert np.array_equal(res.null_values, b[kind].null_values)


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_engine_matches_library_statistics(seed, A):
    r = np.random.default_rng(seed)
    X = centered_random(r, 12, 6)
    labels = np.repeat([1, 2], 6)
    perms = draw_permutations(labels, 6, r)
    stats, _ = permutation_stats(X, perms, A)
    for j in range(perms.shape[0]):
        for i, kind in enumerate(STAT_KINDS):
            ref = compute_statistic(X, perms[j], A, kind).value
            assert np.isclose(stats[j, i], ref, rtol=1e-9, atol=1e-12)


@given(st.integers(0, 10_000))
def test_statistics_invariant_to_class_relabeling(seed):
    r = np.random.default_rng(seed)
    X = centered_random(r, 10, 5)
    labels = np.repeat([1, 2], [4, 6])
    for kind in STAT_KINDS:
        a = compute_statistic(X, labels, 2, kind).value
        b = compute_statistic(X, 3 - labels, 2, kind).value
        assert np.isclose(a, b, rtol=1e-9, atol=1e-12)


def test_identical_labelings_tie_exactly(rng):
    X = centered_random(rng, 6, 4)
    labels = np.array([1, 1, 1, 2, 2, 2])
    res = permutation_test(X, labels, 1, J=300, rng=1)["r2"]
    perms = draw_permutations(labels, 300, np.random.default_rng(1))
    same = np.all(perms == labels, axis=1)
    assert same.sum() > 1
    assert np.all(res.null_values[same] == res.observed.value)


def test_collapsing_permutations_score_zero():
    X = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    labels = np.array([1, 2, 1, 2])
    res = permutation_test(X, labels, 1, J=60, rng=0)
    perms = draw_permutations(labels, 60, np.random.default_rng(0))
    collapsed = np.all(perms == [1, 1, 2, 2], axis=1) | np.all(perms == [2, 2, 1, 1], axis=1)
    assert collapsed.any()
    for kind in STAT_KINDS:
        assert np.all(res[kind].null_values[collapsed] == 0.0)
        assert res[kind].n_collapsed == collapsed.sum()


def test_permutation_pvalue_single_kind(rng):
    X, labels = separated_clouds(n_per_class=8)
    res = permutation_pvalue(X, labels, 1, "R2", J=100, rng=3)
    assert res.observed.kind == "r2" and res.p_value == 0.01 and res.seed == 3


def test_permutation_rejects_bad_J(rng):
    with pytest.raises(InvalidInput):
        permutation_test(centered_random(rng, 6, 2), np.repeat([1, 2], 3), 1, J=1)


def test_bonferroni_examples():
    assert adjust_bonferroni(0.01, 4) == pytest.approx(0.04)
    assert adjust_bonferroni(0.5, 4) == 1.0
    assert adjust_bonferroni(0.3, 1) == 0.3
    with pytest.raises(InvalidInput):
        adjust_bonferroni(1.5, 2)


@given(st.floats(0, 1), st.integers(1, 10))
def test_bonferroni_monotone(p, A):
    q = adjust_bonferroni(p, A)
    assert p <= q <= 1.0


def test_kind_aliases():
    assert normalize_kind("ScoreT") == "score"
    with pytest.raises(InvalidInput):
        normalize_kind("auc")


def test_mirrored_labelling_ties_exactly(rng):
    X = centered_random(rng, 10, 30)
    labels = np.repeat([1, 2], 5)
    perms = np.vstack([labels, 3 - labels, rng.permutation(labels)])
    stats, _ = permutation_stats(X, perms, 1)
    assert np.array_equal(stats[0], stats[1])


@given(st.integers(0, 10_000))
def test_score_and_r2_p_values_coincide(seed):
    # with two classes the pooled |t| is a monotone function of R^2
    r = np.random.default_rng(seed)
    X = centered_random(r, 10, 12)
    res = permutation_test(X, np.repeat([1, 2], 5), 1, J=100, rng=r)
    assert res["score"].p_value == res["r2"].p_value
