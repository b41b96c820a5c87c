import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eroranking.experiment import ExperimentConfig, aggregate, sweep
from eroranking.model import (EroParams, custom_ground_truth, make_ground_truth, sample_comparisons,
                              write_ground_truth_csv)
from eroranking.population import population_spectrum
from eroranking.ranking import (_three_branch_angle, align_sign, rank, rank_normalized,
                                rank_unnormalized, ranks, rotate, rotation_angle)


def _canonical(re, im, theta):
    xr, xi = rotate(re, im, theta)
    return float(xr.sum()), float(xi.sum())


def test_angle_already_canonical():
    re = np.array([1.0, -1.0, 0.0])
    im = np.array([-0.5, -0.2, -0.3])
    assert rotation_angle(re, im) == 0.0


def test_angle_imaginary_sum_zero():
    re = np.array([0.6, 0.3, 0.1])
    im = np.array([0.2, -0.2, 0.0])
    assert rotation_angle(re, im) == pytest.approx(-math.pi / 2, abs=1e-15)
    # negative real sum goes the other way
    assert rotation_angle(-re, im) == pytest.approx(math.pi / 2, abs=1e-15)


def test_angle_both_zero():
    assert rotation_angle(np.array([1.0, -1.0]), np.array([2.0, -2.0])) == 0.0


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_two_argument_matches_three_branch(a, b):
    if a == 0 and b == 0:
        return
    re = np.array([a, 0.0])
    im = np.array([b, 0.0])
    theta = rotation_angle(re, im)
    assert -math.pi < theta <= math.pi
    ref = _three_branch_angle(a, b)
    assert abs(math.remainder(theta - ref, 2 * math.pi)) < 1e-9
    sr, si = _canonical(re, im, theta)
    scale = math.hypot(a, b)
    assert abs(sr) <= 1e-9 * max(scale, 1)
    assert si <= 1e-9 * max(scale, 1)


def test_rotation_recovers_population_phase():
    gt = make_ground_truth("uniform-grid", 30)
    phi = population_spectrum(gt, EroParams(30, 0.5, 0.5)).phi_bar
    g = np.random.default_rng(2)
    for t0 in g.uniform(-math.pi, math.pi, 100):
        v = np.exp(-1j * t0) * phi
        theta = rotation_angle(v.real, v.imag)
        w = np.exp(1j * theta) * v
        tol = 1e-9 * math.sqrt(30)
        assert abs(w.real.sum()) < tol
        assert w.imag.sum() <= tol
        np.testing.assert_allclose(w, phi, atol=1e-12)


def test_ranks_stable_ties():
    np.testing.assert_array_equal(ranks([0.3, 0.1, 0.3, -2.0]), [3, 2, 4, 1])


@pytest.mark.parametrize("method", ["unnormalized", "normalized"])
def test_noiseless_uniform_10(method):
    gt = make_ground_truth("uniform-grid", 10)
    cm, _ = sample_comparisons(gt, EroParams(10, 1, 1))
    est = rank(cm, method)
    perm = est.permutation.tolist()
    assert perm in (list(range(1, 11)), list(range(10, 0, -1)))
    assert abs(np.sum(rotate(est.eigen.vector_re, est.eigen.vector_im, est.theta_hat)[0])) < 1e-9


def test_noiseless_three_items_unordered():
    gt = custom_ground_truth([3.0, 1.0, 2.0], bound=3.0)
    cm, _ = sample_comparisons(gt, EroParams(3, 1, 1))
    est = rank_unnormalized(cm)
    assert est.permutation.tolist() in ([3, 1, 2], [1, 3, 2])


def test_normalized_score_proportional_to_centred_truth():
    gt = custom_ground_truth([1.0, 2.0, 3.0], bound=3.0)
    params = EroParams(3, 1, 1)
    cm, _ = sample_comparisons(gt, params)
    est = rank_normalized(cm)
    y = gt.scores - population_spectrum(gt, params).gamma
    x = est.score / np.linalg.norm(est.score)
    y = y / np.linalg.norm(y)
    assert min(np.abs(x - y).max(), np.abs(x + y).max()) < 1e-8


@pytest.mark.parametrize("n", [7, 40])
@pytest.mark.parametrize("method", ["unnormalized", "normalized"])
def test_noiseless_exactness_random_scores(n, method):
    g = np.random.default_rng(n)
    gt = custom_ground_truth(g.normal(size=n))
    cm, _ = sample_comparisons(gt, EroParams(n, 1, 1))
    est = align_sign(rank(cm, method), gt.scores)
    np.testing.assert_array_equal(est.permutation, ranks(gt.scores))


def test_orthogonality_invariants_noisy():
    gt = make_ground_truth("uniform-grid", 60)
    for seed in range(5):
        cm, _ = sample_comparisons(gt, EroParams(60, 0.5, 0.6, seed))
        for method in ("unnormalized", "normalized"):
            est = rank(cm, method)
            re, im = rotate(est.eigen.vector_re, est.eigen.vector_im, est.theta_hat)
            assert abs(re.sum()) < 1e-9
            assert im.sum() <= 1e-9
            assert sorted(est.permutation.tolist()) == list(range(1, 61))
            np.testing.assert_array_equal(est.permutation, ranks(est.score))


def test_align_sign_examples():
    gt = make_ground_truth("uniform-grid", 10)
    cm, _ = sample_comparisons(gt, EroParams(10, 1, 1))
    est = rank_unnormalized(cm)
    ref = est.score.copy()
    same = align_sign(est, ref)
    assert same.sign_used == 1 and np.array_equal(same.score, est.score)
    flipped = align_sign(est, -ref)
    assert flipped.sign_used == -1
    np.testing.assert_array_equal(flipped.score, -est.score)
    np.testing.assert_array_equal(flipped.permutation, 11 - est.permutation)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_align_sign_idempotent(seed):
    g = np.random.default_rng(seed)
    gt = make_ground_truth("uniform-grid", 12)
    cm, _ = sample_comparisons(gt, EroParams(12, 0.8, 0.5, seed))
    est = rank_unnormalized(cm)
    ref = g.normal(size=12)
    once = align_sign(est, ref)
    twice = align_sign(once, ref)
    assert np.array_equal(once.score, twice.score)
    assert once.sign_used == twice.sign_used


def test_scale_invariance():
    gt = make_ground_truth("uniform-grid", 50)
    cm, _ = sample_comparisons(gt, EroParams(50, 0.6, 0.7, 1))
    base = rank_unnormalized(cm).permutation
    for c in (1e-3, 0.5, 7.0, 1e4):
        perm = rank_unnormalized(c * cm.entries).permutation
        assert np.array_equal(perm, base) or np.array_equal(perm, 51 - base)


def test_json_roundtrip_fields():
    gt = make_ground_truth("uniform-grid", 5)
    cm, _ = sample_comparisons(gt, EroParams(5, 1, 1))
    d = json.loads(rank_unnormalized(cm).to_json())
    assert set(d) == {"method", "theta_hat", "eigenvalue", "score", "permutation"}
    assert len(d["score"]) == 5 and sorted(d["permutation"]) == [1, 2, 3, 4, 5]


def test_unknown_method():
    with pytest.raises(ValueError):
        rank(np.zeros((2, 2)), "pagerank")


@pytest.fixture(scope="module")
def slope_rows(tmp_path_factory):
    # centred grid so that SNR up to 4 is reachable at n = 500 while noise stays present
    n = 500
    gt = custom_ground_truth(np.arange(1, n + 1) - (n + 1) / 2)
    path = tmp_path_factory.mktemp("slope") / "scores.csv"
    write_ground_truth_csv(path, gt)
    cfg = ExperimentConfig(kind="custom", scores_file=str(path), n=[n], p=[1.0],
                           snr=[0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0], trials=8,
                           methods=["unnormalized", "normalized"], seed=21).validate()
    return aggregate(sweep(cfg).records)


@pytest.mark.slow
@pytest.mark.parametrize("method", ["unnormalized", "normalized"])
def test_error_decays_like_inverse_snr(slope_rows, method):
    rows = [r for r in slope_rows if r.method == method]
    snr = np.array([r.snr for r in rows])
    err = np.array([r.rel_linf_mean for r in rows])
    slope = np.polyfit(np.log(snr), np.log(err), 1)[0]
    assert -1.35 <= slope <= -0.65
    assert (err * snr).max() < 2


@pytest.mark.slow
def test_normalized_wins_on_sparse_gamma():
    cfg = ExperimentConfig(kind="sorted-gamma", n=[1000], p=[0.1], eta=[0.8], trials=25,
                           methods=["unnormalized", "normalized"], seed=4).validate()
    rows = {r.method: r for r in aggregate(sweep(cfg).records)}
    assert rows["normalized"].rel_linf_mean < rows["unnormalized"].rel_linf_mean
