import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tardosfp.codec import accuse, generate_code, make_rng, sample_bias, sample_biases, score_segment, segment_scores
from tardosfp.model import CodeParams


def test_bias_is_on_simplex():
    rng = make_rng(1)
    for q, k in ((2, 0.5), (3, 0.05), (5, 1.0)):
        p = sample_biases(CodeParams(q, 3, k, m=2000), rng)
        assert p.shape == (2000, q)
        assert np.all((p > 0) & (p < 1))
        assert np.allclose(p.sum(axis=1), 1, atol=1e-12)


def test_bias_mean_and_variance():
    rng = make_rng(2)
    q, k = 3, 1 / 3
    p = sample_biases(CodeParams(q, 3, k, m=400_000), rng)
    n = p.shape[0]
    a, b = k, k * (q - 1)
    var = a * b / ((a + b) ** 2 * (a + b + 1))
    assert np.all(np.abs(p.mean(axis=0) - 1 / q) < 4 * math.sqrt(var / n))
    # variance of a sample variance for a Beta marginal is bounded by E p⁴ ≤ E p² here
    assert abs(p[:, 0].var() - var) < 4 * math.sqrt(np.mean(p[:, 0] ** 4) / n)


def test_binary_half_is_arcsine():
    rng = make_rng(3)
    p = sample_biases(CodeParams(2, 3, 0.5, m=200_000), rng)[:, 0]
    # arcsine CDF F(x) = (2/π) asin √x
    for x in (0.05, 0.3, 0.5, 0.9):
        F = 2 / math.pi * math.asin(math.sqrt(x))
        assert abs(np.mean(p <= x) - F) < 4 * math.sqrt(F * (1 - F) / p.size)


def test_sample_bias_shape():
    assert sample_bias(CodeParams(4, 2, 0.3), make_rng(0)).shape == (4,)


def test_degenerate_bias_gives_symbol_zero():
    params = CodeParams(3, 2, 0.3, m=4, n=10)
    biases = np.tile([1.0, 0.0, 0.0], (4, 1))
    assert np.all(generate_code(params, biases, make_rng(0)) == 0)


def test_symbol_frequencies():
    params = CodeParams(3, 2, 0.3, m=3, n=60_000)
    biases = np.array([[0.2, 0.3, 0.5], [0.9, 0.05, 0.05], [1 / 3, 1 / 3, 1 / 3]])
    X = generate_code(params, biases, make_rng(4))
    for i in range(3):
        for a in range(3):
            f, p = np.mean(X[:, i] == a), biases[i, a]
            assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / params.n) + 1e-12


def test_code_is_reproducible():
    params = CodeParams(3, 2, 0.3, m=20, n=15)
    b1 = sample_biases(params, make_rng(9))
    b2 = sample_biases(params, make_rng(9))
    assert np.array_equal(b1, b2)
    assert np.array_equal(generate_code(params, b1, make_rng(5)), generate_code(params, b2, make_rng(5)))


def test_dimension_mismatch():
    params = CodeParams(3, 2, 0.3, m=5, n=4)
    with pytest.raises(ValueError):
        generate_code(params, np.full((4, 3), 1 / 3), make_rng(0))


def test_score_examples():
    assert score_segment(True, 0.5) == 1
    assert score_segment(False, 0.5) == -1
    assert score_segment(True, 0.2) == pytest.approx(2)
    for p in (0, 1, 1.5):
        with pytest.raises(ValueError):
            score_segment(True, p)


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_score_zero_mean_unit_variance(p):
    g1, g0 = score_segment(True, p), score_segment(False, p)
    assert p * g1 + (1 - p) * g0 == pytest.approx(0, abs=1e-9)
    assert p * g1 ** 2 + (1 - p) * g0 ** 2 == pytest.approx(1, rel=1e-9)


def test_accuse_single_segment():
    res = accuse(np.array([[1], [0]]), [1], np.array([[0.5, 0.5]]), 0.0)
    assert list(res.scores) == [1.0, -1.0]
    assert res.accused == {0}
    assert accuse(np.array([[1], [0]]), [1], np.array([[0.5, 0.5]]), math.inf).accused == set()


def test_innocent_scores_zero_mean_unit_variance():
    rng = make_rng(11)
    params = CodeParams(3, 1, 0.35, m=500, n=2000)
    biases = sample_biases(params, rng)
    X = generate_code(params, biases, rng)
    y = generate_code(params, biases, rng, n=1)[0]
    seg = segment_scores(X, y, biases)
    n = seg.size
    assert abs(seg.mean()) < 4 * math.sqrt(seg.var() / n)
    # innocent per-segment variance is exactly 1 given p; reuse the 4th moment for the spread
    assert abs(seg.var() - 1) < 4 * math.sqrt(np.mean(seg ** 4) / n)


def test_segment_scores_mismatch():
    with pytest.raises(ValueError):
        segment_scores(np.zeros((2, 3), int), [0, 0], np.full((3, 2), 0.5))
