import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tardosfp.attacks import (
    Class1Strategy,
    Class2Strategy,
    Class3Strategy,
    PathologicalKappaError,
    StrategyError,
    all_count_vectors,
    builtin,
    count_symbols,
    interleaving,
    majority,
    minority,
    mu_min_strategy,
    pick_symbol,
    psi,
    theta,
)
from tardosfp.model import CodeParams


def builtins_for(params, tie_break=None):
    return [interleaving(params.c), majority(), minority(), mu_min_strategy(params, tie_break=tie_break)]


def test_count_symbols():
    assert count_symbols([0, 0, 1, 2], 3) == (2, 1, 1)
    assert count_symbols([2, 2, 2], 3) == (0, 0, 3)
    with pytest.raises(ValueError):
        count_symbols([0, 3], 3)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=12), st.randoms())
def test_count_symbols_permutation_invariant(col, rnd):
    shuffled = list(col)
    rnd.shuffle(shuffled)
    assert count_symbols(col, 4) == count_symbols(shuffled, 4)
    assert sum(count_symbols(col, 4)) == len(col)


def test_theta_examples():
    assert np.allclose(theta(interleaving(3), (2, 1, 0)), [2 / 3, 1 / 3, 0])
    assert list(theta(majority(), (2, 1, 0))) == [1, 0, 0]
    assert list(theta(minority(), (2, 1, 0))) == [0, 1, 0]
    assert np.allclose(theta(majority(), (2, 2, 1)), [0.5, 0.5, 0])


@pytest.mark.parametrize("q, c", [(2, 4), (3, 5), (4, 3)])
def test_unanimous_column_forced(q, c):
    params = CodeParams(q, c, 0.35)
    sigma = (c,) + (0,) * (q - 1)
    for s in builtins_for(params, tie_break="majority"):
        assert list(s.theta(sigma)) == [1] + [0] * (q - 1)


@pytest.mark.parametrize("q, c, kappa", [(2, 6, 0.3), (3, 6, 0.35), (4, 5, 0.2), (3, 8, 0.7)])
def test_theta_normalized_and_supported(q, c, kappa):
    params = CodeParams(q, c, kappa)
    for s in builtins_for(params, tie_break="majority"):
        for sigma in all_count_vectors(q, c):
            th = s.theta(sigma)
            assert abs(th.sum() - 1) < 1e-12
            assert all(th[a] == 0 for a in range(q) if sigma[a] == 0)


@given(st.integers(2, 4).flatmap(lambda q: st.tuples(st.just(q), st.permutations(range(q)))),
       st.integers(1, 7), st.randoms())
def test_symbol_symmetry(qp, c, rnd):
    q, perm = qp
    sigma = list(next(itertools.islice(all_count_vectors(q, c), rnd.randrange(len(list(all_count_vectors(q, c)))), None)))
    permuted = [sigma[perm[a]] for a in range(q)]
    params = CodeParams(q, c, 0.3)
    for s in builtins_for(params, tie_break="majority"):
        th, thp = s.theta(sigma), s.theta(permuted)
        assert np.allclose([th[perm[a]] for a in range(q)], thp)


def test_pick_symbol():
    rng = np.random.default_rng(0)
    assert all(pick_symbol(majority(), (3, 1, 1), rng) == 0 for _ in range(50))
    counts = Counter(pick_symbol(majority(), (2, 2, 2, 0), rng) for _ in range(30_000))
    assert set(counts) == {0, 1, 2}
    for a in range(3):
        assert abs(counts[a] / 30_000 - 1 / 3) < 4 * np.sqrt(2 / 9 / 30_000)
    r1 = [pick_symbol(interleaving(5), (2, 2, 1), np.random.default_rng(7)) for _ in range(5)]
    r2 = [pick_symbol(interleaving(5), (2, 2, 1), np.random.default_rng(7)) for _ in range(5)]
    assert r1 == r2


def test_psi_examples():
    for x in [(2, 1), (0, 3), (3, 0)]:
        assert psi(interleaving(5), 2, x) == pytest.approx(0.4)
    assert psi(majority(), 3, (1, 1)) == 1
    assert psi(minority(), 3, (1, 1)) == 0
    # ℓ other symbols tie with b and all others rank worse
    assert psi(majority(), 2, (2, 2, 1)) == pytest.approx(1 / 3)
    assert psi(minority(), 1, (1, 3)) == pytest.approx(1 / 2)


def test_psi_permutation_invariant_and_checked():
    s = mu_min_strategy(CodeParams(4, 9, 0.35))
    for x in itertools.permutations((3, 2, 0)):
        assert psi(s, 4, x) == psi(s, 4, (3, 2, 0))
    with pytest.raises(StrategyError):
        psi(s, 0, (4, 5, 0))
    with pytest.raises(StrategyError):
        psi(interleaving(5), 2, (1, 1))  # counts do not add up to c


@pytest.mark.parametrize("q, c", [(3, 6), (4, 5), (5, 4)])
def test_class3_psi_values(q, c):
    allowed = {0.0} | {1 / (ell + 1) for ell in range(q)}
    s = mu_min_strategy(CodeParams(q, c, 0.33))
    for sigma in all_count_vectors(q, c):
        if sigma[0]:
            assert s.psi(sigma[0], sigma[1:]) in allowed


@pytest.mark.parametrize("kappa", [0.15, 0.28, 0.35, 0.42, 0.6])
def test_ranking_is_total_order(kappa):
    for c in range(2, 21):
        strat = mu_min_strategy(CodeParams(3, c, kappa), tie_break="majority")
        strat.check(c)
    for s in (majority(), minority()):
        s.check(20)


def test_broken_comparators_rejected():
    cyc = Class3Strategy.from_table([[1, 2, 1], [2, 1, 0], [2, 3, 1], [3, 2, 0], [1, 3, 0], [3, 1, 1]])
    with pytest.raises(StrategyError, match="transitive"):
        cyc.check(3)
    both = Class3Strategy(lambda b, z: True)
    with pytest.raises(StrategyError):
        both.check(3)
    with pytest.raises(StrategyError):
        Class3Strategy.from_table([[1, 2, 1]]).W(2, 1)


def test_unnormalized_strategy_detected():
    bad = Class1Strategy(lambda b, ell: 0.9, lambda b, ell, z: 1.0)
    with pytest.raises(StrategyError, match="not normalized"):
        bad.theta((2, 1, 0))


def test_class_conversions_preserve_psi():
    s3 = mu_min_strategy(CodeParams(3, 7, 0.3))
    s2 = s3.as_class2()
    s1 = s2.as_class1()
    assert isinstance(s2, Class2Strategy) and isinstance(s1, Class1Strategy)
    for sigma in all_count_vectors(3, 7):
        if sigma[0]:
            assert s3.psi(sigma[0], sigma[1:]) == pytest.approx(s2.psi(sigma[0], sigma[1:]))
            assert s3.psi(sigma[0], sigma[1:]) == pytest.approx(s1.psi(sigma[0], sigma[1:]))


def _pairs(q, c):
    return [(b, z) for b in range(1, c + 1) for z in range(1, c + 1)
            if b != z and (b + z == c if q == 2 else b + z <= c)]


@pytest.mark.parametrize("q, c", [(3, 5), (3, 20), (4, 7)])
def test_mu_min_small_kappa_is_majority(q, c):
    kappa = 0.9 / (2 * (q - 1))
    s = mu_min_strategy(CodeParams(q, c, kappa))
    assert all(s.W(b, z) == (b > z) for b, z in _pairs(q, c))


@pytest.mark.parametrize("q, c", [(3, 5), (3, 20), (4, 7)])
def test_mu_min_large_kappa_is_minority(q, c):
    for kappa in (0.55, 0.9):
        s = mu_min_strategy(CodeParams(q, c, kappa))
        assert all(s.W(b, z) == (b < z) for b, z in _pairs(q, c))


@pytest.mark.parametrize("c", range(2, 11))
def test_binary_switch_at_half(c):
    below = mu_min_strategy(CodeParams(2, c, 0.5 - 1e-6))
    above = mu_min_strategy(CodeParams(2, c, 0.5 + 1e-6))
    pairs = _pairs(2, c)
    if pairs:
        assert all(below.W(b, z) == (b > z) for b, z in pairs)
        assert all(above.W(b, z) == (b < z) for b, z in pairs)
        with pytest.raises(PathologicalKappaError, match="pathological"):
            mu_min_strategy(CodeParams(2, c, 0.5))
    mu_min_strategy(CodeParams(2, c, 0.5), tie_break="minority")


def test_builtin_lookup():
    params = CodeParams(3, 4, 0.3)
    assert builtin("mu_min", params).name == "mu_min"
    assert builtin("interleaving", params).c == 4
    with pytest.raises(StrategyError, match="unknown"):
        builtin("random", params)
