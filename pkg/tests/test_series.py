import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tardosfp.series import GeneralizedSeries

coeffs = st.floats(min_value=-2, max_value=2, allow_nan=False).filter(lambda x: abs(x) > 1e-3)
exps = st.floats(min_value=0.1, max_value=6)


def test_merge_within_tolerance():
    s = GeneralizedSeries(10, [(2.5, 1), (2.5 + 1e-11, 2), (3.0, 1)])
    assert s.exponents() == [2.5, 3.0]
    assert s.coeff(2.5) == 3


def test_items_sorted_and_nonzero():
    s = GeneralizedSeries(10, [(5, 1), (1, 2), (3, 0), (2, 1), (2, -1)])
    assert s.exponents() == [1.0, 5.0]


def test_truncation():
    s = GeneralizedSeries(4, [(3.9, 1), (4.1, 1)])
    assert s.exponents() == [3.9]


@given(st.lists(st.tuples(exps, coeffs), min_size=1, max_size=5),
       st.lists(st.tuples(exps, coeffs), min_size=1, max_size=5),
       st.floats(min_value=0.05, max_value=0.9))
def test_product_evaluates_to_product(a, b, k):
    sa = GeneralizedSeries(100, a)
    sb = GeneralizedSeries(100, b)
    assert float((sa * sb)(k)) == pytest.approx(float(sa(k) * sb(k)), rel=1e-9, abs=1e-12)


@given(st.lists(st.tuples(st.floats(min_value=0.5, max_value=3), coeffs), min_size=1, max_size=4))
def test_log1p_matches_direct(terms):
    with mp.workprec(120):
        u = GeneralizedSeries(12, [(nu, mp.mpf(a) / 8) for nu, a in terms])
        k = mp.mpf("0.05")
        ref = mp.log(1 + u(k))
        assert abs(u.log1p()(k) - ref) < 1e-10


def test_log1p_rejects_constant():
    with pytest.raises(ValueError):
        GeneralizedSeries(5, [(0, 1), (1, 1)]).log1p()


def test_powers_are_divided_by_factorials():
    s = GeneralizedSeries(12, [(2, 1)])
    pw = s.powers(4)
    assert [p.items() for p in pw] == [[(2.0, 1)], [(4.0, mp.mpf(1) / 2)], [(6.0, mp.mpf(1) / 6)],
                                       [(8.0, mp.mpf(1) / 24)]]


def test_negative_argument_conjugates():
    s = GeneralizedSeries(5, [(1, mp.mpc(0, 1)), (2.5, mp.mpc(1, 1))])
    assert s(-0.4) == mp.conj(s(0.4))
