import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ksmtgp.stats import midranks, verdict, wilcoxon_ranksum

samples = st.lists(st.integers(0, 6).map(float), min_size=2, max_size=7)


def test_midranks_ties():
    np.testing.assert_array_equal(midranks([3, 1, 3, 2]), [3.5, 1, 3.5, 2])
    np.testing.assert_array_equal(midranks([5, 5, 5]), [2, 2, 2])


def test_separated_thirty():
    a, b = np.arange(1, 31), np.arange(31, 61)
    res = wilcoxon_ranksum(a, b)
    assert res.pvalue < 0.001 and not res.exact
    assert res.statistic < 0
    assert verdict(b, a) == "+"
    assert verdict(a, b) == "−"


def test_identical_samples():
    a = [80.0, 82.5, 85.0, 81.0, 90.0]
    res = wilcoxon_ranksum(a, list(a))
    assert res.pvalue >= 0.99
    assert res.statistic == 0
    assert verdict(a, list(a)) == "="


def test_all_values_equal():
    res = wilcoxon_ranksum([1.0, 1.0, 1.0], [1.0, 1.0])
    assert (res.statistic, res.pvalue) == (0.0, 1.0)


def test_normal_approximation_hand_computed():
    # n=m=10, no ties, a holds ranks 1..9 and 11: R = 56, mean 105, var 175
    a = list(range(1, 10)) + [11]
    b = [10] + list(range(12, 21))
    res = wilcoxon_ranksum(a, b)
    assert res.rank_sum == 56
    assert res.statistic == pytest.approx(-49 / math.sqrt(175))
    assert res.pvalue == pytest.approx(math.erfc(48.5 / math.sqrt(175) / math.sqrt(2)))


@pytest.mark.parametrize("a, b", [([1.0], [2.0, 3.0]), ([1.0, 2.0], []), ([1.0, math.nan], [1.0, 2.0])])
def test_rejects(a, b):
    with pytest.raises(ValueError):
        wilcoxon_ranksum(a, b)


@settings(max_examples=150, deadline=None)
@given(samples, samples)
def test_exact_matches_enumeration(a, b):
    assert wilcoxon_ranksum(a, b).pvalue == pytest.approx(oracles.ranksum_exact_p(a, b), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=30),
    st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=30),
)
def test_swap_symmetry(a, b):
    ab, ba = wilcoxon_ranksum(a, b), wilcoxon_ranksum(b, a)
    assert ab.statistic == pytest.approx(-ba.statistic, abs=1e-12)
    assert ab.pvalue == pytest.approx(ba.pvalue, abs=1e-12)
    assert 0 <= ab.pvalue <= 1
    flip = {"+": "−", "−": "+", "=": "="}
    assert verdict(a, b) == flip[verdict(b, a)]


def test_verdicts_on_synthetic_results():
    rng = np.random.default_rng(0)
    better = 90 + rng.normal(0, 1, 30)
    worse = 85 + rng.normal(0, 1, 30)
    same = 90 + rng.normal(0, 1, 30)
    assert [verdict(better, worse), verdict(worse, better), verdict(better, same)] == ["+", "−", "="]
