import json
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from ctxdep.errors import InputError
from ctxdep.evaluation import (
    accuracy,
    binomial_two_sided,
    build_report,
    confusion,
    sign_test,
)

from oracles import binomial_tail_p


def test_accuracy():
    assert accuracy([1, -1, 1, 1], [1, -1, -1, 1]) == 0.75


def test_accuracy_errors():
    with pytest.raises(InputError):
        accuracy([1], [1, -1])
    with pytest.raises(InputError):
        accuracy([], [])


def test_confusion():
    c = confusion([1, 1, -1, -1, 1], [1, -1, -1, 1, 1])
    assert (c.tp, c.fp, c.tn, c.fn) == (2, 1, 1, 1) and c.accuracy == 0.6


class TestSignTest:
    def test_all_one_way(self):
        assert binomial_two_sided(10, 10) == 0.001953125

    def test_balanced_caps_at_one(self):
        assert binomial_two_sided(10, 5) == 1.0

    def test_single_discordant(self):
        assert binomial_two_sided(1, 1) == 1.0

    @given(st.integers(1, 30).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))))
    def test_matches_float_summation(self, nk):
        n, k = nk
        assert abs(binomial_two_sided(n, k) - binomial_tail_p(n, k)) <= 1e-12

    @given(st.integers(1, 200).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))))
    def test_symmetric(self, nk):
        n, k = nk
        assert binomial_two_sided(n, k) == binomial_two_sided(n, n - k)

    def test_large_n_exact(self):
        n, k = 1000, 430
        exact = Fraction(2 * sum(comb(n, i) for i in range(k + 1)), 2**n)
        assert binomial_two_sided(n, k) == float(exact)

    def test_counts_discordant_only(self):
        labels = [1, 1, 1, -1, -1]
        st_ = sign_test([1, 1, -1, -1, 1], [1, -1, 1, 1, 1], labels)
        # item0 both right, item1 a, item2 b, item3 a, item4 both wrong
        assert (st_.n, st_.k) == (3, 2) and not st_.no_evidence

    def test_no_discordant(self):
        st_ = sign_test([1, -1], [1, -1], [1, 1])
        assert st_.no_evidence and st_.p_value == 1.0 and st_.n == 0

    def test_bad_k(self):
        with pytest.raises(InputError):
            binomial_two_sided(3, 4)


class TestReport:
    def test_best_and_tests(self):
        labels = [1, 1, -1, -1]
        rep = build_report({"A": [1, -1, -1, 1], "B": [1, 1, -1, -1], "C": [1, 1, -1, -1]}, labels, "test")
        assert rep.best == "B" and set(rep.sign_tests) == {"A", "C"}
        assert rep.sign_tests["C"].no_evidence
        obj = json.loads(json.dumps(rep.to_json()))
        a = next(s for s in obj["systems"] if s["name"] == "A")
        assert a["vs_best"]["discordant"] == 2 and a["accuracy"] == 0.5
        assert "vs_best" not in next(s for s in obj["systems"] if s["name"] == "B")

    def test_text_rows(self):
        rep = build_report({"X": [1, -1], "Y": [-1, -1]}, [1, -1])
        text = rep.to_text()
        assert "100.00%" in text and "50.00%" in text and len(text.splitlines()) == 4

    def test_empty(self):
        with pytest.raises(InputError):
            build_report({}, [1])
