from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from iglin.counts import compare, gaussian_binomial, gl_order, idempotent_count, generator_shortfall_check
from iglin.tables import build_P
from oracles import all_rre, gaussian_by_pascal

from conftest import field


def test_gaussian_examples():
    assert gaussian_binomial(5, 0, 2) == 1
    assert gaussian_binomial(7, 2, 2) == 2667 == (127 * 63) // 3
    assert gaussian_binomial(4, 1, 2) == 15
    assert gaussian_binomial(7, 5, 2) == gaussian_binomial(7, 2, 2)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_q_pascal(q):
    for n in range(1, 13):
        for r in range(1, n + 1):
            lhs = gaussian_binomial(n, r, q)
            assert lhs == q**r * gaussian_binomial(n - 1, r, q) + gaussian_binomial(n - 1, r - 1, q) if r < n else lhs == 1
            assert lhs == gaussian_by_pascal(n, r, q)


@given(st.integers(1, 30), st.integers(0, 30))
def test_gaussian_tends_to_binomial_shape(n, r):
    # symmetric in r <-> n - r and exact for large values
    r = min(r, n)
    assert gaussian_binomial(n, r, 7) == gaussian_binomial(n, n - r, 7)
    assert gaussian_binomial(n, r, 2) >= comb(n, r)


def test_gl_order():
    assert gl_order(1, 5) == 4
    assert gl_order(2, 2) == 6 == 3 * 2
    assert gl_order(5, 2) == 9_999_360 == 31 * 30 * 28 * 24 * 16
    assert gl_order(2, 3) == 48


def test_idempotent_count():
    assert idempotent_count(7, 5, 2) == 2_731_008 == 2**10 * (2**7 - 1) * (2**6 - 1) // 3
    assert idempotent_count(4, 1, 2) == 120
    assert idempotent_count(5, 5, 3) == 1


def test_generator_shortfall():
    rep = generator_shortfall_check()
    assert rep["holds"]
    main = rep["main"]
    assert main["idempotents"] == 2_731_008 and main["gl_order"] == 9_999_360
    assert main["generators_vs_group"] == "less"
    assert "(2^5 - 2)" in rep["note"]
    assert [row["r"] for row in rep["sweep_n7_q2"]] == list(range(1, 7))
    assert rep["small"]["idempotents"] == 120 and rep["small"]["gl_order"] == 1


def test_big_values_exact():
    v = gaussian_binomial(60, 30, 9)
    assert v > 2**64 and v == gaussian_binomial(60, 30, 9)
    assert compare(40, 20, 5)["idempotents"] > 2**200


def test_bad_arguments():
    with pytest.raises(ValueError):
        gaussian_binomial(3, 4, 2)
    with pytest.raises(ValueError):
        gaussian_binomial(3, 1, 1)
    with pytest.raises(ValueError):
        gl_order(0, 2)


@pytest.mark.parametrize("n,r,q", [(3, 1, 2), (4, 1, 2), (4, 2, 2), (4, 1, 3), (5, 2, 2), (3, 1, 4), (4, 2, 3)])
def test_counts_match_built_tables(n, r, q):
    P = build_P(n, r, field(q))
    assert len(P.enum) == gaussian_binomial(n, r, q)
    assert int((P.cells != 0).sum()) == idempotent_count(n, r, q)


def test_sizes_match_brute_enumeration():
    for n, r, q in [(2, 1, 2), (3, 1, 2), (3, 2, 2), (4, 2, 2), (3, 1, 3), (2, 1, 5)]:
        assert len(all_rre(n, r, q)) == gaussian_binomial(n, r, q)
