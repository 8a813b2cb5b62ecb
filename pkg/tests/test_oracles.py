"""The reference implementations agree with hand computations."""

from fractions import Fraction

from oracles import naive_left_kernel, naive_rank, taylor_compose


def test_taylor_compose_one_dimensional():
    # f(x0 + h) = 1 + 2h + 3h^2, g(1 + k) = 5 + k + k^2
    f = [{(0,): Fraction(1), (1,): Fraction(2), (2,): Fraction(3)}]
    g = [{(0,): Fraction(5), (1,): Fraction(1), (2,): Fraction(1)}]
    (gf,) = taylor_compose(g, f, 1, 2)
    # 5 + (2h + 3h^2) + (2h)^2 + O(h^3)
    assert gf == {(0,): 5, (1,): 2, (2,): 7}


def test_naive_elimination():
    m = [[1, 2], [2, 4], [0, 1]]
    assert naive_rank(m) == 2
    (t,) = naive_left_kernel(m)
    assert [sum(t[i] * m[i][j] for i in range(3)) for j in range(2)] == [0, 0]
