import math

import numpy as np
import pytest

from h32fem.quadrature import edge_rule, quadrature, triangle_rule


def monomial_integral(a, b):
    # closed form for the reference triangle: a! b! / (a + b + 2)!
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", [2, 3, 5, 8, 10, 14])
def test_triangle_monomial_exactness(degree):
    rule = triangle_rule(degree)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            val = np.sum(rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b)
            assert abs(val - monomial_integral(a, b)) < 1e-14


def test_triangle_degree_one_is_centroid():
    rule = triangle_rule(1)
    assert len(rule) == 1
    assert np.allclose(rule.points[0], [1 / 3, 1 / 3])
    assert rule.weights[0] == 0.5


def test_triangle_weights_positive_and_sum():
    for degree in (1, 4, 9, 12):
        rule = triangle_rule(degree)
        assert rule.weights.min() > 0
        assert abs(rule.weights.sum() - 0.5) < 1e-14


@pytest.mark.parametrize("degree", [0, 1, 7, 20, 33])
def test_edge_monomial_exactness(degree):
    rule = edge_rule(degree)
    for a in range(degree + 1):
        val = np.sum(rule.weights * rule.points**a)
        assert abs(val - 1.0 / (a + 1)) < 1e-14


def test_edge_weights_sum_to_one():
    for degree in (1, 10, 20):
        rule = edge_rule(degree)
        assert abs(rule.weights.sum() - 1.0) < 1e-14
        assert rule.weights.min() > 0


def test_dispatch_and_unsupported():
    assert len(quadrature("edge", 3)) == 2
    assert quadrature("triangle", 2).degree == 2
    with pytest.raises(ValueError):
        quadrature("triangle", 51)
    with pytest.raises(ValueError):
        quadrature("edge", 101)
    with pytest.raises(ValueError):
        quadrature("segment", 2)
