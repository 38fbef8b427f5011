from math import factorial

import numpy as np
import pytest

from nvdg.femspace import DGSpace
from nvdg.mesh import Mesh, build_criss_cross
from nvdg.quadrature import segment_rule, triangle_rule


def triangle_monomial(p, q):
    return factorial(p) * factorial(q) / factorial(p + q + 2)


@pytest.mark.parametrize("degree", range(0, 11))
def test_triangle_rule_exactness(degree):
    rule = triangle_rule(degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            assert rule.weights @ (x ** p * y ** q) == pytest.approx(triangle_monomial(p, q),
                                                                     rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("degree", [1, 4, 6, 8])
def test_triangle_points_strictly_inside(degree):
    rule = triangle_rule(degree)
    assert rule.measure == pytest.approx(0.5)
    assert np.all(rule.weights > 0)
    assert np.all(rule.points > 0)
    assert np.all(rule.points.sum(axis=1) < 1)


@pytest.mark.parametrize("degree", range(0, 12))
def test_segment_rule_exactness(degree):
    rule = segment_rule(degree)
    for p in range(degree + 1):
        assert rule.weights @ rule.points ** p == pytest.approx(1.0 / (p + 1), rel=1e-14)


def test_rules_are_cached_and_read_only():
    rule = triangle_rule(4)
    assert triangle_rule(4) is rule
    with pytest.raises(ValueError):
        rule.weights[0] = 1.0


@pytest.mark.parametrize("factory", [segment_rule, triangle_rule])
def test_negative_degree(factory):
    with pytest.raises(ValueError):
        factory(-1)


@pytest.mark.parametrize("degree", [1, 2, 4, 5, 6, 9])
def test_triangle_rule_is_invariant_under_vertex_rotation(degree):
    rule = triangle_rule(degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    rotated = np.column_stack((1 - x - y, x))
    dist = np.linalg.norm(rotated[:, None, :] - rule.points[None, :, :], axis=-1)
    match = dist.argmin(axis=1)
    assert np.all(dist.min(axis=1) < 1e-13)
    assert np.array_equal(np.sort(match), np.arange(rule.n_points))
    assert rule.weights[match] == pytest.approx(rule.weights, rel=1e-13)


def test_congruent_elements_share_quadrature_points():
    base = build_criss_cross(1)
    rolled = Mesh(base.vertices, np.roll(base.elements, 1, axis=1))
    for degree in (4, 8):
        one = DGSpace(base, 1).element_tables(degree).points
        other = DGSpace(rolled, 1).element_tables(degree).points
        assert np.allclose(np.sort(one, axis=1), np.sort(other, axis=1), atol=1e-14)
