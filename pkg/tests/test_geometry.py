import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwacert.geometry import (Box, EmptySet, HPolyhedron, NonPositiveScale, Unbounded,
                              bounding_box, box_template, check_template, contains, intersect,
                              is_bounded, is_empty, octagon_template, remove_redundancy, scale,
                              support, support_many, vertices_2d)

coords = st.floats(-5, 5, allow_nan=False)
directions = st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=2).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


@st.composite
def boxes(draw, dim=2):
    lo = np.array([draw(coords) for _ in range(dim)])
    width = np.array([draw(st.floats(0.01, 4)) for _ in range(dim)])
    return Box(lo, lo + width)


@st.composite
def polygons(draw):
    """Random bounded polygon: a box cut by a few random halfplanes through its interior."""
    box = draw(boxes())
    P = box.to_polyhedron()
    center = 0.5 * (box.lo + box.hi)
    rows, rhs = [P.A], [P.b]
    for _ in range(draw(st.integers(0, 4))):
        a = np.array(draw(directions))
        rows.append(a[None])
        rhs.append([a @ center + draw(st.floats(0.01, 3))])
    return HPolyhedron(np.vstack(rows), np.concatenate(rhs))


@given(boxes(), directions)
def test_box_support_is_vertex_max(box, v):
    assert support(box.to_polyhedron(), v) == pytest.approx(np.max(box.vertices() @ v), abs=1e-8)


@given(polygons(), directions)
def test_support_matches_vertices(P, v):
    V = vertices_2d(P)
    assert support(P, v) == pytest.approx(np.max(V @ np.asarray(v)), abs=1e-7)


@given(polygons(), directions, st.floats(0.1, 5))
def test_scaling_scales_support(P, v, s):
    # the origin need not be inside P; scaling is about the origin either way
    assert support(scale(P, s), v) == pytest.approx(s * support(P, v), rel=1e-7, abs=1e-7)


@given(polygons())
def test_redundancy_removal_keeps_the_set(P):
    Q = remove_redundancy(P)
    assert Q.n_facets <= P.n_facets
    assert contains(P, Q) and contains(Q, P)


def test_redundant_and_duplicate_facets_dropped():
    P = Box([-1, -1], [1, 1]).to_polyhedron()
    A = np.vstack([P.A, [[1, 0]], [[2, 0]], [[1, 1]]])
    b = np.concatenate([P.b, [5.0], [2.0], [10.0]])
    Q = remove_redundancy(HPolyhedron(A, b))
    assert Q.n_facets == 4


def test_unbounded_and_empty():
    half = HPolyhedron([[1.0, 0.0]], [1.0])
    assert support(half, [1, 0]) == 1.0
    assert support(half, [-1, 0]) == np.inf
    assert not is_bounded(half)
    with pytest.raises(Unbounded):
        bounding_box(half)
    empty = HPolyhedron([[1.0], [-1.0]], [0.0, -1.0])
    assert is_empty(empty)
    with pytest.raises(EmptySet):
        support(empty, [1.0])


def test_containment_and_intersection():
    small = Box([-1, -1], [1, 1]).to_polyhedron()
    big = Box([-2, -2], [2, 2]).to_polyhedron()
    assert contains(big, small) and not contains(small, big)
    both = intersect(big, HPolyhedron([[1.0, 1.0]], [0.0]))
    assert both.n_facets == big.n_facets + 1  # no implicit reduction
    assert support(both, [1, 1]) == pytest.approx(0.0)
    with pytest.raises(NonPositiveScale):
        scale(small, 0.0)


def test_templates():
    C = octagon_template()
    assert C.shape == (8, 2)
    assert np.allclose(np.linalg.norm(C, axis=1), 1.0)
    assert np.allclose(C[2], [0.0, 1.0], atol=1e-12)
    assert box_template(3).shape == (6, 3)
    with pytest.warns(UserWarning):
        check_template(np.array([[1.0, 0.0]]))


def test_support_many_and_bounding_box():
    P = HPolyhedron(octagon_template(), np.ones(8))
    np.testing.assert_allclose(support_many(P, octagon_template()), np.ones(8), atol=1e-9)
    box = bounding_box(P)
    np.testing.assert_allclose(box.hi, [1.0, 1.0], atol=1e-9)


def test_immutability():
    P = Box([0], [1]).to_polyhedron()
    with pytest.raises(ValueError):
        P.A[0, 0] = 3.0
