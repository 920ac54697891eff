import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riesz_shapeflow.geometry import (
    AffineMap,
    ApexOutside,
    DegenerateArea,
    ImageDegenerate,
    PiecewiseAffineMap,
    SelfIntersecting,
    TooFewVertices,
    apply_map,
    area,
    contains,
    polygon_from_json,
    rigid_motion,
    triangulate,
    triangulate_with_star,
    validate,
)
from riesz_shapeflow.verify import random_polygon

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
ARROW = [(0, 0), (4, 0), (1, 1), (0, 4)]


def test_square_accepted():
    P = validate(SQUARE)
    assert area(P) == 1.0
    assert len(P) == 4


def test_clockwise_input_is_flipped():
    P = validate(SQUARE[::-1])
    assert P.area == 1.0
    assert tuple(P.vertices[0]) == SQUARE[-1]


def test_reversal_is_idempotent():
    P = validate(SQUARE)
    Q = validate(validate(P.vertices[::-1]).vertices[::-1])
    np.testing.assert_array_equal(validate(Q.vertices).vertices, Q.vertices)
    assert Q.area == P.area


def test_rejections():
    with pytest.raises(DegenerateArea):
        validate([(0, 0), (1, 0), (0.5, 0)])
    with pytest.raises(TooFewVertices):
        validate([(0, 0), (1, 0)])
    with pytest.raises(SelfIntersecting):
        validate([(0, 0), (1, 1), (1, 0), (0, 1)])
    with pytest.raises(DegenerateArea):
        validate([(0, 0), (1, 0), (2, 0), (1, 1)])


def test_vertices_are_read_only():
    P = validate(SQUARE)
    with pytest.raises(ValueError):
        P.vertices[0, 0] = 5.0


def test_areas():
    assert area(validate([(0, 0), (1, 0), (0, 1)])) == 0.5


@given(st.floats(0.1, 10.0), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_area_scales_quadratically(lam, seed):
    P = random_polygon(np.random.default_rng(seed), 5)
    Q = validate(P.vertices * lam)
    assert Q.area == pytest.approx(lam**2 * P.area, rel=1e-12)


def test_triangulate_square_and_pentagon():
    tris = triangulate(validate(SQUARE))
    assert [t.area for t in tris] == [0.5, 0.5]
    ang = 2 * math.pi * np.arange(5) / 5
    pent = validate(np.stack([np.cos(ang), np.sin(ang)], 1))
    tris = triangulate(pent)
    assert len(tris) == 3
    assert sum(t.area for t in tris) == pytest.approx(pent.area, rel=1e-12)


def test_triangulate_arrowhead_centroids_inside():
    P = validate(ARROW)
    tris = triangulate(P)
    assert len(tris) == 2
    assert all(contains(P, t.centroid()) for t in tris)
    assert sum(t.area for t in tris) == pytest.approx(P.area, rel=1e-12)


@given(st.integers(0, 10_000), st.integers(3, 8))
@settings(max_examples=40, deadline=None)
def test_triangulation_partitions(seed, n):
    rng = np.random.default_rng(seed)
    P = random_polygon(rng, n)
    tris = triangulate(P)
    assert len(tris) == n - 2
    assert all(t.area > 0 for t in tris)
    assert sum(t.area for t in tris) == pytest.approx(P.area, rel=1e-12)
    # random interior points lie in exactly one triangle
    lo, hi = P.vertices.min(0), P.vertices.max(0)
    for x in rng.uniform(lo, hi, (30, 2)):
        if not contains(P, x):
            continue
        hits = sum(contains(validate(t.vertices), x, tol=0) for t in tris)
        assert hits >= 1


def test_star_triangulations():
    sq = validate(SQUARE)
    tris = triangulate_with_star(sq, (0.5, 0.5))
    assert len(tris) == 4
    assert all(np.any(np.all(t.vertices == (0.5, 0.5), axis=1)) for t in tris)
    assert len(triangulate_with_star(sq, (0.0, 0.0))) == 2
    tri = validate([(0, 0), (2, 0), (1, 1)])
    assert len(triangulate_with_star(tri, (1.0, 0.0))) == 2
    with pytest.raises(ApexOutside):
        triangulate_with_star(sq, (2.0, 2.0))


def test_star_triangulation_of_nonconvex_covers():
    P = validate(ARROW)
    for apex in [(0.5, 0.5), (0.2, 2.0), (4.0, 0.0)]:
        tris = triangulate_with_star(P, apex)
        assert sum(t.area for t in tris) == pytest.approx(P.area, rel=1e-12)


def test_apply_map_identity_and_unimodular():
    sq = validate(SQUARE)
    np.testing.assert_array_equal(apply_map(AffineMap.identity(), sq).vertices, sq.vertices)
    m = AffineMap(np.diag([1 / math.sqrt(2), math.sqrt(2)]), np.zeros(2))
    R = apply_map(m, sq)
    assert R.area == pytest.approx(1.0, rel=1e-12)
    assert R.side_lengths()[0] == pytest.approx(1 / math.sqrt(2))


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_area_scales_with_determinant(a, b, c, d):
    M = np.array([[a, b], [c, d]])
    if abs(np.linalg.det(M)) < 1e-2:
        return
    P = random_polygon(np.random.default_rng(1), 6)
    Q = apply_map(AffineMap(M, np.array([0.3, -0.2])), P)
    assert Q.area == pytest.approx(abs(np.linalg.det(M)) * P.area, rel=1e-12)


def test_affine_algebra():
    f = rigid_motion(0.7, (1.0, 2.0))
    g = AffineMap(np.array([[2.0, 1.0], [0.0, 0.5]]), np.array([-1.0, 0.0]))
    x = np.array([[0.3, -0.4], [1.0, 2.0]])
    np.testing.assert_allclose(f.compose(g)(x), f(g(x)))
    np.testing.assert_allclose(g.inverse()(g(x)), x, atol=1e-14)
    assert f.det == pytest.approx(1.0)


def test_piecewise_map_continuity():
    shear_up = AffineMap(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2))
    shear_lo = AffineMap(np.array([[1.0, -0.3], [0.0, 1.0]]), np.zeros(2))
    pw = PiecewiseAffineMap(np.array([0.0, 1.0]), 0.0, shear_up, shear_lo)
    Q = validate([(-1, 0), (0, -1), (1, 0), (0, 1)])
    R = apply_map(pw, Q)
    assert R.area == pytest.approx(Q.area, rel=1e-12)
    np.testing.assert_allclose(R.vertices[3], (0.5, 1.0))
    # an edge crossing the dividing line away from a vertex is rejected
    with pytest.raises(ImageDegenerate):
        apply_map(pw, validate([(-1, -1), (1, -1), (1, 1), (-1, 1)]))
    bad = PiecewiseAffineMap(np.array([0.0, 1.0]), 0.0, shear_up, AffineMap(np.eye(2), np.array([0.1, 0.0])))
    with pytest.raises(ImageDegenerate):
        apply_map(bad, Q)


def test_json_round_trip():
    P = validate(ARROW)
    assert np.array_equal(polygon_from_json(P.to_json()).vertices, P.vertices)
    assert polygon_from_json('{"vertices": [[0,0],[1,0],[0,1]]}').area == 0.5
