import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riesz_shapeflow import flows as fl
from riesz_shapeflow.geometry import AffineMap, apply_map, rigid_motion, validate

FIG1 = validate([(-0.4, 0), (1.2, 0), (0, 0.5)])
FIG2 = validate([(-0.8, 0), (0.4, 0), (0, 1.5)])
TYPE1 = validate([(-1, 0), (0.3, -2), (1, 0), (-0.5, 1)])
TYPE2 = validate([(-1, 0), (-0.3, -2), (1, 0), (-0.5, 1)])
SQUARE = validate([(0, 0), (1, 0), (1, 1), (0, 1)])
RHOMBUS = validate([(-1, 0), (0, -2), (1, 0), (0, 2)])
RECT = validate([(0, 0), (3, 0), (3, 1), (0, 1)])
ISO = validate([(0, 0), (2, 0), (2 * math.cos(0.9), 2 * math.sin(0.9))])
SHEAR_TRI = validate([(-1.0, 2.0), (-1.5, 0.0), (1.5, 0.0)])

CASES = [
    (fl.height_stretch(), FIG1, [-0.5, 0.3, 1.0]),
    (fl.height_compress(), FIG2, [-1.2, 0.1, 0.2]),
    (fl.leg_stretch(), ISO, [0.2, 1.5]),
    (fl.vertex_shear(), SHEAR_TRI, [-1.5, 0.3, 1.0]),
    (fl.vertex_shear(), TYPE2, [-0.5, 0.5, 1.0]),
    (fl.rhombus_diagonal(), RHOMBUS, [0.4, 2.0]),
    (fl.height_compress(), RHOMBUS, [0.2, 0.7]),
    (fl.rectangle_stretch(), RECT, [0.5, 3.0]),
]
IDS = [f"{c[0].family}-{len(c[1])}" for c in CASES]


@pytest.mark.parametrize("flow,base,ts", CASES, ids=IDS)
def test_identity_at_zero(flow, base, ts):
    P = fl.domain_at(flow, base, 0.0)
    np.testing.assert_allclose(P.vertices, base.vertices, atol=1e-12)


@pytest.mark.parametrize("flow,base,ts", CASES, ids=IDS)
def test_area_preserved(flow, base, ts):
    for t in ts:
        assert fl.domain_at(flow, base, t).area == pytest.approx(base.area, rel=1e-12)


@pytest.mark.parametrize("flow,base,ts", CASES, ids=IDS)
def test_field_generates_map(flow, base, ts):
    flow = fl.bind(flow, base)
    rng = np.random.default_rng(0)
    lo, hi = base.vertices.min(0), base.vertices.max(0)
    x = rng.uniform(lo, hi, (20, 2))
    h = 1e-6
    for t in ts:
        if flow.is_shear and t == 1.0:
            t = 0.9
        m = fl.map_at(flow, t)
        fd = (fl.map_at(flow, t + h, check=False)(x) - fl.map_at(flow, t - h, check=False)(x)) / (2 * h)
        eta = fl.field_at(flow, t, m(x))
        scale = np.max(np.abs(eta))
        np.testing.assert_allclose(fd, eta, rtol=1e-7, atol=1e-7 * scale)


def test_field_values():
    f = fl.replace(fl.height_stretch(), frame=AffineMap.identity())
    np.testing.assert_allclose(fl.field_at(f, 0.0, (1.0, 1.0)), (-0.5, 0.5))
    s = fl.replace(fl.vertex_shear(0.5, 0.0), frame=AffineMap.identity())
    np.testing.assert_allclose(fl.field_at(s, 0.2, (0.3, 1.0)), (0.5, 0.0))
    np.testing.assert_allclose(fl.field_at(s, 0.2, (0.3, -1.0)), (0.0, 0.0))


def test_time_range_enforced():
    with pytest.raises(fl.FlowTimeOutOfRange):
        fl.domain_at(fl.height_stretch(), FIG1, -1.0)
    with pytest.raises(fl.FlowTimeOutOfRange):
        fl.domain_at(fl.vertex_shear(), SHEAR_TRI, 1.5)
    with pytest.raises(fl.FlowTimeOutOfRange):
        fl.domain_at(fl.rectangle_stretch(), RECT, -0.1)


def test_critical_time_height_stretch():
    assert fl.critical_time(fl.height_stretch(), FIG1) == pytest.approx(math.sqrt(4.48) - 1, abs=1e-12)
    flow = fl.bind(fl.height_stretch(), FIG1)
    v = fl.domain_at(flow, FIG1, fl.critical_time(flow, FIG1)).vertices
    # |BA| = |BC_t| with B = (1.2, 0)
    assert math.dist(v[1], v[0]) == pytest.approx(math.dist(v[1], v[2]), rel=1e-10)


def test_critical_time_height_compress():
    t2 = fl.critical_time(fl.height_compress(), FIG2)
    assert t2 == pytest.approx(1 - math.sqrt(1.28) / 1.5, abs=1e-12)
    end = fl.domain_at(fl.height_compress(), FIG2, t2)
    s = np.sort(end.side_lengths())
    assert s[1] == pytest.approx(s[0], rel=1e-10) or s[2] == pytest.approx(s[1], rel=1e-10)


def test_critical_times_of_other_families():
    assert fl.critical_time(fl.vertex_shear(), SHEAR_TRI) == 1.0
    assert fl.critical_time(fl.rectangle_stretch(), RECT) == math.inf
    q = fl.critical_time(fl.height_compress(), RHOMBUS)
    assert q == pytest.approx(0.5)
    assert fl.is_square(fl.domain_at(fl.height_compress(), RHOMBUS, q))


def test_shear_ends_isosceles():
    # the automatic binding shears over the longest side; the apex lands on its bisector
    flow = fl.bind(fl.vertex_shear(), SHEAR_TRI)
    end = fl.domain_at(flow, SHEAR_TRI, 1.0).vertices
    a, b, c = flow.labels
    assert math.dist(end[a], end[b]) == pytest.approx(math.dist(end[a], end[c]), abs=1e-12)


def test_shear_of_the_isosceles_setup():
    # apex (-b, h) with b = 1, h = 2 over base (-a, 0), (a, 0): at t = 1 the apex is on the bisector
    T = validate([(-1.0, 2.0), (-1.0, 0.0), (1.0, 0.0)])
    f = fl.replace(fl.vertex_shear(0.5, 0.0), frame=AffineMap.identity())
    end = fl.domain_at(f, T, 1.0)
    np.testing.assert_allclose(end.vertices[0], (0.0, 2.0), atol=1e-15)


def test_premises():
    eq = validate([(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)])
    with pytest.raises(fl.PremiseViolated):
        fl.bind(fl.height_stretch(), eq)
    with pytest.raises(fl.PremiseViolated, match="non-obtuse triangle required"):
        fl.bind(fl.height_compress(), validate([(0, 0), (3, 0), (0.2, 0.5)]))
    with pytest.raises(fl.PremiseViolated):
        fl.bind(fl.rectangle_stretch(), TYPE1)
    with pytest.raises(fl.PremiseViolated):
        fl.bind(fl.leg_stretch(), FIG1)


@given(st.floats(0, 2 * math.pi), st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=25, deadline=None)
def test_pose_independence(angle, dx, dy):
    M = rigid_motion(angle, (dx, dy))
    moved = apply_map(M, FIG1)
    a = fl.domain_at(fl.height_stretch(), FIG1, 0.6)
    b = fl.domain_at(fl.height_stretch(), moved, 0.6)
    np.testing.assert_allclose(np.sort(a.side_lengths()), np.sort(b.side_lengths()), rtol=1e-10)
    assert fl.critical_time(fl.height_stretch(), moved) == pytest.approx(math.sqrt(4.48) - 1, abs=1e-10)


def test_json_round_trip():
    f = fl.bind(fl.vertex_shear(), TYPE2)
    g = fl.flow_from_json(f.to_json())
    np.testing.assert_allclose(fl.domain_at(g, TYPE2, 0.7).vertices, fl.domain_at(f, TYPE2, 0.7).vertices)
    with pytest.raises(fl.FlowError):
        fl.flow_from_json({"family": "twist"})


def _check_chain(stages):
    for a, b in zip(stages, stages[1:]):
        np.testing.assert_allclose(a.end.vertices, b.base.vertices, atol=1e-12)
    assert fl.is_square(stages[-1].end, 1e-8)


def test_pipeline_type1_and_type2():
    s1 = fl.compose_pipeline(TYPE1)
    assert len(s1) == 4
    assert [s.flow.family for s in s1] == ["vertex_shear"] * 3 + ["height_compress"]
    _check_chain(s1)
    s2 = fl.compose_pipeline(TYPE2)
    assert len(s2) == 3
    _check_chain(s2)
    for stages in (s1, s2):
        assert stages[-1].end.area == pytest.approx(TYPE1.area, rel=1e-12)


def test_pipeline_trivial_inputs():
    assert fl.compose_pipeline(SQUARE) == []
    kite = validate([(-1, 0), (0, -2), (1, 0), (0, 1)])
    st_ = fl.compose_pipeline(kite)
    assert len(st_) == 2
    _check_chain(st_)
    with pytest.raises(fl.NotSimpleQuadrilateral):
        fl.compose_pipeline(FIG1)


def test_pipeline_on_nonconvex_dart():
    # a dart has only one interior diagonal; the pipeline still reaches the square
    dart = validate([(0, 0), (2, 1), (0, 2), (0.5, 1)])
    stages = fl.compose_pipeline(dart)
    assert fl.is_square(stages[-1].end, 1e-8)


def test_triangle_pipeline():
    stages = fl.triangle_pipeline(FIG1)
    assert fl.is_equilateral(stages[-1].end, 1e-8)
    assert stages[-1].end.area == pytest.approx(FIG1.area, rel=1e-12)
    assert fl.triangle_pipeline(validate([(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)])) == []
