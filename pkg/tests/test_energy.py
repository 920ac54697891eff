import math

import numpy as np
import pytest

from riesz_shapeflow import flows as fl
from riesz_shapeflow.energy import (
    SliceNotInterval,
    energy,
    fd_derivative,
    potential,
    potential_star,
    potentials,
    shape_derivative,
    shear_derivative_slice,
    side_averages,
)
from riesz_shapeflow.geometry import AffineMap, apply_map, rigid_motion, validate
from riesz_shapeflow.kernels import ExpDecay, NegLinear, RieszPower
from riesz_shapeflow.verify import random_polygon

SQUARE = validate([(0, 0), (1, 0), (1, 1), (0, 1)])
TRI345 = validate([(0, 0), (4, 0), (4, 3)])
FIG1 = validate([(-0.4, 0), (1.2, 0), (0, 0.5)])
H_EQ = math.sqrt(4 / math.sqrt(3))
EQUILATERAL = validate([(0, 0), (H_EQ, 0), (H_EQ / 2, H_EQ * math.sqrt(3) / 2)])

# Energies from a covariogram oracle: D = int K(|z|) |P cap (P + z)| dz with the
# overlap area computed by shapely, integrated in polar coordinates (about 1e-10).
ENERGY_ORACLE = [
    (SQUARE, RieszPower(0.5), 1.5844091715705932),
    (SQUARE, RieszPower(1.5), 8.055609281917988),
    (SQUARE, ExpDecay(1.0), 0.6118680013586817),
    (TRI345, RieszPower(1.0), 41.474593257804486),
    (EQUILATERAL, RieszPower(1.0), 2.8917101669099634),
    (FIG1, NegLinear(), -0.06912740623057173),
]

# Potentials from the ray-length formula V(x) = int R(theta)^(2-a) / (2-a) dtheta (mpmath, 30 digits).
POTENTIAL_ORACLE = [
    (SQUARE, (0.2, 0.7), 0.5, 1.6299974615124594),
    (TRI345, (3.0, 1.0), 1.5, 14.287309286950903),
    (FIG1, (0.1, 0.2), 1.0, 2.0449123325188828),
]


@pytest.mark.parametrize("P,k,ref", ENERGY_ORACLE, ids=lambda x: str(x) if not isinstance(x, float) else "")
def test_energy_matches_covariogram_oracle(P, k, ref):
    r = energy(P, k)
    assert r.value == pytest.approx(ref, rel=1e-8)
    assert r.error_estimate < 1e-9 * abs(r.value)


def test_energy_closed_forms():
    assert energy(SQUARE, NegLinear()).value == pytest.approx(-(2 + math.sqrt(2) + 5 * math.asinh(1)) / 15, rel=1e-13)
    assert energy(SQUARE, RieszPower(1.0)).value == pytest.approx(
        4 * math.asinh(1) + 4 / 3 * (1 - math.sqrt(2)), rel=1e-13
    )


@pytest.mark.parametrize("k", [RieszPower(0.7), NegLinear(), ExpDecay(1.3)], ids=str)
def test_triangle_pair_method_agrees(k):
    P = random_polygon(np.random.default_rng(4), 6)
    a = energy(P, k)
    b = energy(P, k, method="triangles")
    assert a.value == pytest.approx(b.value, rel=1e-11)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_scaling_law(alpha):
    P = random_polygon(np.random.default_rng(9), 5)
    k = RieszPower(alpha)
    base = energy(P, k).value
    for lam in (0.5, 2.0):
        assert energy(validate(lam * P.vertices), k).value / base == pytest.approx(lam ** (4 - alpha), rel=1e-10)


@pytest.mark.parametrize("k", [RieszPower(1.2), NegLinear(), ExpDecay(0.5)], ids=str)
def test_isometry_invariance(k):
    P = random_polygon(np.random.default_rng(2), 5)
    Q = apply_map(rigid_motion(1.1, (3.0, -2.0)), P)
    assert energy(Q, k).value == pytest.approx(energy(P, k).value, rel=1e-12)
    x = P.centroid()
    Qx = rigid_motion(1.1, (3.0, -2.0))(x)
    assert potential(Qx, Q, k).value == pytest.approx(potential(x, P, k).value, rel=1e-12)


def test_monotone_under_inclusion():
    big = validate([(0, 0), (2, 0), (2, 2), (0, 2)])
    for k in (RieszPower(1.0), ExpDecay(1.0)):
        assert energy(SQUARE, k).value < energy(big, k).value


@pytest.mark.parametrize("P,x,alpha,ref", POTENTIAL_ORACLE)
def test_potential_matches_ray_oracle(P, x, alpha, ref):
    r = potential(x, P, RieszPower(alpha))
    assert r.value == pytest.approx(ref, rel=1e-12)


def test_potential_centre_of_square_closed_form():
    assert potential((0.5, 0.5), SQUARE, RieszPower(1.0)).value == pytest.approx(4 * math.asinh(1), rel=1e-14)


@pytest.mark.parametrize("x", [(0.3, 0.4), (0.5, 0.0), (1.0, 1.0)])
def test_potential_star_decomposition_agrees(x):
    k = RieszPower(1.3)
    a = potential(x, SQUARE, k)
    b = potential_star(x, SQUARE, k)
    assert a.value == pytest.approx(b.value, rel=1e-10)


def test_potential_star_needs_point_in_closure():
    from riesz_shapeflow.geometry import ApexOutside

    with pytest.raises(ApexOutside):
        potential_star((1.7, 0.2), SQUARE, RieszPower(1.0))


def test_potential_reflection_symmetry():
    T = validate([(-1, 0), (1, 0), (0, 1.7)])
    v, _ = potentials([(-0.35, 0.0), (0.35, 0.0)], T, RieszPower(0.8))
    assert v[0] == pytest.approx(v[1], rel=1e-12)


def test_potential_comparisons_on_canned_triangles():
    k = RieszPower(1.0)
    T = validate([(-1, 0), (1.2, 0), (0, 1)])
    M = np.array([0.1, 0.0])
    v, e = potentials([M + (0.3, 0), M - (0.3, 0)], T, k)
    assert v[1] - v[0] > 10 * (e[0] + e[1])
    C = 1.6 * np.array([math.cos(math.radians(70)), math.sin(math.radians(70))])
    T = validate([(0, 0), (4, 0), C])
    v, e = potentials([C / 1.6, (1.0, 0.0)], T, k)
    assert v[1] - v[0] > 10 * (e[0] + e[1])


def test_side_averages():
    rep = side_averages(TRI345, RieszPower(0.5))
    a, e = rep.averages(), rep.errors()
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(a[i] - a[j]) <= e[i] + e[j]
    rect = validate([(0, 0), (2, 0), (2, 1), (0, 1)])
    a, e = side_averages(rect, RieszPower(1.0)).averages(), side_averages(rect, RieszPower(1.0)).errors()
    assert a[0] - a[1] > 10 * (e[0] + e[1])
    a, e = side_averages(SQUARE, ExpDecay(1.0)).averages(), side_averages(SQUARE, ExpDecay(1.0)).errors()
    assert np.ptp(a) <= 2 * e.max() + 1e-15


def test_side_averages_equilateral_symmetry():
    a = side_averages(EQUILATERAL, NegLinear()).averages()
    assert np.ptp(a) < 1e-13


CRITICAL = [
    ("rectangle_stretch", SQUARE, 0.0),
    ("rhombus_diagonal", validate([(-1, 0), (0, -1), (1, 0), (0, 1)]), 0.0),
]


@pytest.mark.parametrize("family,P,t", CRITICAL, ids=[c[0] for c in CRITICAL])
def test_derivative_vanishes_at_symmetric_shapes(family, P, t):
    flow = fl.bind(fl.flow_from_json({"family": family}), P)
    r = shape_derivative(P, RieszPower(1.0), flow, t)
    D = energy(P, RieszPower(1.0)).value
    assert abs(r.value) <= r.error_estimate + 1e-13 * D


def _shear_triangle(b=0.6, h=1.3, a=1.0):
    T = validate([(-b, h), (-a, 0.0), (a, 0.0)])
    flow = fl.replace(fl.vertex_shear(b / h, 0.0), frame=AffineMap.identity(), labels=(0, 2, 1))
    return T, flow


def test_shear_slice_positive_then_zero():
    T, flow = _shear_triangle()
    k = RieszPower(1.0)
    assert shear_derivative_slice(fl.domain_at(flow, T, 0.2), k, flow, 0.2).value > 0
    r = shear_derivative_slice(fl.domain_at(flow, T, 1.0), k, flow, 1.0)
    assert abs(r.value) <= r.error_estimate + 1e-13


@pytest.mark.parametrize("k", [RieszPower(0.5), RieszPower(1.5), NegLinear(), ExpDecay(1.0)], ids=str)
def test_slice_and_boundary_methods_agree(k):
    T, flow = _shear_triangle()
    for t in (-0.7, 0.4):
        P = fl.domain_at(flow, T, t)
        a = shear_derivative_slice(P, k, flow, t).value
        b = shape_derivative(P, k, flow, t).value
        assert a == pytest.approx(b, rel=1e-9)


def test_slice_rejects_non_interval_slices():
    P = validate([(0, 0), (3, 0), (3, 2), (2, 2), (1.5, 0.5), (1, 2), (0, 2)])
    flow = fl.replace(fl.vertex_shear(0.1, 0.0), frame=AffineMap.identity())
    with pytest.raises(SliceNotInterval):
        shear_derivative_slice(P, RieszPower(1.0), flow, 0.0)


def test_derivative_rejects_time_out_of_range():
    flow = fl.bind(fl.rectangle_stretch(), SQUARE)
    with pytest.raises(fl.FlowTimeOutOfRange):
        shape_derivative(SQUARE, RieszPower(1.0), flow, -0.5)


@pytest.mark.parametrize("k", [RieszPower(1.0), ExpDecay(2.0)], ids=str)
def test_shape_derivative_matches_fd(k):
    flow = fl.bind(fl.height_stretch(), FIG1)
    t = 0.4
    a = shape_derivative(fl.domain_at(flow, FIG1, t), k, flow, t).value
    fd, _ = fd_derivative(flow, FIG1, k, t)
    assert a == pytest.approx(fd, rel=1e-6)
