import csv
import io
import json
import math

import numpy as np
import pytest

from riesz_shapeflow import flows as fl
from riesz_shapeflow import verify as vf
from riesz_shapeflow.geometry import validate
from riesz_shapeflow.kernels import NegLinear, RieszPower

FIG1 = validate([(-0.4, 0), (1.2, 0), (0, 0.5)])


def test_default_grid_shape():
    g = vf.default_grid(0.0, 1.0)
    assert len(g) == 17
    assert g[0] == 0.0 and g[-1] == 1.0
    d = np.diff(g)
    assert np.all(d > 0)
    # geometric clustering: gaps double toward the middle
    assert d[1] / d[0] == pytest.approx(2.0)
    assert d[-2] / d[-1] == pytest.approx(2.0)
    assert len(vf.default_grid(0, 1, 9)) == 9
    with pytest.raises(vf.SweepGridError):
        vf.default_grid(0, 1, 4)


def test_classify():
    assert vf.classify([1, 2, 3], [0.1, 0.1, 0.1])[0] == "StrictlyIncreasing"
    assert vf.classify([3, 2, 1], [0.1, 0.1, 0.1])[0] == "StrictlyDecreasing"
    v, m = vf.classify([1, 1.1, 1.2], [0.1, 0.1, 0.1])
    assert v == "Inconclusive" and m < 0


def test_derivative_agreement_rule():
    assert vf.derivative_agrees(1.0, 1.00005, 10.0)
    assert not vf.derivative_agrees(1.0, 1.001, 10.0)
    # near a critical point the comparison is absolute, relative to D
    assert vf.derivative_agrees(1e-9, -5e-9, 1.0)
    assert not vf.derivative_agrees(1e-7, -5e-8, 1.0)


def test_sweep_fig1_increasing_and_csv():
    t1 = fl.critical_time(fl.height_stretch(), FIG1)
    res = vf.sweep(fl.height_stretch(), FIG1, RieszPower(1.0), np.linspace(-0.5, t1, 9))
    assert res.verdict == "StrictlyIncreasing"
    assert res.derivative_ok
    rows = list(csv.reader(io.StringIO(res.to_csv())))
    assert rows[0] == ["t", "D", "D_err", "dDdt_analytic", "dDdt_fd"]
    assert len(rows) == 10
    js = res.to_json()
    assert set(js["grid"][0]) == {"t", "D", "D_err", "dDdt_analytic", "dDdt_fd"}


def test_sweep_rectangles_decreasing():
    R = validate([(0, 0), (1.5, 0), (1.5, 1), (0, 1)])
    res = vf.sweep(fl.rectangle_stretch(), R, NegLinear(), vf.default_grid(0, 2, 7), derivative=False)
    assert res.verdict == "StrictlyDecreasing"


def test_sweep_rejects_bad_grids():
    with pytest.raises(vf.SweepGridError):
        vf.sweep(fl.height_stretch(), FIG1, RieszPower(1.0), [0.0, 0.0, 0.1, 0.2, 0.3])
    with pytest.raises(vf.SweepGridError):
        vf.sweep(fl.height_stretch(), FIG1, RieszPower(1.0), [0.0, 0.1])


def test_unknown_theorem_lists_ids():
    with pytest.raises(vf.UnknownTheorem, match="thm_1_2"):
        vf.verify_theorem("thm_9_99")


@pytest.mark.parametrize("name", ["cor_1_4", "prop_2_1", "prop_2_2", "rem_2_side_avg", "prop_2_4"])
def test_cheap_statements_pass(name):
    v = vf.verify_theorem(name, n_random=3)
    assert v.passed, v.details


@pytest.mark.parametrize("name", ["thm_1_6", "thm_1_7", "prop_6_1", "prop_6_2"])
def test_shear_statements_small(name):
    v = vf.verify_theorem(name, n_random=1, grid_n=5)
    assert v.passed, v.details


def test_verdict_json_is_plain():
    v = vf.verify_theorem("prop_2_4", n_random=2, seed=3)
    text = vf.report_json([v])
    back = json.loads(text)
    assert back[0]["name"] == "prop_2_4" and back[0]["seed"] == 3
    assert vf.report_json([vf.verify_theorem("prop_2_4", n_random=2, seed=3)]) == text


def test_random_generators_are_seeded():
    a = vf.random_polygon(np.random.default_rng(5), 6)
    b = vf.random_polygon(np.random.default_rng(5), 6)
    assert np.array_equal(a.vertices, b.vertices)
    assert a.area == pytest.approx(1.0)
    assert vf.random_triangle(np.random.default_rng(1)).area == pytest.approx(1.0)
    assert vf.isosceles(1.0).area == pytest.approx(1.0)
    assert vf.regular_polygon(4).area == pytest.approx(1.0)


def test_maximality_small():
    v = vf.maximality_check("triangles", trials=10, seed=1)
    assert v.passed
    with pytest.raises(ValueError):
        vf.maximality_check("triangles", trials=5)
    with pytest.raises(ValueError):
        vf.maximality_check("pentagons")


def test_regular_shape_is_not_below_itself():
    # the regular shape equals its own value within error: excluded from the strict check
    reg = vf.regular_polygon(3)
    assert vf._near_regular(reg)


def test_pipeline_check_square_is_trivial():
    v, stages, sweeps = vf.run_pipeline_check(validate([(0, 0), (1, 0), (1, 1), (0, 1)]))
    assert v.passed and stages == [] and sweeps == []
