"""Numerical verification of the monotonicity and comparison statements.

Every check is error aware: a strict inequality a > b is accepted only when
a - b exceeds ten times the combined error estimate, and a sweep is called
monotone only when every consecutive difference of D beats the summed
error estimates of its two end points.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import flows as fl
from .energy import energy, fd_derivative, potentials, shape_derivative, shear_derivative_slice, side_averages
from .geometry import Polygon, validate
from .kernels import Kernel, RieszPower
from .quadrature import QuadratureConfig, ToleranceNotReached

__all__ = [
    "THEOREMS",
    "UnknownTheorem",
    "SweepGridError",
    "SweepResult",
    "Verdict",
    "default_grid",
    "derivative_agrees",
    "classify",
    "sweep",
    "verify_theorem",
    "verify_all",
    "maximality_check",
    "run_pipeline_check",
    "random_polygon",
    "random_triangle",
    "isosceles",
    "regular_polygon",
    "report_json",
]

THEOREMS = (
    "thm_1_2",
    "thm_1_3",
    "cor_1_4",
    "thm_1_5",
    "thm_1_6",
    "thm_1_7",
    "thm_1_8",
    "thm_1_9",
    "prop_2_1",
    "prop_2_2",
    "rem_2_side_avg",
    "prop_2_4",
    "prop_6_1",
    "prop_6_2",
)

STRICT_FACTOR = 10.0
DERIV_REL_TOL = 1e-4
DERIV_ABS_TOL = 1e-8  # times |D|, used when |dD/dt| < 1e-6 |D|
NEAR_ZERO = 1e-6


class UnknownTheorem(ValueError):
    pass


class SweepGridError(ValueError):
    pass


# ------------------------------------------------------------------ results


@dataclass(frozen=True)
class SweepResult:
    flow: fl.FlowSpec
    t: tuple
    D: tuple
    D_err: tuple
    dDdt_analytic: tuple
    dDdt_err: tuple
    dDdt_fd: tuple
    verdict: str
    min_margin: float
    derivative_ok: bool
    max_derivative_mismatch: float

    def to_json(self) -> dict:
        return {
            "flow": self.flow.to_json(),
            "verdict": self.verdict,
            "min_margin": self.min_margin,
            "derivative_ok": self.derivative_ok,
            "max_derivative_mismatch": self.max_derivative_mismatch,
            "grid": [
                {"t": a, "D": b, "D_err": c, "dDdt_analytic": d, "dDdt_fd": e}
                for a, b, c, d, e in zip(self.t, self.D, self.D_err, self.dDdt_analytic, self.dDdt_fd)
            ],
        }

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["t", "D", "D_err", "dDdt_analytic", "dDdt_fd"])
        for row in zip(self.t, self.D, self.D_err, self.dDdt_analytic, self.dDdt_fd):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    margins: dict
    config: dict
    seed: int
    details: list = field(default_factory=list)

    def to_json(self) -> dict:
        return _clean(
            {
                "name": self.name,
                "passed": self.passed,
                "margins": self.margins,
                "config": self.config,
                "seed": self.seed,
                "details": self.details,
            }
        )


def _clean(obj):
    """Make a structure JSON safe (no NaN or infinities)."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def report_json(verdicts: Sequence[Verdict]) -> str:
    return json.dumps([v.to_json() for v in verdicts], indent=2, sort_keys=True) + "\n"


# -------------------------------------------------------------------- sweeps


def default_grid(a: float, b: float, n: int = 17) -> np.ndarray:
    """n points on [a, b], spaced geometrically (ratio 2) toward both ends."""
    if n < 5 or not b > a:
        raise SweepGridError("grid needs at least 5 points on a non-empty interval")
    half = (n - 1) // 2
    u = 0.5 * (2.0 ** np.arange(half + 1) - 1.0) / (2.0**half - 1.0)
    s = np.concatenate([u, 1.0 - u[-2::-1]]) if n % 2 else np.concatenate([u, 1.0 - u[::-1]])
    s = np.unique(s)
    return a + (b - a) * s


def derivative_agrees(analytic: float, fd: float, D: float) -> bool:
    if abs(fd) < NEAR_ZERO * abs(D):
        return abs(analytic - fd) <= DERIV_ABS_TOL * abs(D)
    return abs(analytic - fd) <= DERIV_REL_TOL * abs(fd)


def classify(D: Sequence[float], err: Sequence[float]):
    """(verdict, min_margin) for a sequence of values with error estimates."""
    D = np.asarray(D, dtype=float)
    e = np.asarray(err, dtype=float)
    diff = np.diff(D)
    tol = e[1:] + e[:-1]
    up = float(np.min(diff - tol))
    down = float(np.min(-diff - tol))
    if up > 0:
        return "StrictlyIncreasing", up
    if down > 0:
        return "StrictlyDecreasing", down
    return "Inconclusive", max(up, down)


def _derivative(P: Polygon, kernel, flow, t, cfg):
    if flow.is_shear:
        return shear_derivative_slice(P, kernel, flow, t, cfg)
    return shape_derivative(P, kernel, flow, t, cfg)


def sweep(
    flow: fl.FlowSpec,
    base: Polygon,
    kernel: Kernel,
    t_grid: Sequence[float],
    cfg: Optional[QuadratureConfig] = None,
    derivative: bool = True,
) -> SweepResult:
    """D along a flow, with analytic and finite-difference derivatives.

    The analytic derivative uses the slice method for shear flows and the
    boundary formula otherwise.
    """
    cfg = cfg or QuadratureConfig()
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 5:
        raise SweepGridError("a sweep needs at least 5 grid points")
    if np.any(np.diff(t) <= 0):
        raise SweepGridError("sweep grid must be strictly increasing")
    flow = fl.bind(flow, base)
    D, De, A, Ae, F = [], [], [], [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ToleranceNotReached)
        for ti in t:
            P = fl.domain_at(flow, base, float(ti))
            e = energy(P, kernel, cfg)
            D.append(e.value)
            De.append(e.error_estimate)
            if derivative:
                a = _derivative(P, kernel, flow, float(ti), cfg)
                A.append(a.value)
                Ae.append(a.error_estimate)
                F.append(fd_derivative(flow, base, kernel, float(ti), 1e-4, cfg)[0])
            else:
                A.append(math.nan)
                Ae.append(math.nan)
                F.append(math.nan)
    verdict, margin = classify(D, De)
    if derivative:
        ok = [derivative_agrees(a, f, d) for a, f, d in zip(A, F, D)]
        mism = max(abs(a - f) / max(abs(f), NEAR_ZERO * abs(d)) for a, f, d in zip(A, F, D))
    else:
        ok, mism = [True], math.nan
    return SweepResult(
        flow, tuple(map(float, t)), tuple(D), tuple(De), tuple(A), tuple(Ae), tuple(F), verdict, margin, all(ok), mism
    )


# ---------------------------------------------------------- shape generators


def _rng(seed: int, tag: str) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(tag.encode())])


def _unit_area(v) -> Polygon:
    P = validate(v)
    return validate((P.vertices - P.centroid()) / math.sqrt(P.area))


def _min_angle(P: Polygon) -> float:
    return float(np.min(P.interior_angles()))


def random_polygon(rng: np.random.Generator, n: int) -> Polygon:
    """Random star-shaped simple polygon with n vertices and area 1."""
    while True:
        ang = np.sort(rng.uniform(0.0, 2 * math.pi, n))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
        if np.min(gaps) < 0.25 or np.max(gaps) > math.pi - 0.1:
            continue
        r = rng.uniform(0.5, 1.0, n)
        try:
            P = _unit_area(np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1))
        except ValueError:
            continue
        if _min_angle(P) > 0.2:
            return P


def random_triangle(rng: np.random.Generator, min_angle: float = 0.2) -> Polygon:
    while True:
        v = rng.uniform(-1.0, 1.0, (3, 2))
        try:
            P = _unit_area(v)
        except ValueError:
            continue
        if _min_angle(P) > min_angle:
            return P


def isosceles(apex: float, area: float = 1.0) -> Polygon:
    """Isosceles triangle with apex angle ``apex`` at the origin and the given area."""
    leg = math.sqrt(2.0 * area / math.sin(apex))
    return validate([(0.0, 0.0), (leg, 0.0), (leg * math.cos(apex), leg * math.sin(apex))])


def regular_polygon(n: int, area: float = 1.0) -> Polygon:
    ang = 2 * math.pi * np.arange(n) / n
    P = validate(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    return validate(P.vertices * math.sqrt(area / P.area))


def _rigid(rng, P: Polygon) -> Polygon:
    th = rng.uniform(0, 2 * math.pi)
    c, s = math.cos(th), math.sin(th)
    return validate(P.vertices @ np.array([[c, s], [-s, c]]) + rng.uniform(-1, 1, 2))


# ------------------------------------------------------------- scenarios


def _sweep_summary(i, res: SweepResult, expect: str, extra=None) -> dict:
    d = {
        "instance": i,
        "verdict": res.verdict,
        "min_margin": res.min_margin,
        "derivative_ok": res.derivative_ok,
        "max_derivative_mismatch": res.max_derivative_mismatch,
        "t_range": [res.t[0], res.t[-1]],
        "D_range": [res.D[0], res.D[-1]],
        "passed": res.verdict == expect and res.derivative_ok,
    }
    if extra:
        d.update(extra)
    return d


def _sweep_verdict(name, cases, expect, kernel, cfg, seed, grid_n, positivity=False) -> Verdict:
    details = []
    for i, (flow, base, a, b) in enumerate(cases):
        res = sweep(flow, base, kernel, default_grid(a, b, grid_n), cfg)
        extra = {}
        ok_pos = True
        if positivity and kernel.positive:
            ok_pos = min(res.D) > 0
            extra["positive"] = ok_pos
        s = _sweep_summary(i, res, expect, extra)
        s["passed"] = s["passed"] and ok_pos
        details.append(s)
    return _verdict(name, details, kernel, cfg, seed, expect=expect)


def _verdict(name, details, kernel, cfg, seed, **extra) -> Verdict:
    margins = [d["min_margin"] for d in details if "min_margin" in d]
    passed = bool(details) and all(d["passed"] for d in details)
    m = {"instances": len(details), "min_margin": min(margins) if margins else None}
    m.update(extra)
    conf = {"kernel": kernel.to_json(), "quadrature": cfg.to_json()}
    return Verdict(name, passed, m, conf, int(seed), details)


FIG1 = [(-0.4, 0.0), (1.2, 0.0), (0.0, 0.5)]
FIG2 = [(-0.8, 0.0), (0.4, 0.0), (0.0, 1.5)]


def _thm_1_2(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "thm_1_2")
    bases = [validate(FIG1)]
    while len(bases) < 1 + n_random:
        P = random_triangle(rng)
        s = np.sort(P.side_lengths())
        if s[2] < s[1] * 1.02:
            continue
        try:
            tc = fl.critical_time(fl.height_stretch(), P)
        except fl.FlowError:
            continue
        if tc > 0.05:
            bases.append(P)
    cases = [(fl.height_stretch(), P, -0.5, fl.critical_time(fl.height_stretch(), P)) for P in bases]
    return _sweep_verdict("thm_1_2", cases, "StrictlyIncreasing", kernel, cfg, seed, grid_n, positivity=True)


def _thm_1_3(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "thm_1_3")
    bases = [validate(FIG2)]
    while len(bases) < 1 + n_random:
        P = random_triangle(rng, 0.3)
        if np.max(P.interior_angles()) > math.radians(88):
            continue
        s = np.sort(P.side_lengths())
        if s[1] < s[0] * 1.02:
            continue
        try:
            tc = fl.critical_time(fl.height_compress(), P)
        except fl.FlowError:
            continue
        if tc > 0.05:
            bases.append(P)
    cases = [(fl.height_compress(), P, -1.5, fl.critical_time(fl.height_compress(), P)) for P in bases]
    return _sweep_verdict("thm_1_3", cases, "StrictlyIncreasing", kernel, cfg, seed, grid_n)


def _cor_1_4(kernel, cfg, seed, n_random, grid_n):
    details = []
    ok = True
    for refine in (1, 2):
        m = 12 * refine
        alphas = math.pi * np.arange(1, m) / m
        res = [energy(isosceles(a), kernel, cfg) for a in alphas]
        D = np.array([r.value for r in res])
        E = np.array([r.error_estimate for r in res])
        k = int(np.argmax(D))
        target = int(np.argmin(np.abs(alphas - math.pi / 3)))
        up, mu = classify(D[: target + 1], E[: target + 1])
        down, md = classify(D[target:], E[target:])
        passed = k == target and up == "StrictlyIncreasing" and down == "StrictlyDecreasing"
        ok &= passed
        details.append(
            {
                "grid_step": math.pi / m,
                "argmax_alpha": float(alphas[k]),
                "nearest_pi_over_3": float(alphas[target]),
                "below": up,
                "above": down,
                "min_margin": min(mu, md),
                "passed": passed,
            }
        )
    moved = abs(details[0]["argmax_alpha"] - details[1]["argmax_alpha"])
    stable = moved <= math.pi / 24 + 1e-12
    details.append({"check": "refinement", "argmax_shift": moved, "passed": stable})
    return _verdict("cor_1_4", details, kernel, cfg, seed)


def _thm_1_5(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "thm_1_5")
    bases = [isosceles(1.0)] + [_rigid(rng, isosceles(rng.uniform(0.3, 2.6))) for _ in range(n_random)]
    cases = [(fl.leg_stretch(), P, 0.0, 3.0) for P in bases]
    return _sweep_verdict("thm_1_5", cases, "StrictlyDecreasing", kernel, cfg, seed, grid_n)


def _shear_triangle(a, b, h):
    T = validate([(-b, h), (-a, 0.0), (a, 0.0)])
    return T, fl.FlowSpec(
        "vertex_shear", -math.inf, 1.0, upper_rate=b / h, lower_rate=0.0,
        frame=fl.AffineMap.identity(), labels=(0, 2, 1), premise="a, b, h > 0",
    )


def _thm_1_6(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "thm_1_6")
    params = [(1.5, 1.0, 2.0)] + [
        (rng.uniform(0.5, 1.5), rng.uniform(0.2, 2.0), rng.uniform(0.5, 2.0)) for _ in range(n_random)
    ]
    cases = []
    for a, b, h in params:
        T, f = _shear_triangle(a, b, h)
        cases.append((f, T, -2.0, 1.0))
    return _sweep_verdict("thm_1_6", cases, "StrictlyIncreasing", kernel, cfg, seed, grid_n)


def _quad(a, xa, ya, xc, yc):
    """Quadrilateral D=(-a,0), C=(xc,yc), B=(a,0), A=(xa,ya) with ya > 0 > yc, and its two-sided shear."""
    Q = validate([(-a, 0.0), (xc, yc), (a, 0.0), (xa, ya)])
    return Q


def _shear(ku, kl):
    return fl.FlowSpec("vertex_shear", -math.inf, 1.0, upper_rate=ku, lower_rate=kl,
                       frame=fl.AffineMap.identity(), labels=(0, 2, 3, 1), premise="y_A y_C < 0")


def _thm_1_7(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "thm_1_7")
    cases = []
    canned = [(1.0, -0.5, 1.0, 0.3, -2.0)]
    while len(canned) < 1 + n_random:
        a = rng.uniform(0.5, 1.5)
        xa, xc = rng.uniform(-1.5, 1.5, 2)
        if min(abs(xa), abs(xc)) < 0.1:
            continue
        canned.append((a, xa, rng.uniform(0.3, 2.0), xc, -rng.uniform(0.3, 2.0)))
    for a, xa, ya, xc, yc in canned:
        cases.append((_shear(-xa / ya, -xc / yc), _quad(a, xa, ya, xc, yc), 0.0, 1.0))
    return _sweep_verdict("thm_1_7", cases, "StrictlyIncreasing", kernel, cfg, seed, grid_n)


def _prop_6(name, kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, name)
    params = [(1.0, 0.5, 1.0, 0.3, 2.0)]
    while len(params) < 1 + n_random:
        params.append(
            (rng.uniform(0.5, 1.5), rng.uniform(0.1, 1.5), rng.uniform(0.3, 2.0), rng.uniform(0.0, 1.5), rng.uniform(0.3, 2.0))
        )
    cases = []
    for a, b1, h1, b2, h2 in params:
        if name == "prop_6_1":
            # both off-diagonal vertices left of the bisector, both move
            Q = _quad(a, -b1, h1, -b2 - 0.05, -h2)
            f = _shear(b1 / h1, -(b2 + 0.05) / h2)
        else:
            # upper vertex left, lower vertex on or right of the bisector; only the upper moves
            Q = _quad(a, -b1, h1, b2, -h2)
            f = _shear(b1 / h1, 0.0)
        cases.append((f, Q, -1.0, 1.0))
    return _sweep_verdict(name, cases, "StrictlyIncreasing", kernel, cfg, seed, grid_n)


def _rhombus(q: float) -> Polygon:
    """Area-1 rhombus with diagonal ratio q (longer diagonal vertical)."""
    a = math.sqrt(1.0 / (2.0 * q))
    return validate([(-a, 0.0), (0.0, -q * a), (a, 0.0), (0.0, q * a)])


def _rectangle(q: float) -> Polygon:
    w = math.sqrt(1.0 / q)
    return validate([(0.0, 0.0), (w, 0.0), (w, q * w), (0.0, q * w)])


def _thm_1_8(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "thm_1_8")
    bases = [_rhombus(1.0)] + [_rigid(rng, _rhombus(rng.uniform(1.0, 2.5))) for _ in range(n_random)]
    cases = [(fl.rhombus_diagonal(), P, 0.0, 2.0) for P in bases]
    return _sweep_verdict("thm_1_8", cases, "StrictlyDecreasing", kernel, cfg, seed, grid_n)


def _thm_1_9(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "thm_1_9")
    bases = [_rectangle(1.0)] + [_rigid(rng, _rectangle(rng.uniform(1.0, 3.0))) for _ in range(n_random)]
    cases = [(fl.rectangle_stretch(), P, 0.0, 2.0) for P in bases]
    return _sweep_verdict("thm_1_9", cases, "StrictlyDecreasing", kernel, cfg, seed, grid_n)


def _strict_pairs(hi_v, hi_e, lo_v, lo_e):
    gap = np.asarray(hi_v) - np.asarray(lo_v)
    tol = STRICT_FACTOR * (np.asarray(hi_e) + np.asarray(lo_e))
    return gap - tol


def _prop_2_1(kernel, cfg, seed, n_random, grid_n, probes=50):
    """|BC| > |AC|, M the midpoint of AB, P on MB and P' on MA mirrored: V(P') > V(P)."""
    rng = _rng(seed, "prop_2_1")
    tris = [np.array([(-1.0, 0.0), (1.2, 0.0), (0.0, 1.0)])]
    while len(tris) < 1 + 2 * n_random:
        P = random_triangle(rng).vertices
        for k in range(3):
            A, B, C = P[k], P[(k + 1) % 3], P[(k + 2) % 3]
            if np.hypot(*(B - C)) > 1.02 * np.hypot(*(A - C)):
                tris.append(np.array([A, B, C]))
                break
    details = []
    for i, (A, B, C) in enumerate(tris):
        Om = validate([A, B, C])
        M = 0.5 * (A + B)
        u = (B - A) / np.hypot(*(B - A))
        half = 0.5 * np.hypot(*(B - A))
        d = np.array([0.3]) if i == 0 else rng.uniform(0.02, 0.98, probes) * half
        Pp = M + d[:, None] * u
        Pm = M - d[:, None] * u
        v, e = potentials(np.concatenate([Pp, Pm]), Om, kernel, cfg)
        n = len(d)
        marg = _strict_pairs(v[n:], e[n:], v[:n], e[:n])
        details.append({"instance": i, "probes": n, "min_margin": float(np.min(marg)), "passed": bool(np.all(marg > 0))})
    return _verdict("prop_2_1", details, kernel, cfg, seed)


def _prop_2_2(kernel, cfg, seed, n_random, grid_n, probes=50):
    """|AB| > |AC|; P on AC, P' on AB with |PA| = |P'A|: V(P') > V(P)."""
    rng = _rng(seed, "prop_2_2")
    c70 = 1.6 * np.array([math.cos(math.radians(70)), math.sin(math.radians(70))])
    tris = [np.array([(0.0, 0.0), (4.0, 0.0), tuple(c70)])]
    while len(tris) < 1 + 2 * n_random:
        P = random_triangle(rng).vertices
        for k in range(3):
            A, B, C = P[k], P[(k + 1) % 3], P[(k + 2) % 3]
            if np.hypot(*(B - A)) > 1.02 * np.hypot(*(C - A)):
                tris.append(np.array([A, B, C]))
                break
    details = []
    for i, (A, B, C) in enumerate(tris):
        Om = validate([A, B, C])
        lac = np.hypot(*(C - A))
        r = np.array([1.0]) if i == 0 else rng.uniform(0.02, 0.98, probes) * lac
        P = A + r[:, None] * (C - A) / lac
        Pp = A + r[:, None] * (B - A) / np.hypot(*(B - A))
        v, e = potentials(np.concatenate([Pp, P]), Om, kernel, cfg)
        n = len(r)
        marg = _strict_pairs(v[:n], e[:n], v[n:], e[n:])
        details.append({"instance": i, "probes": n, "min_margin": float(np.min(marg)), "passed": bool(np.all(marg > 0))})
    return _verdict("prop_2_2", details, kernel, cfg, seed)


def _rem_side_avg(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "rem_2_side_avg")
    tris = [validate([(0.0, 0.0), (4.0, 0.0), (4.0, 3.0)])] + [random_triangle(rng) for _ in range(n_random)]
    details = []
    for i, T in enumerate(tris):
        rep = side_averages(T, kernel, cfg)
        a, e = rep.averages(), rep.errors()
        gaps = [abs(a[j] - a[k]) - (e[j] + e[k]) for j in range(3) for k in range(j + 1, 3)]
        spread = float(np.ptp(a))
        details.append(
            {
                "instance": i,
                "averages": a.tolist(),
                "spread": spread,
                "max_excess": float(max(gaps)),
                "min_margin": float(-max(gaps)),
                "passed": bool(max(gaps) <= 0),
            }
        )
    return _verdict("rem_2_side_avg", details, kernel, cfg, seed)


def _prop_2_4(kernel, cfg, seed, n_random, grid_n):
    rng = _rng(seed, "prop_2_4")
    rects = [_rectangle(2.0)] + [_rigid(rng, _rectangle(rng.uniform(1.05, 5.0))) for _ in range(n_random)]
    details = []
    for i, R in enumerate(rects):
        rep = side_averages(R, kernel, cfg)
        L = R.side_lengths()
        a, e = rep.averages(), rep.errors()
        long_i = int(np.argmax(L))
        short_i = (long_i + 1) % 4
        marg = float(a[long_i] - a[short_i] - STRICT_FACTOR * (e[long_i] + e[short_i]))
        details.append({"instance": i, "aspect": float(L.max() / L.min()), "min_margin": marg, "passed": marg > 0})
    return _verdict("prop_2_4", details, kernel, cfg, seed)


_SCENARIOS = {
    "thm_1_2": _thm_1_2,
    "thm_1_3": _thm_1_3,
    "cor_1_4": _cor_1_4,
    "thm_1_5": _thm_1_5,
    "thm_1_6": _thm_1_6,
    "thm_1_7": _thm_1_7,
    "thm_1_8": _thm_1_8,
    "thm_1_9": _thm_1_9,
    "prop_2_1": _prop_2_1,
    "prop_2_2": _prop_2_2,
    "rem_2_side_avg": _rem_side_avg,
    "prop_2_4": _prop_2_4,
    "prop_6_1": lambda *a: _prop_6("prop_6_1", *a),
    "prop_6_2": lambda *a: _prop_6("prop_6_2", *a),
}


def verify_theorem(
    name: str,
    kernel: Optional[Kernel] = None,
    cfg: Optional[QuadratureConfig] = None,
    seed: int = 0,
    n_random: int = 10,
    grid_n: int = 17,
) -> Verdict:
    """Run the canned plus ``n_random`` seeded instances for one statement."""
    key = name.lower().replace(".", "_")
    if key not in _SCENARIOS:
        raise UnknownTheorem(f"unknown theorem id {name!r}; valid ids: {', '.join(THEOREMS)}")
    kernel = kernel or RieszPower(1.0)
    cfg = cfg or QuadratureConfig()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ToleranceNotReached)
        return _SCENARIOS[key](kernel, cfg, seed, n_random, grid_n)


def verify_all(kernel=None, cfg=None, seed: int = 0, n_random: int = 10, grid_n: int = 17) -> list:
    return [verify_theorem(t, kernel, cfg, seed, n_random, grid_n) for t in THEOREMS]


# ---------------------------------------------------------------- maximality


def _near_regular(P: Polygon, tol: float = 1e-3) -> bool:
    L = P.side_lengths()
    ang = P.interior_angles()
    reg = math.pi * (len(P) - 2) / len(P)
    return float(np.ptp(L)) < tol and float(np.max(np.abs(ang - reg))) < tol


def maximality_check(
    shape_class: str, kernel: Optional[Kernel] = None, trials: int = 50, seed: int = 0, cfg: Optional[QuadratureConfig] = None
) -> Verdict:
    """Random area-1 triangles or quadrilaterals all have D below the regular shape's value."""
    if trials < 10:
        raise ValueError("maximality_check needs at least 10 trials")
    kernel = kernel or RieszPower(1.0)
    cfg = cfg or QuadratureConfig()
    n = {"triangles": 3, "quadrilaterals": 4}.get(shape_class)
    if n is None:
        raise ValueError("shape class must be 'triangles' or 'quadrilaterals'")
    rng = _rng(seed, "maximality_" + shape_class)
    reg = energy(regular_polygon(n), kernel, cfg)
    details = []
    excluded = 0
    for i in range(trials):
        P = random_triangle(rng, 0.05) if n == 3 else _random_quad(rng)
        if _near_regular(P):
            excluded += 1
            continue
        e = energy(P, kernel, cfg)
        marg = reg.value - e.value - STRICT_FACTOR * (reg.error_estimate + e.error_estimate)
        details.append({"instance": i, "D": e.value, "min_margin": marg, "passed": bool(marg > 0)})
    v = _verdict(f"maximality_{shape_class}", details, kernel, cfg, seed, regular_D=reg.value, excluded=excluded)
    return v


def _random_quad(rng) -> Polygon:
    while True:
        v = rng.uniform(-1.0, 1.0, (4, 2))
        try:
            P = _unit_area(v)
        except ValueError:
            continue
        if _min_angle(P) > 0.05:
            return P


# ------------------------------------------------------------------ pipeline


def run_pipeline_check(
    quad: Polygon,
    kernel: Optional[Kernel] = None,
    cfg: Optional[QuadratureConfig] = None,
    grid_n: int = 9,
    derivative: bool = False,
):
    """Sweep every pipeline stage; D must increase end to end and finish at the square's value.

    Returns (verdict, stages, sweeps).
    """
    kernel = kernel or RieszPower(1.0)
    cfg = cfg or QuadratureConfig()
    stages = fl.compose_pipeline(quad)
    sweeps = []
    details = []
    allD, allE = [], []
    for k, st in enumerate(stages):
        res = sweep(st.flow, st.base, kernel, default_grid(st.t_start, st.t_end, grid_n), cfg, derivative)
        sweeps.append(res)
        D, E = list(res.D), list(res.D_err)
        if allD:
            D, E = D[1:], E[1:]
        allD += D
        allE += E
        details.append(
            {
                "stage": k,
                "name": st.name,
                "family": st.flow.family,
                "t_end": st.t_end,
                "verdict": res.verdict,
                "min_margin": res.min_margin,
                "passed": res.verdict == "StrictlyIncreasing" and (res.derivative_ok or not derivative),
            }
        )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ToleranceNotReached)
        sq = energy(fl.domain_at(fl.rectangle_stretch(), _square_like(quad), 0.0), kernel, cfg)
        start = energy(quad, kernel, cfg)
    if not stages:
        allD, allE = [start.value], [start.error_estimate]
    end_gap = abs(allD[-1] - sq.value)
    end_ok = end_gap <= allE[-1] + sq.error_estimate + 1e-12 * abs(sq.value)
    mono = classify(allD, allE) if len(allD) > 1 else ("StrictlyIncreasing", math.inf)
    details.append({"check": "end-to-end", "verdict": mono[0], "min_margin": mono[1],
                    "passed": mono[0] == "StrictlyIncreasing" or len(allD) == 1})
    details.append({"check": "terminal square", "gap": end_gap, "passed": bool(end_ok)})
    v = _verdict("pipeline", details, kernel, cfg, 0, stages=len(stages), square_D=sq.value, start_D=start.value)
    return v, stages, sweeps


def _square_like(P: Polygon) -> Polygon:
    s = math.sqrt(P.area)
    return validate([(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)])
