"""Area-preserving deformation families, their generating fields, and the
multi-stage pipelines that carry a triangle or quadrilateral to the regular
shape.

Every family is written in a canonical pose (see each constructor). A flow
bound to a particular polygon carries a rigid ``frame`` mapping canonical
coordinates to the caller's coordinates, so users may pass polygons in any
position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize

from .geometry import (
    AffineMap,
    GeometryError,
    PiecewiseAffineMap,
    Polygon,
    apply_map,
    validate,
)

__all__ = [
    "FlowError",
    "FlowTimeOutOfRange",
    "PremiseViolated",
    "NoCriticalTime",
    "NotSimpleQuadrilateral",
    "NoInteriorDiagonal",
    "FAMILIES",
    "FlowSpec",
    "Stage",
    "height_stretch",
    "height_compress",
    "leg_stretch",
    "vertex_shear",
    "rhombus_diagonal",
    "rectangle_stretch",
    "flow_from_json",
    "bind",
    "shear_for_triangle",
    "shear_for_quad",
    "map_at",
    "domain_at",
    "field_at",
    "critical_time",
    "compose_pipeline",
    "triangle_pipeline",
    "is_square",
    "is_equilateral",
]

FAMILIES = (
    "height_stretch",
    "height_compress",
    "leg_stretch",
    "vertex_shear",
    "rhombus_diagonal",
    "rectangle_stretch",
)

# relative tolerance for "equal side lengths" decisions
TIE_TOL = 1e-12
SHAPE_TOL = 1e-9


class FlowError(ValueError):
    pass


class FlowTimeOutOfRange(FlowError):
    pass


class PremiseViolated(FlowError):
    pass


class NoCriticalTime(FlowError):
    pass


class NotSimpleQuadrilateral(FlowError):
    pass


class NoInteriorDiagonal(FlowError):
    pass


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """A deformation family with its admissible time range.

    ``angle`` is the apex angle for ``leg_stretch``; ``upper_rate`` and
    ``lower_rate`` are the shear slopes for ``vertex_shear`` (velocity
    ``(rate * x2, 0)`` on each side of the x-axis). ``frame`` maps the
    canonical pose to user coordinates; ``labels`` records which base
    vertices play the named roles (A, B, C, ...) in the canonical pose.
    """

    family: str
    t_min: float
    t_max: float
    open_min: bool = False
    open_max: bool = False
    angle: float = math.nan
    upper_rate: float = 0.0
    lower_rate: float = 0.0
    frame: Optional[AffineMap] = None
    labels: Optional[tuple] = None
    premise: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise FlowError(f"unknown flow family {self.family!r}; expected one of {', '.join(FAMILIES)}")

    @property
    def is_shear(self) -> bool:
        return self.family == "vertex_shear"

    @property
    def bound(self) -> bool:
        return self.frame is not None

    def check_time(self, t: float) -> None:
        lo_bad = t < self.t_min or (self.open_min and t == self.t_min)
        hi_bad = t > self.t_max or (self.open_max and t == self.t_max)
        if lo_bad or hi_bad or not math.isfinite(t):
            lb = "(" if self.open_min else "["
            rb = ")" if self.open_max else "]"
            raise FlowTimeOutOfRange(f"t = {t} outside {self.family} range {lb}{self.t_min}, {self.t_max}{rb}")

    # -- canonical map and field
    def canonical_map(self, t: float):
        f = self.family
        if f in ("height_stretch", "rhombus_diagonal", "rectangle_stretch"):
            s = math.sqrt(1.0 + t)
            return AffineMap(np.diag([1.0 / s, s]), np.zeros(2))
        if f == "height_compress":
            s = math.sqrt(1.0 - t)
            return AffineMap(np.diag([1.0 / s, s]), np.zeros(2))
        if f == "leg_stretch":
            c = 1.0 / math.tan(self.angle)
            return AffineMap(np.array([[1.0 + t, -t * c], [0.0, 1.0]]) / math.sqrt(1.0 + t), np.zeros(2))
        up = AffineMap(np.array([[1.0, self.upper_rate * t], [0.0, 1.0]]), np.zeros(2))
        lo = AffineMap(np.array([[1.0, self.lower_rate * t], [0.0, 1.0]]), np.zeros(2))
        return PiecewiseAffineMap(np.array([0.0, 1.0]), 0.0, up, lo)

    def canonical_field(self, t: float, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = p[:, 0], p[:, 1]
        f = self.family
        if f in ("height_stretch", "rhombus_diagonal", "rectangle_stretch"):
            return np.stack([-x, y], axis=1) / (2.0 * (1.0 + t))
        if f == "height_compress":
            return np.stack([x, -y], axis=1) / (2.0 * (1.0 - t))
        if f == "leg_stretch":
            c = 1.0 / math.tan(self.angle)
            return np.stack([x - 2.0 * c * y, -y], axis=1) / (2.0 * (1.0 + t))
        rate = np.where(y >= 0, self.upper_rate, self.lower_rate)
        return np.stack([rate * y, np.zeros_like(y)], axis=1)

    def to_json(self) -> dict:
        out = {"family": self.family, "t_min": _num(self.t_min), "t_max": _num(self.t_max)}
        if self.family == "leg_stretch":
            out["angle"] = self.angle
        if self.is_shear:
            out["upper_rate"] = self.upper_rate
            out["lower_rate"] = self.lower_rate
        if self.frame is not None:
            out["frame"] = {
                "linear": self.frame.linear.tolist(),
                "shift": self.frame.shift.tolist(),
            }
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def height_stretch() -> FlowSpec:
    """(x, y) -> (x / sqrt(1+t), sqrt(1+t) y); base triangle with its strictly
    longest side AB on the x-axis and C on the positive y-axis."""
    return FlowSpec("height_stretch", -1.0, math.inf, open_min=True)


def height_compress() -> FlowSpec:
    """(x, y) -> (x / sqrt(1-t), sqrt(1-t) y); base non-obtuse triangle with its
    strictly shortest side on the x-axis, or a rhombus with its longer diagonal
    vertical."""
    return FlowSpec("height_compress", -math.inf, 1.0, open_max=True)


def leg_stretch(angle: float = math.nan) -> FlowSpec:
    """Stretch one leg of an isosceles triangle with apex angle ``angle`` at the origin."""
    return FlowSpec("leg_stretch", 0.0, math.inf, angle=angle)


def vertex_shear(upper_rate: float = 0.0, lower_rate: float = 0.0) -> FlowSpec:
    """Horizontal shear with velocity (rate * x2, 0), rate chosen by the sign of x2."""
    return FlowSpec("vertex_shear", -math.inf, 1.0, upper_rate=upper_rate, lower_rate=lower_rate)


def rhombus_diagonal() -> FlowSpec:
    """Stretch the vertical (longer) diagonal of a centred rhombus at fixed area."""
    return FlowSpec("rhombus_diagonal", 0.0, math.inf)


def rectangle_stretch() -> FlowSpec:
    """Stretch the vertical (longer) side of a centred rectangle at fixed area."""
    return FlowSpec("rectangle_stretch", 0.0, math.inf)


_CONSTRUCTORS = {
    "height_stretch": height_stretch,
    "height_compress": height_compress,
    "leg_stretch": leg_stretch,
    "vertex_shear": vertex_shear,
    "rhombus_diagonal": rhombus_diagonal,
    "rectangle_stretch": rectangle_stretch,
}


def flow_from_json(obj: dict) -> FlowSpec:
    fam = obj.get("family")
    if fam not in _CONSTRUCTORS:
        raise FlowError(f"unknown flow family {fam!r}; expected one of {', '.join(FAMILIES)}")
    flow = _CONSTRUCTORS[fam]()
    if fam == "leg_stretch" and "angle" in obj:
        flow = replace(flow, angle=float(obj["angle"]))
    if fam == "vertex_shear":
        flow = replace(
            flow, upper_rate=float(obj.get("upper_rate", 0.0)), lower_rate=float(obj.get("lower_rate", 0.0))
        )
    if "frame" in obj:
        fr = obj["frame"]
        flow = replace(flow, frame=AffineMap(np.array(fr["linear"]), np.array(fr["shift"])))
    if "labels" in obj:
        flow = replace(flow, labels=tuple(obj["labels"]))
    return flow


# ------------------------------------------------------------------ binding


def _frame(origin, xdir) -> AffineMap:
    """Rigid map sending the canonical origin and x-axis to ``origin`` and ``xdir``."""
    d = np.asarray(xdir, dtype=float)
    d = d / math.hypot(*d)
    rot = np.array([[d[0], -d[1]], [d[1], d[0]]])
    return AffineMap(rot, np.asarray(origin, dtype=float))


def _lengths(v):
    return np.hypot(*(np.roll(v, -1, axis=0) - v).T)


def _tri_sides(v):
    """Opposite-side lengths: s[i] = length of the side not touching vertex i."""
    return np.array([math.hypot(*(v[(i + 2) % 3] - v[(i + 1) % 3])) for i in range(3)])


def _strict(a: float, b: float) -> bool:
    return a > b * (1.0 + TIE_TOL)


def _foot(a, b, c):
    t = b - a
    return a + np.dot(c - a, t) / np.dot(t, t) * t


def _bind_height_triangle(flow: FlowSpec, base: Polygon) -> FlowSpec:
    v = base.vertices
    s = _tri_sides(v)
    if flow.family == "height_stretch":
        ic = int(np.argmax(s))
        rest = [i for i in range(3) if i != ic]
        if not all(_strict(s[ic], s[j]) for j in rest):
            raise PremiseViolated("|AB| must be strictly longest")
        # |BC| >= |AC|: A is the vertex whose opposite side is longer
        ia, ib = rest if s[rest[0]] >= s[rest[1]] else rest[::-1]
        premise = "|AB| > |BC| >= |AC|"
    else:
        if np.max(_angles(v)) > math.pi / 2 + 1e-12:
            raise PremiseViolated("non-obtuse triangle required")
        ic = int(np.argmin(s))
        rest = [i for i in range(3) if i != ic]
        if not all(_strict(s[j], s[ic]) for j in rest):
            raise PremiseViolated("|AB| must be strictly shortest")
        # |BC| <= |AC|: A is the vertex whose opposite side is shorter
        ia, ib = rest if s[rest[0]] <= s[rest[1]] else rest[::-1]
        premise = "non-obtuse, |AB| < |BC| <= |AC|"
    A, B, C = v[ia], v[ib], v[ic]
    O = _foot(A, B, C)
    # the height maps are symmetric in x, so only "C above the base" matters
    fr = _frame(O, B - A)
    if fr.inverse()(C)[1] < 0:
        fr = _frame(O, A - B)
    return replace(flow, frame=fr, labels=(ia, ib, ic), premise=premise)


def _angles(v):
    n = len(v)
    out = []
    for i in range(n):
        a = v[i - 1] - v[i]
        b = v[(i + 1) % n] - v[i]
        out.append(math.atan2(abs(a[0] * b[1] - a[1] * b[0]), float(np.dot(a, b))))
    return np.array(out)


def _is_rhombus(v) -> bool:
    L = _lengths(v)
    return len(v) == 4 and np.ptp(L) <= SHAPE_TOL * np.max(L)


def _is_rectangle(v) -> bool:
    return len(v) == 4 and np.max(np.abs(_angles(v) - math.pi / 2)) <= SHAPE_TOL


def is_square(polygon: Polygon, tol: float = 1e-8) -> bool:
    v = polygon.vertices
    L = _lengths(v)
    return len(v) == 4 and np.ptp(L) <= tol * np.max(L) and np.max(np.abs(_angles(v) - math.pi / 2)) <= tol


def is_equilateral(polygon: Polygon, tol: float = 1e-8) -> bool:
    v = polygon.vertices
    L = _lengths(v)
    return len(v) == 3 and np.ptp(L) <= tol * np.max(L)


def _bind_rhombus(flow: FlowSpec, base: Polygon) -> FlowSpec:
    v = base.vertices
    if not _is_rhombus(v):
        raise PremiseViolated("base must be a rhombus")
    d02 = math.hypot(*(v[2] - v[0]))
    d13 = math.hypot(*(v[3] - v[1]))
    centre = 0.5 * (v[0] + v[2])
    # longer diagonal vertical: the x-axis follows the shorter one
    if d13 > d02 or math.isclose(d13, d02, rel_tol=TIE_TOL):
        fr = _frame(centre, v[2] - v[0])
        labels = (0, 1, 2, 3)
    else:
        fr = _frame(centre, v[3] - v[1])
        labels = (1, 2, 3, 0)
    return replace(flow, frame=fr, labels=labels, premise="rhombus")


def _bind_rectangle(flow: FlowSpec, base: Polygon) -> FlowSpec:
    v = base.vertices
    if not _is_rectangle(v):
        raise PremiseViolated("base must be a rectangle")
    L = _lengths(v)
    centre = v.mean(axis=0)
    # longer side vertical: x-axis along the shorter side
    i = 0 if L[0] <= L[1] * (1 + TIE_TOL) else 1
    fr = _frame(centre, v[i + 1] - v[i])
    return replace(flow, frame=fr, labels=tuple((i + k) % 4 for k in range(4)), premise="rectangle")


def _bind_leg(flow: FlowSpec, base: Polygon) -> FlowSpec:
    v = base.vertices
    if len(v) != 3:
        raise PremiseViolated("leg_stretch needs an isosceles triangle")
    for ia in range(3):
        ib, ic = (ia + 1) % 3, (ia + 2) % 3
        lb = math.hypot(*(v[ib] - v[ia]))
        lc = math.hypot(*(v[ic] - v[ia]))
        if math.isclose(lb, lc, rel_tol=SHAPE_TOL):
            ang = _angles(v)[ia]
            fr = _frame(v[ia], v[ib] - v[ia])
            return replace(flow, frame=fr, labels=(ia, ib, ic), angle=float(ang), premise="|AB| = |AC|")
    raise PremiseViolated("leg_stretch needs an isosceles triangle (|AB| = |AC|)")


def shear_for_triangle(tri: Polygon, base_side: int = 0) -> FlowSpec:
    """Shear moving the apex opposite side ``base_side`` onto the side's perpendicular bisector at t = 1."""
    v = tri.vertices
    if len(v) != 3:
        raise PremiseViolated("vertex shear on triangles needs 3 vertices")
    ib, ic = base_side % 3, (base_side + 1) % 3
    ia = (base_side + 2) % 3
    # canonical: base from C=(-a,0) to B=(a,0), apex above
    fr = _frame(0.5 * (v[ib] + v[ic]), v[ic] - v[ib])
    A = fr.inverse()(v[ia])
    return replace(vertex_shear(-A[0] / A[1], 0.0), frame=fr, labels=(ia, ic, ib), premise="apex above base")


def shear_for_quad(quad: Polygon, diagonal: tuple, move: str = "both") -> FlowSpec:
    """Shear of a quadrilateral about one diagonal.

    The diagonal is centred on the canonical x-axis; ``move`` selects which
    off-diagonal vertex travels to the perpendicular bisector ("both",
    "upper" or "lower"). The others stay fixed.
    """
    v = quad.vertices
    i, j = diagonal
    fr = _frame(0.5 * (v[i] + v[j]), v[j] - v[i])
    inv = fr.inverse()
    others = [k for k in range(4) if k not in (i, j)]
    pts = {k: inv(v[k]) for k in others}
    up = [k for k in others if pts[k][1] > 0]
    lo = [k for k in others if pts[k][1] < 0]
    if len(up) != 1 or len(lo) != 1:
        raise NoInteriorDiagonal(f"vertices {others} are not on opposite sides of diagonal {diagonal}")
    U, W = pts[up[0]], pts[lo[0]]
    ku = -U[0] / U[1] if move in ("both", "upper") else 0.0
    kl = -W[0] / W[1] if move in ("both", "lower") else 0.0
    return replace(vertex_shear(ku, kl), frame=fr, labels=(i, j, up[0], lo[0]), premise="y_A y_C < 0")


def bind(flow: FlowSpec, base: Polygon) -> FlowSpec:
    """Attach the rigid frame that puts ``base`` in the family's canonical pose.

    Raises PremiseViolated naming the failed hypothesis.
    """
    if flow.bound:
        return flow
    n = len(base)
    fam = flow.family
    if fam == "height_stretch":
        if n != 3:
            raise PremiseViolated("height_stretch needs a triangle")
        return _bind_height_triangle(flow, base)
    if fam == "height_compress":
        if n == 3:
            return _bind_height_triangle(flow, base)
        return _bind_rhombus(flow, base)
    if fam == "leg_stretch":
        return _bind_leg(flow, base)
    if fam == "rhombus_diagonal":
        return _bind_rhombus(flow, base)
    if fam == "rectangle_stretch":
        return _bind_rectangle(flow, base)
    # vertex shear: triangles use the longest side as base, quads their shorter interior diagonal
    if n == 3:
        return shear_for_triangle(base, int(np.argmax(_lengths(base.vertices))))
    if n == 4:
        return shear_for_quad(base, _choose_diagonal(base))
    raise PremiseViolated("vertex_shear needs a triangle or quadrilateral")


# ------------------------------------------------------------- maps, domains


def map_at(flow: FlowSpec, t: float, check: bool = True):
    """F_t in user coordinates (frame o canonical F_t o frame^-1)."""
    if check:
        flow.check_time(t)
    m = flow.canonical_map(t)
    fr = flow.frame
    if fr is None:
        return m
    inv = fr.inverse()
    if isinstance(m, PiecewiseAffineMap):
        normal = fr.apply_vector(m.normal)
        offset = float(np.dot(normal, fr.shift)) + m.offset
        return PiecewiseAffineMap(normal, offset, fr.compose(m.upper).compose(inv), fr.compose(m.lower).compose(inv))
    return fr.compose(m).compose(inv)


def domain_at(flow: FlowSpec, base: Polygon, t: float, check: bool = True) -> Polygon:
    """Omega_t = F_t(base); the flow is bound to ``base`` first if needed."""
    flow = bind(flow, base)
    try:
        return apply_map(map_at(flow, t, check), base)
    except GeometryError as exc:
        raise FlowError(f"{flow.family} image at t = {t} is degenerate: {exc}") from None


def field_at(flow: FlowSpec, t: float, x) -> np.ndarray:
    """eta(t, x) in user coordinates; returns shape (2,) for one point, (m, 2) for many."""
    flow.check_time(t)
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    p = np.atleast_2d(pts)
    fr = flow.frame
    if fr is not None:
        v = fr.apply_vector(flow.canonical_field(t, fr.inverse()(p)))
    else:
        v = flow.canonical_field(t, p)
    return v[0] if single else v


# ----------------------------------------------------------- critical times


def _dist(v, i, j):
    return math.hypot(*(v[i] - v[j]))


def critical_time(flow: FlowSpec, base: Polygon) -> float:
    """Time at which the flow reaches its terminal shape.

    height_stretch / height_compress on triangles: the t with |BA| = |BC_t|.
    height_compress on a rhombus: equal diagonals. vertex_shear: 1.
    Other families are unbounded and return +inf.
    """
    fam = flow.family
    if fam == "vertex_shear":
        return 1.0
    if fam in ("leg_stretch", "rhombus_diagonal", "rectangle_stretch"):
        return math.inf
    flow = bind(flow, base)
    if fam == "height_compress" and len(base) == 4:
        v = base.vertices
        i = flow.labels
        q = _dist(v, i[1], i[3]) / _dist(v, i[0], i[2])
        return 1.0 - 1.0 / q
    ia, ib, ic = flow.labels

    def resid(t):
        # raw vertex images; no revalidation, the bracket may touch degenerate times
        w = map_at(flow, t, check=False)(base.vertices)
        return _dist(w, ib, ia) - _dist(w, ib, ic)

    if fam == "height_stretch":
        lo, hi = 0.0, 1.0
        while resid(hi) > 0:
            hi *= 2.0
            if hi > 1e12:
                raise NoCriticalTime("side lengths never equalize")
    else:
        lo, hi = 0.0, 1.0 - 1e-12
        if resid(hi) <= 0:
            raise NoCriticalTime("side lengths never equalize")
    if resid(lo) == 0:
        return 0.0
    t = optimize.brentq(resid, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(t)


# ----------------------------------------------------------------- pipelines


@dataclass(frozen=True, eq=False)
class Stage:
    name: str
    flow: FlowSpec
    base: Polygon
    t_start: float
    t_end: float
    end: Polygon = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "flow": self.flow.to_json(),
            "base": self.base.to_json(),
            "t_start": self.t_start,
            "t_end": self.t_end,
            "end": self.end.to_json() if self.end is not None else None,
        }


def _side_of(v, i, j, k) -> float:
    d = v[j] - v[i]
    return float(d[0] * (v[k][1] - v[i][1]) - d[1] * (v[k][0] - v[i][0]))


def _interior(v, diag) -> bool:
    i, j = diag
    a, b = [k for k in range(4) if k not in diag]
    scale = math.hypot(*(v[j] - v[i])) ** 2
    sa, sb = _side_of(v, i, j, a), _side_of(v, i, j, b)
    return sa * sb < 0 and min(abs(sa), abs(sb)) > 1e-12 * scale


def _choose_diagonal(quad: Polygon) -> tuple:
    v = quad.vertices
    ok = [d for d in ((0, 2), (1, 3)) if _interior(v, d)]
    if not ok:
        raise NoInteriorDiagonal("no diagonal separates the other two vertices")
    if len(ok) == 1:
        return ok[0]
    l0 = _dist(v, 0, 2)
    l1 = _dist(v, 1, 3)
    return (1, 3) if l1 < l0 * (1 - TIE_TOL) else (0, 2)


def _symmetrize(quad: Polygon, diag: tuple, step: str) -> list:
    """Stages moving both off-diagonal vertices onto the diagonal's perpendicular bisector."""
    v = quad.vertices
    i, j = diag
    half = 0.5 * _dist(v, i, j)
    fr = _frame(0.5 * (v[i] + v[j]), v[j] - v[i])
    inv = fr.inverse()
    others = [k for k in range(4) if k not in diag]
    xs = {k: inv(v[k])[0] for k in others}
    ys = {k: inv(v[k])[1] for k in others}
    up = max(others, key=lambda k: ys[k])
    lo = min(others, key=lambda k: ys[k])
    tol = 1e-10 * half
    xu = xs[up] if abs(xs[up]) > tol else 0.0
    xl = xs[lo] if abs(xs[lo]) > tol else 0.0
    if xu == 0.0 and xl == 0.0:
        return []
    if xu * xl > 0:
        moves = [("both", "two-sided shear")]
    elif xu == 0.0:
        moves = [("lower", "one-sided shear")]
    elif xl == 0.0:
        moves = [("upper", "one-sided shear")]
    else:
        moves = [("upper", "one-sided shear"), ("lower", "one-sided shear")]
    stages = []
    cur = quad
    for move, kind in moves:
        flow = shear_for_quad(cur, diag, move)
        end = domain_at(flow, cur, 1.0)
        stages.append(Stage(f"{step}: {kind} ({move}) about diagonal {diag}", flow, cur, 0.0, 1.0, end))
        cur = end
    return stages


def compose_pipeline(quad: Polygon) -> list:
    """Stages carrying a quadrilateral to the square of the same area.

    1. Symmetrize about a diagonal that separates the other two vertices
       (the shorter one when both do): one two-sided shear when the moving
       vertices lie on the same side of the bisector, two one-sided shears
       (upper vertex first) otherwise. The result is a kite.
    2. The same construction about the other diagonal gives a rhombus.
    3. Compress the longer diagonal until the diagonals are equal.
    Fixed-point stages are skipped, so a square yields an empty list.
    """
    if len(quad) != 4:
        raise NotSimpleQuadrilateral(f"expected 4 vertices, got {len(quad)}")
    try:
        quad = validate(quad.vertices)
    except GeometryError as exc:
        raise NotSimpleQuadrilateral(str(exc)) from None
    if is_square(quad, 1e-12):
        return []
    d1 = _choose_diagonal(quad)
    stages = _symmetrize(quad, d1, "kite")
    cur = stages[-1].end if stages else quad
    d2 = (1, 3) if d1 == (0, 2) else (0, 2)
    if not _interior(cur.vertices, d2):
        raise NoInteriorDiagonal(f"diagonal {d2} of the intermediate kite is not interior")
    more = _symmetrize(cur, d2, "rhombus")
    stages += more
    cur = more[-1].end if more else cur
    if not is_square(cur, 1e-12):
        flow = bind(height_compress(), cur)
        tc = critical_time(flow, cur)
        end = domain_at(flow, cur, tc)
        stages.append(Stage("square: compress the longer diagonal", flow, cur, 0.0, tc, end))
    return stages


def triangle_pipeline(tri: Polygon) -> list:
    """Stages carrying a triangle to the equilateral triangle of the same area.

    A triangle with a strictly longest side is height-stretched until it is
    isosceles; an isosceles triangle then moves along the aperture curve by
    height stretching (aperture above pi/3) or compression (below).
    """
    if len(tri) != 3:
        raise PremiseViolated("triangle pipeline needs 3 vertices")
    stages = []
    cur = tri
    for _ in range(3):
        if is_equilateral(cur, 1e-12):
            break
        s = _tri_sides(cur.vertices)
        k = int(np.argmax(s))
        longest = all(_strict(s[k], s[j]) for j in range(3) if j != k)
        flow = bind(height_stretch() if longest else height_compress(), cur)
        tc = critical_time(flow, cur)
        end = domain_at(flow, cur, tc)
        name = "isosceles: stretch the shortest height" if longest else "equilateral: compress the tallest height"
        if longest and _is_isosceles(cur):
            name = "equilateral: stretch the apex height"
        stages.append(Stage(name, flow, cur, 0.0, tc, end))
        cur = end
    return stages


def _is_isosceles(p: Polygon) -> bool:
    s = np.sort(_tri_sides(p.vertices))
    return math.isclose(s[0], s[1], rel_tol=SHAPE_TOL) or math.isclose(s[1], s[2], rel_tol=SHAPE_TOL)
