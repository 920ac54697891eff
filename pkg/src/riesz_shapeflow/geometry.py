"""Simple planar polygons, triangulations and (piecewise) affine maps."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "TooFewVertices",
    "DegenerateArea",
    "SelfIntersecting",
    "TriangulationFailed",
    "ApexOutside",
    "ImageDegenerate",
    "Polygon",
    "Triangle",
    "AffineMap",
    "PiecewiseAffineMap",
    "validate",
    "signed_area",
    "area",
    "contains",
    "triangulate",
    "triangulate_with_star",
    "apply_map",
    "rigid_motion",
    "polygon_from_json",
]

COLLINEAR_TOL = 1e-14


class GeometryError(ValueError):
    pass


class TooFewVertices(GeometryError):
    pass


class DegenerateArea(GeometryError):
    pass


class SelfIntersecting(GeometryError):
    pass


class TriangulationFailed(GeometryError):
    pass


class ApexOutside(GeometryError):
    pass


class ImageDegenerate(GeometryError):
    pass


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_area(pts) -> float:
    """Shoelace signed area, positive for counterclockwise vertex order."""
    p = np.asarray(pts, dtype=float)
    q = np.roll(p, -1, axis=0)
    return 0.5 * math.fsum(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0])


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Polygon:
    """A validated simple polygon with counterclockwise vertices, shape (n, 2)."""

    vertices: np.ndarray

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def edges(self):
        """Edge start and end points, each of shape (n, 2)."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def side_lengths(self) -> np.ndarray:
        p, q = self.edges()
        return np.hypot(*(q - p).T)

    def outward_normals(self) -> np.ndarray:
        p, q = self.edges()
        t = q - p
        n = np.stack([t[:, 1], -t[:, 0]], axis=1)
        return n / np.hypot(*n.T)[:, None]

    def interior_angles(self) -> np.ndarray:
        v = self.vertices
        a = np.roll(v, 1, axis=0) - v
        b = np.roll(v, -1, axis=0) - v
        ang = np.arctan2(_cross(b, a), np.einsum("ij,ij->i", a, b))
        return np.mod(ang, 2 * np.pi)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.hypot(*(v[:, None, :] - v[None, :, :]).transpose(2, 0, 1))))

    def is_convex(self) -> bool:
        v = self.vertices
        a = np.roll(v, -1, axis=0) - v
        b = np.roll(v, -2, axis=0) - np.roll(v, -1, axis=0)
        return bool(np.all(_cross(a, b) > 0))

    def centroid(self) -> np.ndarray:
        p, q = self.edges()
        c = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
        return np.array([np.sum((p[:, 0] + q[:, 0]) * c), np.sum((p[:, 1] + q[:, 1]) * c)]) / (
            6.0 * self.area
        )

    def to_json(self) -> dict:
        return {"vertices": [[float(x), float(y)] for x, y in self.vertices]}

    def __repr__(self):
        pts = ", ".join(f"({x:.6g}, {y:.6g})" for x, y in self.vertices)
        return f"Polygon([{pts}])"


@dataclass(frozen=True, eq=False)
class Triangle:
    vertices: np.ndarray

    @classmethod
    def of(cls, a, b, c) -> "Triangle":
        return cls(_readonly([a, b, c]))

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(max(np.hypot(*(v[1] - v[0])), np.hypot(*(v[2] - v[1])), np.hypot(*(v[0] - v[2]))))

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def edges(self):
        return self.vertices, np.roll(self.vertices, -1, axis=0)


def _segments_intersect(p1, p2, q1, q2, tol) -> bool:
    """Closed-segment intersection test with a length tolerance."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) - tol <= c[0] <= max(a[0], b[0]) + tol
            and min(a[1], b[1]) - tol <= c[1] <= max(a[1], b[1]) + tol
        )

    scale = tol * max(np.hypot(*(p2 - p1)), np.hypot(*(q2 - q1)), 1e-300)
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > scale and d2 < -scale) or (d1 < -scale and d2 > scale)) and (
        (d3 > scale and d4 < -scale) or (d3 < -scale and d4 > scale)
    ):
        return True
    if abs(d1) <= scale and on_seg(q1, q2, p1):
        return True
    if abs(d2) <= scale and on_seg(q1, q2, p2):
        return True
    if abs(d3) <= scale and on_seg(p1, p2, q1):
        return True
    if abs(d4) <= scale and on_seg(p1, p2, q2):
        return True
    return False


def validate(points: Sequence) -> Polygon:
    """Check a raw vertex list and return a counterclockwise :class:`Polygon`.

    Raises TooFewVertices, DegenerateArea (repeated vertices, collinear
    consecutive vertices, zero area) or SelfIntersecting.
    """
    try:
        v = np.array(points, dtype=float)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"vertices must be a list of [x, y] pairs: {exc}") from None
    if v.ndim != 2 or v.shape[1] != 2:
        raise GeometryError("vertices must be a list of [x, y] pairs")
    n = len(v)
    if n < 3:
        raise TooFewVertices(f"a polygon needs at least 3 vertices, got {n}")
    if not np.all(np.isfinite(v)):
        raise GeometryError("vertex coordinates must be finite")
    diam = float(np.max(np.hypot(*(v[:, None, :] - v[None, :, :]).transpose(2, 0, 1))))
    if diam == 0:
        raise DegenerateArea("all vertices coincide")
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(v[i] - v[j])) <= 1e-14 * diam:
                raise DegenerateArea(f"repeated vertex {i} and {j}")
    a = np.roll(v, 1, axis=0)
    b = np.roll(v, -1, axis=0)
    tri = 0.5 * np.abs(_cross(v - a, b - v))
    if np.any(tri < COLLINEAR_TOL * diam * diam):
        i = int(np.argmin(tri))
        raise DegenerateArea(f"vertices around index {i} are collinear")
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n], 1e-12):
                raise SelfIntersecting(f"edges {i} and {j} intersect")
    s = signed_area(v)
    if abs(s) < COLLINEAR_TOL * diam * diam:
        raise DegenerateArea("polygon has zero area")
    if s < 0:
        v = np.concatenate([v[:1], v[:0:-1]])
    return Polygon(_readonly(v))


def area(polygon: Polygon) -> float:
    return polygon.area


def contains(polygon: Polygon, point, tol: float = 1e-12) -> bool:
    """True if ``point`` lies in the closed polygon (boundary within ``tol * diameter``)."""
    x = np.asarray(point, dtype=float)
    p, q = polygon.edges()
    scale = tol * polygon.diameter
    t = q - p
    s = np.clip(np.einsum("ij,ij->i", x - p, t) / np.einsum("ij,ij->i", t, t), 0.0, 1.0)
    dist = np.hypot(*(p + s[:, None] * t - x).T)
    if np.min(dist) <= scale:
        return True
    ang = np.arctan2(_cross(p - x, q - x), np.einsum("ij,ij->i", p - x, q - x))
    return abs(np.sum(ang)) > np.pi


def _point_in_triangle(pt, a, b, c, strict=True) -> bool:
    d1 = _cross(b - a, pt - a)
    d2 = _cross(c - b, pt - b)
    d3 = _cross(a - c, pt - c)
    if strict:
        return d1 > 0 and d2 > 0 and d3 > 0
    return d1 >= 0 and d2 >= 0 and d3 >= 0


def triangulate(polygon: Polygon) -> list[Triangle]:
    """Fan triangulation for convex polygons, ear clipping otherwise."""
    v = polygon.vertices
    n = len(v)
    if polygon.is_convex():
        return [Triangle.of(v[0], v[i], v[i + 1]) for i in range(1, n - 1)]
    idx = list(range(n))
    out = []
    guard = 0
    while len(idx) > 3:
        m = len(idx)
        for k in range(m):
            i0, i1, i2 = idx[(k - 1) % m], idx[k], idx[(k + 1) % m]
            a, b, c = v[i0], v[i1], v[i2]
            if _cross(b - a, c - b) <= 0:
                continue
            others = (j for j in idx if j not in (i0, i1, i2))
            if any(_point_in_triangle(v[j], a, b, c, strict=False) for j in others):
                continue
            out.append(Triangle.of(a, b, c))
            del idx[k]
            break
        else:
            raise TriangulationFailed("no ear found; polygon validation is inconsistent")
        guard += 1
        if guard > n:
            raise TriangulationFailed("ear clipping did not terminate")
    out.append(Triangle.of(*v[idx]))
    total = math.fsum(t.area for t in out)
    if abs(total - polygon.area) > 1e-12 * polygon.area or any(t.area <= 0 for t in out):
        raise TriangulationFailed("triangle areas do not partition the polygon")
    return out


def triangulate_with_star(polygon: Polygon, apex) -> list[Triangle]:
    """Triangulate so that ``apex`` is a vertex of every triangle touching it.

    If every vertex is visible from the apex the result is the star (fan)
    from the apex, with edges through the apex skipped. Otherwise the ordinary
    triangulation is used and each triangle containing the apex is split at it.
    """
    x = np.asarray(apex, dtype=float)
    if not contains(polygon, x):
        raise ApexOutside(f"apex {tuple(x)} is outside the polygon")
    p, q = polygon.edges()
    scale = polygon.diameter
    tri_area = 0.5 * _cross(p - x, q - x)
    flat = np.abs(tri_area) <= 1e-13 * scale * scale
    if np.all(tri_area[~flat] > 0):
        return [Triangle.of(x, p[i], q[i]) for i in range(len(p)) if not flat[i]]
    out = []
    for t in triangulate(polygon):
        a, b, c = t.vertices
        if min(np.hypot(*(a - x)), np.hypot(*(b - x)), np.hypot(*(c - x))) <= 1e-13 * scale:
            out.append(t)
            continue
        if not _point_in_triangle(x, a, b, c, strict=False):
            out.append(t)
            continue
        for u, w in ((a, b), (b, c), (c, a)):
            if 0.5 * _cross(u - x, w - x) > 1e-13 * scale * scale:
                out.append(Triangle.of(x, u, w))
    return out


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> linear @ x + shift."""

    linear: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        lin = _readonly(self.linear)
        if lin.shape != (2, 2):
            raise GeometryError("linear part must be 2x2")
        if abs(np.linalg.det(lin)) == 0:
            raise GeometryError("affine map must be invertible")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "shift", _readonly(np.reshape(self.shift, 2)))

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(np.eye(2), np.zeros(2))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.linear.T + self.shift

    def apply_vector(self, vecs):
        return np.asarray(vecs, dtype=float) @ self.linear.T

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self o inner."""
        return AffineMap(self.linear @ inner.linear, self.linear @ inner.shift + self.shift)

    def inverse(self) -> "AffineMap":
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.shift)


@dataclass(frozen=True, eq=False)
class PiecewiseAffineMap:
    """Two affine pieces split by the line ``normal . x = offset``.

    ``upper`` acts on the closed half-plane ``normal . x >= offset``, ``lower``
    on the rest. The pieces must agree on the dividing line.
    """

    normal: np.ndarray
    offset: float
    upper: AffineMap
    lower: AffineMap

    def side(self, pts):
        return np.asarray(pts, dtype=float) @ np.asarray(self.normal, dtype=float) - self.offset

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        s = self.side(pts)
        up = self.upper(pts)
        lo = self.lower(pts)
        return np.where((s >= 0)[..., None], up, lo)


def rigid_motion(angle: float, shift=(0.0, 0.0)) -> AffineMap:
    c, s = math.cos(angle), math.sin(angle)
    return AffineMap(np.array([[c, -s], [s, c]]), np.asarray(shift, dtype=float))


def apply_map(mapping, polygon: Polygon) -> Polygon:
    """Image of ``polygon`` under an affine or piecewise affine map, revalidated.

    For piecewise maps every vertex within 1e-12 * diameter of the dividing
    line is mapped by both pieces, which must agree to 1e-12 * diameter, and
    no edge may cross the line away from a vertex.
    """
    v = polygon.vertices
    if isinstance(mapping, PiecewiseAffineMap):
        tol = 1e-12 * polygon.diameter
        s = mapping.side(v) / np.hypot(*np.asarray(mapping.normal, dtype=float))
        on = np.abs(s) <= tol
        up = mapping.upper(v)
        lo = mapping.lower(v)
        if np.any(on) and np.max(np.hypot(*(up[on] - lo[on]).T)) > tol:
            raise ImageDegenerate("piecewise map is discontinuous on the dividing line")
        sgn = np.where(on, 0, np.sign(s))
        if np.any(sgn * np.roll(sgn, -1) < 0):
            raise ImageDegenerate("dividing line must pass through polygon vertices only")
        image = np.where((sgn >= 0)[:, None], up, lo)
        image[on] = up[on]
    else:
        image = mapping(v)
    try:
        return validate(image)
    except GeometryError as exc:
        raise ImageDegenerate(f"image polygon is invalid: {exc}") from None


def polygon_from_json(obj) -> Polygon:
    """Build a polygon from ``{"vertices": [[x, y], ...]}`` (dict or JSON text)."""
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "vertices" not in obj:
        raise GeometryError('polygon JSON must be an object with a "vertices" field')
    return validate(obj["vertices"])
