"""Energy D(Omega), potential V_Omega, side averages and shape derivatives."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .flows import FlowSpec, bind, domain_at, field_at
from .geometry import Polygon, triangulate, triangulate_with_star
from .kernels import Kernel
from .quadrature import (
    EPS,
    IntegralResult,
    QuadratureConfig,
    ToleranceNotReached,
    _leggauss,
    boundary_pair_integral,
    boundary_potential,
    graded_rule,
    pair_integral,
)

__all__ = [
    "SliceNotInterval",
    "EnergyResult",
    "SideAverage",
    "SideAverageReport",
    "energy",
    "potential",
    "potentials",
    "potential_star",
    "side_averages",
    "side_integrals",
    "shape_derivative",
    "shear_derivative_slice",
    "fd_derivative",
]


class SliceNotInterval(ValueError):
    pass


@dataclass(frozen=True)
class EnergyResult:
    value: float
    error_estimate: float
    pair_count: int
    converged: bool = True

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "error_estimate": float(self.error_estimate),
            "pair_count": int(self.pair_count),
            "converged": bool(self.converged),
        }


def energy(polygon: Polygon, kernel: Kernel, cfg: Optional[QuadratureConfig] = None, method: str = "boundary") -> EnergyResult:
    """D(Omega) = int_Omega int_Omega K(|x - y|) dx dy.

    ``method="boundary"`` integrates over edge pairs of the polygon itself;
    ``method="triangles"`` sums ``pair_integral`` over all ordered pairs of
    a triangulation (diagonal pairs included once). Both agree to rounding.
    """
    cfg = cfg or QuadratureConfig()
    if method == "boundary":
        r = boundary_pair_integral(polygon.vertices, polygon.vertices, kernel, cfg, same=True)
        return EnergyResult(r.value, r.error_estimate, r.cells_evaluated, r.converged)
    if method != "triangles":
        raise ValueError(f"unknown method {method!r}")
    tris = triangulate(polygon)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ToleranceNotReached)
        parts = [pair_integral(a, b, kernel, cfg) for a in tris for b in tris]
    val = math.fsum(p.value for p in parts)
    err = math.fsum(p.error_estimate for p in parts)
    ok = err <= cfg.rel_tol * abs(val) + 1e-15
    if not ok:
        warnings.warn(f"energy: error {err:.3g} above tolerance", ToleranceNotReached, stacklevel=2)
    return EnergyResult(val, err, len(parts), ok)


def potentials(points, polygon: Polygon, kernel: Kernel, cfg: Optional[QuadratureConfig] = None):
    """V_Omega at many points; returns (values, error estimates)."""
    cfg = cfg or QuadratureConfig()
    return boundary_potential(points, polygon, kernel, cfg.gauss_order)


def potential(x, polygon: Polygon, kernel: Kernel, cfg: Optional[QuadratureConfig] = None) -> IntegralResult:
    """V_Omega(x) = int_Omega K(|x - y|) dy, for x inside, on or outside the polygon."""
    cfg = cfg or QuadratureConfig()
    v, e = potentials(np.asarray(x, dtype=float)[None, :], polygon, kernel, cfg)
    ok = bool(e[0] <= cfg.rel_tol * abs(v[0]) + 1e-15)
    if not ok:
        warnings.warn("potential: tolerance not reached", ToleranceNotReached, stacklevel=2)
    return IntegralResult(float(v[0]), float(e[0]), len(polygon), ok)


def potential_star(x, polygon: Polygon, kernel: Kernel, cfg: Optional[QuadratureConfig] = None) -> IntegralResult:
    """V_Omega(x) summed over a star decomposition with x at the triangle apexes.

    An independent route to :func:`potential` for points in the closed polygon.
    """
    cfg = cfg or QuadratureConfig()
    tris = triangulate_with_star(polygon, x)
    vals, errs = [], []
    for T in tris:
        P = Polygon(T.vertices)
        v, e = boundary_potential(np.asarray(x, dtype=float)[None, :], P, kernel, cfg.gauss_order)
        vals.append(float(v[0]))
        errs.append(float(e[0]))
    return IntegralResult(math.fsum(vals), math.fsum(errs), len(tris), True)


# ---------------------------------------------------------------- side integrals


def side_integrals(polygon: Polygon, kernel: Kernel, weight, cfg: Optional[QuadratureConfig] = None, sides=None):
    """int_side V_Omega(x) weight(i, x) ds for each requested side i.

    ``weight(i, pts)`` returns per-node weights (or None to skip the side).
    The rule is graded toward both side ends and never samples a vertex.
    Returns a list of (value, error) pairs, (0, 0) for skipped sides.
    """
    cfg = cfg or QuadratureConfig()
    n = cfg.gauss_order
    p, q = polygon.edges()
    out = []
    for i in range(len(p)) if sides is None else sides:
        L = math.hypot(*(q[i] - p[i]))
        res = []
        for order in (n, n + 4):
            s, w = graded_rule(order)
            pts = p[i] + s[:, None] * (q[i] - p[i])
            g = weight(i, pts)
            if g is None:
                res = None
                break
            v, e = potentials(pts, polygon, kernel, cfg)
            res.append((L * math.fsum(w * v * g), L * float(np.sum(w * np.abs(g) * e))))
        if res is None:
            out.append((0.0, 0.0))
            continue
        (lo, _), (hi, ehi) = res
        out.append((hi, abs(hi - lo) + ehi + 64 * EPS * abs(hi)))
    return out


@dataclass(frozen=True)
class SideAverage:
    index: int
    length: float
    average: float
    error_estimate: float


@dataclass(frozen=True)
class SideAverageReport:
    sides: tuple

    def averages(self) -> np.ndarray:
        return np.array([s.average for s in self.sides])

    def errors(self) -> np.ndarray:
        return np.array([s.error_estimate for s in self.sides])

    def to_json(self) -> dict:
        return {
            "sides": [
                {"index": s.index, "length": s.length, "average": s.average, "error_estimate": s.error_estimate}
                for s in self.sides
            ]
        }


def side_averages(polygon: Polygon, kernel: Kernel, cfg: Optional[QuadratureConfig] = None) -> SideAverageReport:
    """Mean of V_Omega over each side: (1 / |side|) int_side V ds."""
    L = polygon.side_lengths()
    vals = side_integrals(polygon, kernel, lambda i, pts: np.ones(len(pts)), cfg)
    return SideAverageReport(
        tuple(SideAverage(i, float(L[i]), v / L[i], e / L[i]) for i, (v, e) in enumerate(vals))
    )


# ---------------------------------------------------------------- derivatives


def shape_derivative(
    polygon: Polygon, kernel: Kernel, flow: FlowSpec, t: float, cfg: Optional[QuadratureConfig] = None
) -> IntegralResult:
    """dD(Omega_t)/dt = 2 int_{boundary} V_Omega(x) (eta(t, x) . nu) ds.

    ``polygon`` must be Omega_t for a flow already bound to its base (see
    :func:`flows.bind`); an unbound flow is bound to ``polygon`` itself.
    Sides on which eta . nu vanishes at every node are skipped.
    """
    cfg = cfg or QuadratureConfig()
    flow.check_time(t)
    if not flow.bound:
        flow = bind(flow, polygon)
    nu = polygon.outward_normals()
    scale = float(np.max(np.hypot(*field_at(flow, t, polygon.vertices).T))) or 1.0

    def weight(i, pts):
        g = field_at(flow, t, pts) @ nu[i]
        if np.all(np.abs(g) < 1e-14 * scale):
            return None
        return g

    parts = side_integrals(polygon, kernel, weight, cfg)
    val = 2.0 * math.fsum(v for v, _ in parts)
    err = 2.0 * math.fsum(e for _, e in parts)
    return IntegralResult(val, err, len(parts), True)


def fd_derivative(
    flow: FlowSpec, base: Polygon, kernel: Kernel, t: float, h: float = 1e-4, cfg: Optional[QuadratureConfig] = None
):
    """Central difference (D(Omega_{t+h}) - D(Omega_{t-h})) / 2h; returns (value, error bound from D errors)."""
    cfg = cfg or QuadratureConfig()
    flow = bind(flow, base)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ToleranceNotReached)
        ep = energy(domain_at(flow, base, t + h, check=False), kernel, cfg)
        em = energy(domain_at(flow, base, t - h, check=False), kernel, cfg)
    return (ep.value - em.value) / (2 * h), (ep.error_estimate + em.error_estimate) / (2 * h)


def _slices(verts: np.ndarray, y: np.ndarray):
    """Left and right ends of the horizontal slices at heights y."""
    p = verts
    q = np.roll(verts, -1, axis=0)
    py, qy = p[:, 1][None, :], q[:, 1][None, :]
    Y = y[:, None]
    hit = (np.minimum(py, qy) <= Y) & (Y < np.maximum(py, qy))
    with np.errstate(divide="ignore", invalid="ignore"):
        x = p[:, 0][None, :] + (Y - py) * (q[:, 0] - p[:, 0])[None, :] / (qy - py)
    counts = hit.sum(axis=1)
    if np.any(counts != 2):
        raise SliceNotInterval("a horizontal slice of the domain is not a single interval")
    xl = np.where(hit, x, np.inf).min(axis=1)
    xr = np.where(hit, x, -np.inf).max(axis=1)
    return xl, xr


def _one_sided(a: float, b: float, n: int, levels: int, toward: str):
    """Composite Gauss on [a, b] graded geometrically toward one end."""
    s, w = graded_rule(n, levels)
    keep = s < 0.5
    s, w = 2.0 * s[keep], 2.0 * w[keep]
    if toward == "b":
        s = 1.0 - s
    return a + (b - a) * s, (b - a) * w


def shear_derivative_slice(
    polygon: Polygon, kernel: Kernel, flow: FlowSpec, t: float, cfg: Optional[QuadratureConfig] = None
) -> IntegralResult:
    """dD(Omega_t)/dt for a shear flow by the horizontal slice reduction.

    In the canonical frame every horizontal slice of Omega_t is an interval
    that moves with speed c(x2) = rate * x2. Two slices at heights x2, y2
    (gap l) interact through K_l(r) = K(sqrt(l^2 + r^2)), and

        dD/dt = int int (c(x2) - c(y2)) J(x2, y2) dx2 dy2,
        J = L(D + rx + ry) - L(D + rx - ry) - L(D - rx + ry) + L(D - rx - ry),

    with L the antiderivative of K_l, D the distance between slice centres
    and rx, ry the half widths. The integrand is symmetric, so only x2 > y2
    is integrated. ``polygon`` is Omega_t in user coordinates.
    """
    cfg = cfg or QuadratureConfig()
    if not flow.is_shear:
        raise ValueError("slice derivative needs a vertex_shear flow")
    flow.check_time(t)
    if not flow.bound:
        flow = bind(flow, polygon)
    v = flow.frame.inverse()(polygon.vertices)
    ku, kl = flow.upper_rate, flow.lower_rate

    def speed(y):
        return np.where(y >= 0, ku, kl) * y

    def integrand(x2, y2):
        lx, rx_ = _slices(v, x2)
        ly, ry_ = _slices(v, y2)
        rx = 0.5 * (rx_ - lx)
        ry = 0.5 * (ry_ - ly)
        d = 0.5 * (lx + rx_) - 0.5 * (ly + ry_)
        gap = x2 - y2
        Lf = kernel.slice_antiderivative
        J = Lf(gap, d + rx + ry) - Lf(gap, d + rx - ry) - Lf(gap, d - rx + ry) + Lf(gap, d - rx - ry)
        return (speed(x2) - speed(y2)) * J

    ys = v[:, 1]
    lo, hi = float(ys.min()), float(ys.max())
    br = np.unique(np.concatenate([ys, [0.0] if lo < 0 < hi else []]))
    tol = 1e-13 * (hi - lo)
    br = br[np.concatenate([[True], np.diff(br) > tol])]
    br[-1] = hi

    def run(n):
        X, Y, W = [], [], []
        levels = 12
        for i in range(len(br) - 1):
            b0, b1 = br[i], br[i + 1]
            w = b1 - b0
            # diagonal block in (gap, s): x2 = s + gap, y2 = s
            gl, gw = _one_sided(0.0, w, n, levels, "a")
            for g, wg in zip(gl, gw):
                R = w - g
                sb = [b0, b1 - g]
                if g < 0.25 * R:
                    k = g
                    inner = []
                    while k < 0.5 * R:
                        inner += [b0 + k, b1 - g - k]
                        k *= 4.0
                    sb = sorted(sb + inner)
                sb = np.asarray(sb)
                x, wx = _leggauss(n)
                a, b = sb[:-1], sb[1:]
                s = (a[:, None] + (b - a)[:, None] * 0.5 * (x + 1.0)).ravel()
                ws = ((b - a)[:, None] * 0.5 * wx).ravel()
                X.append(s + g)
                Y.append(s)
                W.append(ws * wg)
            # off-diagonal blocks below: x2 in [b0, b1], y2 in [c0, c1], c1 <= b0
            for j in range(i):
                c0, c1 = br[j], br[j + 1]
                xs, wxs = _one_sided(b0, b1, n, levels, "a")
                yy, wys = _one_sided(c0, c1, n, levels, "b")
                XX, YY = np.meshgrid(xs, yy, indexing="ij")
                X.append(XX.ravel())
                Y.append(YY.ravel())
                W.append(np.outer(wxs, wys).ravel())
        X, Y, W = np.concatenate(X), np.concatenate(Y), np.concatenate(W)
        f = integrand(X, Y)
        if not np.all(np.isfinite(f)):
            raise ArithmeticError("non-finite slice integrand")
        terms = W * f
        return 2.0 * math.fsum(terms), 2.0 * float(np.sum(np.abs(terms)))

    n = cfg.gauss_order
    lo_v, _ = run(n)
    hi_v, mag = run(n + 4)
    err = abs(hi_v - lo_v) + 1e3 * EPS * mag
    return IntegralResult(hi_v, err, 1, True)
