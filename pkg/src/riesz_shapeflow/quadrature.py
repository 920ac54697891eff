"""Numerical integration: Gauss rules, triangle-pair integrals, boundary
potentials and Monte Carlo oracles.

Singular and touching configurations are reduced to boundary integrals.
With ``psi`` the radial primitive of a kernel (see :mod:`kernels`),

    int_A int_B K(|x - y|) dy dx = - sum_{e in dA, f in dB} (nu_e . nu_f)
                                     int_e int_f psi(|x - y|) ds dt

and psi is continuous with psi(0) = 0, so the remaining segment-pair
integrals only carry mild corner singularities. Those are removed by a
collapsed (Duffy) change of variables at shared vertices and by a
Gauss-Jacobi rule that absorbs the ``r**p`` factor of psi.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from .geometry import Polygon, Triangle
from .kernels import Kernel

__all__ = [
    "QuadratureError",
    "OrderOutOfRange",
    "NonFiniteSample",
    "ToleranceNotReached",
    "QuadratureConfig",
    "IntegralResult",
    "McEstimate",
    "gauss_segment",
    "triangle_rule",
    "graded_rule",
    "segment_integral",
    "tensor_pair_integral",
    "segment_pair_integral",
    "boundary_pair_integral",
    "pair_integral",
    "boundary_potential",
    "mc_energy",
    "mc_energy_many",
    "mc_potential",
    "parallel_map",
]

EPS = np.finfo(float).eps


class QuadratureError(ValueError):
    pass


class OrderOutOfRange(QuadratureError):
    pass


class NonFiniteSample(QuadratureError, ArithmeticError):
    pass


class ToleranceNotReached(UserWarning):
    """Requested accuracy was not reached; the returned result carries its honest error."""


@dataclass(frozen=True)
class QuadratureConfig:
    gauss_order: int = 12
    max_depth: int = 24
    rel_tol: float = 1e-7
    admissibility_eta: float = 1.0
    threads: int = 1

    def __post_init__(self):
        if not (isinstance(self.gauss_order, (int, np.integer)) and 2 <= self.gauss_order <= 30):
            raise OrderOutOfRange(f"gauss_order must be an integer in [2, 30], got {self.gauss_order}")
        if not (1e-12 <= self.rel_tol <= 1e-2):
            raise QuadratureError(f"rel_tol must lie in [1e-12, 1e-2], got {self.rel_tol}")
        if not self.admissibility_eta > 0:
            raise QuadratureError("admissibility_eta must be positive")
        if self.max_depth < 1:
            raise QuadratureError("max_depth must be at least 1")
        if self.threads < 1:
            raise QuadratureError("threads must be at least 1")

    def to_json(self) -> dict:
        return {
            "gauss_order": int(self.gauss_order),
            "max_depth": int(self.max_depth),
            "rel_tol": float(self.rel_tol),
            "admissibility_eta": float(self.admissibility_eta),
        }


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    cells_evaluated: int = 1
    converged: bool = True

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "error_estimate": float(self.error_estimate),
            "cells_evaluated": int(self.cells_evaluated),
            "converged": bool(self.converged),
        }


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {
            "mean": float(self.mean),
            "std_error": float(self.std_error),
            "samples": int(self.samples),
            "seed": int(self.seed),
        }


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Ordered map; results come back in input order whatever the worker count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _finish(value: float, error: float, cells: int, rel_tol: float, what: str) -> IntegralResult:
    ok = bool(error <= rel_tol * abs(value) + 1e-15)
    if not ok:
        warnings.warn(
            f"{what}: error estimate {error:.3g} exceeds rel_tol * |value| = {rel_tol * abs(value):.3g}",
            ToleranceNotReached,
            stacklevel=3,
        )
    return IntegralResult(float(value), float(error), int(cells), ok)


# ---------------------------------------------------------------- basic rules


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _jacobi01(n: int, a: float, b: float):
    """Nodes/weights on [0, 1] for the weight (1 - r)**a * r**b."""
    x, w = special.roots_jacobi(n, a, b)
    r = 0.5 * (1.0 + x)
    w = w / 2.0 ** (1.0 + a + b)
    r.setflags(write=False)
    w.setflags(write=False)
    return r, w


def gauss_segment(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if not (isinstance(n, (int, np.integer)) and 2 <= n <= 30):
        raise OrderOutOfRange(f"order must be an integer in [2, 30], got {n}")
    return _leggauss(int(n))


def triangle_rule(order: int):
    """Collapsed tensor Gauss rule on the triangle (0,0), (1,0), (0,1).

    The square (u, v) is mapped by x = u (1 - v), y = u v, which collapses
    the edge u = 0 onto the vertex (0, 0); the Jacobian u cancels a 1/r
    singularity placed there.
    """
    x, w = gauss_segment(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * U
    pts = np.stack([(U * (1.0 - V)).ravel(), (U * V).ravel()], axis=1)
    return pts, W.ravel()


def _map_triangle(vertices: np.ndarray, pts: np.ndarray, wts: np.ndarray):
    a, b, c = vertices
    jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return a + pts[:, :1] * (b - a) + pts[:, 1:] * (c - a), wts * jac


def graded_rule(n: int, levels: int = 14, ratio: float = 0.25):
    """Composite Gauss rule on [0, 1] refined geometrically toward both endpoints.

    Panel breakpoints are 0, r**levels / 2, ..., r / 2, 1/2 and their mirror
    images. No node sits at an endpoint.
    """
    x, w = _leggauss(n)
    half = 0.5 * ratio ** np.arange(levels, -1, -1)
    breaks = np.concatenate([[0.0], half, 1.0 - half[-2::-1], [1.0]])
    a, b = breaks[:-1], breaks[1:]
    nodes = (a[:, None] + (b - a)[:, None] * 0.5 * (x + 1.0)).ravel()
    weights = ((b - a)[:, None] * 0.5 * w).ravel()
    return nodes, weights


def segment_integral(f: Callable, p, q, n: int = 12, levels: int = 18) -> float:
    """Integral of ``f`` along the segment [p, q] with respect to arc length.

    ``f`` takes an (m, 2) array of points and returns m values. Integrable
    endpoint singularities are handled by grading toward both ends.
    """
    gauss_segment(n)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    s, w = graded_rule(n, levels)
    vals = np.asarray(f(p + s[:, None] * (q - p)), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteSample("integrand returned a non-finite value at an interior node")
    return math.fsum(vals * w) * float(np.hypot(*(q - p)))


def tensor_pair_integral(T1: Triangle, T2: Triangle, f: Callable, order: int) -> float:
    """Product triangle rule for int_T1 int_T2 f(x, y); f is vectorized over rows."""
    pts, wts = triangle_rule(order)
    x, wx = _map_triangle(T1.vertices, pts, wts)
    y, wy = _map_triangle(T2.vertices, pts, wts)
    m = len(wx)
    X = np.repeat(x, m, axis=0)
    Y = np.tile(y, (m, 1))
    vals = np.asarray(f(X, Y), dtype=float).reshape(m, m)
    return math.fsum((wx[:, None] * vals * wy[None, :]).ravel())


# ------------------------------------------------------- segment-pair integrals


def _psi_reduced(kernel: Kernel, r):
    """psi(r) / r**p, the smooth factor left after removing the power p."""
    p = kernel.psi_power
    return kernel.psi(r) / r**p if p else kernel.psi(r)


def _seg_dist(p0, p1, q0, q1) -> float:
    def pt_seg(x, a, b):
        t = b - a
        s = np.clip(np.dot(x - a, t) / np.dot(t, t), 0.0, 1.0)
        return float(np.hypot(*(a + s * t - x)))

    return min(pt_seg(p0, q0, q1), pt_seg(p1, q0, q1), pt_seg(q0, p0, p1), pt_seg(q1, p0, p1))


def _self_segment(L: float, kernel: Kernel, n: int) -> float:
    # int_0^L int_0^L psi(|s-u|) = 2 L^2 int_0^1 (1 - r) psi(L r) dr
    p = kernel.psi_power
    r, w = _jacobi01(n, 1.0, p)
    return 2.0 * L ** (2.0 + p) * float(np.dot(w, _psi_reduced(kernel, L * r)))


def _graded_breaks(c: float, delta: float, ratio: float = 4.0) -> np.ndarray:
    """Breakpoints in [0, 1] refined geometrically toward c at scale delta."""
    pts = [0.0, 1.0]
    if delta < 1.0:
        if 0.0 < c < 1.0:
            pts.append(c)
        for side in (-1.0, 1.0):
            d = delta
            while True:
                x = c + side * d
                if not 0.0 < x < 1.0:
                    break
                pts.append(x)
                d *= ratio
    return np.unique(np.asarray(pts))


def _corner_pair(L1: float, L2: float, cos_t: float, sin_t: float, kernel: Kernel, n: int) -> float:
    """int_0^L1 int_0^L2 psi(|s a - u b|) du ds for unit vectors at angle theta."""
    p = kernel.psi_power
    rr, rw = _jacobi01(n, 0.0, p + 1.0)
    gx, gw = _leggauss(n)
    total = []
    for A, B in ((L1, L2), (L2, L1)):
        # collapsed half: s = rho A, u = rho w B; |x - y| = rho g(w)
        wstar = A * cos_t / B
        c = min(max(wstar, 0.0), 1.0)
        delta = math.hypot(A * sin_t / B, c - wstar)
        br = _graded_breaks(c, delta)
        a, b = br[:-1], br[1:]
        wn = (a[:, None] + (b - a)[:, None] * 0.5 * (gx + 1.0)).ravel()
        ww = ((b - a)[:, None] * 0.5 * gw).ravel()
        g = np.sqrt(np.maximum(A * A - 2.0 * A * B * cos_t * wn + B * B * wn * wn, 0.0))
        inner = _psi_reduced(kernel, rr[None, :] * g[:, None]) @ rw
        total.append(float(np.dot(ww, g**p * inner)))
    return L1 * L2 * (total[0] + total[1])


def _tensor_segments(p0, p1, q0, q1, kernel: Kernel, n: int) -> float:
    x, w = _leggauss(n)
    s = 0.5 * (x + 1.0)
    X = p0 + s[:, None] * (p1 - p0)
    Y = q0 + s[:, None] * (q1 - q0)
    r = np.hypot(X[:, None, 0] - Y[None, :, 0], X[:, None, 1] - Y[None, :, 1])
    L1 = math.hypot(*(p1 - p0))
    L2 = math.hypot(*(q1 - q0))
    return 0.25 * L1 * L2 * float(w @ kernel.psi(r) @ w)


def _contact_params(p0, p1, q0, q1, tol):
    """Parameters in (0, 1) along [p0, p1] where the other segment touches or crosses it."""
    t = p1 - p0
    tt = float(np.dot(t, t))
    out = []
    for x in (q0, q1):
        s = float(np.dot(x - p0, t)) / tt
        foot = p0 + s * t
        if tol < s < 1.0 - tol and math.hypot(*(foot - x)) <= tol * math.sqrt(tt):
            out.append(s)
    u = q1 - q0
    den = t[0] * u[1] - t[1] * u[0]
    if abs(den) > tol * math.sqrt(tt * float(np.dot(u, u))):
        d = q0 - p0
        s = (d[0] * u[1] - d[1] * u[0]) / den
        v = (d[0] * t[1] - d[1] * t[0]) / den
        if tol < s < 1.0 - tol and -tol <= v <= 1.0 + tol:
            out.append(s)
    return sorted(out)


def _split(p0, p1, params):
    pts = [p0] + [p0 + s * (p1 - p0) for s in params] + [p1]
    return list(zip(pts[:-1], pts[1:]))


def _same(a, b, tol):
    return math.hypot(*(a - b)) <= tol


@dataclass
class _Acc:
    terms: list
    errs: list
    cells: int = 0
    deep: bool = False


def _pair_core(p0, p1, q0, q1, kernel, cfg, acc: _Acc, depth: int = 0):
    n = cfg.gauss_order
    L1 = math.hypot(*(p1 - p0))
    L2 = math.hypot(*(q1 - q0))
    tol = 1e-13 * max(L1, L2)
    # identical segment, either orientation
    if (_same(p0, q0, tol) and _same(p1, q1, tol)) or (_same(p0, q1, tol) and _same(p1, q0, tol)):
        lo, hi = _self_segment(L1, kernel, n), _self_segment(L1, kernel, n + 4)
        acc.terms.append(hi)
        acc.errs.append(abs(hi - lo))
        acc.cells += 1
        return
    # shared endpoint: move it to the origin of both
    for a0, a1 in ((p0, p1), (p1, p0)):
        for b0, b1 in ((q0, q1), (q1, q0)):
            if _same(a0, b0, tol):
                ua = (a1 - a0) / L1
                ub = (b1 - b0) / L2
                cos_t = float(np.clip(np.dot(ua, ub), -1.0, 1.0))
                sin_t = abs(float(ua[0] * ub[1] - ua[1] * ub[0]))
                lo = _corner_pair(L1, L2, cos_t, sin_t, kernel, n)
                hi = _corner_pair(L1, L2, cos_t, sin_t, kernel, n + 4)
                acc.terms.append(hi)
                acc.errs.append(abs(hi - lo))
                acc.cells += 1
                return
    dist = _seg_dist(p0, p1, q0, q1)
    if dist >= cfg.admissibility_eta * max(L1, L2) or depth >= cfg.max_depth or dist == 0.0:
        if dist == 0.0:
            raise QuadratureError("segments touch at an unsplit point")
        lo = _tensor_segments(p0, p1, q0, q1, kernel, n)
        hi = _tensor_segments(p0, p1, q0, q1, kernel, n + 4)
        acc.terms.append(hi)
        acc.errs.append(abs(hi - lo))
        acc.cells += 1
        if depth >= cfg.max_depth and dist < cfg.admissibility_eta * max(L1, L2):
            acc.deep = True
        return
    if L1 >= L2:
        m = 0.5 * (p0 + p1)
        _pair_core(p0, m, q0, q1, kernel, cfg, acc, depth + 1)
        _pair_core(m, p1, q0, q1, kernel, cfg, acc, depth + 1)
    else:
        m = 0.5 * (q0 + q1)
        _pair_core(p0, p1, q0, m, kernel, cfg, acc, depth + 1)
        _pair_core(p0, p1, m, q1, kernel, cfg, acc, depth + 1)


def _canon_pair(p0, p1, q0, q1):
    """Order endpoints and segments canonically so the result is symmetric bit for bit."""
    P = tuple(sorted((tuple(p0), tuple(p1))))
    Q = tuple(sorted((tuple(q0), tuple(q1))))
    if Q < P:
        P, Q = Q, P
    return [np.array(x) for x in (*P, *Q)]


def _segment_pair_acc(p0, p1, q0, q1, kernel, cfg, acc):
    p0, p1, q0, q1 = _canon_pair(p0, p1, q0, q1)
    tol = 1e-13
    ps = _split(p0, p1, _contact_params(p0, p1, q0, q1, tol))
    qs = _split(q0, q1, _contact_params(q0, q1, p0, p1, tol))
    for a0, a1 in ps:
        for b0, b1 in qs:
            _pair_core(a0, a1, b0, b1, kernel, cfg, acc)


def segment_pair_integral(p0, p1, q0, q1, kernel: Kernel, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """int over [p0,p1] x [q0,q1] of psi(|x - y|) ds dt (arc length on both)."""
    cfg = cfg or QuadratureConfig()
    acc = _Acc([], [])
    _segment_pair_acc(*(np.asarray(v, dtype=float) for v in (p0, p1, q0, q1)), kernel, cfg, acc)
    val = math.fsum(acc.terms)
    err = math.fsum(acc.errs) + 64 * EPS * math.fsum(abs(t) for t in acc.terms)
    return IntegralResult(val, err, acc.cells, not acc.deep)


def boundary_pair_integral(
    verts_a: np.ndarray, verts_b: np.ndarray, kernel: Kernel, cfg: QuadratureConfig | None = None, same: bool = False
) -> IntegralResult:
    """int_A int_B K(|x-y|) for counterclockwise polygons A, B by the boundary reduction.

    With ``same=True`` the two polygons are taken to be the same set, and
    each unordered edge pair is evaluated once and counted twice.
    """
    cfg = cfg or QuadratureConfig()
    va = np.asarray(verts_a, dtype=float)
    vb = np.asarray(verts_b, dtype=float)
    ea = list(zip(va, np.roll(va, -1, axis=0)))
    eb = list(zip(vb, np.roll(vb, -1, axis=0)))

    def normal(e):
        t = e[1] - e[0]
        return np.array([t[1], -t[0]]) / math.hypot(*t)

    na = [normal(e) for e in ea]
    nb = [normal(e) for e in eb]
    jobs = []
    for i in range(len(ea)):
        for j in range(i if same else 0, len(eb)):
            c = float(np.dot(na[i], nb[j]))
            if abs(c) < 1e-15:
                continue
            mult = 1.0 if (not same or i == j) else 2.0
            jobs.append((i, j, -c * mult))

    def run(job):
        i, j, coef = job
        acc = _Acc([], [])
        _segment_pair_acc(ea[i][0], ea[i][1], eb[j][0], eb[j][1], kernel, cfg, acc)
        return coef, acc

    out = parallel_map(run, jobs, cfg.threads)
    terms, errs, cells, deep = [], [], 0, False
    for coef, acc in out:
        terms.extend(coef * t for t in acc.terms)
        errs.extend(abs(coef) * e for e in acc.errs)
        cells += acc.cells
        deep |= acc.deep
    val = math.fsum(terms)
    err = math.fsum(errs) + 64 * EPS * math.fsum(abs(t) for t in terms)
    res = _finish(val, err, max(cells, 1), cfg.rel_tol, "boundary pair integral")
    if deep:
        res = IntegralResult(res.value, res.error_estimate, res.cells_evaluated, False)
    return res


def _tri_dist(T1: Triangle, T2: Triangle) -> float:
    a0, a1 = T1.edges()
    b0, b1 = T2.edges()
    d = min(_seg_dist(a0[i], a1[i], b0[j], b1[j]) for i in range(3) for j in range(3))
    if d == 0.0:
        return 0.0
    # one triangle inside the other never happens with disjoint boundaries at positive distance
    # unless nested; nested triangles overlap and are not admissible
    from .geometry import _point_in_triangle

    if _point_in_triangle(T1.vertices[0], *T2.vertices, strict=False) or _point_in_triangle(
        T2.vertices[0], *T1.vertices, strict=False
    ):
        return 0.0
    return d


def _canon_tris(T1: Triangle, T2: Triangle):
    k1 = tuple(map(tuple, T1.vertices))
    k2 = tuple(map(tuple, T2.vertices))
    return (T2, T1) if k2 < k1 else (T1, T2)


def pair_integral(T1: Triangle, T2: Triangle, kernel: Kernel, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """int_T1 int_T2 K(|x - y|) dy dx.

    Well separated pairs use the product triangle rule at two orders; the
    difference is the error estimate. Touching, overlapping or close pairs,
    and separated pairs that miss the tolerance, go through the boundary
    reduction.
    """
    cfg = cfg or QuadratureConfig()
    T1, T2 = _canon_tris(T1, T2)
    eta = cfg.admissibility_eta
    if _tri_dist(T1, T2) >= eta * max(T1.diameter, T2.diameter):

        def f(x, y):
            return kernel.eval(np.hypot(*(x - y).T))

        lo = tensor_pair_integral(T1, T2, f, cfg.gauss_order)
        hi = tensor_pair_integral(T1, T2, f, min(cfg.gauss_order + 4, 30))
        err = abs(hi - lo) + 64 * EPS * abs(hi)
        if err <= cfg.rel_tol * abs(hi):
            return IntegralResult(hi, err, 1, True)
    same = T1.vertices.tobytes() == T2.vertices.tobytes()
    return boundary_pair_integral(T1.vertices, T2.vertices, kernel, cfg, same=same)


# ---------------------------------------------------------------- potentials


def _flux_line(points, p0, p1, kernel: Kernel, n: int, snap: float, tau_width: float = 0.7):
    """d * int_edge flux(|y - x|) ds for many points x, where d is the signed
    distance of x to the edge line measured along the outward normal.

    The substitution s = |d| sinh(tau) makes the integrand smooth.
    """
    t = p1 - p0
    L = math.hypot(*t)
    t = t / L
    nu = np.array([t[1], -t[0]])
    rel = p0 - points
    d = rel @ nu  # (y - x) . nu
    s0 = rel @ t
    s1 = s0 + L
    out = np.zeros(len(points))
    live = np.abs(d) > snap
    if not np.any(live):
        return out
    d = d[live]
    ad = np.abs(d)
    t0 = np.arcsinh(s0[live] / ad)
    t1 = np.arcsinh(s1[live] / ad)
    npan = int(min(max(math.ceil(float(np.max(t1 - t0)) / tau_width), 1), 200))
    x, w = _leggauss(n)
    k = (np.arange(npan)[:, None] + 0.5 * (x[None, :] + 1.0)).ravel() / npan
    wk = np.tile(0.5 * w, npan) / npan
    tau = t0[:, None] + (t1 - t0)[:, None] * k[None, :]
    ch = np.cosh(tau)
    r = ad[:, None] * ch
    vals = (kernel.flux(r) * r) @ wk
    out[live] = d * vals * (t1 - t0)
    return out


def boundary_potential(points, polygon: Polygon, kernel: Kernel, n: int = 12, snap_rel: float = 1e-12):
    """V(x) = int_polygon K(|x - y|) dy at many points via the edge-flux form.

    Returns (values, error estimates). Points within ``snap_rel * diameter``
    of an edge line are treated as lying on it, so that edge drops out.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p, q = polygon.edges()
    snap = snap_rel * polygon.diameter
    hi = [_flux_line(pts, p[i], q[i], kernel, n + 4, snap) for i in range(len(p))]
    lo = [_flux_line(pts, p[i], q[i], kernel, n, snap) for i in range(len(p))]
    H = np.stack(hi)
    val = np.array([math.fsum(col) for col in H.T])
    err = np.abs(np.sum(H, axis=0) - np.sum(np.stack(lo), axis=0)) + 64 * EPS * np.sum(np.abs(H), axis=0)
    return val, err


# ---------------------------------------------------------------- Monte Carlo

MC_BLOCK = 1 << 16


def _inside(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Even-odd test, vectorized over points."""
    x = points[:, 0][:, None]
    y = points[:, 1][:, None]
    x0, y0 = verts[:, 0][None, :], verts[:, 1][None, :]
    x1 = np.roll(verts[:, 0], -1)[None, :]
    y1 = np.roll(verts[:, 1], -1)[None, :]
    cond = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.sum(cond & (x < xc), axis=1) % 2 == 1


def _block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    # counter-based: every block owns its own counter range, so work splits freely
    bitgen = np.random.Philox(key=[int(seed) & 0xFFFFFFFFFFFFFFFF, stream], counter=[0, 0, 0, block])
    return np.random.Generator(bitgen)


def _sample_polygon(polygon: Polygon, m: int, rng: np.random.Generator) -> np.ndarray:
    v = polygon.vertices
    lo = v.min(axis=0)
    span = v.max(axis=0) - lo
    frac = polygon.area / float(span[0] * span[1])
    out = []
    got = 0
    while got < m:
        batch = int((m - got) / frac * 1.1) + 64
        pts = lo + rng.random((batch, 2)) * span
        pts = pts[_inside(pts, v)]
        out.append(pts)
        got += len(pts)
    return np.concatenate(out)[:m]


def _mc_blocks(samples: int):
    nb = -(-samples // MC_BLOCK)
    return [(b, min(MC_BLOCK, samples - b * MC_BLOCK)) for b in range(nb)]


def _reduce(sums, sq, samples, scale, seed) -> McEstimate:
    s = math.fsum(sums)
    s2 = math.fsum(sq)
    mean = s / samples
    var = max(s2 - s * s / samples, 0.0) / (samples - 1)
    return McEstimate(scale * mean, scale * math.sqrt(var / samples), samples, seed)


def mc_energy_many(polygon: Polygon, kernels: Sequence[Kernel], samples: int, seed: int, threads: int = 1):
    """Monte Carlo D for several kernels from one shared stream of point pairs."""
    if samples < 2:
        raise QuadratureError("need at least 2 samples")

    def run(job):
        b, m = job
        rng = _block_rng(seed, 1, b)
        x = _sample_polygon(polygon, m, rng)
        y = _sample_polygon(polygon, m, rng)
        r = np.hypot(*(x - y).T)
        out = []
        for k in kernels:
            f = k._value(r)
            out.append((math.fsum(f), math.fsum(f * f)))
        return out

    res = parallel_map(run, _mc_blocks(samples), threads)
    a2 = polygon.area**2
    return [
        _reduce([blk[i][0] for blk in res], [blk[i][1] for blk in res], samples, a2, seed)
        for i in range(len(kernels))
    ]


def mc_energy(polygon: Polygon, kernel: Kernel, samples: int, seed: int, threads: int = 1) -> McEstimate:
    """area^2 * mean K(|X - Y|) for independent uniform X, Y in the polygon."""
    return mc_energy_many(polygon, [kernel], samples, seed, threads)[0]


def mc_potential(x, polygon: Polygon, kernel: Kernel, samples: int, seed: int, threads: int = 1) -> McEstimate:
    """area * mean K(|x - Y|) for uniform Y in the polygon."""
    if samples < 2:
        raise QuadratureError("need at least 2 samples")
    x = np.asarray(x, dtype=float)

    def run(job):
        b, m = job
        rng = _block_rng(seed, 2, b)
        y = _sample_polygon(polygon, m, rng)
        f = kernel._value(np.hypot(*(y - x).T))
        return math.fsum(f), math.fsum(f * f)

    res = parallel_map(run, _mc_blocks(samples), threads)
    return _reduce([a for a, _ in res], [b for _, b in res], samples, polygon.area, seed)
