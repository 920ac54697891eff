"""Admissible interaction kernels K(r) and their radial primitives.

Three variants are supported: the Riesz power ``r**-alpha`` with
``0 < alpha < 2``, the sign-changing ``-r`` and the bounded ``exp(-beta r)``.
Besides point values and derivatives every kernel exposes the radial
primitives used to turn area integrals into boundary integrals:

``disk_integral(r)``
    G(r) = int_0^r K(s) s ds, the potential of a disk of radius r at its centre
    divided by 2 pi.
``flux(r)``
    G(r) / r**2. The field ``z * flux(|z|)`` has divergence ``K(|z|)``.
``psi(r)``
    int_0^r s * flux(s) ds. Its gradient is ``z * flux(|z|)``, so that
    ``int_A int_B K = -int_dA int_dB psi(|x-y|) nu_A . nu_B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "KernelError",
    "NonPositiveRadius",
    "SingularArgument",
    "InadmissibleKernel",
    "Kernel",
    "RieszPower",
    "NegLinear",
    "ExpDecay",
    "SliceKernel",
    "kernel_from_json",
]

_EULER_GAMMA = 0.57721566490153286061


class KernelError(ValueError):
    pass


class NonPositiveRadius(KernelError):
    pass


class SingularArgument(KernelError):
    pass


class InadmissibleKernel(KernelError):
    pass


def _as_array(r):
    return np.asarray(r, dtype=float)


class Kernel:
    """Base class; subclasses are frozen dataclasses."""

    #: K is bounded at r = 0 (r = 0 is a legal argument).
    bounded: bool = True
    #: K > 0 everywhere.
    positive: bool = True

    def _check(self, r):
        r = _as_array(r)
        if self.bounded:
            if np.any(r < 0):
                raise NonPositiveRadius("radius must be non-negative")
        elif np.any(r <= 0):
            raise NonPositiveRadius(f"{self.name} kernel is singular at r = 0")
        return r

    def eval(self, r):
        return self._value(self._check(r))

    def eval_deriv(self, r):
        return self._deriv(self._check(r))

    def slice(self, l: float) -> "SliceKernel":
        return SliceKernel(self, float(l))

    # radial primitives; arguments are assumed positive (or >= 0 for bounded kernels)
    def disk_integral(self, r):
        r = _as_array(r)
        return r * r * self.flux(r)

    @property
    def psi_power(self) -> float:
        """Exponent p with psi(r) = r**p * (smooth function of r)."""
        return 0.0

    def to_json(self) -> dict:
        raise NotImplementedError

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class RieszPower(Kernel):
    """K(r) = r**-alpha, 0 < alpha < 2."""

    alpha: float = 1.0

    bounded = False
    positive = True
    name = "riesz"

    def __post_init__(self):
        a = float(self.alpha)
        if not (math.isfinite(a) and 0.0 < a < 2.0):
            raise InadmissibleKernel("alpha must lie in (0,2)")
        object.__setattr__(self, "alpha", a)

    def _value(self, r):
        return r ** -self.alpha

    def _deriv(self, r):
        return -self.alpha * r ** (-self.alpha - 1.0)

    def flux(self, r):
        return _as_array(r) ** -self.alpha / (2.0 - self.alpha)

    def disk_integral(self, r):
        return _as_array(r) ** (2.0 - self.alpha) / (2.0 - self.alpha)

    def psi(self, r):
        return _as_array(r) ** (2.0 - self.alpha) / (2.0 - self.alpha) ** 2

    @property
    def psi_power(self):
        return 2.0 - self.alpha

    def slice_antiderivative(self, l, u):
        l = _as_array(l)
        u = _as_array(u)
        a = self.alpha
        if np.any(l < 0):
            raise SingularArgument("slice offset must be non-negative")
        if np.any(l == 0):
            if a >= 1.0 and np.any((l == 0) & (u != 0)):
                raise SingularArgument("slice antiderivative diverges at l = 0 for alpha >= 1")
        with np.errstate(divide="ignore", invalid="ignore"):
            if a == 1.0:
                out = np.arcsinh(u / l)
            else:
                out = u * l ** -a * special.hyp2f1(0.5, 0.5 * a, 1.5, -((u / l) ** 2))
            if a < 1.0:
                at0 = np.sign(u) * np.abs(u) ** (1.0 - a) / (1.0 - a)
                out = np.where(l == 0, at0, out)
        return np.where(u == 0, 0.0, out)

    def to_json(self):
        return {"kind": "riesz", "alpha": self.alpha}

    def __str__(self):
        return f"riesz(alpha={self.alpha:g})"


@dataclass(frozen=True)
class NegLinear(Kernel):
    """K(r) = -r. Admissible: decreasing, and D(Omega) is minus the mean-distance integral."""

    bounded = True
    positive = False
    name = "neglinear"

    def _value(self, r):
        return -r

    def _deriv(self, r):
        return -np.ones_like(r)

    def flux(self, r):
        return -_as_array(r) / 3.0

    def psi(self, r):
        return -_as_array(r) ** 3 / 9.0

    def slice_antiderivative(self, l, u):
        l = _as_array(l)
        u = _as_array(u)
        rho = np.hypot(l, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(l > 0, l * l * np.arcsinh(u / np.where(l > 0, l, 1.0)), 0.0)
        return -0.5 * (u * rho + tail)

    def to_json(self):
        return {"kind": "neglinear"}


# series coefficients for small arguments of the exponential kernel primitives
_G_SERIES = np.array([(-1) ** k * (k - 1) / math.factorial(k) for k in range(2, 30)])
_PSI_SERIES = np.array(
    [(-1) ** k * (k - 1) / (k * math.factorial(k)) for k in range(2, 30)]
)


def _series(coeffs, z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    for c in coeffs[::-1]:
        out = out * z + c
    return out * z * z


@dataclass(frozen=True)
class ExpDecay(Kernel):
    """K(r) = exp(-beta r), beta > 0."""

    beta: float = 1.0

    bounded = True
    positive = True
    name = "expdecay"

    def __post_init__(self):
        b = float(self.beta)
        if not (math.isfinite(b) and b > 0):
            raise InadmissibleKernel("beta must be positive")
        object.__setattr__(self, "beta", b)

    def _value(self, r):
        return np.exp(-self.beta * r)

    def _deriv(self, r):
        return -self.beta * np.exp(-self.beta * r)

    def disk_integral(self, r):
        z = self.beta * _as_array(r)
        small = z < 1.0
        zs = np.where(small, z, 0.0)
        zl = np.where(small, 1.0, z)
        # series form avoids the cancellation in 1 - e^-z (1 + z)
        out = np.where(small, _series(_G_SERIES, zs), -np.expm1(-zl) - zl * np.exp(-zl))
        return out / self.beta**2

    def flux(self, r):
        r = _as_array(r)
        z = self.beta * r
        small = z < 1.0
        zs = np.where(small, z, 0.0)
        # G(r)/r^2 with the z^2 factor divided out analytically near zero
        inner = np.zeros_like(zs)
        for c in _G_SERIES[::-1]:
            inner = inner * zs + c
        with np.errstate(divide="ignore", invalid="ignore"):
            big = self.disk_integral(np.where(small, 1.0, r)) / np.where(small, 1.0, r) ** 2
        return np.where(small, inner, big)

    def psi(self, r):
        z = self.beta * _as_array(r)
        small = z < 1.0
        zs = np.where(small, z, 0.0)
        zl = np.where(small, 1.0, z)
        ein = special.exp1(zl) + np.log(zl) + _EULER_GAMMA
        out = np.where(small, _series(_PSI_SERIES, zs), ein + np.expm1(-zl))
        return out / self.beta**2

    def slice_antiderivative(self, l, u):
        l, u = np.broadcast_arrays(_as_array(l), _as_array(u))
        sign = np.sign(u)
        au = np.abs(u)
        flat = l == 0
        # substitution v = l sinh(tau) turns the integrand into a smooth function of tau
        lp = np.where(flat, 1.0, l)
        top = np.arcsinh(au / lp)
        nodes, weights = _leg16
        npan = 16
        edges = np.linspace(0.0, 1.0, npan + 1)
        total = np.zeros(l.shape)
        for a, b in zip(edges[:-1], edges[1:]):
            tau = top[..., None] * (a + (b - a) * (nodes + 1.0) / 2.0)
            ch = np.cosh(tau)
            vals = np.exp(-self.beta * lp[..., None] * ch) * lp[..., None] * ch
            total += (vals @ weights) * top * (b - a) / 2.0
        at0 = -np.expm1(-self.beta * au) / self.beta
        return sign * np.where(flat, at0, total)

    def to_json(self):
        return {"kind": "expdecay", "beta": self.beta}

    def __str__(self):
        return f"expdecay(beta={self.beta:g})"


_leg16 = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class SliceKernel:
    """K_l(r) = K(sqrt(l^2 + r^2)): interaction of two horizontal slices at height gap l."""

    base: Kernel
    l: float

    def __post_init__(self):
        if not (math.isfinite(self.l) and self.l >= 0):
            raise SingularArgument("slice offset l must be finite and >= 0")

    def _rho(self, r):
        r = _as_array(r)
        rho = np.hypot(self.l, r)
        if not self.base.bounded and np.any(rho == 0):
            raise SingularArgument("K_l(0) is singular for l = 0 and an unbounded kernel")
        return r, rho

    def eval(self, r):
        _, rho = self._rho(r)
        return self.base._value(rho)

    def eval_deriv(self, r):
        """d/dr K_l(r) = K'(rho) r / rho; odd in r."""
        r, rho = self._rho(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.base._deriv(rho) * r / rho
        return np.where(r == 0, 0.0, out)

    def antiderivative(self, u):
        """int_0^u K_l(v) dv (odd in u)."""
        return self.base.slice_antiderivative(self.l, u)


def kernel_from_json(obj: dict) -> Kernel:
    kind = obj.get("kind")
    if kind == "riesz":
        return RieszPower(obj.get("alpha", 1.0))
    if kind == "neglinear":
        return NegLinear()
    if kind == "expdecay":
        return ExpDecay(obj.get("beta", 1.0))
    raise InadmissibleKernel(f"unknown kernel kind {kind!r}")
