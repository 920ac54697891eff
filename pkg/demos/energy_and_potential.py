"""Energy of a unit square and a right triangle, and the potential at a few points."""

import math

import numpy as np

from riesz_shapeflow import ExpDecay, RieszPower, energy, potential, validate

square = validate([(0, 0), (1, 0), (1, 1), (0, 1)])
tri = validate([(0, 0), (4, 0), (0, 3)])

for k in (RieszPower(0.5), RieszPower(1.0), ExpDecay(1.0)):
    r = energy(square, k)
    print(f"square  {k!r:30s} D = {r.value:.15f}  err ~ {r.error_estimate:.1e}")

exact = 4 * math.asinh(1) + 4 / 3 * (1 - math.sqrt(2))
print(f"square 1/r closed form       {exact:.15f}")

r = energy(tri, RieszPower(1.0))
print(f"3-4-5 triangle 1/r           D = {r.value:.15f}")

for x in np.array([(0.5, 0.5), (0.2, 0.7), (1.0, 1.0), (2.0, 0.5)]):
    v = potential(x, square, RieszPower(1.0))
    print(f"V_square({x[0]:.1f}, {x[1]:.1f}) = {v.value:.12f}")
