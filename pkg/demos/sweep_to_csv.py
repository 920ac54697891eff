"""Sweep a height-compressing flow on a non-obtuse triangle and write the curve to CSV."""

import sys

from riesz_shapeflow import RieszPower, bind, critical_time, height_compress, sweep, validate
from riesz_shapeflow.verify import default_grid

tri = validate([(-0.8, 0.0), (0.4, 0.0), (0.0, 1.5)])
flow = bind(height_compress(), tri)
t2 = critical_time(flow, tri)
res = sweep(flow, tri, RieszPower(1.0), default_grid(-1.5, t2, 13))

out = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
with open(out, "w") as fh:
    fh.write(res.to_csv())
print(f"critical time {t2:.6f}; verdict {res.verdict}; min gap margin {res.min_margin:.3e}")
print(f"derivative check ok: {res.derivative_ok}; worst mismatch {res.max_derivative_mismatch:.2e}")
print(f"wrote {out}")
