"""Run the symmetrisation pipeline that carries a quadrilateral to the square."""

from riesz_shapeflow import RieszPower, run_pipeline_check, validate

quad = validate([(-1.0, 0.0), (0.3, -2.0), (1.0, 0.0), (-0.5, 1.0)])
verdict, stages, sweeps = run_pipeline_check(quad, RieszPower(1.0), grid_n=7)
for st, sw in zip(stages, sweeps):
    print(f"{st.name:20s} D: {sw.D[0]:.10f} -> {sw.D[-1]:.10f}  {sw.verdict}")
print("pipeline", "PASS" if verdict.passed else "FAIL")
