"""Nonlocal energies of planar polygons and the area-preserving flows that increase them."""

from .energy import EnergyResult, SideAverageReport, energy, fd_derivative, potential, potentials, shape_derivative
from .energy import shear_derivative_slice, side_averages
from .flows import (
    FlowError,
    FlowSpec,
    PremiseViolated,
    bind,
    compose_pipeline,
    critical_time,
    domain_at,
    height_compress,
    height_stretch,
    leg_stretch,
    rectangle_stretch,
    rhombus_diagonal,
    triangle_pipeline,
    vertex_shear,
)
from .geometry import GeometryError, Polygon, polygon_from_json, triangulate, validate
from .kernels import ExpDecay, InadmissibleKernel, Kernel, NegLinear, RieszPower, kernel_from_json
from .quadrature import IntegralResult, McEstimate, QuadratureConfig, ToleranceNotReached, mc_energy, mc_potential
from .verify import THEOREMS, SweepResult, Verdict, maximality_check, run_pipeline_check, sweep, verify_theorem

__version__ = "0.1.0"

__all__ = [
    "EnergyResult", "SideAverageReport", "energy", "fd_derivative", "potential", "potentials",
    "shape_derivative", "shear_derivative_slice", "side_averages",
    "FlowError", "FlowSpec", "PremiseViolated", "bind", "compose_pipeline", "critical_time", "domain_at",
    "height_compress", "height_stretch", "leg_stretch", "rectangle_stretch", "rhombus_diagonal",
    "triangle_pipeline", "vertex_shear",
    "GeometryError", "Polygon", "polygon_from_json", "triangulate", "validate",
    "ExpDecay", "InadmissibleKernel", "Kernel", "NegLinear", "RieszPower", "kernel_from_json",
    "IntegralResult", "McEstimate", "QuadratureConfig", "ToleranceNotReached", "mc_energy", "mc_potential",
    "THEOREMS", "SweepResult", "Verdict", "maximality_check", "run_pipeline_check", "sweep", "verify_theorem",
]
