"""Isogeometric boundary-element solver for an open Gurtin-Murdoch material
surface in an infinite, plane-strain elastic matrix."""
from .assembly import QuadratureSettings, SolverError, SurfaceSolution, solve
from .fields import (FieldEvaluator, NearSurfaceError, bie_residual, displacement_at,
                     relative_von_mises, stress_at, surface_fields, surface_profile,
                     von_mises)
from .kernels import BulkMaterial, FarFieldLoad, SurfaceMaterial
from .nurbs import NurbsCurve, read_curve, write_curve

__version__ = "0.1.0"

__all__ = [
    "BulkMaterial", "FarFieldLoad", "FieldEvaluator", "NearSurfaceError", "NurbsCurve",
    "QuadratureSettings", "SolverError", "SurfaceMaterial", "SurfaceSolution",
    "bie_residual", "displacement_at", "read_curve", "relative_von_mises", "solve",
    "stress_at", "surface_fields", "surface_profile", "von_mises", "write_curve",
]
