"""Numerical tools for asymptotically flat 3-manifold ends.

Spectral spherical harmonics, metric models ``g = delta + h1(theta)/r + Q``,
ADM mass and center of mass, asymptotically harmonic coordinates, radial
graph geometry and constant-mean-curvature spheres and foliations.
"""

from .errors import (AFError, DivergedError, InvalidArgumentError, MassZeroError,
                     MeanNotZeroError, NotImmersedError, OutOfDomainError,
                     ResolutionWarning)
from .harmonics import (HarmonicBasis, SphereFunction, analyze, build_basis,
                        invert_laplacian, synthesize)
from .metric import (MetricField, MetricValue, coordinate_laplacian, eval_metric,
                     example51, flat, from_h1, perturbed_isotropic, scalar_curvature,
                     schwarzschild)
from .adm import AdmReport, adm_mass, center_of_mass
from .harmonic_coords import (CoordinateMap, TransformedMetric, build_harmonic_map,
                              ellipticity_check, source_term, transform_metric)
from .surface import (GraphSurface, SurfaceReport, gauss_map_diagnostics,
                      jacobi_spectrum, mean_curvature_difference, surface_geometry)
from .cmc_solver import Foliation, build_foliation, solve_cmc, verify_leaf

__version__ = "0.1.0"

__all__ = [
    "AFError", "DivergedError", "InvalidArgumentError", "MassZeroError",
    "MeanNotZeroError", "NotImmersedError", "OutOfDomainError", "ResolutionWarning",
    "HarmonicBasis", "SphereFunction", "analyze", "build_basis", "invert_laplacian",
    "synthesize",
    "MetricField", "MetricValue", "coordinate_laplacian", "eval_metric", "example51",
    "flat", "from_h1", "perturbed_isotropic", "scalar_curvature", "schwarzschild",
    "AdmReport", "adm_mass", "center_of_mass",
    "CoordinateMap", "TransformedMetric", "build_harmonic_map", "ellipticity_check",
    "source_term", "transform_metric",
    "GraphSurface", "SurfaceReport", "gauss_map_diagnostics", "jacobi_spectrum",
    "mean_curvature_difference", "surface_geometry",
    "Foliation", "build_foliation", "solve_cmc", "verify_leaf",
]
