"""Szegő-kernel transform method for Laplace problems in Lipschitz domains."""

from importlib.metadata import PackageNotFoundError, version

from .apps import (FlowSolution, VortexConfig, exact_disc_vortex, extract_streamlines, sample_field,
                   solve_ellipse_bvp, solve_vortex, solve_vortex_punctured)
from .conformal import (ConformalMap, DiscMap, EllipseMap, PuncturedMap, SchwarzChristoffelMap, build_ellipse_map,
                        solve_sc_parameters)
from .errors import SzegoError
from .grsolver import assemble_system, solve_least_squares
from .transform import (SpectralFunction, forward_rho, forward_rho_punctured, inverse_transform,
                        inverse_transform_punctured)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "ConformalMap", "DiscMap", "EllipseMap", "FlowSolution", "PuncturedMap", "SchwarzChristoffelMap",
    "SpectralFunction", "SzegoError", "VortexConfig", "assemble_system", "build_ellipse_map", "exact_disc_vortex",
    "extract_streamlines", "forward_rho", "forward_rho_punctured", "inverse_transform",
    "inverse_transform_punctured", "sample_field", "solve_ellipse_bvp", "solve_least_squares",
    "solve_sc_parameters", "solve_vortex", "solve_vortex_punctured",
]
