"""
diffeoflow: diffeomorphic matching of 3D point-cloud surfaces.

A flow of kernel velocity fields carries a template point set onto a target
by minimizing kinetic energy plus a kernel distance, subject to a
forward-Euler discretization of the flow. The problem is solved with an
operator-splitting (ADMM) scheme: a Schur-complement solve for the
constrained kinetic part and a Newton-Krylov solve for the distance part.
"""

from .admm import (AdmmState, RegistrationResult, SolverConfig, check_stopping, dual_update,
                   register, register_multiframe, residuals, solve_distance_subproblem,
                   solve_kinetic_subproblem)
from .geometry import (GeometryError, HausdorffReport, Shape, censored_hausdorff, hausdorff,
                       knn_edge_graph, mean_edge_length)
from .io import load_config, read_shape, write_result, write_shape
from .kernels import GaussianKernel, GramOperator, gram_matvec, kernel_eval, sigma_s_policy, sigma_v_policy
from .linsolve import PcgConfig, pcg
from .objective import KernelDistance, KineticEnergyOperator, kernel_distance, kinetic_energy
from .strain import StrainField, strain_field
from .synth import ellipsoid, make_shape, sheet, sphere
from .trajectory import TimeGrid, rollout

__version__ = "0.1.0"

__all__ = [
    "AdmmState", "RegistrationResult", "SolverConfig", "check_stopping", "dual_update",
    "register", "register_multiframe", "residuals", "solve_distance_subproblem",
    "solve_kinetic_subproblem", "GeometryError", "HausdorffReport", "Shape",
    "censored_hausdorff", "hausdorff", "knn_edge_graph", "mean_edge_length", "load_config",
    "read_shape", "write_result", "write_shape", "GaussianKernel", "GramOperator",
    "gram_matvec", "kernel_eval", "sigma_s_policy", "sigma_v_policy", "PcgConfig", "pcg",
    "KernelDistance", "KineticEnergyOperator", "kernel_distance", "kinetic_energy",
    "StrainField", "strain_field", "ellipsoid", "make_shape", "sheet", "sphere", "TimeGrid",
    "rollout",
]
