"""Disc-type minimal surfaces spanning polygonal approximations of closed curves.

Pipeline: approximate a closed piecewise-C2 curve by generic-position
polygons, solve the polygonal Plateau problem by Dirichlet-energy
minimization over monotone boundary reparametrizations, then verify
curvature bounds, branch-point censuses and boundary-trace convergence.
"""

from .curve import (
    CornerAngle,
    FourierArc,
    LineArc,
    ParametricArc,
    PiecewiseC2Curve,
    arc_length,
    circle,
    circular_arc,
    corner_angles,
    ellipse,
    fourier_curve,
    perturbed_circle,
    polygon_curve,
    total_curvature,
)
from .disc_harmonic import (
    ComplexDerivativeField,
    DiscMesh,
    DiscSurface,
    build_mesh,
    complex_derivative,
    conformality_residual,
    dirichlet_energy,
    harmonic_extension,
    save_mesh_obj,
    save_surface_obj,
)
from .polyapprox import (
    ApproximationReport,
    GenericityCertificate,
    Polygon,
    check_generic,
    inscribe,
    load_polygon,
    perturb_to_generic,
    polygon_length,
    polygon_total_curvature,
    save_polygon,
    verify_approximation,
)
from .mobius import MobiusAut, normalize_three_points, pullback
from .plateau_solver import (
    BoundaryLift,
    BoundaryTrace,
    PlateauSolution,
    SolverOptions,
    boundary_trace,
    initial_lift,
    solve,
)
from .analysis import (
    BranchReport,
    CurvatureReport,
    detect_branch_points,
    gauss_bonnet_check,
    gauss_map,
    isoperimetric_check,
    sauvigny_bound_check,
    total_gauss_curvature,
)
from .convergence import (
    ConvergenceOptions,
    ConvergenceReport,
    equicontinuity_diagnostic,
    monotone_lift,
    run_sequence,
    trace_sup_distance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
