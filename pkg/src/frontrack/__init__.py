"""Wave front tracking for hyperbolic initial-boundary value problems on a
moving non-characteristic boundary, with operator splitting for non-local
sources."""

from .boundary import Boundary, component_boundary, identity_boundary, make_boundary
from .errors import FrontTrackError, ParseError, ValidationError
from .functionals import FunctionalWeights, compute_phi, compute_upsilon, compute_xi
from .piecewise import Polyline, Staircase
from .riemann import solve_boundary_riemann, solve_riemann
from .scenarios import load_scenario, run_scenario
from .splitting import SplittingParams, euler_polygonal, get_source, project_PiN
from .systems import custom_system, get_system
from .traces import CurveSpec, sample_trace, trace_distance
from .tracking import FrontTracker, SolverParams, run

__version__ = "0.1.0"

__all__ = [
    "Boundary", "CurveSpec", "FrontTrackError", "FrontTracker", "FunctionalWeights", "ParseError",
    "Polyline", "SolverParams", "SplittingParams", "Staircase", "ValidationError",
    "component_boundary", "compute_phi", "compute_upsilon", "compute_xi", "custom_system",
    "euler_polygonal", "get_source", "get_system", "identity_boundary", "load_scenario",
    "make_boundary", "project_PiN", "run", "run_scenario", "sample_trace", "solve_boundary_riemann",
    "solve_riemann", "trace_distance",
]
