"""Bach flow on four-dimensional nilpotent Lie groups."""

from .bachforms import BachOperator, SolitonSolution, closed_form_bach, ode_rhs
from .curvature import CurvatureBundle, MetricSpec, bach_oracle, curvature_bundle
from .flow import (
    FlowOptions,
    FlowTrajectory,
    integrate_full,
    integrate_metric,
    integrate_normalized,
    integrate_reduced,
    reparametrize,
)
from .nilalg import Bracket, TriBracket, gl_action, pi_rep
from .soliton import solve_soliton, verify_soliton_dynamics

__version__ = "0.1.0"
