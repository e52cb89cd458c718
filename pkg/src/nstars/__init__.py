"""Simulation and limit theory of the N-stars network evolution model."""

__version__ = "0.1.0"

from .errors import (
    DivergentMoment,
    DivergentSum,
    DomainError,
    EmptySampler,
    InsufficientData,
    InvalidParams,
    InvariantViolation,
    NStarsError,
    SingularIdentity,
)
from .params import ConditionReport, DerivedParams, ModelParams, check_conditions, derive
from .analytic import (
    DIVERGENT,
    JointTable,
    MomentRow,
    is_divergent,
    joint_table,
    marginal_closed,
    expectation_closed,
    second_moment_closed,
    swap_roles,
    taylor_constant,
)
from .sampler import FenwickSampler
from .simulator import GraphState, SimConfig, StepKind, init, run, step
from .stats import EmpiricalJoint, TaylorFit, conditional_moments, empirical_joint, loglog_fit
