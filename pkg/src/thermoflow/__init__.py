"""thermoflow: a numerical laboratory for thermostat flows on closed surfaces."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConjugatePointError,
    DomainError,
    IntegrationError,
    PreconditionError,
    RefinementError,
    ThermoflowError,
)
from .fields import ConstantField, FourierField2D, GridField2D
from .generators import GeneratorField, flip, mirror_lambda, reversibility_report
from .geometry import (
    ChartPoint,
    ConformalTorus,
    FlatTorus,
    RoundSphere,
    UnitTangent,
    frame_vectors,
    gaussian_curvature,
    structure_residuals,
)
from .flow import (
    SyntheticTrace,
    Trajectory,
    damped_curvature,
    eval_lambda,
    integrate_flow,
    mirror_conjugacy_residual,
    reversibility_flow_residual,
    thermostat_curvature,
)
