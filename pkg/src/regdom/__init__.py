"""Flat regular domains: cosmological time, curvature bounds, CMC foliations."""

from .cmc import (
    BarrierPair,
    CmcSolution,
    CmcTimeConfig,
    cmc_time,
    make_barriers,
    solve_cmc,
    verify_sandwich,
)
from .cosmotime import (
    CosmoSample,
    GraphSurface,
    cosmological_time,
    cosmological_time_batch,
    level_height,
    make_axes,
    reflect_time,
    sample_level,
    sample_level_on_axes,
    time_mirror,
)
from .curvature import (
    CurvatureSample,
    LowerSupport,
    UpperSupport,
    curvature_grid,
    lower_support,
    mean_curvature_of_graph,
    upper_support,
    verify_theorem1,
)
from .domain import (
    NullPlane,
    RegularDomain,
    SingularEdge,
    SingularityComplex,
    SingularVertex,
    initial_singularity,
    validate,
)
from .errors import (
    CheckError,
    DomainError,
    FocalError,
    NumericError,
    RegdomError,
    UsageError,
)
from .evolution import (
    FlowState,
    flow_trace,
    gauss_flow,
    riccati_mean_curvature,
    tangency_compare,
    trace_csv_rows,
)
from .minkowski import CausalClass, MinkVector, classify, inner
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "BarrierPair", "CmcSolution", "CmcTimeConfig", "cmc_time",
    "make_barriers", "solve_cmc", "verify_sandwich",
    "CosmoSample", "GraphSurface", "cosmological_time",
    "cosmological_time_batch", "level_height", "make_axes", "reflect_time",
    "sample_level", "sample_level_on_axes", "time_mirror",
    "CurvatureSample", "LowerSupport", "UpperSupport", "curvature_grid",
    "lower_support", "mean_curvature_of_graph", "upper_support",
    "verify_theorem1",
    "NullPlane", "RegularDomain", "SingularEdge", "SingularityComplex",
    "SingularVertex", "initial_singularity", "validate",
    "CheckError", "DomainError", "FocalError", "NumericError",
    "RegdomError", "UsageError",
    "FlowState", "flow_trace", "gauss_flow", "riccati_mean_curvature",
    "tangency_compare", "trace_csv_rows",
    "CausalClass", "MinkVector", "classify", "inner",
    "Scenario", "load_scenario",
    "__version__",
]
