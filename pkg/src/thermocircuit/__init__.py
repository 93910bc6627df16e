"""Thermal circuits for building heat-transfer models.

Elementary circuits are assembled into one global circuit, reduced to a
state-space model by eliminating massless nodes, and simulated against
time-series inputs.
"""

from .assembly import AssemblyPlan, ConnectionSet, DisassemblyMatrix, assemble, build_disassembly_matrix, plan_assembly
from .building import BuildingDescription, BuildingModel, build_model, parse_building, parse_building_text, serialize_building
from .circuit import (
    DaeSystem,
    KktSystem,
    SourceValues,
    ThermalCircuit,
    ValidationReport,
    build_dae,
    build_kkt,
    check_well_posed,
    heat_flows,
    validate,
)
from .compare import ComparisonStats, compare, error_stats
from .estimator import ThermalNetworkRegressor
from .exceptions import (
    AssemblyError,
    CircuitError,
    InputBindingError,
    NoStatesError,
    ParseError,
    SelfLoopError,
    SingularityError,
    StabilityError,
    ThermoCircuitError,
)
from .simulate import (
    IntegratorConfig,
    TimeSeries,
    Trajectory,
    dae_reference_solve,
    discretize,
    eigen_report,
    integrate,
    stability_limit,
    steady_state,
)
from .statespace import StateSpace, extract_state_space, reconstruct_massless
from .tsio import ingest_timeseries, write_trajectory

__version__ = "0.1.0"

__all__ = [
    "AssemblyPlan",
    "ConnectionSet",
    "DisassemblyMatrix",
    "assemble",
    "build_disassembly_matrix",
    "plan_assembly",
    "BuildingDescription",
    "BuildingModel",
    "build_model",
    "parse_building",
    "parse_building_text",
    "serialize_building",
    "DaeSystem",
    "KktSystem",
    "SourceValues",
    "ThermalCircuit",
    "ValidationReport",
    "build_dae",
    "build_kkt",
    "check_well_posed",
    "heat_flows",
    "validate",
    "ComparisonStats",
    "compare",
    "error_stats",
    "ThermalNetworkRegressor",
    "AssemblyError",
    "CircuitError",
    "InputBindingError",
    "NoStatesError",
    "ParseError",
    "SelfLoopError",
    "SingularityError",
    "StabilityError",
    "ThermoCircuitError",
    "IntegratorConfig",
    "TimeSeries",
    "Trajectory",
    "dae_reference_solve",
    "discretize",
    "eigen_report",
    "integrate",
    "stability_limit",
    "steady_state",
    "StateSpace",
    "extract_state_space",
    "reconstruct_massless",
    "ingest_timeseries",
    "write_trajectory",
]
