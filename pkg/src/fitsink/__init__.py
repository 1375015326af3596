"""Fitness-Complexity and Sinkhorn-Knopp on bipartite country-product matrices."""

from .barrier import (
    PotentialPoint,
    StabilityReport,
    barrier_gradient,
    barrier_hessian,
    barrier_value,
    stability_report,
)
from .errors import (
    DimensionMismatch,
    EmptyRemoved,
    DivisionByZero,
    EmptyMatrix,
    FitsinkError,
    GaugeMismatch,
    MissingColumn,
    NonPositiveInput,
    NotConverged,
    NotStationary,
    ParseError,
    SchemaVersionMismatch,
    UnknownLabel,
)
from .fitness import FCOptions, fc_residual, fc_solve, fc_step
from .gauge import EquivalenceReport, apply_gauge, equivalence_report, rescale
from .ingest import (
    FlowRecord,
    FlowTable,
    dumps_result,
    loads_result,
    matrix_to_flows,
    parse_flows,
    presence_binarize,
    rca_binarize,
    read_result,
    write_flows,
    write_result,
)
from .model import (
    BipartiteMatrix,
    FCResult,
    GaugeSpec,
    ScalingProblem,
    ValidationReport,
    default_targets,
    drop_empty,
    generate_nested,
    transport_support,
    validate,
)
from .nestedness import (
    BarrierLine,
    CountryPathway,
    OrderedMatrix,
    PathwayReport,
    Trajectories,
    barrier_line,
    classify_pathways,
    country_spectrum,
    reorder,
    trajectories,
)
from .sinkhorn import ScalingSolution, scaled_matrix, sk_solve, sk_step

__version__ = "0.1.0"

__all__ = [
    "BarrierLine",
    "BipartiteMatrix",
    "CountryPathway",
    "DimensionMismatch",
    "DivisionByZero",
    "EmptyMatrix",
    "EmptyRemoved",
    "EquivalenceReport",
    "FCOptions",
    "FCResult",
    "FitsinkError",
    "FlowRecord",
    "FlowTable",
    "GaugeMismatch",
    "GaugeSpec",
    "MissingColumn",
    "NonPositiveInput",
    "NotConverged",
    "NotStationary",
    "OrderedMatrix",
    "ParseError",
    "PathwayReport",
    "PotentialPoint",
    "ScalingProblem",
    "ScalingSolution",
    "SchemaVersionMismatch",
    "StabilityReport",
    "Trajectories",
    "UnknownLabel",
    "ValidationReport",
    "apply_gauge",
    "barrier_gradient",
    "barrier_hessian",
    "barrier_line",
    "barrier_value",
    "classify_pathways",
    "country_spectrum",
    "default_targets",
    "drop_empty",
    "dumps_result",
    "equivalence_report",
    "fc_residual",
    "fc_solve",
    "fc_step",
    "generate_nested",
    "loads_result",
    "matrix_to_flows",
    "parse_flows",
    "presence_binarize",
    "rca_binarize",
    "read_result",
    "reorder",
    "rescale",
    "scaled_matrix",
    "sk_solve",
    "sk_step",
    "stability_report",
    "trajectories",
    "transport_support",
    "validate",
    "write_flows",
    "write_result",
]
