"""Credible semidefinite programming: a short-step primal-dual solver whose
every iteration is checked against an explicit contract catalog, with
serialized proof traces, an independent trace checker, and annotated-listing
generation."""

from .annotator import (
    AnnotatedListing,
    CheckReport,
    Finding,
    ProofTrace,
    TOOL_VERSION as __version__,
    TraceFormatError,
    check_trace,
    emit_annotated_listing,
    parse_trace,
    write_trace,
)
from .linalg import (
    LsqrContractViolation,
    NotPositiveDefiniteError,
    PdCertificate,
    is_pd,
    lsqr_solve,
    require_pd,
    sym_inv,
    sym_sqrt,
    trace_inner,
)
from .monitor import (
    INIT_IDS,
    LOOP_IDS,
    THETA,
    InvariantRecord,
    check_initialization,
    check_iteration,
)
from .problem import (
    ProblemFormatError,
    SdpProblem,
    build_problem,
    load_problem,
    load_problem_file,
    running_example,
)
from .solver import (
    InitializationError,
    IterateState,
    IterationSnapshot,
    NeighborhoodViolation,
    NewtonStep,
    SolveReport,
    SolveStatus,
    SolverOptions,
    initialize,
    iteration_bound,
    sigma_from_nu,
    solve,
)
from .symvec import (
    DimensionError,
    SymmetryError,
    krons,
    mats,
    smat,
    svec,
    sym_dim,
    symmetrize,
    vecs,
)

__all__ = [
    "AnnotatedListing",
    "CheckReport",
    "DimensionError",
    "Finding",
    "INIT_IDS",
    "InitializationError",
    "InvariantRecord",
    "IterateState",
    "IterationSnapshot",
    "LOOP_IDS",
    "LsqrContractViolation",
    "NeighborhoodViolation",
    "NewtonStep",
    "NotPositiveDefiniteError",
    "PdCertificate",
    "ProblemFormatError",
    "ProofTrace",
    "SdpProblem",
    "SolveReport",
    "SolveStatus",
    "SolverOptions",
    "SymmetryError",
    "THETA",
    "TraceFormatError",
    "__version__",
    "build_problem",
    "check_initialization",
    "check_iteration",
    "check_trace",
    "emit_annotated_listing",
    "initialize",
    "is_pd",
    "iteration_bound",
    "krons",
    "load_problem",
    "load_problem_file",
    "lsqr_solve",
    "mats",
    "parse_trace",
    "require_pd",
    "running_example",
    "sigma_from_nu",
    "smat",
    "solve",
    "svec",
    "sym_dim",
    "sym_inv",
    "sym_sqrt",
    "symmetrize",
    "trace_inner",
    "vecs",
    "write_trace",
]
