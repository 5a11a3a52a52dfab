"""Exact dense simulation of two-party quantum communication protocols.

Computes quantum information cost, communication cost and error of protocols
run on purified classical inputs, plus rectangle discrepancy for tiny tables.
"""

__version__ = "0.1.0"

from .config import DEFAULT, Settings
from .engine import (
    InputDistribution,
    ProtocolSpec,
    QicReport,
    Step,
    TaskSpec,
    and_task,
    avg_error,
    disj_task,
    embed_input,
    qcc,
    qic,
    qic_sup_over_prior,
    run,
    worst_case_error,
)
from .errors import DimCapError, InputError, QicError, ResourceLimitError
from .linalg import (
    DensityOperator,
    GlobalPureState,
    Isometry,
    RegisterLayout,
    apply_isometry,
    eig_hermitian,
    partial_trace,
    purify,
    tensor,
    trace_distance,
)
from .measures import binary_entropy, cond_entropy, cqmi, entropy, mutual_information, tv_distance
