"""Structure-preserving interpolatory model reduction for quadratic-bilinear
systems with internal differential structure (second-order, time-delay, and
generic frequency-affine forms)."""

from .errors import (
    DimensionMismatch,
    IntegrationFailure,
    NegativeDelay,
    QbmorError,
    RankDeficientBasis,
    RankTooSmall,
    SingularMatrix,
    TargetOrderUnreachable,
    ZeroReference,
)
from .linalg import (
    LuFactorization,
    QuadraticOperator,
    kron_dims,
    lu_factor,
    orthonormalize,
    solve,
    truncated_svd_basis,
)
from .system import (
    BivariateMatrixFunction,
    FrequencyFunction,
    MatrixFunction,
    StructuredQBSystem,
    companion_embedding,
    preset_first_order,
    preset_second_order,
    preset_time_delay,
)
from .transfer import (
    TFValue,
    TransferFunctions,
    gen_tf,
    sweep_level1,
    sweep_level2,
    sym_tf,
    symtf_state,
)
from .interpolation import (
    Condition,
    InterpolationPointSet,
    ReductionBasis,
    build_method_basis,
    generalized_pair_basis_twosided,
    generalized_triple_basis,
    interpolation_basis,
    log_imaginary_points,
    oversampled_basis,
    symmetric_coincident_basis,
    symmetric_pair_basis,
    symmetric_pair_basis_twosided,
)
from .projection import (
    ConditionCheck,
    ReducedModel,
    project,
    split_congruence,
    verify_interpolation,
)

__version__ = "0.1.0"
