"""Closed-form ln(exp(X) exp(Y)) on structure-constant Lie algebras."""

from .algebra import (
    AdjointOperator,
    AntisymmetryViolation,
    DimensionMismatch,
    IndexOutOfRange,
    JacobiViolation,
    LieElement,
    NilpotencyVerdict,
    StructureConstants,
    Subspace,
    as_fraction,
    validate,
)
from .closed_form import (
    BchResult,
    BivariateSeries,
    ClassificationMismatch,
    NoClosedFormAvailable,
    NonConvergence,
    bch_closed_form,
    bch_eigenpair,
    bch_operator,
    bch_rank_one,
    bch_special,
    case1_build,
    f_scalar,
    f_series,
    oplus,
)
from .detect import (
    CaseClassification,
    CaseTag,
    RankOneFactorization,
    classify_pair,
    factorize_rank_one,
    is_derived_abelian,
    pair_center_condition,
    pair_centralizer_condition,
    uv_from_rank_one,
)
from .oracle import (
    ExpansionResidualTooLarge,
    LogDomainError,
    MatrixRep,
    bch_integral_series,
    builtin_catalog,
    matrix_bch,
    matrix_exp,
    matrix_log,
)

__version__ = "0.1.0"
