"""Decompositions of positive operators into sums of projections.

Finite matrices (integer trace >= rank), finite perturbations of the
identity, and exact spectral-measure plans for the type II settings.
"""

from .exceptions import (
    ConditionFailed,
    InputError,
    NotBalanced,
    NotSurplus,
    NumericalFailure,
    ProjsumError,
    SchemaError,
)
from .isotropic import (
    IsotropicResolution,
    isotropic_vector,
    support_reduction,
    symmetry_isotropic,
    zero_diagonal_resolution,
)
from .linalg import (
    ConditionReport,
    ExcessDefectSplit,
    Interval,
    Projection,
    SpectralDecomposition,
    check_decomposable,
    eig_hermitian,
    excess_defect_split,
    jacobi_eigh,
    spectral_projection,
)
from .measure import (
    INF,
    SpectralMeasure,
    commuting_cut,
    functional_traces,
    trace_section,
)
from .plans import (
    PlanNode,
    build_plan,
    halving_plan,
    ii1_plan,
    realize_plan,
    surplus_plan,
    verify_plan,
)
from .projdecomp import (
    Certificate,
    IdentityBackgroundOperator,
    ProjectionList,
    decompose_fillmore,
    decompose_identity_background,
    decompose_unit_trace,
    flatten_to_projections,
    resolution_from_projections,
    verify_sum,
)

__version__ = "0.1.0"
