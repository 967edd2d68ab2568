from .dilation import DilationReport, ProjectiveDilation, build_dilation, verify_dilation
from .exceptions import (
    DilationError,
    DimensionCapError,
    DiscriminationError,
    MeasurementError,
    NumericsError,
    StateSetError,
    SymmetryError,
)
from .measurement import (
    FAILURE,
    DominanceResult,
    MinimumErrorResult,
    OimCertificate,
    OimSolution,
    Povm,
    avg_correct,
    avg_failure,
    check_me_optimality,
    dominance_check,
    minimum_error,
    outcome_probs,
    scaled_minimum_error,
    solve_oim,
    srm,
    unamb_threshold,
    validate_povm,
)
from .states import AguStateSet, gram, make_agu_set, make_cyclic_pure_set
from .symmetry import (
    AbelianGroup,
    CharacterBasis,
    UnitaryRep,
    character_basis,
    diag_character_rep,
    make_cyclic_group,
    make_rep,
    rep_from_generator,
    rep_from_generators,
    shift_rep,
    validate_rep,
)

__version__ = "1.0.0"
__all__ = [
    "AbelianGroup",
    "UnitaryRep",
    "CharacterBasis",
    "make_cyclic_group",
    "make_rep",
    "rep_from_generator",
    "rep_from_generators",
    "shift_rep",
    "diag_character_rep",
    "validate_rep",
    "character_basis",
    "AguStateSet",
    "make_agu_set",
    "make_cyclic_pure_set",
    "gram",
    "FAILURE",
    "Povm",
    "MinimumErrorResult",
    "DominanceResult",
    "OimCertificate",
    "OimSolution",
    "validate_povm",
    "outcome_probs",
    "avg_correct",
    "avg_failure",
    "srm",
    "check_me_optimality",
    "minimum_error",
    "scaled_minimum_error",
    "solve_oim",
    "unamb_threshold",
    "dominance_check",
    "ProjectiveDilation",
    "DilationReport",
    "build_dilation",
    "verify_dilation",
    "DiscriminationError",
    "NumericsError",
    "DimensionCapError",
    "SymmetryError",
    "StateSetError",
    "MeasurementError",
    "DilationError"
]
