"""Flag Littlewood-Paley analysis and atomic decomposition on periodic grids."""

__version__ = "0.1.0"

from .grid import (
    Grid,
    GridError,
    SampledFunction,
    SignalError,
    SignalSpec,
    boundary_mass_fraction,
    convolve,
    inner,
    lp_norm,
    make_grid,
    synthesize,
)
from .filters import (
    FilterBank,
    FilterBankError,
    build_filter_bank,
    check_resolution_identity,
    flag_kernel_spectrum,
    kernel_space_side,
)
from .transform import (
    FlagCoefficients,
    FlagRectangle,
    analyze,
    flag_project,
    hp_norm,
    maximal_square_function,
    reconstruct,
    square_function,
)
from .maximal import MaximalConfig, SampledSet, hl_maximal, strong_maximal, superlevel
from .atoms import (
    Atom,
    AtomicDecomposition,
    DecompositionConfig,
    LevelFamily,
    RectangleAssignment,
    assign_rectangles,
    build_level_family,
    build_particle,
    decompose,
    decompose_multi,
    rect_incomparability,
)
from .validation import (
    AtomReport,
    LiftedParticle,
    check_atom_gf_bound,
    check_dR_sum,
    check_moments,
    lift_particle,
    marginalize,
    measure_dR,
    validate_decomposition,
)
from .operators import (
    MultiplierOperator,
    apply,
    build_multiplier,
    transfer_check,
    uniform_atom_test,
)
from .config import RunConfig, default_corpus, load_config
