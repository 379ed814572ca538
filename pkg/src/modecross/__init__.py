"""Transition matrices for two-fold eigenvalue crossings of matrix pencils."""

from .adiabatic import (
    AdiabaticMode,
    exclusion_radius,
    higher_terms,
    leading_mode,
    phase_integral,
    rearranged_outer,
    sample_mode,
    singularity_estimate,
)
from .app import (
    ModelConfig,
    RunReport,
    analyze,
    load_config,
    model_dirac,
    model_dirac_tanh,
    model_landau_zener,
    model_spectator,
    render_json,
    tanh_taylor_coeffs,
)
from .crossing import (
    AVOIDED,
    UNAVOIDABLE,
    CrossingData,
    build_table,
    crossing_parameters,
    eig_matching_check,
    gauge_fix,
    locate_degeneracy,
    perturbed_eigs_inner,
    perturbed_eigs_outer,
)
from .errors import (
    AsymptoticsWarning,
    ConfigError,
    DefectivePencilError,
    DegeneracyError,
    DegenerateSlopeError,
    DomainError,
    InterpretationError,
    MetricDegenerateError,
    ModeCrossError,
    ModelError,
    MultipleCrossingsError,
    NoCrossingError,
    PrecisionError,
    ProjectionWarning,
    SpectralGapError,
    TrackingError,
    ValidityError,
)
from .inner import (
    InnerSolution,
    asymptote_values,
    inner_asymptote,
    inner_full,
    inner_leading,
    sample_inner,
)
from .oracle import (
    EmpiricalTransition,
    SweepResult,
    TrajectoryRecord,
    empirical_transition,
    hbar_sweep,
    integrate,
    project_onto_modes,
)
from .pcf import PcfValue, complex_gamma, dnu_asymptotic, dnu_pair, xi
from .pencil import (
    ModeTable,
    PencilModel,
    SpectralFrame,
    conversion_coeffs,
    eval_pencil,
    frame_at,
    g_inner,
    matrix_elements,
    solve_pencil,
    track_modes,
)
from .transition import (
    TransitionMatrix,
    asymptotic_limits,
    match_coefficients,
    polar_form,
    reflection_transmission,
    renumbered,
    transition_from_matching,
    transition_matrix,
)

__version__ = "0.1.0"
