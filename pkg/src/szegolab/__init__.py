"""Desk-scale laboratory for Szego-type spectral limits of lattice Schrodinger operators."""

__version__ = "0.1.0"

from .errors import ConfigError, SzegoError
from .lattice import (
    LatticeBox,
    Potential,
    SymmetricOperator,
    assemble_hamiltonian,
    assemble_laplacian,
    count_below,
    count_below_closed_form,
    diagonal_operator,
    identity_operator,
    potential_value,
    truncation_radius,
    trust_limit,
)
from .spectral import (
    CountingFunction,
    SpectralData,
    compress_below,
    counting,
    counting_function,
    eigendecompose,
    gap_count,
    hamiltonian_spectrum,
    matrix_function,
    potential_resolvent_trace,
    resolvent_power_trace,
    trace_function,
)
from .symbols import (
    ToroidalSymbol,
    class_probe,
    compose,
    compose_oracle,
    constant_symbol,
    decay_fit,
    dequantize,
    diagonal_symbol,
    difference_op,
    make_named_symbol,
    power_symbol_expansion,
    quantize,
    quantize_raw,
    restrict_box,
    shifted_cosine_symbol,
    symbol_from_function,
    symmetry_defect,
    trig_poly_symbol,
    x_derivative,
)
from .szego import (
    SzegoSample,
    TestFunction,
    commutator_condition_norm,
    convergence_sweep,
    default_kappa,
    lhs_ratio,
    trace_inequality_check,
    poly_of_quantized,
    rhs_multiplication,
    rhs_symbol_average,
)
from .tauberian import (
    IndexEstimate,
    StepFunction,
    kernel_transform,
    kernel_transform_quadrature,
    resolvent_ratio,
    weighted_resolvent_ratio,
    matushevskaya_indices,
    mult_continuity_probe,
    normalized_trace_comparison,
    step_from_potential,
    step_from_spectrum,
)
from .experiments import (
    ExperimentConfig,
    Report,
    build_frame,
    run_experiment,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
