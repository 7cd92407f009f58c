"""Hyponormality thresholds for Toeplitz operators with symbol z^n + C|z|^s
on weighted Bergman spaces, via the norm of a banded Jacobi matrix."""
from .errors import (
    AtomAtOne,
    CancellationWarning,
    DegenerateDenominator,
    EmptySupport,
    HypothesisViolation,
    HyponormError,
    NonConvergence,
    NonConvergenceWarning,
    NonProbabilityMass,
    QuadratureNonConvergence,
    SupportBelowOne,
    ZeroVector,
)
from .hyponormality import (
    CoefficientVector,
    HyponormalityReport,
    classify,
    commutator_form,
    oracle_crosscheck,
    rayleigh_kappa,
    threshold,
)
from .jacobi import (
    ConstantChain,
    JacobiOperator,
    SymbolParams,
    asymptote,
    build_truncated,
    decouple,
    entry,
)
from .measures import (
    AreaMeasure,
    Atoms,
    BetaWeight,
    MeasureSpec,
    MomentProvider,
    SampledDensity,
    ValidationReport,
    moment,
    projection_coefficient,
    subexponential_diagnostic,
    symmetrized_pair_integral,
    validate,
)
from .spectral import (
    NormEstimate,
    SpectrumScan,
    TruncationPolicy,
    chain_extreme_eigenvalue,
    essential_edge,
    operator_norm,
    spectrum_scan,
)

__version__ = "0.1.0"

__all__ = [
    "AreaMeasure",
    "asymptote",
    "AtomAtOne",
    "Atoms",
    "BetaWeight",
    "build_truncated",
    "CancellationWarning",
    "chain_extreme_eigenvalue",
    "classify",
    "CoefficientVector",
    "commutator_form",
    "ConstantChain",
    "decouple",
    "DegenerateDenominator",
    "EmptySupport",
    "entry",
    "essential_edge",
    "HyponormalityReport",
    "HyponormError",
    "HypothesisViolation",
    "JacobiOperator",
    "MeasureSpec",
    "moment",
    "MomentProvider",
    "NonConvergence",
    "NonConvergenceWarning",
    "NonProbabilityMass",
    "NormEstimate",
    "operator_norm",
    "oracle_crosscheck",
    "projection_coefficient",
    "QuadratureNonConvergence",
    "rayleigh_kappa",
    "SampledDensity",
    "spectrum_scan",
    "SpectrumScan",
    "subexponential_diagnostic",
    "SupportBelowOne",
    "SymbolParams",
    "symmetrized_pair_integral",
    "threshold",
    "TruncationPolicy",
    "validate",
    "ValidationReport",
    "ZeroVector",
]
