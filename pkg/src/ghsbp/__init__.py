"""Bayesian estimation of large Markov transition matrices under the
generalized hierarchical stick-breaking prior."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    DegenerateKnotError,
    DomainError,
    EnvelopeViolation,
    GHSBPError,
    InputError,
    ProposalLimitError,
    SweepError,
)
from .gibbs import GibbsState, Hyperparams, PosteriorSummary, TransitionCounts, run  # noqa: E402
from .markov_sim import GeometricChainSpec, Variant, count_transitions, mle_tpm, simulate_chain, true_tpm  # noqa: E402
from .evaluation import EvalReport, compare_methods, mae  # noqa: E402
from .tilted_gamma import TiltedGammaParams, sample_tilted_gamma  # noqa: E402

__all__ = [
    "__version__",
    "GHSBPError",
    "DomainError",
    "BracketError",
    "DegenerateKnotError",
    "EnvelopeViolation",
    "ProposalLimitError",
    "SweepError",
    "InputError",
    "Hyperparams",
    "TransitionCounts",
    "GibbsState",
    "PosteriorSummary",
    "run",
    "Variant",
    "GeometricChainSpec",
    "simulate_chain",
    "count_transitions",
    "true_tpm",
    "mle_tpm",
    "EvalReport",
    "compare_methods",
    "mae",
    "TiltedGammaParams",
    "sample_tilted_gamma",
]
