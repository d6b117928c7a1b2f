"""Identification of Markov-switched autoregressive systems from noisy data."""

from .decoder import (DecodedSnippet, Decoding, SnippetPlan, TransitionCounts, decode_all,
                      decode_snippet, residual, residuals, snippet_covariance, snippet_loglik,
                      snippet_plan)
from .extraction import extract_subsystems, match_to_truth, polynomial_gradient
from .model import (Dataset, NoiseSpec, SarModel, SubsystemParams, TransitionMatrix, Truth,
                    coefficient_vector, load_dataset, load_model, normal_moment, regressor,
                    save_dataset, save_model)
from .pipeline import identify, run_pipeline
from .ptm import estimate_ptm, normalized_frobenius, verify_mle_optimality
from .sigma import SigmaEstimate, estimate_sigma, objective
from .simulate import (generate_input, noise_to_output_ratio, random_transition_matrix,
                       sample_markov_chain, simulate)
from .veronese import (CorrectedMatrix, MomentStatistics, VeroneseSpec, accumulate,
                       corrected_sample_matrix, decoupling_coefficients, unbiased_power,
                       veronese_map, veronese_spec)

__all__ = [
    "CorrectedMatrix",
    "Dataset",
    "DecodedSnippet",
    "Decoding",
    "MomentStatistics",
    "NoiseSpec",
    "SarModel",
    "SigmaEstimate",
    "SnippetPlan",
    "SubsystemParams",
    "TransitionCounts",
    "TransitionMatrix",
    "Truth",
    "VeroneseSpec",
    "accumulate",
    "coefficient_vector",
    "corrected_sample_matrix",
    "decode_all",
    "decode_snippet",
    "decoupling_coefficients",
    "estimate_ptm",
    "estimate_sigma",
    "extract_subsystems",
    "generate_input",
    "identify",
    "load_dataset",
    "load_model",
    "match_to_truth",
    "noise_to_output_ratio",
    "normal_moment",
    "normalized_frobenius",
    "objective",
    "polynomial_gradient",
    "random_transition_matrix",
    "regressor",
    "residual",
    "residuals",
    "run_pipeline",
    "sample_markov_chain",
    "save_dataset",
    "save_model",
    "simulate",
    "snippet_covariance",
    "snippet_loglik",
    "snippet_plan",
    "unbiased_power",
    "verify_mle_optimality",
    "veronese_map",
    "veronese_spec",
]

__version__ = "0.1.0"
