"""Latent vector field recurrent networks on a complete latent graph."""

from .geometry import (DirectionalDerivative, VectorField, apply_dv, build_dv, commutator, div,
                       grad, is_in_vf, linear_combination, project_divergence_free)
from .transition import (Integrator, SpectrumReport, TransitionMatrix, check_normality,
                         check_stability, euler_transition, midpoint_transition, spectrum)
from .sampler import SamplerConfig, field_from_stochastic, sample_doubly_stochastic

__version__ = "0.1.0"

__all__ = [
    "DirectionalDerivative", "VectorField", "apply_dv", "build_dv", "commutator", "div", "grad",
    "is_in_vf", "linear_combination", "project_divergence_free", "Integrator",
    "SpectrumReport", "TransitionMatrix", "check_normality", "check_stability",
    "euler_transition", "midpoint_transition", "spectrum", "SamplerConfig",
    "field_from_stochastic", "sample_doubly_stochastic",
]
