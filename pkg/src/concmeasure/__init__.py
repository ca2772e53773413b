"""Concentration constants of finite metric probability spaces and of
restricted (conditioned) measures."""

from .constants import (PSI2_SIGMA_LOWER, PSI2_SIGMA_LOWER_PROVEN, PSI2_SIGMA_UPPER,
                        SPECTRAL_RESTRICTION_CONSTANT, SUBGAUSSIAN_RESTRICTION_CONSTANT,
                        check_restriction_subgaussian, sigma_estimate_lipschitz, sigma_f,
                        spread_estimate)
from .lipschitz import kirszbraun_extend, lip_seminorm, symmetrized_psi_norm
from .orlicz import PSI1_MOMENT_FACTOR, PSI2_MOMENT_FACTOR, lp_norm, moment_sup, psi_norm
from .reports import BoundEstimate, CheckReport
from .space import (FiniteMetricProbabilitySpace, build_chain_subset, build_finite,
                    build_hypercube, build_product, restrict)
from .spectral import DirichletForm, build_graph_form, check_poincare_spread, lambda1
from .transport import TransportPlan, check_cor44, kl_divergence, sigma_transport, w1

__all__ = [
    "BoundEstimate", "CheckReport", "DirichletForm", "FiniteMetricProbabilitySpace",
    "PSI1_MOMENT_FACTOR", "PSI2_MOMENT_FACTOR", "PSI2_SIGMA_LOWER", "PSI2_SIGMA_LOWER_PROVEN",
    "PSI2_SIGMA_UPPER", "SPECTRAL_RESTRICTION_CONSTANT", "SUBGAUSSIAN_RESTRICTION_CONSTANT",
    "TransportPlan", "build_chain_subset", "build_finite", "build_graph_form", "build_hypercube",
    "build_product", "check_cor44", "check_poincare_spread", "check_restriction_subgaussian",
    "kirszbraun_extend", "kl_divergence", "lambda1", "lip_seminorm", "lp_norm", "moment_sup",
    "psi_norm", "restrict", "sigma_estimate_lipschitz", "sigma_f", "sigma_transport",
    "spread_estimate", "symmetrized_psi_norm", "w1",
]
