"""Generalized hyperbolic distributions, their Stein operators and diagnostics."""

__version__ = "0.1.0"

from .distributions import (GHParams, GIGParams, SampleSet, gh_cdf, gh_log_pdf,  # noqa: E402
                            gh_mean, gh_mgf, gh_pdf, gh_sample, gh_variance, gig_pdf,
                            gig_sample)
from .numerics import QuadratureConfig, RandomStream  # noqa: E402

__all__ = [
    "GHParams", "GIGParams", "SampleSet", "QuadratureConfig", "RandomStream",
    "gh_pdf", "gh_log_pdf", "gh_cdf", "gh_mgf", "gh_mean", "gh_variance",
    "gh_sample", "gig_pdf", "gig_sample",
]
