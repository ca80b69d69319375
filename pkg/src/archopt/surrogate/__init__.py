"""Gaussian-process surrogate models with hierarchical mixed-discrete kernels."""
from .gp import GPFitError, HierarchicalGP
from .kernels import (
    MixedKernel, ehh_correlation, exp_onehot_hier_correlation, gower_hier_distance,
    hypersphere_matrix,
)

__all__ = [
    "HierarchicalGP", "GPFitError", "MixedKernel", "gower_hier_distance",
    "exp_onehot_hier_correlation", "ehh_correlation", "hypersphere_matrix",
]
