"""Sparse eigenvalues, restricted-eigenvalue checks and their conversions."""
from .certificates import ConditionCertificate, ConditionKind, Status
from .restricted import (REEstimate, SearchConfig, check_lower_re, check_upper_re, lower_re_margin,
                         lre_to_re, re_constant, re_to_lre, upper_re_margin)
from .sensitivity import cone_ladder, lq_sensitivity
from .sparse import SparseEigResult, SparseMode, sparse_eig
from .transfer import TransferResult, delta_sup_norm, deterministic_re_transfer

__all__ = [
    "ConditionCertificate", "ConditionKind", "REEstimate", "SearchConfig", "SparseEigResult",
    "SparseMode", "Status", "TransferResult", "check_lower_re", "check_upper_re", "cone_ladder",
    "delta_sup_norm", "deterministic_re_transfer", "lower_re_margin", "lq_sensitivity", "lre_to_re",
    "re_constant", "re_to_lre", "sparse_eig", "upper_re_margin",
]
