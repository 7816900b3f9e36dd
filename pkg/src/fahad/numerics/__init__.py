"""Shared numerical kernels."""

from .bessel import bessel_j, bessel_j_orders, truncation_order, truncation_orders
from .linalg import EigenPair, hermitian_evd, hermitianize, inverse_sqrt_psd, pseudo_inverse
from .peaks import GridAxis, SpectrumGrid, find_peaks, local_maxima

__all__ = [
    "EigenPair",
    "GridAxis",
    "SpectrumGrid",
    "bessel_j",
    "bessel_j_orders",
    "find_peaks",
    "hermitian_evd",
    "hermitianize",
    "inverse_sqrt_psd",
    "local_maxima",
    "pseudo_inverse",
    "truncation_order",
    "truncation_orders",
]
