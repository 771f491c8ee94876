"""Bernstein functions, scaling certificates and the anisotropy structure"""

from .anisotropy import Anisotropy
from .functions import BernsteinFunction, DensityTable, IntegrabilityCertificate, LevyKind, kappa
from .scaling import (
    ScalingCertificate,
    certificate_for,
    derivative_ratio_check,
    scaling_certificate,
    shape_check,
)

__all__ = [
    'Anisotropy', 'BernsteinFunction', 'DensityTable', 'IntegrabilityCertificate', 'LevyKind',
    'kappa', 'ScalingCertificate', 'certificate_for', 'derivative_ratio_check',
    'scaling_certificate', 'shape_check',
]
