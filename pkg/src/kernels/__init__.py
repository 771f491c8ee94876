"""Heat kernels, jump kernels and their quantitative bounds"""

from .bounds import (
    bound_ratio,
    kernel_bound,
    kernel_bound_report,
    kernel_bound_sweep,
    levy_integral_check,
    levy_power_ratio,
)
from .heat_kernel import (
    KernelQuery,
    KernelValue,
    chapman_kolmogorov_defect,
    heat_kernel,
    jump_kernel,
    kernel_mass,
    kernel_scale,
    kernel_with_operator_powers,
    product_kernel,
    stable_jump_constant,
)

__all__ = [
    'bound_ratio', 'kernel_bound', 'kernel_bound_report', 'kernel_bound_sweep',
    'levy_integral_check', 'levy_power_ratio', 'KernelQuery', 'KernelValue',
    'chapman_kolmogorov_defect', 'heat_kernel', 'jump_kernel', 'kernel_mass', 'kernel_scale',
    'kernel_with_operator_powers', 'product_kernel', 'stable_jump_constant',
]
