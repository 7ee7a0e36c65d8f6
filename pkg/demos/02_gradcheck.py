"""Hand-written reverse mode against central differences.

Every stage of the front-end has an explicit backward pass. Here each
component's analytic gradient is compared with a finite-difference estimate
on a small random configuration.
"""

from lmfcc.autodiff import fd_check
from lmfcc.constraints import COMPONENTS

for component in COMPONENTS:
    errs = [fd_check(component, seed) for seed in range(5)]
    print(f"{component:8s} worst relative error over 5 seeds: {max(errs):.2e}")
