"""The data family has a large B^-1_inf,inf norm, growing like (-log eps)^(1/5).

The 3-D profile sits near xi3 = +/- 1/eps, beyond any desk-size lattice
for small eps, so the norm is evaluated by quadrature in the profile
variables.
"""

import math

from toyns import CGSpec, ProfileSpec
from toyns.initdata import cg_heat_besov_minus1

for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    spec = CGSpec(eps, 0.5, ProfileSpec((0.6, -0.6, 0.6), 0.3))
    v = cg_heat_besov_minus1(spec)
    print(f"eps = {eps:7.0e}: heat B^-1 = {v:.5f}, ratio to (-log eps)^(1/5) = {v / (-math.log(eps)) ** 0.2:.5f}")
