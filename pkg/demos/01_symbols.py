"""The toy quadratic form and why it keeps Fourier coefficients nonnegative.

The projected symbol has constant rows, each nonnegative on the sector
(2-D) or the cone E (3-D) and zero elsewhere.  Its columns are
divergence free, so the toy nonlinearity stays in the incompressible
subspace.
"""

import numpy as np

from toyns import make_lattice, toy_matrix, verify_positivity

for xi in [(1, -1), (1, 1), (2, -1, -2), (1, -1, -1)]:
    print(f"xi = {xi}:")
    print(np.array2string(toy_matrix(xi), precision=4))

print()
for dim, N, h in ((2, 128, 1 / 16), (3, 32, 1 / 8)):
    rep = verify_positivity(make_lattice(dim, N, h), dim, 200_000, rng=0)
    print(rep.to_text())
    print()
