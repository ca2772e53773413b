"""Conditioning the uniform cube on a thin chain.

The chain 0000 -> 1000 -> 1100 -> ... -> 1111 carries mass (n+1)/2^n.  Under
the conditioned measure the coordinate count is uniform on {0, ..., n}, so its
variance grows like n^2 while the cube's own subgaussian constant is only n/4.
The ratio grows like log(1/mu(A)), which is the price of restriction.
"""

import math

import numpy as np

from concmeasure import build_chain_subset, build_hypercube, restrict
from concmeasure.constants import chain_field, log_e_over, variance

print(f"{'n':>3} {'mu(A)':>12} {'Var on A':>10} {'sigma2(cube)':>13} {'ratio':>8} {'log(e/mu)':>10}")
for n in (2, 4, 8, 12, 16):
    cube = build_hypercube(n)
    sub, mass = restrict(cube, build_chain_subset(n))
    var = variance(chain_field(n), sub.weights)
    sigma2 = n / 4
    print(f"{n:3d} {mass:12.3e} {var:10.4f} {sigma2:13.2f} {var / sigma2:8.3f} {log_e_over(mass):10.3f}")

# the ratio Var/sigma2 tracks log(1/mu(A)) up to a constant
n = 16
mass = (n + 1) / 2 ** n
print("\nlower bound on the restricted constant, n = 16:",
      round((n / 4) * math.log(1 / mass) / (3 * math.log(2)), 4), "<=", n * n / 12)

# the chain field really is 1-Lipschitz for the Hamming metric on A
sub, _ = restrict(build_hypercube(6), build_chain_subset(6))
f = chain_field(6)
print("max slope of the chain field on A:",
      np.max(np.abs(f[:, None] - f[None, :])[~np.eye(7, dtype=bool)] / sub.distance[~np.eye(7, dtype=bool)]))
