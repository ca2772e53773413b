"""sigma^2 from the transport side.

For a probability mu, sigma^2(mu) is also the best constant in
W1(mu, nu)^2 <= 2 sigma^2 D(nu || mu).  On the discrete cube the answer is
n/4.  We estimate it by mirror ascent over nu (each W1 an exact LP) and by
a brute-force simplex grid, then compare with the route through Laplace
transforms of 1-Lipschitz functions.
"""

import numpy as np

from concmeasure import build_finite, build_hypercube, kl_divergence, w1
from concmeasure.constants import sigma_estimate_lipschitz
from concmeasure.transport import sigma_transport, transport_grid_oracle

# a tiny W1 example with its certificate
line = build_finite("abc", [[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1 / 3] * 3)
plan = w1(line, [1, 0, 0], [0, 0.5, 0.5])
print("W1 =", plan.value, " dual potential =", plan.potential, " gap =", plan.gap)
print(plan.to_csv(), end="")
print("D(nu || mu) =", kl_divergence([0, 0.5, 0.5], line.weights))

print("\nn  transport-route  Lipschitz-route  exact n/4")
for n in (1, 2, 3):
    cube = build_hypercube(n)
    t = sigma_transport(cube, restarts=8, seed=0, grid_oracle=False)
    lip = sigma_estimate_lipschitz(cube, restarts=8, seed=0)
    print(f"{n}  {t.lower:15.8f}  {lip.lower:15.8f}  {n / 4:9.4f}")

# the sup is approached only as nu -> mu: the grid oracle sees this too
val, nu = transport_grid_oracle(build_hypercube(1), step=0.005)
print("\ngrid oracle on the two-point space:", round(val, 6), "at nu =", np.round(nu, 3))

# an unbalanced two-point law has a smaller constant than its variance bound 1/4
skew = build_finite([0, 1], [[0, 1], [1, 0]], [0.2, 0.8])
print("Bernoulli(0.2):", round(sigma_transport(skew, restarts=4).lower, 6),
      "vs (1 - 2p) / (2 log((1 - p)/p)) =", round(0.6 / (2 * np.log(4)), 6))
