#!/usr/bin/env python3
# Restriction norms ||1_X F_N 1_X|| for Cantor sets X in Z_N, N = 3^k, and the
# fitted power-law decay in N. Full and singleton alphabets bracket the answer.

import math

from fuplab.discrete_fup import cantor_discrete, fup_norm, scaling_experiment, ucp_constant

for letters in ((0, 2), (0, 1, 2), (1,)):
    e = scaling_experiment(3, letters, 1, 7)
    print(f"alphabet {letters}: beta_emp = {e.beta_emp:.6f}, max residual {e.fit.max_abs_residual:.3g}")
    if letters == (0, 2):
        for row in e.rows():
            print(f"   N={row['N']:5d}  norm={row['norm']:.8f}  ({row['method']})")

delta = math.log(2) / math.log(3)
print(f"\n1/2 - delta = {0.5 - delta:.4f}; the observed exponent sits above max(0, 1/2 - delta)")

# Beyond the dense threshold the power method takes over.
x = cantor_discrete(3, (0, 2), 9)
r = fup_norm(x, x)
print(f"\nN = 3^9: norm {r.value:.8f} by {r.method} in {r.iterations} steps, certificate {r.residual:.2e}")

# Unique continuation: how much of f with DFT in Y lives off a neighbourhood of Y.
y = cantor_discrete(3, (0, 2), 5)
for margin in (0, 1, 3):
    u = y.thicken(margin).complement()
    print(f"margin {margin}: |U| = {len(u):3d}, continuation constant {ucp_constant(y, u).value:.6f}")
