#!/usr/bin/env python3
# Walk through the sawtooth multiplier construction for
# omega = exp(-a <x>^(1/2)) and check what it promises on the grid.

import math

import numpy as np

from fuplab.multiplier import (
    MASS_LOWER_CONSTANT, build_effective_multiplier, check_hilbert_bound, construct_psi, sqrt_bracket_weight,
)

sigma = 0.05
L, n = 400.0, 2 ** 18
limit = math.pi * sigma / 2

# The Hilbert bound scales linearly with the amplitude, so halve until it fits.
amp = 1.0
while True:
    w = sqrt_bracket_weight(-L, L, n, amp)
    sup = check_hilbert_bound(w)
    print(f"amplitude {amp:<8g} sup|(H Omega)'| = {sup:.6f}  (limit {limit:.6f})")
    if sup <= limit:
        break
    amp /= 2

r = build_effective_multiplier(w, sigma)
print(f"\nT = {r.T:.3f}, branch {r.branch}, k takes values {sorted({int(v) for v in r.k.values})[:6]}...")

x = r.omega.x
lo, hi = r.window()
win = (x > lo) & (x < hi)
ratio_log = r.log_omega_tilde.values[win] + w.big_omega.values[win]
print(f"max(omega_tilde - omega)            {np.max(r.omega_tilde.values - w.omega.values):.3e}")
print(f"min log(omega_tilde/omega) on window {ratio_log.min():.4f}"
      f"  vs log(sigma^6/{MASS_LOWER_CONSTANT:g}) = {math.log(sigma ** 6 / MASS_LOWER_CONSTANT):.4f}")

p = construct_psi(r)
print(f"\npsi support {p.support}, mass outside it {p.support_leakage:.3e}")

# The outer phase should cancel the linear phase up to a constant mod 2 pi.
z = 2 * math.pi * sigma * x + 2 * p.h_big_omega_tilde.values
inner = np.abs(x) <= 0.5 * L
dev = np.angle(np.exp(1j * (z[inner] - z[inner][0])))
print(f"phase spread on |x| <= {0.5 * L:g}: {np.ptp(dev):.3e} rad (jumps of k excluded by rounding mod 2 pi)")
