#!/usr/bin/env python3
# Build the middle-third Cantor measure, test Ahlfors-David regularity across
# scales, and look at how grid covers grow as the cell size shrinks.

import math

from fuplab.regular_sets import CantorSpec, Interval, cantor_measure, cover, cover_bound, verify_regularity

spec = CantorSpec(3, (0, 2), 8)
ms = cantor_measure(spec)
delta = spec.dimension
print(f"depth {spec.depth}: {len(ms.support)} intervals, dimension {delta:.6f}")

rep = verify_regularity(ms, delta, 12.0, 3.0 ** -8, 1.0)
print(f"sampled check over [3^-8, 1]: passed={rep.passed}, cr estimate {rep.cr_estimate:.4f}"
      f" from {rep.n_intervals} test intervals")

# A wrong dimension is caught once the constant is tight enough.
for trial in (delta - 0.2, delta, delta + 0.2):
    r = verify_regularity(ms, trial, 3.0, 3.0 ** -8, 1.0)
    print(f"  delta={trial:.3f} cr=3 -> passed={r.passed} (estimate {r.cr_estimate:.3g})")

# Cover counts against 12 cr^2 (|I|/rho)^delta.
region = Interval(0.1, 0.9)
print("\nrho       cells  bound")
for j in range(1, 9):
    rho = 3.0 ** -j
    n = len(cover(ms, region, rho, delta, rep.cr_estimate, check=False))
    print(f"3^-{j:<5d} {n:6d}  {cover_bound(region.length, rho, delta, rep.cr_estimate):8.1f}")

print(f"\ncells double when rho shrinks by 3: log(2)/log(3) = {math.log(2) / math.log(3):.6f}")
