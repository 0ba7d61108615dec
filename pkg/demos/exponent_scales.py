#!/usr/bin/env python3
# How small the guaranteed exponents are. Everything is held as a LogReal,
# so numbers like exp(-exp(5184)) survive without underflow.

from fuplab.exponents import (
    FupInputs, baker_gap_bounds, beta_fup, beta_hyperbolic, chain_for_fup, constant_chain, fit_shape_constant,
)

inp = FupInputs(0.5, 1.0, 1.0)
print(f"ln(-ln beta) uncertainty exponent: {beta_fup(inp).value}")
print(f"ln(-ln beta) hyperbolic gap:       {beta_hyperbolic(inp).value}")

c = constant_chain(0.5, 1.0, 1 / 18, 1.0)
print(f"\nchain at c1 = 1/18: L = {c.L}, ln M_freq = {float(c.M_freq.log()):.6g},"
      f" ln(-ln c4) = {float(c.c4.loglog()):.6g}")
print(f"  ln T_iter = {float(c.T_iter_log.log()):.6f}, ln(-ln beta) = {float(c.beta.loglog()):.6f}")

print("\nshape constant K' fitted to the chain with c1 = 1/(2L):")
for d in (0.2, 0.5, 0.8):
    row = []
    for cr in (1.0, 2.0, 5.0):
        ch = chain_for_fup(d, cr)
        row.append(f"{fit_shape_constant(d, cr, ch.beta.loglog()):.3f}")
    print(f"  delta={d}: {' '.join(row)}")

g = baker_gap_bounds(8, 2, 1.0)
print(f"\nM=8, |A|=2: pressure {g.pressure:.6f}")
for name, b in g.bounds.items():
    print(f"  {name:9s} applicable={b.applicable!s:5s} gain {b.improvement.scientific(4)}")
