#!/usr/bin/env python3
# Spectral radii of open quantum baker's maps next to the pressure reference.

from fuplab.baker import OqmSpec, gap_experiment, spectral_radius

t = gap_experiment(3, (0, 2), [3 ** k for k in range(2, 8)])
print("mid-third alphabet, smooth cutoff")
for row in t.rows:
    print(f"  N={row['N']:5d}  radius={row['radius']:.8f}  pressure ref={row['pressure_ref']:.3f}")
print(f"flags: {t.flags}")

t = gap_experiment(8, (0,), [8, 64, 512])
radii = ", ".join(f"{r['radius']:.3e}" for r in t.rows)
print(f"\nsingle letter, M=8: radii {radii}"
      f" vs pressure ref {t.references['pressure']:.4f}")

# The matrix-free solver against the dense one.
spec = OqmSpec(4, (0, 2), 2048)
k = spectral_radius(spec, "krylov")
d = spectral_radius(spec)
print(f"\nM=4, A={{0,2}}, N=2048: krylov {k.spectral_radius:.12f} (residual {k.residual:.1e},"
      f" {k.restarts} restarts), dense {d.spectral_radius:.12f}")

# With the full alphabet and a flat cutoff the map is unitary.
u = spectral_radius(OqmSpec(3, (0, 1, 2), 243, "sharp_one"))
print(f"unitary case radius {u.spectral_radius:.15f}")
