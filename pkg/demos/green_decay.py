"""Green functions of the massive operator and their decay.

Prints the dyadic-annulus profile of G_T in two and three dimensions, the
Harnack ratio of G_T over a ladder of radii, and the growth in T of the
convolution of the reference envelopes. Run:

    python3 demos/green_decay.py
"""
import numpy as np

from latthom.environment import SELF_DUAL_LAW, StreamKey, sample_environment
from latthom.green import (convolution_scaling, decay_profile, green_function, harnack_profile,
                           harnack_radii)
from latthom.lattice import TorusLattice

for d, T, n in ((2, 256, 128), (3, 16, 32)):
    a = sample_environment(SELF_DUAL_LAW, TorusLattice(d, n), StreamKey(3))
    G = green_function(a, T, (0,) * d)
    print(f"d = {d}, T = {T}, n = {n}: G(0,0) = {G.values[(0,) * d]:.4f},"
          f" mass defect {G.mass_defect():.1e}")
    prof = decay_profile(G)
    print("    R_lo   R_hi      sup G   envelope     ratio")
    for row in prof.rows:
        print(f"  {row[0]:5.0f}  {row[1]:5.0f}  {row[2]:9.3e}  {row[5]:9.3e}  {row[6]:8.3f}")
    radii = harnack_radii(n)
    print("  Harnack ratio sup / L2-average:",
          ", ".join(f"R={R}: {h:.3f}" for R, h in zip(radii, harnack_profile(G, a, radii))))
    print()

print("Convolution of reference envelopes: slope in T")
for d, ladder in ((2, (64, 256, 1024)), (3, (64, 128, 256))):
    res = convolution_scaling(d, ladder)
    vals = ", ".join(f"{v:.4g}" for v in res.values)
    print(f"  d = {d}: values {vals} -> slope {res.slope:.3f}")
res = convolution_scaling(5, (16, 64, 256), radius=8, strict=False)
print(f"  d = 5 (radius 8): values {np.round(res.values, 2)}; ratio max/min"
      f" {res.values.max() / res.values.min():.2f}")
