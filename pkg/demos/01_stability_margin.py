"""How well can one static gain do on a whole parameter set?

For x+ = a x + b u + w with (a, b) only known to lie in a polygon, the gain
u = k x gives closed-loop eigenvalue a + b k. The stability margin is the
best worst case over the set. Below 1 the set is strongly stabilizable.
"""

import numpy as np

from palc import polytope2d as geo
from palc.margin import box_margin, deadbeat_max_gain, stability_margin
from palc.oracle import brute_margin

wide = geo.from_box(-3, 3, 0.1, 3)
res = stability_margin(wide)
print("wide box   a in [-3, 3], b in [0.1, 3]")
print(f"  lambda = {res.lam:.4f} at K = {res.gain:.4f}")
print(f"  k_max  = {deadbeat_max_gain(wide):.1f}   (largest deadbeat gain |a/b|)")
print("  no static gain stabilizes every member, so we must learn first\n")

narrow = geo.from_box(1, 3, 1, 2)
res = stability_margin(narrow)
print("narrow box a in [1, 3], b in [1, 2]")
print(f"  lambda = {res.lam:.6f} at K = {res.gain:.6f}")
print(f"  closed form on the bounding box: {box_margin(geo.bounding_box(narrow)).lam:.6f}")

# the brute grid is the slow reference the exact solver is tested against
ref = brute_margin(narrow, -5, 5, 1e-4)
print(f"  grid search over k, step 1e-4:  {ref:.6f}\n")

# worst-case eigenvalue as a function of k: convex, piecewise linear
ks = np.linspace(-3, 1, 9)
worst = [np.abs(narrow.vertices[:, 0] + narrow.vertices[:, 1] * k).max() for k in ks]
print("  k      max |a + b k|")
for k, f in zip(ks, worst):
    bar = "#" * int(round(4 * f))
    print(f"  {k:5.1f}  {f:6.3f} {bar}")
