"""Set-membership identification with a bounded disturbance.

Every transition x -> x' under u confines (a, b) to the slab
|x' - a x - b u| <= eta. Intersecting slabs shrinks the uncertainty
polygon. Large, sign-alternating inputs shrink it fastest.
"""

import numpy as np

from palc import polytope2d as geo
from palc.consistent import initial_state, slab_from_observation, update
from palc.margin import stability_margin

a_true, b_true, eta = 2.0, 0.5, 1.0
rng = np.random.default_rng(0)


def identify(inputs, label):
    st = initial_state(geo.from_box(-3, 3, 0.1, 3))
    x = 1.0
    print(label)
    for u_of_x in inputs:
        u = u_of_x(x)
        w = rng.uniform(-eta, eta)
        x_next = a_true * x + b_true * u + w
        st = update(st, slab_from_observation(x, u, x_next, eta))
        bb = geo.bounding_box(st.polytope)
        print(
            f"  x={x:9.2f} u={u:9.2f}  a in [{bb.l_a:6.3f}, {bb.u_a:6.3f}]"
            f"  b in [{bb.l_b:6.3f}, {bb.u_b:6.3f}]  lambda={stability_margin(st.polytope).lam:.3f}"
        )
        x = x_next
    assert geo.contains(st.polytope, (a_true, b_true))
    print()


identify([lambda x: 0.0] * 4, "no input: only a is learned, slowly")
identify([lambda x, s=s: s * 7.5 * x for s in (1, -1, 1, -1)], "alternating high gain, +-7.5 x")
