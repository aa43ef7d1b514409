"""
Point masses on the sphere
==========================

Along a geodesic of point masses, tangent vectors are measures on tangent
planes.  Each leg of the scheme pulls atoms back with the inverse
differential of the exponential map; the composition converges to
Riemannian parallel transport at first order in ``1/Q``.
"""

import numpy as np

from wptlab.delta_scheme import DeltaGeodesic, run_delta_scheme
from wptlab.scenarios import sphere_delta_default, torus_delta

m, x, v, nu = sphere_delta_default()
print("arc length:", np.linalg.norm(v), " atoms:", len(nu))

errs = []
for Q in (4, 8, 16, 32, 64, 128):
    errs.append(run_delta_scheme(DeltaGeodesic(m, x, v, Q), nu)["err"])
    print(f"Q={Q:4d}  err={errs[-1]:.4e}")
print("successive ratios:", np.round(np.array(errs[1:]) / errs[:-1], 4))

###############################################################################
# On the flat torus every leg map is the identity in the chart, so the
# scheme is exact for every ``Q``.

mt, xt, vt, nut = torus_delta()
print("torus:", [run_delta_scheme(DeltaGeodesic(mt, xt, vt, Q), nut)["err"] for Q in (1, 5, 64)])
