"""A single collision seen through both relativistic maps and the Newtonian one.

Run: python3 demos/kinematics_tour.py
"""

import numpy as np

from relboltz.frames import cm_post_collision, gs_jacobian, gs_post_collision, newton_post_omega
from relboltz.kinematics import conservation_residual, invariants, moller_velocity, scattering_angle

p = np.array([0.8, -0.3, 0.5])
q = np.array([-0.4, 0.9, 0.1])
omega = np.array([1.0, 2.0, -2.0]) / 3.0

print(f"{'c':>6} {'g':>10} {'|GS - Newton|':>14} {'theta_CM':>9} {'residual':>9} {'v_c':>8}")
for c in (1.0, 4.0, 16.0, 64.0):
    inv = invariants(p, q, c)
    po, qo, a, _ = gs_post_collision(p, q, omega, c)
    pn, qn = newton_post_omega(p, q, omega)
    pc, qc = cm_post_collision(p, q, omega, c)
    diff = np.linalg.norm(po - pn) + np.linalg.norm(qo - qn)
    res = max(conservation_residual(p, q, po, qo, c), conservation_residual(p, q, pc, qc, c))
    print(f"{c:6.0f} {float(inv.g):10.6f} {diff:14.3e} {scattering_angle(p, q, pc, qc, c):9.4f} "
          f"{float(res):9.1e} {float(moller_velocity(p, q, c)):8.5f}")

# the GS difference falls by ~4x per doubling of c; g tends to |p - q|
print("|p - q| =", np.linalg.norm(p - q))
print("GS Jacobian at c=1:", gs_jacobian(p, q, omega, 1.0))
