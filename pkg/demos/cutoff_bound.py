"""Where the sphere of directions fills the cut-off set, and a tuple for which
the cruder closed-form speed is too small.

Run: python3 demos/cutoff_bound.py
"""

import numpy as np

from relboltz.cross_sections import CutoffParams, c_star_search, cutoff_measure
from relboltz.verify import CRUDE_BOUND_COUNTEREXAMPLE

rng = np.random.default_rng(3)
trivial = 0
for _ in range(20):
    p, q = 2.0 * rng.standard_normal(3), 2.0 * rng.standard_normal(3)
    rep = c_star_search(p, q, 10.0, CutoffParams(), x=rng.standard_normal(3), n_omega=2000)
    trivial += rep.c_star == rep.c_star_grid == 2.0 ** -6
print(f"{trivial}/20 random tuples are inside the cut-off set at every grid speed")

# the drift term of h_c is small only when x + t(p_hat - q_hat) nearly vanishes
ce = CRUDE_BOUND_COUNTEREXAMPLE
par = CutoffParams(B=ce["B"])
rep = c_star_search(ce["p"], ce["q"], ce["T"], par, x=ce["x"], n_omega=20_000)
print(f"counterexample: c_* = {rep.c_star:.3f}, analytic bound {rep.analytic_bound:.3f}, "
      f"crude closed form {rep.crude_bound:.3f}")
for c in (rep.crude_bound, 0.5 * (rep.crude_bound + rep.c_star), 1.01 * rep.c_star):
    m = cutoff_measure(ce["x"], ce["p"], ce["q"], ce["T"], c, par, n_samples=100_000)
    print(f"  measure at c = {c:6.3f}: {m:.4f}")
