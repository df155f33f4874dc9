"""Picard and Kaniel-Shinbrot on a small 2D box, then the weighted norm across c.

Run: python3 demos/small_solve.py   (about a minute)
"""

from dataclasses import replace

import numpy as np

from relboltz.cross_sections import CutoffParams, hard_ball
from relboltz.frames import Frame
from relboltz.solver import (CollisionOperator, SolveConfig, default_initial_data, ks_bracket_solve,
                             picard_solve, weighted_sup_norm)

base = SolveConfig(b=1e-3, n_x=12, n_p=12, n_t=4, L_x=2.5, L_p=5.0, rep=Frame.CM,
                   sigma=hard_ball(cutoff=CutoffParams()))

for c in (1.0, 4.0, 16.0):
    cfg = replace(base, c=c)
    op = CollisionOperator(cfg)
    f0 = default_initial_data(cfg)
    tr = picard_solve(f0, cfg, op)
    ks = ks_bracket_solve(f0, cfg, op)
    print(f"c={c:4.0f}  sweeps {tr.iterations}  norm {weighted_sup_norm(tr, cfg):.6e}  "
          f"KS gap {ks.gap:.1e}  lower >= 0: {bool(np.all(ks.lower.values >= 0))}")
