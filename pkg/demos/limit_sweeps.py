"""Component-wise Newtonian-limit rates over c = 4..256.

Run: python3 demos/limit_sweeps.py
"""

from relboltz.limit_harness import Component, SampleSpec, component_sweep

C_LIST = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0]

for kind in Component:
    res = component_sweep(kind, C_LIST, SampleSpec(n=1000, seed=1))
    vals = " ".join(f"{v:.2e}" for v in res.values)
    tail = f"slope {res.fit.slope:.3f} (r2 {res.fit.r2:.4f})" if res.fit else "measure table"
    print(f"{kind.value:20s} {vals}  {tail}")
