"""
Distance from the start under a bounded turn rate
=================================================

Constant speed v, turn rate |theta'| <= rho.  Turning at full rate gives the
chord (2v/rho)|sin(rho t/2)|; random bang-bang controls never get closer
before t = 2/rho.
"""

import numpy as np

from realind import (Control, Params, adversarial_search, envelope,
                     envelope_comparison_via_positivity, simulate)

p = Params(v=1.0, rho=1.0)

circle = simulate(p, Control.constant(p.rho, 2.0), 2.0, 1e-4)
print("circle vs envelope:", np.max(np.abs(circle.margins())))

line = simulate(p, Control.constant(0.0, 2.0), 2.0, 1e-3)
print("straight line margin at t=1:", line.margins()[1000], "=", 1 - envelope(p, 1.0))

rep = adversarial_search(p, n=1000, seed=42, T=1.999)
print(f"min R - F over {rep.n} controls: {rep.min_margin:.2e} at t={rep.argmin_t:.3f}")
print(f"max |alpha'| {rep.polar.max_abs_alphap:.6f}, min R' {rep.polar.min_Rp:.4f}")

# past 2/rho nothing is proved; the search still runs
wide = adversarial_search(p, n=300, seed=1, T=6.0, extended=True)
print(f"extended horizon min margin: {wide.min_margin:.2e} at t={wide.argmin_t:.3f}")

# the comparison R >= F_eps recast as S' = -A S + B
zig = Control(((0.6, 1.0), (0.7, -1.0), (0.6, 1.0)))
res = envelope_comparison_via_positivity(p, zig, eps=0.1, T=1.9)
print("zig-zag:", res.trace.status, "min A", res.A.min(), "min B", res.B.min(),
      "min S", res.S.min())

with open("zigzag.csv", "w") as fh:
    fh.write(simulate(p, zig, 1.9, 1e-2).to_csv())
