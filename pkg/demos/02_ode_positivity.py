"""
Certified positivity for f' = -alpha f + beta
=============================================

Each induction step carries an enclosure of the solution and the bound
f0 (1 - h alpha) + h (beta - delta) >= 0, which check_trace recomputes.
"""

import numpy as np

from realind import Ivp, check_trace, solve_rk4, verify_nonnegative

ivp = Ivp.from_text("1", "1", a=0, b=0, T=10)
trace = verify_nonnegative(ivp)
print(trace.status, len(trace.nodes), "steps,", check_trace(trace.to_json()).verdict)

# enclosures against the closed form 1 - exp(-t)
for node in trace.nodes[::20]:
    lo, hi = node.cert.data["f1"]
    t = node.to
    print(f"t={t:5.2f}  [{lo:.12f}, {hi:.12f}]  exact {1 - np.exp(-t):.12f}")

ts, fs = np.array(solve_rk4(ivp, 1e-3)).T
print("rk4 min", fs.min(), " max error", np.max(np.abs(fs - (1 - np.exp(-ts)))))

# time-varying coefficients work the same way
wavy = Ivp.from_text("1 + sin(3*x)", "0.05 + x*x", a=0, b=0.2, T=4)
tr = verify_nonnegative(wavy)
print("wavy:", tr.status, len(tr.nodes), "steps, smallest lower bound",
      min(n.cert.data["f1"][0] for n in tr.nodes))

# beta must be positive: this is refused before any step is certified
try:
    verify_nonnegative(Ivp.from_text("0", "-1", T=1))
except ArithmeticError as exc:
    print("refused:", exc)
