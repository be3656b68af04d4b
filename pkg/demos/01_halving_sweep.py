"""
Induction with a limit step
===========================

The oracle below always moves halfway to 1, so successor steps alone never
get there.  The sweep notices the stall, certifies the bracket up to the
extrapolated limit and jumps.
"""

from realind import AffineMap, ConstantStep, check_trace, sweep

unit = "0 <= x /\\ x <= 1"

# halfway to 1 from wherever we are: c -> (1 + c) / 2
trace = sweep(unit, 0.0, 1.0, AffineMap(1, 2))
print(trace.status, "ordinal", trace.ordinal)
for node in trace.nodes[:4]:
    print(f"  {node.kind:9s} [{node.frm:.6f}, {node.to:.6f}]")
print("  ...")
last = trace.nodes[-1]
print(f"  {last.kind:9s} [{last.frm!r}, {last.to!r}]  stalled steps {last.stall['last_eps'][-1]:.1e}")

# fixed steps need no limit at all
print(sweep(unit, 0.0, 1.0, ConstantStep(0.25)).ordinal)

# a property that stops holding: the sweep reports where
bad = sweep("x <= 0.5", 0.0, 1.0, ConstantStep(0.4))
print(bad.status, "at", bad.failed_at, "-", bad.reason)

# replay from the JSON form
print(check_trace(trace.to_json()).verdict)
