"""
Closed predicates and three-valued evaluation
=============================================
"""

from realind import BisectionBudget, Interval, eval_pred, parse, to_text
from realind.predicates import EvalStats, GrammarError

p = parse("forall t in [0,1]: t*(1 - t) <= 0.3")
stats = EvalStats()
print(to_text(p), "->", eval_pred(p, {}, stats=stats).name, "depth", stats.max_depth)

# touching the bound exactly cannot be proved by bisection
tight = parse("forall t in [0,1]: t*(1 - t) <= 0.25")
print(to_text(tight), "->", eval_pred(tight, {}, BisectionBudget(12, 4000)).name)

unit = parse("0 <= x /\\ x <= 1")
for lo, hi in [(0.2, 0.8), (1.5, 2.0), (0.5, 1.5)]:
    print(f"x in [{lo}, {hi}]:", eval_pred(unit, {"x": Interval(lo, hi)}).name)

for text in ["x < 1", "not x <= 1", "exists t in [0,1]: t <= x"]:
    try:
        parse(text)
    except GrammarError as exc:
        print(f"{text!r}: {exc}")
