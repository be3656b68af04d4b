import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from realind.engine import (AffineMap, ConstantStep, DslEval, GiveUp, InvalidInput, LimitNode,
                            MalformedTrace, Step, SuccessorNode, SweepPolicy, TableOracle,
                            check_trace, detect_limit, load_trace, parse_oracle, ordinal_of,
                            sweep, trace_from_json)
from realind.ordinal import compare, parse_ordinal
from realind.predicates import parse

UNIT = "0 <= x /\\ x <= 1"


def halving_to_next_integer(c, prev):
    """Halves the distance to the next integer: a limit at every integer."""
    return Step((math.floor(c) + 1 - c) / 2)


class TestSweepExamples:
    def test_halving_sequence_needs_one_limit(self):
        tr = sweep(UNIT, 0.0, 1.0, AffineMap(1, 2))
        assert tr.reached
        limits = [n for n in tr.nodes if isinstance(n, LimitNode)]
        assert len(limits) == 1 and tr.nodes[-1] is limits[0]
        assert limits[0].to == 1.0
        assert str(tr.ordinal) == "w"
        for n, node in enumerate(tr.nodes[:-1], start=1):
            assert abs(node.to - (1 - 2.0**-n)) <= 1e-12

    def test_constant_quarter_steps(self):
        tr = sweep("0 <= x /\\ x <= 2", 0.0, 1.0, ConstantStep(0.25))
        assert tr.reached and len(tr.nodes) == 4
        assert all(isinstance(n, SuccessorNode) for n in tr.nodes)
        assert str(tr.ordinal) == "4"

    def test_rejected_certificate(self):
        tr = sweep("x <= 0.5", 0.0, 1.0, ConstantStep(0.4))
        assert tr.status == "failed"
        assert tr.failed_at == 0.4
        assert len(tr.nodes) == 1 and tr.nodes[0].to == 0.4

    def test_limit_then_successors(self):
        def oracle(c, prev):
            return Step((1 - c) / 2 if c < 1 else 0.25)
        tr = sweep("0 <= x /\\ x <= 2", 0.0, 1.5, oracle)
        assert tr.reached
        assert str(ordinal_of(tr)) == "w+2"

    def test_many_limits(self):
        tr = sweep("0 <= x", 0.0, 10.0, halving_to_next_integer)
        assert tr.reached
        assert str(tr.ordinal) == "w*10"
        assert [n.to for n in tr.nodes if isinstance(n, LimitNode)] == [float(k) for k in range(1, 11)]

    def test_target_equals_start(self):
        tr = sweep(UNIT, 0.5, 0.5, ConstantStep(1))
        assert tr.reached and tr.nodes == [] and str(tr.ordinal) == "0"

    def test_overshoot_is_clipped(self):
        tr = sweep(UNIT, 0.0, 1.0, ConstantStep(0.3))
        assert tr.nodes[-1].to == 1.0
        assert tr.nodes[-1].epsilon == 1.0 - tr.nodes[-1].frm


class TestSweepErrors:
    def test_target_before_start(self):
        with pytest.raises(InvalidInput):
            sweep(UNIT, 1.0, 0.0, ConstantStep(0.1))

    def test_fails_at_start(self):
        with pytest.raises(InvalidInput):
            sweep(UNIT, 2.0, 3.0, ConstantStep(0.1))

    def test_foreign_free_variable(self):
        with pytest.raises(InvalidInput):
            sweep("x <= y", 0.0, 1.0, ConstantStep(0.1))

    def test_give_up(self):
        tr = sweep(UNIT, 0.0, 1.0, lambda c, prev: GiveUp("no idea"))
        assert tr.status == "failed" and "no idea" in tr.reason

    @pytest.mark.parametrize("eps", [0.0, -0.1, math.nan])
    def test_nonpositive_step(self, eps):
        tr = sweep(UNIT, 0.0, 1.0, lambda c, prev: Step(eps))
        assert tr.status == "failed" and tr.failed_at == 0.0

    def test_bogus_certificate_rejected(self):
        tr = sweep(UNIT, 0.0, 1.0, lambda c, prev: Step(0.5, DslEval((7.0, 8.0))))
        assert tr.status == "failed"

    def test_step_budget(self):
        tr = sweep(UNIT, 0.0, 1.0, ConstantStep(1e-3), SweepPolicy(max_steps=50))
        assert tr.status == "failed" and tr.reason == "step budget exhausted"
        assert len(tr.nodes) == 50

    def test_ordinal_budget(self):
        tr = sweep("0 <= x", 0.0, 10.0, halving_to_next_integer, SweepPolicy(max_limit_nodes=3))
        assert tr.status == "failed" and tr.reason == "ordinal budget exhausted"
        assert str(tr.ordinal).startswith("w*3")

    def test_policy_must_be_positive(self):
        with pytest.raises(ValueError):
            SweepPolicy(stall_window=0)
        with pytest.raises(ValueError):
            SweepPolicy(stall_threshold=-1.0)


class TestDetectLimit:
    policy = SweepPolicy()

    def test_geometric(self):
        hist = [(1 - 2.0**-n, 2.0**-(n + 1)) for n in range(30, 45)]
        assert detect_limit(hist, self.policy) == pytest.approx(1.0, abs=1e-15)

    def test_constant(self):
        assert detect_limit([(k * 1e-12, 1e-12) for k in range(20)], self.policy) is None

    def test_increasing(self):
        hist = [(0.0, 1e-12 * (k + 1)) for k in range(20)]
        assert detect_limit(hist, self.policy) is None

    def test_clamped_to_target(self):
        hist = [(1 - 2.0**-n, 2.0**-(n + 1)) for n in range(30, 45)]
        assert detect_limit(hist, self.policy, target=0.99) == 0.99

    def test_short_history(self):
        assert detect_limit([(0.0, 1e-12)], self.policy) is None


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 0.7), min_size=1, max_size=20))
def test_nodes_tile_the_interval(points):
    tr = sweep("0 <= x /\\ x <= 5", 0.0, 1.0, TableOracle([*points, 1.0]))
    assert tr.reached
    assert tr.nodes[0].frm == 0.0 and tr.nodes[-1].to == 1.0
    for left, right in zip(tr.nodes, tr.nodes[1:]):
        assert left.to == right.frm
        assert left.frm < left.to


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 0.5), st.floats(0.5, 3.0))
def test_deterministic(eps, target):
    a = sweep(UNIT.replace("1", "3"), 0.0, target, ConstantStep(eps))
    b = sweep(UNIT.replace("1", "3"), 0.0, target, ConstantStep(eps))
    assert a.dumps() == b.dumps()


def test_ordinal_grows_along_trace():
    tr = sweep("0 <= x", 0.0, 3.0, halving_to_next_integer)
    prefix = type(tr)(tr.prop, tr.a, tr.target, tr.policy)
    last = ordinal_of(prefix)
    for node in tr.nodes:
        prefix.nodes.append(node)
        now = ordinal_of(prefix)
        assert compare(now, last) >= 0
        last = now


@pytest.mark.parametrize("text", ["x*x <= 4.5", "sin(x) <= 1 /\\ x*(2 - x) <= 1.01",
                                  "forall t in [0,1]: t*x <= 2.5"])
def test_reached_traces_are_sound(text):
    tr = sweep(text, 0.0, 2.0, ConstantStep(0.125))
    assert tr.reached and check_trace(tr).ok
    xs = np.linspace(0.0, 2.0, 100_000)
    if text.startswith("x*x"):
        assert (xs * xs <= 4.5).all()
    elif text.startswith("sin"):
        assert ((np.sin(xs) <= 1) & (xs * (2 - xs) <= 1.01)).all()
    else:
        assert (xs <= 2.5).all()


class TestTraceFiles:
    def trace(self):
        return sweep(UNIT, 0.0, 1.0, AffineMap(1, 2))

    def test_json_fields(self):
        d = self.trace().to_json()
        for key in ("predicate", "a", "target", "policy", "nodes", "status", "ordinal", "rigorous"):
            assert key in d
        assert d["ordinal"] == "w" and d["rigorous"] is True
        assert parse_ordinal(d["ordinal"]) == self.trace().ordinal

    def test_round_trip(self, tmp_path):
        tr = self.trace()
        path = tmp_path / "t.json"
        tr.save(path)
        loaded, raw = load_trace(path)
        assert loaded.nodes == tr.nodes
        assert loaded.dumps() == tr.dumps()
        assert check_trace(path).verdict == "rigorous pass"

    def test_csv(self):
        lines = self.trace().to_csv().splitlines()
        assert lines[0] == "index,kind,from,to,epsilon,cert_kind"
        assert lines[1].startswith("0,successor,0.0,0.5,0.5,dsl")
        assert lines[-1].split(",")[1] == "limit"

    def test_widened_node_fails_there(self):
        d = self.trace().to_json()
        d["nodes"][3]["to"] = 0.95
        rep = check_trace(d)
        assert not rep.ok and rep.failed_node == 3

    def test_widened_box_with_consistent_fields(self):
        # keep the chain consistent so only the replay can object
        tr = sweep("x <= 0.5", 0.0, 0.5, ConstantStep(0.25))
        d = tr.to_json()
        d["target"] = 0.75
        node = dict(d["nodes"][-1])
        node.update({"from": 0.5, "to": 0.75, "epsilon": 0.25})
        node["cert"] = dict(node["cert"], box=[0.5, 0.75])
        d["nodes"].append(node)
        rep = check_trace(d)
        assert not rep.ok and rep.failed_node == 2

    def test_digest_mismatch(self):
        d = self.trace().to_json()
        d["oracle"] = "const:0.5"
        rep = check_trace(d)
        assert not rep.ok and "digest" in rep.message

    def test_wrong_ordinal(self):
        d = self.trace().to_json()
        d["ordinal"] = "w+1"
        assert not check_trace(d).ok

    def test_failed_trace_does_not_pass(self):
        tr = sweep("x <= 0.5", 0.0, 1.0, ConstantStep(0.4))
        rep = check_trace(tr)
        assert not rep.ok and rep.verdict == "fail"

    @pytest.mark.parametrize("mutate", [
        lambda d: d.pop("nodes"),
        lambda d: d["nodes"][0].update(kind="jump"),
        lambda d: d["nodes"][0]["cert"].update(kind="magic"),
        lambda d: d.update(a="zero"),
        lambda d: d["status"].update(state="maybe"),
    ])
    def test_malformed(self, mutate):
        d = self.trace().to_json()
        mutate(d)
        with pytest.raises(MalformedTrace):
            check_trace(d)

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(MalformedTrace):
            check_trace(path)


def test_oracle_strings():
    assert repr(parse_oracle("const:0.25")) == "const:0.25"
    assert repr(parse_oracle("affine:1,2")) == "affine:1.0,2.0"
    assert parse_oracle("table:0.5,0.2")(0.3, None) == Step(0.2)
    for bad in ("const", "const:a", "affine:1", "spline:1", "table:"):
        with pytest.raises(ValueError):
            parse_oracle(bad)


def test_trace_json_is_plain_json():
    tr = sweep(parse(UNIT), 0.0, 1.0, AffineMap(1, 2))
    assert json.loads(tr.dumps()) == tr.to_json()
    assert trace_from_json(tr.to_json()).nodes == tr.nodes
