"""Real-induction sweep.

A closed property P that holds at ``a`` and that, from any point ``c`` where
it holds, is known to hold on some ``[c, c + eps]`` with ``eps > 0``, holds
on every ``[a, x]``.  The sweep below makes this concrete: a step oracle
proposes ``eps`` together with a certificate, the engine checks the
certificate and advances the frontier.  When the steps shrink geometrically
the frontier converges without reaching the target, so the engine proposes
the limit point, certifies P over the remaining bracket and jumps there.
Because P is closed, the limit of a sequence of points in P is again in P,
and the sweep continues from the limit.

Each successor step contributes 1 and each limit jump contributes omega to
the ordinal measure of the resulting :class:`ProofTrace`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Protocol, Sequence

from .interval import Interval
from .ordinal import OMEGA, ZERO, Ordinal, parse_ordinal
from .predicates import (BisectionBudget, Predicate, Tri, eval_pred, free_vars,
                         from_json, parse, to_json, to_text)

__all__ = [
    "InvalidInput", "MalformedTrace", "SweepPolicy", "DslEval", "Analytic",
    "NumericWitness", "Step", "GiveUp", "DslProperty", "SuccessorNode",
    "LimitNode", "ProofTrace", "CheckReport", "sweep", "detect_limit",
    "ordinal_of", "check_trace", "ConstantStep", "AffineMap", "TableOracle",
    "parse_oracle", "register_property",
]


class InvalidInput(ValueError):
    pass


class MalformedTrace(ValueError):
    pass


@dataclass(frozen=True)
class SweepPolicy:
    stall_window: int = 8
    stall_threshold: float = 1e-9
    max_steps: int = 1_000_000
    max_limit_nodes: int = 64
    max_depth: int = 20
    max_leaves: int = 10_000

    def __post_init__(self):
        if min(self.stall_window, self.max_steps, self.max_limit_nodes,
               self.max_depth, self.max_leaves) <= 0 or not self.stall_threshold > 0:
            raise ValueError("policy values must be positive")

    @property
    def budget(self) -> BisectionBudget:
        return BisectionBudget(self.max_depth, self.max_leaves)


# ---------------------------------------------------------------------------
# Certificates

@dataclass(frozen=True)
class DslEval:
    """P was Proved by interval evaluation over ``box`` with ``budget``."""

    box: tuple[float, float]
    max_depth: int = 20
    max_leaves: int = 10_000
    kind = "dsl"
    rigorous = True

    def to_json(self):
        return {"kind": self.kind, "box": list(self.box),
                "max_depth": self.max_depth, "max_leaves": self.max_leaves}


@dataclass(frozen=True)
class Analytic:
    """A rigorous certificate whose check is supplied by the property."""

    tag: str
    data: dict
    kind = "analytic"
    rigorous = True

    def to_json(self):
        return {"kind": self.kind, "tag": self.tag, "data": self.data}


@dataclass(frozen=True)
class NumericWitness:
    """Sampled evidence; accepted but never counted as a proof."""

    samples: tuple
    data: dict = field(default_factory=dict)
    kind = "numeric"
    rigorous = False

    def to_json(self):
        return {"kind": self.kind, "samples": [list(s) for s in self.samples], "data": self.data}


def cert_from_json(d: dict):
    kind = d.get("kind")
    if kind == "dsl":
        lo, hi = d["box"]
        return DslEval((float(lo), float(hi)), int(d["max_depth"]), int(d["max_leaves"]))
    if kind == "analytic":
        return Analytic(str(d["tag"]), dict(d["data"]))
    if kind == "numeric":
        return NumericWitness(tuple(tuple(s) for s in d["samples"]), dict(d.get("data", {})))
    raise MalformedTrace(f"unknown certificate kind {kind!r}")


# ---------------------------------------------------------------------------
# Oracles and properties

@dataclass(frozen=True)
class Step:
    epsilon: float
    cert: object = None


@dataclass(frozen=True)
class GiveUp:
    reason: str


class StepOracle(Protocol):
    def __call__(self, c: float, prev) -> Step | GiveUp: ...


class Property(Protocol):
    """What the engine needs to know about the property being swept."""

    def describe(self) -> dict: ...

    def holds_at_start(self, a: float) -> bool: ...

    def certify(self, frm: float, to: float, prev): ...

    def verify(self, cert, frm: float, to: float, prev) -> bool: ...


@dataclass(frozen=True)
class DslProperty:
    """A closed predicate in one free (induction) variable."""

    predicate: Predicate
    var: str = "x"
    policy: SweepPolicy = SweepPolicy()

    def __post_init__(self):
        extra = free_vars(self.predicate) - {self.var}
        if extra:
            raise InvalidInput(f"predicate has free variables other than {self.var!r}: {sorted(extra)}")

    def describe(self) -> dict:
        return {"kind": "dsl", "var": self.var, "ast": to_json(self.predicate),
                "text": to_text(self.predicate)}

    def _decide(self, frm, to, max_depth, max_leaves) -> Tri:
        return eval_pred(self.predicate, {self.var: Interval(frm, to)},
                         BisectionBudget(max_depth, max_leaves))

    def holds_at_start(self, a: float) -> bool:
        b = self.policy.budget
        return self._decide(a, a, b.max_depth, b.max_leaves) is Tri.PROVED

    def certify(self, frm, to, prev):
        cert = DslEval((frm, to), self.policy.max_depth, self.policy.max_leaves)
        return cert if self.verify(cert, frm, to, prev) else None

    def verify(self, cert, frm, to, prev) -> bool:
        if not isinstance(cert, DslEval) or cert.box != (frm, to):
            return False
        return self._decide(frm, to, cert.max_depth, cert.max_leaves) is Tri.PROVED


_PROPERTY_LOADERS: dict[str, Callable[[dict], object]] = {}


def register_property(kind: str, loader: Callable[[dict], object]) -> None:
    """Make a property kind loadable from trace files (used by check_trace)."""
    _PROPERTY_LOADERS[kind] = loader


def _load_dsl(d: dict) -> DslProperty:
    pred = from_json(d["ast"])
    return DslProperty(pred, d.get("var", "x"))


register_property("dsl", _load_dsl)


def property_from_json(d: dict):
    try:
        loader = _PROPERTY_LOADERS[d["kind"]]
    except (KeyError, TypeError):
        raise MalformedTrace(f"unknown property description {d!r:.80}") from None
    try:
        return loader(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedTrace(f"bad property description: {exc}") from exc


class ConstantStep:
    """Always proposes the same step size."""

    def __init__(self, eps: float):
        self.eps = float(eps)

    def __call__(self, c, prev):
        return Step(self.eps)

    def __repr__(self):
        return f"const:{self.eps!r}"


class AffineMap:
    """The map c -> (k + c) / m; the step is the distance to the image."""

    def __init__(self, k: float, m: float):
        self.k, self.m = float(k), float(m)

    def __call__(self, c, prev):
        nxt = (self.k + c) / self.m
        if not nxt > c:
            return GiveUp(f"affine map does not advance at {c!r}")
        return Step(nxt - c)

    def __repr__(self):
        return f"affine:{self.k!r},{self.m!r}"


class TableOracle:
    """Steps to the next listed breakpoint above the frontier."""

    def __init__(self, points: Sequence[float]):
        self.points = sorted(float(p) for p in points)

    def __call__(self, c, prev):
        for p in self.points:
            if p > c:
                return Step(p - c)
        return GiveUp(f"table exhausted at {c!r}")

    def __repr__(self):
        return "table:" + ",".join(repr(p) for p in self.points)


def parse_oracle(text: str):
    """Build a builtin oracle from ``const:EPS``, ``affine:K,M`` or ``table:P1,P2,...``."""
    name, _, args = text.partition(":")
    try:
        values = [float(v) for v in args.split(",")] if args else []
        if name == "const" and len(values) == 1:
            return ConstantStep(values[0])
        if name == "affine" and len(values) == 2:
            return AffineMap(*values)
        if name == "table" and values:
            return TableOracle(values)
    except ValueError:
        pass
    raise ValueError(f"bad oracle {text!r}; expected const:EPS, affine:K,M or table:P1,...")


# ---------------------------------------------------------------------------
# Traces

@dataclass(frozen=True)
class SuccessorNode:
    frm: float
    to: float
    epsilon: float
    cert: object
    kind = "successor"


@dataclass(frozen=True)
class LimitNode:
    frm: float
    to: float
    epsilon: float
    cert: object
    stall: dict
    kind = "limit"


@dataclass
class ProofTrace:
    prop: dict
    a: float
    target: float
    policy: SweepPolicy
    nodes: list = field(default_factory=list)
    status: str = "reached"
    failed_at: float | None = None
    reason: str | None = None
    oracle: str | None = None

    @property
    def reached(self) -> bool:
        return self.status == "reached"

    @property
    def rigorous(self) -> bool:
        return all(n.cert.rigorous for n in self.nodes)

    @property
    def ordinal(self) -> Ordinal:
        return ordinal_of(self)

    @property
    def frontier(self) -> float:
        return self.nodes[-1].to if self.nodes else self.a

    def to_json(self) -> dict:
        nodes = []
        for n in self.nodes:
            d = {"kind": n.kind, "from": n.frm, "to": n.to, "epsilon": n.epsilon,
                 "cert": n.cert.to_json()}
            if isinstance(n, LimitNode):
                d["stall"] = n.stall
            nodes.append(d)
        status = {"state": self.status}
        if self.status == "failed":
            status.update(at=self.failed_at, reason=self.reason)
        body = {
            "predicate": self.prop,
            "oracle": self.oracle,
            "a": self.a,
            "target": self.target,
            "policy": asdict(self.policy),
            "nodes": nodes,
            "status": status,
            "ordinal": str(self.ordinal),
            "rigorous": self.rigorous,
        }
        body["digest"] = _digest(body)
        return body

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "kind", "from", "to", "epsilon", "cert_kind"])
        for i, n in enumerate(self.nodes):
            w.writerow([i, n.kind, repr(n.frm), repr(n.to), repr(n.epsilon), n.cert.kind])
        return buf.getvalue()


def _digest(body: dict) -> str:
    payload = {k: v for k, v in body.items() if k != "digest"}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _num(d, key) -> float:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise MalformedTrace(f"field {key!r} must be a finite number")
    return float(v)


def trace_from_json(d: dict) -> ProofTrace:
    """Rebuild a trace from its JSON form (no verification)."""
    try:
        policy = SweepPolicy(**d["policy"])
        nodes = []
        for nd in d["nodes"]:
            cert = cert_from_json(nd["cert"])
            frm, to, eps = _num(nd, "from"), _num(nd, "to"), _num(nd, "epsilon")
            if nd["kind"] == "successor":
                nodes.append(SuccessorNode(frm, to, eps, cert))
            elif nd["kind"] == "limit":
                nodes.append(LimitNode(frm, to, eps, cert, dict(nd["stall"])))
            else:
                raise MalformedTrace(f"unknown node kind {nd['kind']!r}")
        st = d["status"]
        trace = ProofTrace(prop=d["predicate"], a=_num(d, "a"), target=_num(d, "target"),
                           policy=policy, nodes=nodes, status=st["state"],
                           oracle=d.get("oracle"))
        if trace.status == "failed":
            trace.failed_at = _num(st, "at")
            trace.reason = str(st["reason"])
        elif trace.status != "reached":
            raise MalformedTrace(f"unknown status {trace.status!r}")
        return trace
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedTrace):
            raise
        raise MalformedTrace(f"malformed trace: {exc!r}") from exc


def load_trace(path) -> tuple[ProofTrace, dict]:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedTrace(f"not JSON: {exc}") from exc
    return trace_from_json(raw), raw


# ---------------------------------------------------------------------------
# The sweep

def detect_limit(history: Sequence[tuple[float, float]], policy: SweepPolicy,
                 target: float | None = None) -> float | None:
    """Propose the limit of a stalling frontier, or None.

    ``history`` holds ``(c, eps)`` pairs: the frontier at which the oracle
    was queried and the step it returned.  A proposal is made when the last
    ``stall_window`` steps are all below ``stall_threshold`` and strictly
    decreasing; the tail is extrapolated as a geometric series with the
    ratio of the last two steps.
    """
    m = policy.stall_window
    if len(history) < max(m, 2):
        return None
    tail = [eps for _, eps in history[-m:]]
    if any(e >= policy.stall_threshold for e in tail):
        return None
    if any(b >= a for a, b in zip(tail, tail[1:])):
        return None
    c, eps = history[-1]
    prev_eps = history[-2][1]
    r = eps / prev_eps
    if not 0 < r < 1:
        return None
    # evaluated with outward rounding; the lower end keeps the jump inside
    tail_sum = Interval.point(eps) / (Interval.point(1.0) - Interval.point(r))
    limit = (Interval.point(c) + tail_sum).lo
    if target is not None:
        limit = min(limit, target)
    return limit


def ordinal_of(trace: ProofTrace) -> Ordinal:
    """omega * (limit nodes) + (successors after the last limit node)."""
    o = ZERO
    for n in trace.nodes:
        o = o + (OMEGA if isinstance(n, LimitNode) else 1)
    return o


def _as_property(P, var: str, policy: SweepPolicy):
    if isinstance(P, str):
        P = parse(P)
    if isinstance(P, (dict,)):
        P = property_from_json(P)
    if hasattr(P, "verify") and hasattr(P, "certify"):
        return P
    return DslProperty(P, var, policy)


def sweep(P, a: float, target: float, oracle: StepOracle,
          policy: SweepPolicy | None = None, var: str = "x") -> ProofTrace:
    """Run real induction for P from ``a`` up to ``target``.

    ``P`` is predicate text, a predicate AST (in variable ``var``) or a
    property object such as the one built by the ODE positivity oracle.
    Failure to make progress is reported in the trace status; only bad
    input raises.
    """
    policy = policy or SweepPolicy()
    a, target = float(a), float(target)
    prop = _as_property(P, var, policy)
    if not (math.isfinite(a) and math.isfinite(target)) or target < a:
        raise InvalidInput(f"need finite a <= target, got a={a}, target={target}")
    if not prop.holds_at_start(a):
        raise InvalidInput(f"property cannot be certified at the start point {a!r}")

    trace = ProofTrace(prop.describe(), a, target, policy, oracle=repr(oracle))
    if a == target:
        return trace

    def fail(reason: str) -> ProofTrace:
        trace.status, trace.failed_at, trace.reason = "failed", c, reason
        return trace

    c = a
    prev = None
    history: list[tuple[float, float]] = []
    steps = 0
    while True:
        if steps >= policy.max_steps:
            return fail("step budget exhausted")
        steps += 1
        res = oracle(c, prev)
        if isinstance(res, GiveUp):
            return fail(f"oracle gave up: {res.reason}")
        eps = float(res.epsilon)
        if not (math.isfinite(eps) and eps > 0):
            return fail(f"nonpositive step {eps!r}")
        to = c + eps
        if to <= c:
            return fail(f"step {eps!r} does not advance the frontier")
        cert = res.cert
        if to >= target:
            if to > target or cert is None:
                cert = prop.certify(c, target, prev)
            to = target
        elif cert is None:
            cert = prop.certify(c, to, prev)
        if cert is None or not prop.verify(cert, c, to, prev):
            return fail(f"certificate rejected on [{c!r}, {to!r}]")
        trace.nodes.append(SuccessorNode(c, to, to - c, cert))
        history.append((c, eps))
        prev, c = cert, to
        if c >= target:
            return trace

        limit = detect_limit(history, policy, target)
        if limit is None or not limit > c:
            continue
        if sum(isinstance(n, LimitNode) for n in trace.nodes) >= policy.max_limit_nodes:
            return fail("ordinal budget exhausted")
        cert = prop.certify(c, limit, prev)
        stall = {"window": policy.stall_window,
                 "last_eps": [e for _, e in history[-policy.stall_window:]],
                 "proposed": limit}
        history.clear()
        if cert is None:
            continue
        trace.nodes.append(LimitNode(c, limit, limit - c, cert, stall))
        prev, c = cert, limit
        if c >= target:
            return trace


# ---------------------------------------------------------------------------
# Replay

@dataclass
class CheckReport:
    ok: bool
    rigorous: bool
    failed_node: int | None = None
    message: str = ""

    @property
    def verdict(self) -> str:
        if not self.ok:
            return "fail"
        return "rigorous pass" if self.rigorous else "non-rigorous pass"

    def __bool__(self):
        return self.ok


def check_trace(trace, raw: dict | None = None) -> CheckReport:
    """Independently re-verify every node of a trace.

    ``trace`` may be a :class:`ProofTrace`, a JSON dict or a path.  When the
    JSON form is available its digest and recorded summary fields are
    checked too.  Certificates are replayed from scratch: DSL certificates
    are re-evaluated, analytic ones are recomputed by their property.
    """
    if isinstance(trace, dict):
        raw, trace = trace, trace_from_json(trace)
    elif not isinstance(trace, ProofTrace):
        trace, raw = load_trace(trace)

    def bad(i, msg):
        return CheckReport(False, False, i, msg)

    prop = property_from_json(trace.prop)
    if not prop.holds_at_start(trace.a):
        return bad(None, "property does not hold at the start point")
    prev = None
    expected_from = trace.a
    for i, n in enumerate(trace.nodes):
        if n.frm != expected_from:
            return bad(i, f"gap or overlap: node starts at {n.frm!r}, expected {expected_from!r}")
        if not n.to > n.frm:
            return bad(i, "node does not advance")
        if n.epsilon != n.to - n.frm:
            return bad(i, "epsilon does not match node endpoints")
        if n.to > trace.target:
            return bad(i, "node extends past the target")
        if isinstance(n, LimitNode) and i == 0:
            return bad(i, "a limit node cannot open a trace")
        try:
            ok = prop.verify(n.cert, n.frm, n.to, prev)
        except (ArithmeticError, KeyError, TypeError, ValueError) as exc:
            return bad(i, f"certificate could not be replayed: {exc}")
        if not ok:
            return bad(i, f"certificate does not replay on [{n.frm!r}, {n.to!r}]")
        prev = n.cert
        expected_from = n.to
    limits = sum(isinstance(n, LimitNode) for n in trace.nodes)
    if limits > trace.policy.max_limit_nodes:
        return bad(None, "more limit nodes than the policy allows")
    if trace.reached and trace.frontier < trace.target:
        return bad(None, "status reached but the target is not covered")
    if not trace.reached and trace.failed_at != trace.frontier:
        return bad(None, "failure point does not match the frontier")

    if raw is not None:
        try:
            recorded = parse_ordinal(str(raw["ordinal"]))
        except (KeyError, ValueError):
            return bad(None, "missing or unreadable ordinal")
        if recorded != ordinal_of(trace):
            return bad(None, f"recorded ordinal {raw['ordinal']} != {ordinal_of(trace)}")
        if raw.get("rigorous") is not trace.rigorous:
            return bad(None, "recorded rigor flag disagrees with certificates")
        if raw.get("digest") != _digest(raw):
            return bad(None, "digest mismatch: trace file was modified")

    if not trace.reached:
        return CheckReport(False, trace.rigorous, None, f"trace records a failure: {trace.reason}")
    return CheckReport(True, trace.rigorous, None, "all nodes replayed")
