"""A small language of closed predicates over the reals.

Atoms are ``t1 <= t2`` and ``t1 == t2``; they are combined with ``/\\``,
``\\/`` and bounded universal quantification ``forall v in [lo,hi]: p``.
Strict comparison, negation and existential quantification have no
syntax, so every predicate denotes a closed set.  Terms are built from
continuous total functions only (no division).

Predicates are decided over boxes with interval arithmetic and a
three-valued result (:class:`Tri`).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

from .interval import DomainError, Interval, arith, elem, square

__all__ = [
    "Const", "Var", "Add", "Sub", "Mul", "Neg", "Abs", "Sin", "Cos", "Exp",
    "Min", "Max", "Le", "Eq", "And", "Or", "ForAll", "Term", "Predicate",
    "Tri", "BisectionBudget", "EvalStats", "PredicateSyntaxError",
    "GrammarError", "UnboundVariable", "parse", "parse_term", "to_text",
    "eval_term", "eval_point", "eval_pred", "free_vars", "to_json",
    "from_json",
]


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError("constants must be finite")
        object.__setattr__(self, "value", v + 0.0)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Mul:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Abs:
    arg: "Term"


@dataclass(frozen=True)
class Sin:
    arg: "Term"


@dataclass(frozen=True)
class Cos:
    arg: "Term"


@dataclass(frozen=True)
class Exp:
    arg: "Term"


@dataclass(frozen=True)
class Min:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Max:
    left: "Term"
    right: "Term"


Term = Union[Const, Var, Add, Sub, Mul, Neg, Abs, Sin, Cos, Exp, Min, Max]


@dataclass(frozen=True)
class Le:
    left: Term
    right: Term


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class And:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Or:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class ForAll:
    var: str
    domain: Interval
    body: "Predicate"


Predicate = Union[Le, Eq, And, Or, ForAll]

_BINARY_TERMS = {Add: "+", Sub: "-", Mul: "*"}
_FUNCS1 = {"abs": Abs, "sin": Sin, "cos": Cos, "exp": Exp}
_FUNCS2 = {"min": Min, "max": Max}
_FUNC_NAMES = {cls: name for name, cls in {**_FUNCS1, **_FUNCS2}.items()}


def free_vars(node) -> frozenset[str]:
    """Free variables of a term or predicate."""
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, ForAll):
        return free_vars(node.body) - {node.var}
    if hasattr(node, "arg"):
        return free_vars(node.arg)
    return free_vars(node.left) | free_vars(node.right)


# ---------------------------------------------------------------------------
# Parsing

class PredicateSyntaxError(ValueError):
    """Malformed predicate text.  ``pos`` is the character offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class GrammarError(PredicateSyntaxError):
    """Input uses a construct that would break closedness (<, not, exists, ...)."""


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><=|>=|==|/\\|\\/|!=|[-+*/()\[\],:<>!~=^|&])
    """,
    re.VERBOSE,
)

_FORBIDDEN_IDENTS = {
    "not": "negation is not allowed in closed predicates",
    "exists": "existential quantification is not allowed in closed predicates",
}
_FORBIDDEN_OPS = {
    "<": "strict comparison '<' is not allowed in closed predicates",
    ">": "strict comparison '>' is not allowed in closed predicates",
    "!=": "disequality is not allowed in closed predicates",
    "!": "negation is not allowed in closed predicates",
    "~": "negation is not allowed in closed predicates",
    "/": "division is not part of the term language",
}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PredicateSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "ident" and value in _FORBIDDEN_IDENTS:
                raise GrammarError(_FORBIDDEN_IDENTS[value], pos)
            if kind == "op" and value in _FORBIDDEN_OPS:
                raise GrammarError(_FORBIDDEN_OPS[value], pos)
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def peek(self, value: str) -> bool:
        kind, v, _ = self.tok
        return v == value and kind in ("op", "ident")

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def expect(self, value: str):
        if not self.peek(value):
            kind, v, pos = self.tok
            found = repr(v) if kind != "eof" else "end of input"
            raise PredicateSyntaxError(f"expected {value!r}, found {found}", pos)
        return self.advance()

    def error(self, message: str):
        raise PredicateSyntaxError(message, self.tok[2])

    def finish(self):
        if self.tok[0] != "eof":
            self.error(f"unexpected {self.tok[1]!r}")

    # predicates: or > and > atom/forall
    def predicate(self) -> Predicate:
        if self.peek("forall"):
            return self.forall()
        left = self.conjunction()
        while self.peek("\\/"):
            self.advance()
            right = self.forall() if self.peek("forall") else self.conjunction()
            left = Or(left, right)
        return left

    def conjunction(self) -> Predicate:
        left = self.pred_atom()
        while self.peek("/\\"):
            self.advance()
            if self.peek("forall"):
                left = And(left, self.forall())
                break
            left = And(left, self.pred_atom())
        return left

    def forall(self) -> ForAll:
        self.expect("forall")
        kind, name, pos = self.advance()
        if kind != "ident" or name in _RESERVED:
            raise PredicateSyntaxError(f"expected a variable name, found {name!r}", pos)
        self.expect("in")
        self.expect("[")
        lo = self.signed_number()
        self.expect(",")
        hi = self.signed_number()
        close_pos = self.tok[2]
        self.expect("]")
        if lo > hi:
            raise PredicateSyntaxError(f"empty quantifier domain [{lo}, {hi}]", close_pos)
        self.expect(":")
        return ForAll(name, Interval(lo, hi), self.predicate())

    def signed_number(self) -> float:
        sign = 1.0
        if self.peek("-"):
            self.advance()
            sign = -1.0
        kind, value, pos = self.advance()
        if kind != "num":
            raise PredicateSyntaxError(f"expected a number, found {value!r}", pos)
        return sign * float(value)

    def pred_atom(self) -> Predicate:
        # a parenthesis here may open either a predicate or a term
        if self.peek("("):
            save = self.i
            self.advance()
            try:
                inner = self.predicate()
                self.expect(")")
            except PredicateSyntaxError as exc:
                if isinstance(exc, GrammarError):
                    raise
                self.i = save
            else:
                if not (self.peek("<=") or self.peek(">=") or self.peek("==")):
                    return inner
                self.i = save
        left = self.term()
        kind, op, pos = self.tok
        if op == "<=":
            self.advance()
            return Le(left, self.term())
        if op == ">=":
            self.advance()
            return Le(self.term(), left)
        if op == "==":
            self.advance()
            return Eq(left, self.term())
        found = repr(op) if kind != "eof" else "end of input"
        raise PredicateSyntaxError(f"expected '<=', '>=' or '==', found {found}", pos)

    # terms: sum > product > unary > primary
    def term(self) -> Term:
        left = self.product()
        while self.peek("+") or self.peek("-"):
            op = self.advance()[1]
            right = self.product()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def product(self) -> Term:
        left = self.unary()
        while self.peek("*"):
            self.advance()
            left = Mul(left, self.unary())
        return left

    def unary(self) -> Term:
        if self.peek("-"):
            self.advance()
            if self.tok[0] == "num":
                return Const(-float(self.advance()[1]))
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Term:
        kind, value, pos = self.tok
        if kind == "num":
            self.advance()
            return Const(float(value))
        if kind == "ident":
            self.advance()
            if value in _FUNCS1:
                self.expect("(")
                arg = self.term()
                self.expect(")")
                return _FUNCS1[value](arg)
            if value in _FUNCS2:
                self.expect("(")
                a = self.term()
                self.expect(",")
                b = self.term()
                self.expect(")")
                return _FUNCS2[value](a, b)
            if value in _RESERVED:
                raise PredicateSyntaxError(f"unexpected keyword {value!r}", pos)
            return Var(value)
        if value == "(":
            self.advance()
            t = self.term()
            self.expect(")")
            return t
        found = repr(value) if kind != "eof" else "end of input"
        raise PredicateSyntaxError(f"expected a term, found {found}", pos)


_RESERVED = {"forall", "in", *_FUNCS1, *_FUNCS2}


def parse(text: str) -> Predicate:
    """Parse predicate text into an AST.

    >>> parse("0 <= x /\\ x <= 1")
    And(left=Le(left=Const(value=0.0), right=Var(name='x')), right=Le(left=Var(name='x'), right=Const(value=1.0)))
    """
    p = _Parser(text)
    result = p.predicate()
    p.finish()
    return result


def parse_term(text: str) -> Term:
    p = _Parser(text)
    result = p.term()
    p.finish()
    return result


# ---------------------------------------------------------------------------
# Printing

def _fmt_num(v: float) -> str:
    r = repr(v)
    return r[:-2] if r.endswith(".0") else r


_TERM_PREC = {Add: 1, Sub: 1, Mul: 2}


def _term_prec(t) -> int:
    return _TERM_PREC.get(type(t), 3)


def _term_text(t: Term) -> str:
    if isinstance(t, Const):
        return _fmt_num(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Neg):
        return f"-({_term_text(t.arg)})"
    if type(t) in _BINARY_TERMS:
        prec = _term_prec(t)
        left = _term_text(t.left)
        right = _term_text(t.right)
        if _term_prec(t.left) < prec:
            left = f"({left})"
        if _term_prec(t.right) <= prec:
            right = f"({right})"
        return f"{left} {_BINARY_TERMS[type(t)]} {right}"
    name = _FUNC_NAMES[type(t)]
    if hasattr(t, "arg"):
        return f"{name}({_term_text(t.arg)})"
    return f"{name}({_term_text(t.left)}, {_term_text(t.right)})"


_PRED_PREC = {Or: 1, And: 2}


def _pred_text(p: Predicate) -> str:
    if isinstance(p, Le):
        return f"{_term_text(p.left)} <= {_term_text(p.right)}"
    if isinstance(p, Eq):
        return f"{_term_text(p.left)} == {_term_text(p.right)}"
    if isinstance(p, ForAll):
        return (f"forall {p.var} in [{_fmt_num(p.domain.lo)},{_fmt_num(p.domain.hi)}]: "
                f"{_pred_text(p.body)}")
    prec = _PRED_PREC[type(p)]
    op = "/\\" if isinstance(p, And) else "\\/"
    left, right = _pred_text(p.left), _pred_text(p.right)
    if isinstance(p.left, ForAll) or _PRED_PREC.get(type(p.left), 3) < prec:
        left = f"({left})"
    if isinstance(p.right, ForAll) or _PRED_PREC.get(type(p.right), 3) <= prec:
        right = f"({right})"
    return f"{left} {op} {right}"


def to_text(node) -> str:
    """Canonical concrete syntax for a predicate or term; inverse of parse."""
    if isinstance(node, (Le, Eq, And, Or, ForAll)):
        return _pred_text(node)
    return _term_text(node)


# ---------------------------------------------------------------------------
# Evaluation

class UnboundVariable(NameError):
    pass


class Tri(enum.Enum):
    PROVED = "proved"
    DISPROVED = "disproved"
    UNKNOWN = "unknown"

    def __and__(self, other: "Tri") -> "Tri":
        if self is Tri.DISPROVED or other is Tri.DISPROVED:
            return Tri.DISPROVED
        if self is Tri.PROVED and other is Tri.PROVED:
            return Tri.PROVED
        return Tri.UNKNOWN

    def __or__(self, other: "Tri") -> "Tri":
        if self is Tri.PROVED or other is Tri.PROVED:
            return Tri.PROVED
        if self is Tri.DISPROVED and other is Tri.DISPROVED:
            return Tri.DISPROVED
        return Tri.UNKNOWN


@dataclass(frozen=True)
class BisectionBudget:
    max_depth: int = 20
    max_leaves: int = 10_000

    def __post_init__(self):
        if self.max_depth < 0 or self.max_leaves < 1:
            raise ValueError("bisection budget must be positive")


@dataclass
class EvalStats:
    """Counters filled in by :func:`eval_pred` when passed ``stats=``."""

    leaves: int = 0
    max_depth: int = 0
    exhausted: bool = False


def eval_term(t: Term, env: Mapping[str, Interval]) -> Interval:
    """Interval enclosure of ``t`` over the box ``env``."""
    if isinstance(t, Const):
        return Interval(t.value, t.value)
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise UnboundVariable(f"variable {t.name!r} is not bound") from None
    if isinstance(t, Add):
        return arith("add", eval_term(t.left, env), eval_term(t.right, env))
    if isinstance(t, Sub):
        return arith("sub", eval_term(t.left, env), eval_term(t.right, env))
    if isinstance(t, Mul):
        if t.left == t.right:
            return square(eval_term(t.left, env))
        return arith("mul", eval_term(t.left, env), eval_term(t.right, env))
    if isinstance(t, Neg):
        return elem("neg", eval_term(t.arg, env))
    if isinstance(t, Abs):
        return elem("abs", eval_term(t.arg, env))
    if isinstance(t, Sin):
        return elem("sin", eval_term(t.arg, env))
    if isinstance(t, Cos):
        return elem("cos", eval_term(t.arg, env))
    if isinstance(t, Exp):
        return elem("exp", eval_term(t.arg, env))
    if isinstance(t, Min):
        return elem("min2", eval_term(t.left, env), eval_term(t.right, env))
    if isinstance(t, Max):
        return elem("max2", eval_term(t.left, env), eval_term(t.right, env))
    raise TypeError(f"not a term: {t!r}")


_POINT_FUNCS = {Abs: abs, Sin: math.sin, Cos: math.cos, Exp: math.exp, Min: min, Max: max}


def eval_point(t: Term, env: Mapping[str, float]) -> float:
    """Plain floating-point value of ``t`` (non-rigorous)."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        try:
            return float(env[t.name])
        except KeyError:
            raise UnboundVariable(f"variable {t.name!r} is not bound") from None
    if isinstance(t, Add):
        return eval_point(t.left, env) + eval_point(t.right, env)
    if isinstance(t, Sub):
        return eval_point(t.left, env) - eval_point(t.right, env)
    if isinstance(t, Mul):
        return eval_point(t.left, env) * eval_point(t.right, env)
    if isinstance(t, Neg):
        return -eval_point(t.arg, env)
    fn = _POINT_FUNCS[type(t)]
    if hasattr(t, "arg"):
        return fn(eval_point(t.arg, env))
    return fn(eval_point(t.left, env), eval_point(t.right, env))


def _atom(p, env) -> Tri:
    try:
        a = eval_term(p.left, env)
        b = eval_term(p.right, env)
    except DomainError:
        return Tri.UNKNOWN
    if isinstance(p, Le):
        if a.hi <= b.lo:
            return Tri.PROVED
        if a.lo > b.hi:
            return Tri.DISPROVED
        return Tri.UNKNOWN
    if a.is_point() and b.is_point() and a.lo == b.lo:
        return Tri.PROVED
    if a.hi < b.lo or a.lo > b.hi:
        return Tri.DISPROVED
    return Tri.UNKNOWN


def _eval(p: Predicate, env, budget: BisectionBudget, stats) -> Tri:
    if isinstance(p, (Le, Eq)):
        return _atom(p, env)
    if isinstance(p, And):
        first = _eval(p.left, env, budget, stats)
        if first is Tri.DISPROVED:
            return first
        return first & _eval(p.right, env, budget, stats)
    if isinstance(p, Or):
        first = _eval(p.left, env, budget, stats)
        if first is Tri.PROVED:
            return first
        return first | _eval(p.right, env, budget, stats)
    if isinstance(p, ForAll):
        return _forall(p, env, budget, stats)
    raise TypeError(f"not a predicate: {p!r}")


def _forall(p: ForAll, env, budget: BisectionBudget, stats) -> Tri:
    # depth-first over the quantified domain: Disproved on any leaf decides
    leaves = budget.max_leaves
    stack = [(p.domain, 0)]
    unresolved = False
    while stack:
        box, depth = stack.pop()
        if stats is not None:
            stats.max_depth = max(stats.max_depth, depth)
        r = _eval(p.body, {**env, p.var: box}, budget, stats)
        if r is Tri.DISPROVED:
            return Tri.DISPROVED
        if r is Tri.PROVED:
            if stats is not None:
                stats.leaves += 1
            continue
        leaves -= 1
        if depth >= budget.max_depth or leaves <= 0 or box.is_point() or box.mid in (box.lo, box.hi):
            unresolved = True
            if stats is not None:
                stats.exhausted = True
            if leaves <= 0:
                break
            continue
        left, right = box.bisect()
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    return Tri.UNKNOWN if unresolved or stack else Tri.PROVED


def _widest(env) -> str | None:
    best, best_w = None, 0.0
    for name, box in env.items():
        w = box.hi - box.lo
        if w > best_w and box.mid not in (box.lo, box.hi):
            best, best_w = name, w
    return best


def eval_pred(p: Predicate, env: Mapping[str, Interval] | None = None,
              budget: BisectionBudget | None = None,
              stats: EvalStats | None = None) -> Tri:
    """Decide ``p`` over the box ``env`` in three-valued logic.

    PROVED means ``p`` holds at every point of the box and DISPROVED that it
    fails at every point; both are sound.  UNKNOWN is returned when the
    bisection budget runs out.  When the whole box is undecided the widest
    free variable is bisected as well, which lets a disjunction be proved
    by a cover.
    """
    env = {k: Interval.coerce(v) for k, v in (env or {}).items()}
    budget = budget or BisectionBudget()
    missing = free_vars(p) - env.keys()
    if missing:
        raise UnboundVariable(f"unbound variable(s): {', '.join(sorted(missing))}")

    leaves = budget.max_leaves
    stack = [(env, 0)]
    outcome: Tri | None = None
    while stack:
        box, depth = stack.pop()
        if stats is not None:
            stats.max_depth = max(stats.max_depth, depth)
        r = _eval(p, box, budget, stats)
        if r is Tri.UNKNOWN:
            name = _widest(box)
            leaves -= 1
            if name is None or depth >= budget.max_depth or leaves <= 0:
                if stats is not None:
                    stats.exhausted = True
                return Tri.UNKNOWN
            a, b = box[name].bisect()
            stack.append(({**box, name: b}, depth + 1))
            stack.append(({**box, name: a}, depth + 1))
            continue
        if outcome is None:
            outcome = r
        elif outcome is not r:
            return Tri.UNKNOWN
    return outcome


# ---------------------------------------------------------------------------
# JSON form

_TAGS = {cls.__name__: cls for cls in
         (Const, Var, Add, Sub, Mul, Neg, Abs, Sin, Cos, Exp, Min, Max, Le, Eq, And, Or, ForAll)}


def to_json(node) -> dict:
    """Constructor-tagged JSON-ready dict for a term or predicate."""
    if isinstance(node, Const):
        return {"op": "Const", "value": node.value}
    if isinstance(node, Var):
        return {"op": "Var", "name": node.name}
    if isinstance(node, ForAll):
        return {"op": "ForAll", "var": node.var,
                "domain": [node.domain.lo, node.domain.hi], "body": to_json(node.body)}
    if hasattr(node, "arg"):
        return {"op": type(node).__name__, "args": [to_json(node.arg)]}
    return {"op": type(node).__name__, "args": [to_json(node.left), to_json(node.right)]}


def from_json(data: dict):
    try:
        tag = data["op"]
        cls = _TAGS[tag]
        if cls is Const:
            return Const(data["value"])
        if cls is Var:
            return Var(str(data["name"]))
        if cls is ForAll:
            lo, hi = data["domain"]
            return ForAll(str(data["var"]), Interval(lo, hi), from_json(data["body"]))
        return cls(*(from_json(a) for a in data["args"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed predicate JSON: {exc}") from exc
