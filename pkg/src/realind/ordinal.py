"""Ordinals below epsilon_0 in Cantor normal form.

Only a small part is needed by the induction engine (sums of 1 and omega),
but comparison and addition work for any CNF ordinal.
"""

from __future__ import annotations

import re
from functools import total_ordering


@total_ordering
class Ordinal:
    """omega^e1 * c1 + ... + omega^ek * ck with e1 > ... > ek and ci > 0."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        terms = tuple((e if isinstance(e, Ordinal) else Ordinal.of(e), int(c)) for e, c in terms)
        for i, (e, c) in enumerate(terms):
            if c <= 0:
                raise ValueError("CNF coefficients must be positive")
            if i and not e < terms[i - 1][0]:
                raise ValueError("CNF exponents must be strictly descending")
        self.terms = terms

    @classmethod
    def of(cls, n: int) -> "Ordinal":
        if n < 0:
            raise ValueError("ordinals are non-negative")
        return cls(((ZERO, n),)) if n else ZERO

    def is_finite(self) -> bool:
        return all(e == ZERO for e, _ in self.terms)

    def __eq__(self, other):
        if isinstance(other, int):
            other = Ordinal.of(other)
        if not isinstance(other, Ordinal):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __lt__(self, other):
        if isinstance(other, int):
            other = Ordinal.of(other)
        if not isinstance(other, Ordinal):
            return NotImplemented
        return compare(self, other) < 0

    def __add__(self, other):
        if isinstance(other, int):
            other = Ordinal.of(other)
        if not other.terms:
            return self
        lead = other.terms[0][0]
        # terms of self with exponent below other's leading exponent are absorbed
        kept = [(e, c) for e, c in self.terms if not e < lead]
        if kept and kept[-1][0] == lead:
            e, c = kept.pop()
            kept.append((e, c + other.terms[0][1]))
            kept.extend(other.terms[1:])
        else:
            kept.extend(other.terms)
        return Ordinal(kept)

    def __radd__(self, other):
        if isinstance(other, int):
            return Ordinal.of(other) + self
        return NotImplemented

    def __repr__(self):
        return f"Ordinal({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e == ZERO:
                parts.append(str(c))
                continue
            base = "w" if e == ONE else f"w^{_wrap(e)}"
            parts.append(base if c == 1 else f"{base}*{c}")
        return "+".join(parts)


def _wrap(e: Ordinal) -> str:
    s = str(e)
    return s if s.isdigit() or s == "w" else f"({s})"


ZERO = Ordinal.__new__(Ordinal)
ZERO.terms = ()
ONE = Ordinal(((ZERO, 1),))
OMEGA = Ordinal(((ONE, 1),))


def compare(a: Ordinal, b: Ordinal) -> int:
    """-1, 0 or 1 by lexicographic comparison of CNF terms."""
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        c = compare(ea, eb)
        if c:
            return c
        if ca != cb:
            return -1 if ca < cb else 1
    la, lb = len(a.terms), len(b.terms)
    return (la > lb) - (la < lb)


def omega_times(k: int, n: int = 0) -> Ordinal:
    """The ordinal omega*k + n."""
    terms = []
    if k:
        terms.append((ONE, k))
    if n:
        terms.append((ZERO, n))
    return Ordinal(terms)


_TERM_RE = re.compile(r"^(?:w(?:\^(\d+))?(?:\*(\d+))?|(\d+))$")


def parse_ordinal(text: str) -> Ordinal:
    """Parse the string form, e.g. ``"w*2+3"``, ``"w^2+w"``, ``"4"``.

    Exponents are restricted to natural numbers.  Parts are added in order,
    so non-normal input such as ``"3+w"`` is normalised.
    """
    text = text.replace(" ", "")
    if not text:
        raise ValueError("empty ordinal")
    result = ZERO
    for part in text.split("+"):
        m = _TERM_RE.match(part)
        if m is None:
            raise ValueError(f"cannot parse ordinal term {part!r}")
        exp, coeff, finite = m.groups()
        if finite is not None:
            result = result + Ordinal.of(int(finite))
            continue
        e = Ordinal.of(int(exp)) if exp is not None else ONE
        c = int(coeff) if coeff is not None else 1
        if c > 0 and e != ZERO:
            result = result + Ordinal(((e, c),))
        elif c > 0:
            result = result + Ordinal.of(c)
    return result
