"""Validated positivity for f' = -alpha(x) f + beta(x), f(a) = b.

With alpha >= 0, beta > 0 and b >= 0 the solution stays non-negative.  The
step oracle here follows the constructive argument directly: from a point
``c`` where f(c) >= 0 it finds an ``h`` with

    f(c + h) = f(c) (1 - h alpha(c)) + h (beta(c) + d(h)) >= 0,

where ``d(h)`` is the gap between the mean slope over the step and f'(c).
``d(h)`` is bounded using a validated a-priori enclosure of the solution
over the step.  Certified steps are chained by :func:`realind.engine.sweep`.

Enclosures are propagated endpoint-wise: the scalar flow is monotone in
the initial value, so the images of the two endpoints of ``[f](c)`` bound
the image of the whole interval.  This keeps the enclosure from growing
step after step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

from .engine import (Analytic, GiveUp, NumericWitness, Step, SweepPolicy,
                     register_property, sweep)
from .interval import DomainError, Interval, subset
from .predicates import Term, eval_point, eval_term, free_vars, from_json, parse_term, to_json

__all__ = [
    "Ivp", "SolutionEnclosure", "StepTooLarge", "CoefficientDomainError",
    "enclose_step", "positivity_oracle", "verify_nonnegative", "solve_rk4",
    "rolle_check", "OdeProperty", "NumericOdeProperty",
]

Coefficient = Union[Term, Callable[[float], float]]


class StepTooLarge(ArithmeticError):
    pass


class CoefficientDomainError(DomainError):
    """alpha >= 0 or beta > 0 could not be established on a time box."""


@dataclass(frozen=True)
class Ivp:
    """Initial value problem f(a) = b, f' = -alpha f + beta on [a, T].

    ``alpha`` and ``beta`` are DSL terms in ``var`` for rigorous work, or
    plain callables (numeric mode only).
    """

    alpha: Coefficient
    beta: Coefficient
    a: float = 0.0
    b: float = 0.0
    T: float = 1.0
    var: str = "x"

    def __post_init__(self):
        if not self.b >= 0:
            raise ValueError(f"initial value must be >= 0, got {self.b}")
        if not self.T > self.a:
            raise ValueError("horizon T must exceed a")
        for name in ("alpha", "beta"):
            c = getattr(self, name)
            if not callable(c) and free_vars(c) - {self.var}:
                raise ValueError(f"{name} may only depend on {self.var!r}")

    @classmethod
    def from_text(cls, alpha: str, beta: str, a=0.0, b=0.0, T=1.0, var="x") -> "Ivp":
        return cls(parse_term(alpha), parse_term(beta), float(a), float(b), float(T), var)

    @property
    def rigorous(self) -> bool:
        return not (callable(self.alpha) or callable(self.beta))

    def coefficients(self, tb: Interval) -> tuple[Interval, Interval]:
        """Enclosures of alpha and beta over the time box, sign-checked."""
        if not self.rigorous:
            raise TypeError("interval coefficients need DSL terms, not callables")
        env = {self.var: tb}
        A = eval_term(self.alpha, env)
        B = eval_term(self.beta, env)
        if A.lo < 0:
            raise CoefficientDomainError(f"alpha enclosure {A} on {tb} is not >= 0")
        if not B.lo > 0:
            raise CoefficientDomainError(f"beta enclosure {B} on {tb} is not > 0")
        return A, B

    def alpha_at(self, t: float) -> float:
        return self.alpha(t) if callable(self.alpha) else eval_point(self.alpha, {self.var: t})

    def beta_at(self, t: float) -> float:
        return self.beta(t) if callable(self.beta) else eval_point(self.beta, {self.var: t})

    def rhs(self, t: float, f: float) -> float:
        return -self.alpha_at(t) * f + self.beta_at(t)


@dataclass(frozen=True)
class SolutionEnclosure:
    """The solution at ``c`` lies in ``value``; over the last step it stayed in ``box``."""

    c: float
    value: Interval
    box: Interval | None = None
    # per-endpoint a-priori boxes and coefficient enclosures of the last step
    box_lo: Interval | None = None
    box_hi: Interval | None = None
    alpha: Interval | None = None
    beta: Interval | None = None


def _slope(B: Interval, A: Interval, Bt: Interval) -> Interval:
    return Bt - A * B


def _picard(y0: float, H: Interval, A: Interval, Bt: Interval, tries: int = 25) -> Interval:
    """Box containing the solution from y0 over a step of length in H."""
    Y0 = Interval.point(y0)
    span = Interval(0.0, H.hi)
    B = Y0 + span * _slope(Y0, A, Bt)
    for _ in range(tries):
        pad = 0.1 * B.width + 1e-15 * max(1.0, B.mag)
        B = Interval(B.lo - pad, B.hi + pad)
        N = Y0 + span * _slope(B, A, Bt)
        if subset(N, B):
            for _ in range(3):
                N = Y0 + span * _slope(N, A, Bt)
            return N
        B = Interval(min(B.lo, N.lo), max(B.hi, N.hi))
    raise StepTooLarge(f"a-priori enclosure did not validate for h={H.hi!r}")


def _advance(y0: float, H: Interval, A: Interval, Bt: Interval) -> tuple[Interval, Interval]:
    box = _picard(y0, H, A, Bt)
    return Interval.point(y0) + H * _slope(box, A, Bt), box


def enclose_step(enc: SolutionEnclosure, h: float, ivp: Ivp) -> SolutionEnclosure:
    """Validated enclosure of the solution at ``enc.c + h``.

    Raises StepTooLarge when no a-priori box validates (the caller should
    shrink ``h``) and CoefficientDomainError when alpha/beta violate their
    sign conditions on the step.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    c = enc.c
    t1 = c + h
    if t1 > ivp.T and not math.isclose(t1, ivp.T, rel_tol=0, abs_tol=4 * math.ulp(ivp.T)):
        raise ValueError(f"step ends at {t1!r}, past the horizon {ivp.T!r}")
    tb = Interval(c, t1)
    H = Interval.point(t1) - Interval.point(c)
    A, Bt = ivp.coefficients(tb)
    lo_end, box_lo = _advance(enc.value.lo, H, A, Bt)
    if enc.value.is_point():
        hi_end, box_hi = lo_end, box_lo
    else:
        hi_end, box_hi = _advance(enc.value.hi, H, A, Bt)
    value = Interval(lo_end.lo, hi_end.hi)
    box = Interval(min(box_lo.lo, box_hi.lo), max(box_lo.hi, box_hi.hi))
    return SolutionEnclosure(t1, value, box, box_lo, box_hi, A, Bt)


def _remainder(f0: float, box: Interval, A: Interval, Bt: Interval, c: float, ivp: Ivp) -> float:
    """Bound on |d(h)|: the mean slope lies in G(box), f'(c) in G at the point c."""
    Ac, Bc = ivp.coefficients(Interval.point(c))
    d = _slope(box, A, Bt) - _slope(Interval.point(f0), Ac, Bc)
    return d.mag


def _margin(f0: float, H: Interval, A: Interval, Bt: Interval, delta: float) -> tuple[float, float]:
    """Lower bounds of 1 - h*alpha and of f0 (1 - h alpha) + h (beta - delta)."""
    shrink = Interval.point(1.0) - Interval.point(H.hi) * Interval.point(A.hi)
    if shrink.lo < 0:
        return shrink.lo, -math.inf
    total = Interval.point(f0) * Interval.point(shrink.lo) + H * (
        Interval.point(Bt.lo) - Interval.point(delta))
    return shrink.lo, total.lo


def _iv(x: Interval) -> list[float]:
    return [x.lo, x.hi]


def _certificate(enc: SolutionEnclosure, new: SolutionEnclosure, ivp: Ivp) -> Analytic | None:
    f0 = enc.value.lo
    H = Interval.point(new.c) - Interval.point(enc.c)
    delta = _remainder(f0, new.box_lo, new.alpha, new.beta, enc.c, ivp)
    shrink, margin = _margin(f0, H, new.alpha, new.beta, delta)
    if shrink < 0 or margin < 0 or new.box_lo.lo < 0:
        return None
    return Analytic("ode_positivity", {
        "t0": enc.c, "t1": new.c,
        "f0": _iv(enc.value), "f1": _iv(new.value),
        "box_lo": _iv(new.box_lo), "box_hi": _iv(new.box_hi),
        "alpha": _iv(new.alpha), "beta": _iv(new.beta),
        "delta": delta, "margin": margin,
    })


def _state(ivp: Ivp, c: float, prev) -> SolutionEnclosure:
    if prev is None:
        return SolutionEnclosure(ivp.a, Interval.point(ivp.b))
    lo, hi = prev.data["f1"]
    return SolutionEnclosure(c, Interval(lo, hi))


class PositivityOracle:
    """Step oracle for f >= 0 built from the positivity argument."""

    def __init__(self, ivp: Ivp, h0: float | None = None, h_min: float = 1e-12):
        self.ivp = ivp
        self.h0 = h0 if h0 is not None else min(0.1, (ivp.T - ivp.a) / 10)
        self.h_min = h_min

    def try_step(self, enc: SolutionEnclosure, h: float) -> Analytic | None:
        try:
            new = enclose_step(enc, h, self.ivp)
        except StepTooLarge:
            return None
        return _certificate(enc, new, self.ivp)

    def __call__(self, c: float, prev):
        enc = _state(self.ivp, c, prev)
        if enc.value.lo < 0:
            return GiveUp(f"enclosure at {c!r} is not non-negative")
        rest = self.ivp.T - c
        # absorb a rounding-sized remainder into the final step
        h = rest if rest <= self.h0 * (1 + 1e-6) else self.h0
        while True:
            cert = self.try_step(enc, h)
            if cert is not None:
                return Step(h, cert)
            h /= 2
            if h < self.h_min:
                return GiveUp(f"step size fell below {self.h_min!r} at {c!r}")

    def __repr__(self):
        return f"ode_positivity(h0={self.h0!r})"


def positivity_oracle(ivp: Ivp, h0: float | None = None, h_min: float = 1e-12) -> PositivityOracle:
    return PositivityOracle(ivp, h0, h_min)


@dataclass(frozen=True)
class OdeProperty:
    """The tracked property 'f >= 0' for a rigorous IVP."""

    ivp: Ivp

    def describe(self) -> dict:
        iv = self.ivp
        return {"kind": "ode_nonneg", "var": iv.var, "alpha": to_json(iv.alpha),
                "beta": to_json(iv.beta), "a": iv.a, "b": iv.b, "T": iv.T}

    def holds_at_start(self, a: float) -> bool:
        self.ivp.coefficients(Interval.point(a))
        return a == self.ivp.a and self.ivp.b >= 0

    def certify(self, frm, to, prev):
        enc = _state(self.ivp, frm, prev)
        h = to - frm
        if frm + h != to or enc.value.lo < 0:
            return None
        try:
            new = enclose_step(enc, h, self.ivp)
        except (StepTooLarge, CoefficientDomainError):
            return None
        return _certificate(enc, new, self.ivp)

    def verify(self, cert, frm, to, prev) -> bool:
        """Replay a certificate from its stored numbers and the IVP alone."""
        if not isinstance(cert, Analytic) or cert.tag != "ode_positivity":
            return False
        d = cert.data
        try:
            if d["t0"] != frm or d["t1"] != to:
                return False
            f0 = Interval(*d["f0"])
            expected_f0 = Interval.point(self.ivp.b) if prev is None else Interval(*prev.data["f1"])
            if f0 != expected_f0 or (prev is None and frm != self.ivp.a):
                return False
            box_lo, box_hi = Interval(*d["box_lo"]), Interval(*d["box_hi"])
            A, Bt = self.ivp.coefficients(Interval(frm, to))
            H = Interval.point(to) - Interval.point(frm)
            span = Interval(0.0, H.hi)
            for y0, box in ((f0.lo, box_lo), (f0.hi, box_hi)):
                if not subset(Interval.point(y0) + span * (Bt - A * box), box):
                    return False
            lo_end = Interval.point(f0.lo) + H * (Bt - A * box_lo)
            hi_end = Interval.point(f0.hi) + H * (Bt - A * box_hi)
            if [lo_end.lo, hi_end.hi] != list(d["f1"]):
                return False
            Ac, Bc = self.ivp.coefficients(Interval.point(frm))
            delta = ((Bt - A * box_lo) - (Bc - Ac * Interval.point(f0.lo))).mag
            if delta != d["delta"]:
                return False
            shrink, margin = _margin(f0.lo, H, A, Bt, delta)
            return shrink >= 0 and margin >= 0 and box_lo.lo >= 0 and margin == d["margin"]
        except (KeyError, TypeError, ValueError, DomainError):
            return False


def _load_ode(d: dict) -> OdeProperty:
    ivp = Ivp(from_json(d["alpha"]), from_json(d["beta"]), float(d["a"]), float(d["b"]),
              float(d["T"]), str(d.get("var", "x")))
    return OdeProperty(ivp)


register_property("ode_nonneg", _load_ode)


# ---------------------------------------------------------------------------
# Numeric (non-rigorous) mode

def _rk4_step(ivp: Ivp, t: float, f: float, dt: float) -> float:
    k1 = ivp.rhs(t, f)
    k2 = ivp.rhs(t + dt / 2, f + dt / 2 * k1)
    k3 = ivp.rhs(t + dt / 2, f + dt / 2 * k2)
    k4 = ivp.rhs(t + dt, f + dt * k3)
    return f + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _numeric_conditions(samples, h: float, tol: float = 0.0) -> str | None:
    """Reason the sampled step fails the positivity argument, or None."""
    t0, f0, a0, b0 = samples[0]
    t1, f1 = samples[-1][0], samples[-1][1]
    for t, f, al, be in samples:
        if al < -tol:
            return f"alpha({t!r}) = {al!r} < 0"
        if not be > 0:
            return f"beta({t!r}) = {be!r} <= 0"
        if f < 0:
            return f"f({t!r}) = {f!r} < 0"
    if 1 - h * a0 < 0:
        return "1 - h*alpha(c) < 0"
    d = (f1 - f0) / h - (-a0 * f0 + b0)
    if b0 + d < 0:
        return "beta(c) + d(h) < 0"
    return None


class NumericPositivityOracle:
    """RK4-sampled version of the positivity oracle; emits NumericWitness."""

    def __init__(self, ivp: Ivp, dt: float, h0: float | None = None, h_min: float | None = None):
        self.ivp = ivp
        self.dt = dt
        self.h0 = h0 if h0 is not None else max(dt, min(0.1, (ivp.T - ivp.a) / 10))
        self.h_min = h_min if h_min is not None else dt / 1024

    def _samples(self, c: float, f: float, h: float):
        n = max(1, math.ceil(h / self.dt - 1e-9))
        sub = h / n
        out = [(c, f, self.ivp.alpha_at(c), self.ivp.beta_at(c))]
        t = c
        for k in range(n):
            f = _rk4_step(self.ivp, t, f, sub)
            t = c + (k + 1) * sub if k + 1 < n else c + h
            out.append((t, f, self.ivp.alpha_at(t), self.ivp.beta_at(t)))
        return tuple(out)

    def __call__(self, c: float, prev):
        f = self.ivp.b if prev is None else prev.samples[-1][1]
        rest = self.ivp.T - c
        h = rest if rest <= self.h0 * (1 + 1e-6) else self.h0
        reason = None
        while h >= self.h_min:
            samples = self._samples(c, f, h)
            reason = _numeric_conditions(samples, h)
            if reason is None:
                return Step(h, NumericWitness(samples, {"h": h}))
            h /= 2
        return GiveUp(f"numeric step failed at {c!r}: {reason}")

    def __repr__(self):
        return f"ode_numeric(dt={self.dt!r})"


@dataclass(frozen=True)
class NumericOdeProperty:
    """'f >= 0' checked on sampled data only."""

    a: float
    b: float
    label: str = "numeric"

    def describe(self) -> dict:
        return {"kind": "ode_numeric", "a": self.a, "b": self.b, "label": self.label}

    def holds_at_start(self, a: float) -> bool:
        return a == self.a and self.b >= 0

    def certify(self, frm, to, prev):
        return None

    def verify(self, cert, frm, to, prev) -> bool:
        if not isinstance(cert, NumericWitness) or len(cert.samples) < 2:
            return False
        s = cert.samples
        if s[0][0] != frm or s[-1][0] != to:
            return False
        f_start = self.b if prev is None else prev.samples[-1][1]
        if s[0][1] != f_start:
            return False
        if any(b[0] <= a[0] for a, b in zip(s, s[1:])):
            return False
        return _numeric_conditions(s, to - frm) is None


register_property("ode_numeric", lambda d: NumericOdeProperty(float(d["a"]), float(d["b"]),
                                                              str(d.get("label", "numeric"))))


def verify_nonnegative(ivp: Ivp, policy: SweepPolicy | None = None, *, dt: float = 1e-3,
                       h0: float | None = None, label: str = "numeric"):
    """Certify f >= 0 on [a, T] by real induction.

    Term coefficients give a rigorous trace of analytic certificates.
    Callable coefficients run the same argument on RK4 samples and give a
    trace of numeric witnesses, flagged non-rigorous.
    """
    policy = policy or SweepPolicy()
    if ivp.rigorous:
        return sweep(OdeProperty(ivp), ivp.a, ivp.T, positivity_oracle(ivp, h0), policy)
    beta0 = ivp.beta_at(ivp.a)
    if not beta0 > 0:
        raise CoefficientDomainError(f"beta({ivp.a!r}) = {beta0!r} is not > 0")
    oracle = NumericPositivityOracle(ivp, dt, h0)
    return sweep(NumericOdeProperty(ivp.a, ivp.b, label), ivp.a, ivp.T, oracle, policy)


def solve_rk4(ivp: Ivp, dt: float) -> list[tuple[float, float]]:
    """Classical RK4 from (a, b) to T with step dt (last step shortened)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = max(1, math.ceil((ivp.T - ivp.a) / dt - 1e-9))
    out = [(ivp.a, float(ivp.b))]
    t, f = ivp.a, float(ivp.b)
    for k in range(1, n + 1):
        t_next = ivp.a + k * dt if k < n else ivp.T
        f = _rk4_step(ivp, t, f, t_next - t)
        t = t_next
        out.append((t, f))
    return out


def rolle_check(ivp: Ivp, samples) -> dict | None:
    """Indirect cross-check by zero-crossing detection.

    If some sample is negative, locate the last crossing of zero before it
    and a sample in between where f < 0 and f' < 0.  Under alpha >= 0 and
    beta >= 0 such a point cannot exist, so a non-None result exhibits the
    violated hypothesis.  Returns None when every sample is >= 0.
    """
    neg = next((i for i, (_, f) in enumerate(samples) if f < 0), None)
    if neg is None:
        return None
    j = neg
    while j > 0 and samples[j - 1][1] < 0:
        j -= 1
    b = samples[j - 1][0] if j > 0 else samples[0][0]
    c, fc = samples[neg]
    fb = samples[j - 1][1] if j > 0 else samples[0][1]
    slope = (fc - fb) / (c - b) if c > b else float("nan")
    t, f = samples[neg]
    fprime = ivp.rhs(t, f)
    return {"crossing": b, "negative_at": c, "f": fc, "mean_slope": slope,
            "witness_t": t, "witness_fprime": fprime,
            "alpha": ivp.alpha_at(t), "beta": ivp.beta_at(t)}
