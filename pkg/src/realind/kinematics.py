"""Planar motion at constant speed with bounded turn rate.

A point starts at the origin and moves with velocity
``v (cos theta, sin theta)`` where ``|theta'| <= rho``.  Its distance to the
origin at time t is bounded below by the chord of the tightest turn,

    F(t) = (2 v / rho) |sin(rho t / 2)|,

at least for t < 2 / rho.  This module simulates such motions, tracks
the polar quantities R, alpha (polar angle of the position) and their
derivatives, and searches bang-bang controls for violations of the bound.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .engine import ProofTrace, SweepPolicy
from .interval import DomainError
from .ode import Ivp, solve_rk4, verify_nonnegative

__all__ = [
    "Params", "Control", "TrajectorySample", "Trajectory", "PolarReport",
    "EnvelopeReport", "ReductionResult", "ControlBoundViolated",
    "ControlTooShort", "DenominatorTooSmall", "CoefficientSignViolation",
    "simulate", "envelope", "check_lemma_invariants", "random_controls",
    "adversarial_search", "envelope_comparison_via_positivity",
]


class ControlBoundViolated(ValueError):
    pass


class ControlTooShort(ValueError):
    pass


class DenominatorTooSmall(ArithmeticError):
    pass


class CoefficientSignViolation(ArithmeticError):
    pass


@dataclass(frozen=True)
class Params:
    v: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if not (self.v > 0 and self.rho > 0):
            raise ValueError("speed v and turn-rate bound rho must be positive")

    @property
    def proof_horizon(self) -> float:
        return 2 / self.rho

    @property
    def conjecture_horizon(self) -> float:
        return 2 * math.pi / self.rho


@dataclass(frozen=True)
class Control:
    """Piecewise-constant turn rate: ``pieces`` is a sequence of (duration, u)."""

    pieces: tuple[tuple[float, float], ...]
    theta0: float = 0.0

    def __post_init__(self):
        pieces = tuple((float(d), float(u)) for d, u in self.pieces)
        if not pieces or any(not d > 0 for d, _ in pieces):
            raise ValueError("control pieces need positive durations")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def constant(cls, u: float, T: float, theta0: float = 0.0) -> "Control":
        return cls(((T, u),), theta0)

    @property
    def duration(self) -> float:
        return sum(d for d, _ in self.pieces)

    def switch_times(self) -> np.ndarray:
        return np.cumsum([d for d, _ in self.pieces])

    def check(self, p: Params, T: float) -> None:
        for d, u in self.pieces:
            if abs(u) > p.rho * (1 + 1e-12):
                raise ControlBoundViolated(f"|u| = {abs(u)} exceeds rho = {p.rho}")
        if self.duration < T * (1 - 1e-12):
            raise ControlTooShort(f"control covers {self.duration}, need {T}")

    def to_json(self) -> dict:
        return {"theta0": self.theta0, "pieces": [list(pc) for pc in self.pieces]}


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    y: float
    theta: float
    R: float
    alpha_pol: float
    Rp: float
    alphap: float


@dataclass
class Trajectory:
    """Sampled trajectory; Rp and alphap are NaN where polar quantities are skipped."""

    params: Params
    control: Control
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    R: np.ndarray
    alpha_pol: np.ndarray
    Rp: np.ndarray
    alphap: np.ndarray
    t_min: float

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> TrajectorySample:
        return TrajectorySample(*(float(getattr(self, k)[i]) for k in
                                  ("t", "x", "y", "theta", "R", "alpha_pol", "Rp", "alphap")))

    def __iter__(self) -> Iterator[TrajectorySample]:
        return (self[i] for i in range(len(self)))

    @property
    def polar_mask(self) -> np.ndarray:
        return ~np.isnan(self.Rp)

    def margins(self) -> np.ndarray:
        """R(t) - F(t) at every sample."""
        return self.R - envelope(self.params, self.t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["t", "x", "y", "theta", "R", "alpha_pol", "Rp", "alphap", "F", "margin"]
        w.writerow(cols)
        in_domain = self.t <= self.params.conjecture_horizon
        F = np.full_like(self.t, np.nan)
        F[in_domain] = envelope(self.params, self.t[in_domain])
        rows = np.column_stack([self.t, self.x, self.y, self.theta, self.R,
                                self.alpha_pol, self.Rp, self.alphap, F, self.R - F])
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _grid(T: float, dt: float) -> np.ndarray:
    n = int(math.floor(T / dt + 1e-9))
    return np.arange(n + 1) * dt


def simulate(p: Params, c: Control, T: float, dt: float, t_min: float | None = None,
             r_min: float = 1e-12) -> Trajectory:
    """Integrate x' = v cos theta, y' = v sin theta, theta' = u(t) from the origin.

    Classical RK4 on the three-state system, with steps split at control
    switches so that u is constant inside every step.  Because theta' is
    constant on a step, the theta stages are exact and the RK4 update for x
    and y reduces to Simpson's rule on v cos(theta(t)), v sin(theta(t));
    that is how it is evaluated here, vectorised over all steps.

    Samples are taken at multiples of ``dt``.  Rp and alphap come from
    Rp = v cos(theta - alpha), R alphap = v sin(theta - alpha) and are only
    reported for t > t_min (default 10 dt) where R > r_min.
    """
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    c.check(p, T)
    t_min = 10 * dt if t_min is None else t_min
    grid = _grid(T, dt)
    switches = c.switch_times()
    inner = switches[(switches > 0) & (switches < grid[-1])]
    nodes = np.union1d(grid, inner)
    h = np.diff(nodes)

    # rate on each sub-step: the piece that contains its midpoint
    mids = nodes[:-1] + h / 2
    rates = np.array([u for _, u in c.pieces])
    idx = np.minimum(np.searchsorted(switches, mids, side="right"), len(rates) - 1)
    u = rates[idx]

    theta_nodes = np.concatenate([[c.theta0], c.theta0 + np.cumsum(u * h)])
    theta_start = theta_nodes[:-1]
    theta_mid = theta_start + u * h / 2
    theta_end = theta_nodes[1:]
    dx = p.v * h / 6 * (np.cos(theta_start) + 4 * np.cos(theta_mid) + np.cos(theta_end))
    dy = p.v * h / 6 * (np.sin(theta_start) + 4 * np.sin(theta_mid) + np.sin(theta_end))
    x_nodes = np.concatenate([[0.0], np.cumsum(dx)])
    y_nodes = np.concatenate([[0.0], np.cumsum(dy)])

    sel = np.searchsorted(nodes, grid)
    t = grid
    x, y, theta = x_nodes[sel], y_nodes[sel], theta_nodes[sel]
    R = np.hypot(x, y)
    alpha_pol = np.arctan2(y, x)
    ok = (t > t_min) & (R > r_min)
    Rp = np.full_like(t, np.nan)
    alphap = np.full_like(t, np.nan)
    rel = theta[ok] - alpha_pol[ok]
    Rp[ok] = p.v * np.cos(rel)
    alphap[ok] = p.v * np.sin(rel) / R[ok]
    return Trajectory(p, c, t, x, y, theta, R, alpha_pol, Rp, alphap, t_min)


def envelope(p: Params, t):
    """Distance (2v/rho)|sin(rho t / 2)| reached by turning at full rate.

    Defined on [0, 2 pi / rho]; past that the minimum distance is 0.
    Accepts scalars or arrays.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(arr > p.conjecture_horizon):
        raise DomainError(f"envelope is defined on [0, {p.conjecture_horizon}]")
    out = 2 * p.v / p.rho * np.abs(np.sin(p.rho * arr / 2))
    return float(out) if np.ndim(t) == 0 else out


@dataclass
class PolarReport:
    """Worst-case values of the polar invariants over the checked samples."""

    identity_residual: float = 0.0
    max_abs_alphap: float = 0.0
    min_Rp: float = math.inf
    fd_residual: float = 0.0
    checked: int = 0
    ignored: int = 0
    notes: list = field(default_factory=list)

    def merge(self, other: "PolarReport") -> "PolarReport":
        return PolarReport(
            max(self.identity_residual, other.identity_residual),
            max(self.max_abs_alphap, other.max_abs_alphap),
            min(self.min_Rp, other.min_Rp),
            max(self.fd_residual, other.fd_residual),
            self.checked + other.checked,
            self.ignored + other.ignored,
            self.notes + other.notes,
        )

    def holds(self, p: Params, tol: float = 1e-6) -> bool:
        return (self.identity_residual <= tol and self.max_abs_alphap <= p.rho / 2 + tol
                and self.min_Rp > 0)


def check_lemma_invariants(traj: Trajectory, p: Params | None = None) -> PolarReport:
    """Measure the polar identity, the |alpha'| <= rho/2 bound and R' > 0.

    Only samples with t_min < t < 2/rho are checked; later ones are counted
    as ignored.  The finite-difference column compares Rp with a centred
    difference of R as a consistency check of the simulation.
    """
    p = p or traj.params
    in_horizon = traj.t < p.proof_horizon
    mask = traj.polar_mask & in_horizon
    rep = PolarReport(checked=int(mask.sum()), ignored=int((traj.polar_mask & ~in_horizon).sum()))
    if rep.ignored:
        rep.notes.append(f"{rep.ignored} samples at t >= 2/rho ignored")
    if not rep.checked:
        return rep
    Rp, ap, R = traj.Rp[mask], traj.alphap[mask], traj.R[mask]
    rep.identity_residual = float(np.max(np.abs((R * ap) ** 2 + Rp ** 2 - p.v ** 2)))
    rep.max_abs_alphap = float(np.max(np.abs(ap)))
    rep.min_Rp = float(np.min(Rp))
    fd = np.gradient(traj.R, traj.t)
    interior = mask.copy()
    interior[[0, -1]] = False
    if interior.any():
        rep.fd_residual = float(np.max(np.abs(traj.Rp[interior] - fd[interior])))
    return rep


def random_controls(p: Params, n: int, seed: int, T: float, pieces: int = 6) -> list[Control]:
    """Seeded bang-bang controls with values in {-rho, 0, rho} and random switch times."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        k = int(rng.integers(1, pieces + 1))
        cuts = np.sort(rng.uniform(0.0, T, size=k - 1))
        bounds = np.concatenate([[0.0], cuts, [T]])
        durations = np.diff(bounds)
        values = rng.choice([-p.rho, 0.0, p.rho], size=k)
        keep = durations > 0
        out.append(Control(tuple(zip(durations[keep].tolist(), values[keep].tolist()))))
    return out


@dataclass
class EnvelopeReport:
    """Result of an adversarial search for R(t) < F(t)."""

    min_margin: float
    argmin_t: float
    control: Control
    margins: np.ndarray
    per_control_min: np.ndarray
    seed: int
    n: int
    T: float
    dt: float
    polar: PolarReport | None = None
    rigorous: bool = False

    def to_json(self) -> dict:
        d = {"min_margin": self.min_margin, "argmin_t": self.argmin_t,
             "control": self.control.to_json(), "seed": self.seed, "n": self.n,
             "T": self.T, "dt": self.dt, "controls_searched": len(self.per_control_min),
             "rigorous": self.rigorous}
        if self.polar is not None:
            d["polar"] = {"identity_residual": self.polar.identity_residual,
                          "max_abs_alphap": self.polar.max_abs_alphap,
                          "min_Rp": self.polar.min_Rp, "fd_residual": self.polar.fd_residual,
                          "checked": self.polar.checked}
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def adversarial_search(p: Params, n: int = 1000, seed: int = 0, T: float | None = None,
                       dt: float = 1e-3, pieces: int = 6, extended: bool = False,
                       check_polar: bool = True) -> EnvelopeReport:
    """Minimise R(t) - F(t) over random bang-bang controls and the two baselines.

    By default T must stay below the proof horizon 2/rho; ``extended``
    allows exploring up to 2 pi / rho.
    """
    if T is None:
        T = p.proof_horizon * 0.9995
    limit = p.conjecture_horizon if extended else p.proof_horizon
    if not 0 < T <= limit or (not extended and T >= p.proof_horizon):
        raise ValueError(f"T={T} outside the {'conjecture' if extended else 'proof'} horizon")
    controls = [Control.constant(0.0, T), Control.constant(p.rho, T)]
    controls += random_controls(p, n, seed, T, pieces)

    best = None
    mins = np.empty(len(controls))
    polar = PolarReport() if check_polar else None
    for i, ctl in enumerate(controls):
        traj = simulate(p, ctl, T, dt)
        m = traj.margins()[1:]  # t in (0, T]
        j = int(np.argmin(m))
        mins[i] = m[j]
        # strict < keeps the first minimiser, so the result is order-independent for ties
        if best is None or m[j] < best[0]:
            best = (float(m[j]), float(traj.t[j + 1]), ctl, traj.margins())
        if polar is not None:
            polar = polar.merge(check_lemma_invariants(traj, p))
    return EnvelopeReport(best[0], best[1], best[2], best[3], mins, seed, n, T, dt, polar)


@dataclass
class ReductionResult:
    """Numeric replay of the comparison S = R - F_eps >= 0 through S' = -A S + B."""

    trace: ProofTrace
    t: np.ndarray
    A: np.ndarray
    B: np.ndarray
    S: np.ndarray
    S_integrated: np.ndarray
    rho_eps: float

    @property
    def reached(self) -> bool:
        return self.trace.reached

    @property
    def consistency(self) -> float:
        """Largest gap between the integrated and the directly computed S."""
        return float(np.max(np.abs(self.S_integrated - self.S)))


def envelope_comparison_via_positivity(p: Params, c: Control, eps: float, T: float,
                                       dt: float = 1e-3, d_min: float = 1e-3,
                                       policy: SweepPolicy | None = None) -> ReductionResult:
    """Reduce R(t) >= F_eps(t) to the scalar positivity problem and sweep it.

    With rho' = rho + eps and F_eps = (2v/rho')|sin(rho' t/2)|, the
    difference S = R - F_eps satisfies S' = -A S + B with

        A = alpha'^2 (R + F_eps) / (R' + F_eps'),
        B = ((rho'/2)^2 - alpha'^2) F_eps^2 / (R' + F_eps'),

    where F_eps' = v cos(rho' t / 2).  A and B are computed from the
    simulated trajectory, interpolated linearly, and the positivity sweep
    is run in numeric mode starting from the first sample with polar data.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < T < p.proof_horizon:
        raise ValueError("T must lie in (0, 2/rho)")
    traj = simulate(p, c, T, dt)
    mask = traj.polar_mask
    t = traj.t[mask]
    R, Rp, ap = traj.R[mask], traj.Rp[mask], traj.alphap[mask]
    rho_e = p.rho + eps
    F = 2 * p.v / rho_e * np.abs(np.sin(rho_e * t / 2))
    Fp = p.v * np.cos(rho_e * t / 2)
    den = Rp + Fp
    if np.min(den) < d_min:
        k = int(np.argmin(den))
        raise DenominatorTooSmall(f"R' + F_eps' = {den[k]:.3g} < {d_min} at t = {t[k]:.6g}")
    A = ap ** 2 * (R + F) / den
    B = ((rho_e / 2) ** 2 - ap ** 2) * F ** 2 / den
    if np.min(A) < 0:
        k = int(np.argmin(A))
        raise CoefficientSignViolation(f"A(t) = {A[k]:.3g} < 0 at t = {t[k]:.6g} (alpha >= 0 fails)")
    if not np.min(B) > 0:
        k = int(np.argmin(B))
        raise CoefficientSignViolation(
            f"B(t) = {B[k]:.3g} <= 0 at t = {t[k]:.6g} (beta > 0 fails: |alpha'| >= rho'/2)")
    S = R - F
    if S[0] < 0:
        raise CoefficientSignViolation(f"S({t[0]:.6g}) = {S[0]:.3g} < 0 (initial value b >= 0 fails)")

    def alpha_fn(s, _t=t, _A=A):
        return float(np.interp(s, _t, _A))

    def beta_fn(s, _t=t, _B=B):
        return float(np.interp(s, _t, _B))

    ivp = Ivp(alpha_fn, beta_fn, float(t[0]), float(S[0]), float(t[-1]))
    trace = verify_nonnegative(ivp, policy, dt=dt, label="kinematics:R-F_eps")
    sol = solve_rk4(ivp, dt)
    S_int = np.interp(t, [s for s, _ in sol], [f for _, f in sol])
    return ReductionResult(trace, t, A, B, S, S_int, rho_e)
