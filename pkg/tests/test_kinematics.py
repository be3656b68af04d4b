import json
import math

import numpy as np
import pytest

from realind.engine import check_trace
from realind.interval import DomainError
from realind.kinematics import (CoefficientSignViolation, Control, ControlBoundViolated,
                                ControlTooShort, DenominatorTooSmall, Params, adversarial_search,
                                check_lemma_invariants, envelope,
                                envelope_comparison_via_positivity, random_controls, simulate)

P = Params(1.0, 1.0)
HALF_PI = math.pi / 2


def circle(T, dt, theta0=HALF_PI, p=P):
    return simulate(p, Control.constant(p.rho, T, theta0), T, dt)


class TestSimulate:
    def test_straight_line_radius(self):
        tr = simulate(P, Control.constant(0.0, 2.0), 2.0, 1e-3)
        assert np.max(np.abs(tr.R - tr.t)) <= 1e-9

    def test_starts_at_origin(self):
        tr = simulate(P, Control(((0.5, 1.0), (0.5, -1.0)), 0.3), 1.0, 1e-2)
        assert tr.x[0] == 0.0 and tr.y[0] == 0.0 and tr.theta[0] == 0.3

    def test_half_circle(self):
        dt = math.pi / 10_000
        tr = circle(math.pi, dt)
        s = tr[-1]
        assert s.t == pytest.approx(math.pi, abs=1e-12)
        assert s.x == pytest.approx(-2.0, abs=1e-9)
        assert s.y == pytest.approx(0.0, abs=1e-9)
        assert s.R == pytest.approx(2.0, abs=1e-9)

    def test_circle_matches_closed_form(self):
        tr = circle(2.0, 1e-3)
        assert np.max(np.abs(tr.x - (np.cos(tr.t) - 1))) <= 1e-9
        assert np.max(np.abs(tr.y - np.sin(tr.t))) <= 1e-9

    def test_heading_independent_radius(self):
        a, b = circle(2.0, 1e-3, 0.0), circle(2.0, 1e-3, 1.234)
        assert np.max(np.abs(a.R - b.R)) <= 1e-12

    def test_speed_invariant(self):
        tr = simulate(P, random_controls(P, 1, 4, 1.9)[0], 1.9, 1e-3)
        v = np.hypot(np.gradient(tr.x, tr.t, edge_order=2), np.gradient(tr.y, tr.t, edge_order=2))
        # exact-theta speed is v by construction; the sampled slope agrees to O(dt^2)
        assert np.median(np.abs(v - 1.0)) <= 1e-6

    def test_switch_inside_step(self):
        c = Control(((0.0105, 1.0), (1.0, -1.0)))
        fine = simulate(P, c, 1.0, 1e-4)
        coarse = simulate(P, c, 1.0, 1e-2)
        assert abs(coarse.x[-1] - fine.x[-1]) <= 1e-8
        assert abs(coarse.y[-1] - fine.y[-1]) <= 1e-8

    def test_rk4_order(self):
        def err(dt):
            tr = circle(2.0, dt, theta0=0.3)
            ex = np.sin(0.3 + tr.t) - math.sin(0.3)
            return abs(tr.x[-1] - ex[-1]) + abs(tr.y[-1] - (math.cos(0.3) - np.cos(0.3 + tr.t[-1])))
        assert err(0.2) / err(0.1) >= 14

    def test_control_bound(self):
        with pytest.raises(ControlBoundViolated):
            simulate(P, Control.constant(1.5, 1.0), 1.0, 1e-2)

    def test_control_too_short(self):
        with pytest.raises(ControlTooShort):
            simulate(P, Control.constant(0.0, 0.5), 1.0, 1e-2)

    def test_bad_params(self):
        with pytest.raises(ValueError):
            Params(0.0, 1.0)

    def test_csv_columns(self):
        text = circle(0.1, 1e-2).to_csv()
        header, first, *_ = text.splitlines()
        assert header == "t,x,y,theta,R,alpha_pol,Rp,alphap,F,margin"
        assert len(first.split(",")) == 10


class TestEnvelope:
    def test_values(self):
        assert envelope(P, 0.0) == 0.0
        assert envelope(P, 2.0) == pytest.approx(1.6829420, abs=1e-7)
        assert envelope(P, math.pi) == pytest.approx(2.0, abs=1e-15)

    def test_scaling(self):
        p = Params(3.0, 2.0)
        assert envelope(p, 0.7) == pytest.approx(3.0 * math.sin(0.7), rel=1e-15)

    @pytest.mark.parametrize("t", [-0.1, 2 * math.pi + 1e-9])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            envelope(P, t)

    def test_circle_attains_envelope(self):
        tr = circle(2.0, 1e-4)
        assert np.max(np.abs(tr.margins())) <= 1e-6

    def test_straight_line_margin(self):
        tr = simulate(P, Control.constant(0.0, 1.0), 1.0, 1e-3)
        assert tr.margins()[-1] == pytest.approx(1 - 2 * math.sin(0.5), abs=1e-12)
        assert tr.margins()[-1] == pytest.approx(0.0411489, abs=1e-7)


class TestPolarInvariants:
    def test_circle_polar_rate(self):
        rep = check_lemma_invariants(circle(1.99, 1e-3))
        assert rep.checked > 0
        assert rep.max_abs_alphap == pytest.approx(0.5, abs=1e-6)
        tr = circle(1.99, 1e-3)
        assert np.nanmin(tr.alphap) == pytest.approx(0.5, abs=1e-6)

    def test_straight_line(self):
        tr = simulate(P, Control.constant(0.0, 1.9), 1.9, 1e-3)
        m = tr.polar_mask
        assert np.max(np.abs(tr.alphap[m])) <= 1e-12
        assert np.max(np.abs(tr.Rp[m] - 1.0)) <= 1e-12

    def test_random_controls_identity(self):
        rep = None
        for c in random_controls(P, 50, 3, 1.999):
            r = check_lemma_invariants(simulate(P, c, 1.999, 1e-3))
            rep = r if rep is None else rep.merge(r)
        assert rep.identity_residual <= 1e-6
        assert rep.max_abs_alphap <= 0.5 + 1e-6
        assert rep.min_Rp > 0
        assert rep.holds(P)

    def test_samples_past_horizon_are_ignored(self):
        rep = check_lemma_invariants(circle(3.0, 1e-2))
        assert rep.ignored > 0 and rep.notes

    def test_polar_quantities_skipped_near_origin(self):
        tr = circle(1.0, 1e-2)
        assert np.isnan(tr.Rp[tr.t <= 0.1]).all()
        assert not np.isnan(tr.Rp[tr.t > 0.1 + 1e-12]).any()


class TestSearch:
    def test_controls_are_bang_bang(self):
        for c in random_controls(P, 30, 1, 1.9):
            assert {u for _, u in c.pieces} <= {-1.0, 0.0, 1.0}
            assert c.duration == pytest.approx(1.9)

    def test_deterministic(self):
        a = adversarial_search(P, 40, seed=9, T=1.9)
        b = adversarial_search(P, 40, seed=9, T=1.9)
        assert a.dumps() == b.dumps()

    def test_small_search(self):
        rep = adversarial_search(P, 100, seed=1, T=1.999)
        assert rep.min_margin >= -1e-6
        assert rep.min_margin == pytest.approx(float(np.min(rep.per_control_min)))
        d = json.loads(rep.dumps())
        assert {"min_margin", "argmin_t", "control", "seed"} <= set(d)

    def test_horizon_guard(self):
        with pytest.raises(ValueError):
            adversarial_search(P, 5, T=2.5)
        rep = adversarial_search(P, 5, T=2.5, extended=True)
        assert rep.T == 2.5

    def test_other_parameters(self):
        p = Params(2.0, 0.5)
        rep = adversarial_search(p, 60, seed=2, T=0.999 * p.proof_horizon, dt=4e-3)
        assert rep.min_margin >= -1e-6
        assert rep.polar.max_abs_alphap <= p.rho / 2 + 1e-6


class TestReduction:
    @pytest.mark.parametrize("u", [0.0, 1.0])
    def test_baselines(self, u):
        res = envelope_comparison_via_positivity(P, Control.constant(u, 1.9), 0.1, 1.9)
        assert res.reached and not res.trace.rigorous
        assert check_trace(res.trace.to_json()).verdict == "non-rigorous pass"
        assert np.min(res.A) >= 0 and np.min(res.B) > 0
        assert np.min(res.S) > 0
        assert res.consistency <= 1e-6

    def test_rejects_past_horizon(self):
        with pytest.raises(ValueError):
            envelope_comparison_via_positivity(P, Control.constant(0.0, 2.5), 0.1, 2.5)

    def test_denominator_guard(self):
        # at t near 2/rho' the chord rate F_eps' collapses for large eps
        with pytest.raises((DenominatorTooSmall, CoefficientSignViolation)):
            envelope_comparison_via_positivity(P, Control.constant(1.0, 1.99), 4.0, 1.99)
