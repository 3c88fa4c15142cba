import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caustic.errors import ConsistencyError, ValidationError
from caustic.fourier_profile import FourierProfile, evaluate, tq_member
from caustic.perturbation_engine import (
    c2_coefficient, c3_coefficient, c3_exponential_sum, c3_matrix_path, c3_printed_scalars,
    c3_scalar_report, c3_vanishing_certificate, calibrate_printed, d2_closed_form, dq_evaluate,
    dq_fourier, first_order_term, first_variation, kernel, m_term, printed_series,
    quadratic_kernel, second_order_form, theta1_q2, theta1_q3_closed_form, theta1_solve,
    tridiagonal_residual)

from conftest import SQ3, cosines, random_profile

GRID = 2 * np.pi * np.arange(256) / 256
Z23_SMALL = [k for k in range(-50, 51) if k % 6 in (1, 5)]


def z23_profile(rng, count=3, top=31):
    pool = [k for k in range(1, top + 1) if k % 6 in (1, 5)]
    ks = rng.choice(pool, size=count, replace=False)
    return FourierProfile.from_trig(cos={int(k): float(rng.uniform(-1, 1)) for k in ks},
                                    sin={int(k): float(rng.uniform(-1, 1)) for k in ks})


class TestFirstVariation:
    def test_hand_solved_triangle(self):
        t = theta1_solve(cosines((1, 1.0)), 3, 0.0)
        assert t == pytest.approx([-9 * SQ3 / 26, 3 * SQ3 / 26], abs=1e-15)
        assert t[0] == pytest.approx(-0.599519, abs=1e-4)

    def test_zero_profile(self):
        for q in range(3, 9):
            assert np.all(theta1_solve(FourierProfile.zero(), q, 0.4) == 0)

    def test_rhs_vanishes(self):
        assert theta1_solve(cosines((3, 1.0)), 3, 0.0) == pytest.approx([0, 0], abs=1e-14)

    def test_printed_residual(self, rng):
        for _ in range(10):
            n = random_profile(rng, kmax=10)
            th = float(rng.uniform(0, 2 * np.pi))
            for q in range(3, 13):
                assert tridiagonal_residual(n, q, th, theta1_solve(n, q, th)) <= 1e-12

    def test_variational_residual(self, rng):
        n = random_profile(rng)
        for q in range(2, 13):
            t = theta1_solve(n, q, 0.3, "variational")
            assert tridiagonal_residual(n, q, 0.3, t, "variational") <= 1e-12

    def test_closed_form_q3(self, rng):
        for _ in range(64):
            n = random_profile(rng, kmax=9)
            th = float(rng.uniform(0, 2 * np.pi))
            assert theta1_solve(n, 3, th) == pytest.approx(theta1_q3_closed_form(n, th), abs=1e-12)

    def test_printed_needs_q3(self):
        with pytest.raises(ValidationError):
            theta1_solve(cosines((1, 1.0)), 2, 0.0)

    @pytest.mark.parametrize("theta, value", [(0.0, 0.0), (math.pi / 2, 2.0)])
    def test_q2(self, theta, value):
        assert theta1_q2(cosines((1, 1.0)), theta) == pytest.approx(value, abs=1e-15)

    def test_q2_on_t2(self, p57):
        for th in np.linspace(0, 6, 13):
            assert theta1_q2(p57, th) == pytest.approx(-2 * evaluate(p57, th, 1), abs=1e-12)

    def test_components(self, p57):
        fv = first_variation(p57, 4, 0.2)
        ang = 0.2 + 2 * np.pi * np.arange(4) / 4
        assert fv.eta_perp == pytest.approx(evaluate(p57, ang))
        assert fv.full[0] == 0 and fv.full[-1] == 0 and len(fv.full) == 5
        assert fv.residual <= 1e-12

    def test_variational_is_stationary(self, rng):
        # the variational shifts are a critical point of the exact second-order perimeter
        n = random_profile(rng)
        q, th, h = 5, 0.7, 1e-3
        ang = th + 2 * np.pi * np.arange(q) / q
        N, dN = evaluate(n, ang), evaluate(n, ang, 1)
        for system, stationary in (("variational", True), ("printed", False)):
            t = np.concatenate([[0.0], theta1_solve(n, q, th, system)])
            grad = []
            for j in range(1, q):
                e = np.zeros(q)
                e[j] = h
                grad.append((second_order_form(N, dN, t + e, q)
                             - second_order_form(N, dN, t - e, q)) / (2 * h))
            assert bool(np.max(np.abs(grad)) < 1e-6) is stationary


class TestFirstOrder:
    def test_cos2(self):
        assert first_order_term(cosines((2, 1.0)), 2, 0.0) == pytest.approx(4.0)

    def test_vanishes_on_tq(self, p57):
        assert np.max(np.abs(first_order_term(p57, 2, GRID))) == 0.0

    def test_cos3(self):
        assert first_order_term(cosines((3, 1.0)), 3, math.pi / 9) == pytest.approx(3 * SQ3 / 2)

    def test_m_term(self):
        m = cosines((2, 0.5))
        assert m_term(m, 2, 0.0) == pytest.approx(2.0)


class TestSecondOrder:
    def test_cos_quarter_turn(self):
        assert dq_evaluate(cosines((1, 1.0)), 2, math.pi / 2) == pytest.approx(2.0)

    def test_zero(self):
        for q in (2, 3, 5):
            assert np.all(dq_evaluate(FourierProfile.zero(), q, GRID) == 0)

    def test_p57_at_zero(self, p57):
        assert dq_evaluate(p57, 2, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_two_gon_law_on_t2(self, p57, rng):
        for n in (p57, cosines((1, 1.0)), z23_profile(rng)):
            ref = 2 * evaluate(n, GRID, 1) ** 2
            assert np.max(np.abs(dq_evaluate(n, 2, GRID) - ref)) <= 1e-9 * max(1, np.max(ref))

    def test_q2_printed_shift_agrees_on_t2(self, p57):
        assert dq_evaluate(p57, 2, GRID, "printed") == pytest.approx(dq_evaluate(p57, 2, GRID),
                                                                     abs=1e-9)

    def test_q2_printed_shift_off_t2(self):
        # off T_2 the published shift is not stationary; the general closed form
        # follows it, so both differ from the true coefficient (2.72272 by finite differences)
        n = cosines((1, 1.0), (2, 0.5), (3, -0.3))
        assert dq_evaluate(n, 2, 0.4) == pytest.approx(2.7227181, abs=1e-6)
        assert dq_evaluate(n, 2, 0.4, "printed") == pytest.approx(d2_closed_form(n, 0.4), abs=1e-12)
        assert abs(dq_evaluate(n, 2, 0.4, "printed") - dq_evaluate(n, 2, 0.4)) > 1.0

    def test_vectorized_matches_scalar(self, p57):
        vals = dq_evaluate(p57, 3, GRID[:5])
        assert vals == pytest.approx([dq_evaluate(p57, 3, float(t)) for t in GRID[:5]], abs=1e-12)

    def test_bad_q(self, p57):
        with pytest.raises(ValidationError):
            dq_evaluate(p57, 1, 0.0)


class TestD2ClosedForm:
    def test_cos(self):
        n = cosines((1, 1.0))
        assert d2_closed_form(n, math.pi / 2) == pytest.approx(2.0)
        assert d2_closed_form(n, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_p57(self, p57):
        th = math.pi / 14
        ref = 2 * (-5 * math.sin(5 * th) + 7 * math.sin(7 * th)) ** 2
        assert d2_closed_form(p57, th) == pytest.approx(ref, rel=1e-12)
        assert dq_evaluate(p57, 2, th) == pytest.approx(ref, rel=1e-10)

    def test_general_line_off_t2(self):
        n = cosines((1, 1.0), (2, 0.5))
        a, b = evaluate(n, 0.4, 1), evaluate(n, 0.4 + math.pi, 1)
        assert d2_closed_form(n, 0.4) == pytest.approx((3 * b * b - a * a) / 2 - a * b)


class TestC2:
    def test_cross_class(self):
        assert c2_coefficient(7, 5) == 70

    def test_same_class(self):
        assert c2_coefficient(1, 1) == 0
        assert c2_coefficient(-1, -7) == 0
        assert c2_coefficient(5, -1) == 0

    def test_negative_indices_follow_residues(self):
        # -5 = 6(-1) + 1 sits in the +1 class, so (-1, -5) is a cross pair
        assert c2_coefficient(-1, -5) == 10

    def test_domain(self):
        with pytest.raises(ValidationError):
            c2_coefficient(2, 5)


class TestC3:
    @pytest.mark.parametrize("k, l", [(1, 1), (7, 13), (5, 11), (-5, 7), (11, -1)])
    def test_vanishing(self, k, l):
        assert abs(c3_coefficient(k, l)) <= 1e-12 * max(1, abs(k * l))

    def test_dual_path(self):
        for k in Z23_SMALL:
            for l in Z23_SMALL:
                a, b = c3_exponential_sum(k, l), c3_matrix_path(k, l)
                assert abs(a - b) <= 1e-10 * max(1.0, abs(b))

    def test_printed_sum_differs(self):
        # the literal transcription is off; the corrected sum is reported alongside
        lit = c3_exponential_sum(7, 5, corrected=False)
        assert abs(lit - c3_matrix_path(7, 5)) > 0.5
        assert c3_matrix_path(7, 5) == pytest.approx(84.73725489336954 - 38.30325279543108j, rel=1e-12)

    def test_certificate(self):
        cert = c3_vanishing_certificate()
        assert cert["all_equal"]
        assert cert["A"]["group_sums"] == [0, 0, 0]
        assert cert["C"]["group_sums"] == [36, 36, 36]

    def test_scalar_report(self):
        rep = c3_scalar_report(50)
        assert rep["matches"] == ["expanded"]
        assert rep["max_rel_deviation"]["four_case"] > 1.0

    def test_printed_scalars_same_class_zero(self):
        assert c3_printed_scalars(7, 13) == {"four_case": 0j, "expanded": 0j}

    def test_consistency_error(self, monkeypatch):
        import caustic.perturbation_engine as pe
        monkeypatch.setattr(pe, "c3_exponential_sum", lambda k, l: 1e6 + 0j)
        with pytest.raises(ConsistencyError):
            pe.c3_coefficient(7, 5)


class TestKernel:
    @pytest.mark.parametrize("q", [2, 3, 4, 7])
    def test_symmetric(self, q):
        M = quadratic_kernel(q)
        assert np.array_equal(M, M.T)

    @pytest.mark.parametrize("q", [2, 3, 5])
    def test_reproduces_form(self, q, rng):
        n = random_profile(rng)
        ang = 0.4 + 2 * np.pi * np.arange(q) / q
        u = np.concatenate([evaluate(n, ang), evaluate(n, ang, 1)])
        assert u @ quadratic_kernel(q) @ u == pytest.approx(dq_evaluate(n, q, 0.4), abs=1e-12)

    def test_two_gon_kernel_on_z23(self):
        # 2 n'^2 gives K_2(k, l) = -2 k l on odd harmonics
        for k, l in [(5, 7), (1, -5), (7, 7)]:
            assert kernel(2, k, l) == pytest.approx(-2 * k * l, abs=1e-10)


class TestSeries:
    def test_cos(self):
        s = dq_fourier(cosines((1, 1.0)), 2)
        assert s[0] == pytest.approx(1.0)
        assert s[2] == pytest.approx(-0.5) and s[-2] == pytest.approx(-0.5)
        assert s.harmonics() == [-2, 0, 2]

    def test_p57(self, p57):
        s = dq_fourier(p57, 2)
        assert s[12] == pytest.approx(35.0) and s[-12] == pytest.approx(35.0)
        assert s[0] == pytest.approx(74.0)
        assert s[10] == pytest.approx(-12.5) and s[14] == pytest.approx(-24.5)

    def test_zero(self):
        assert dq_fourier(FourierProfile.zero(), 3).coeffs == {}

    def test_preconditions(self):
        with pytest.raises(ValidationError):
            dq_fourier(cosines((2, 1.0)), 2)
        with pytest.raises(ValidationError):
            dq_fourier(cosines((1, 1.0)), 4)
        with pytest.raises(ValidationError):
            dq_fourier(cosines((7, 1.0)), 2, cutoff=5)

    def test_non_strict_any_q(self, rng):
        n = random_profile(rng)
        s = dq_fourier(n, 4, strict=False)
        assert np.max(np.abs(s.evaluate(GRID) - dq_evaluate(n, 4, GRID))) <= 1e-9

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3]))
    def test_series_matches_evaluation(self, seed, q):
        n = z23_profile(np.random.default_rng(seed))
        s = dq_fourier(n, q)
        assert np.max(np.abs(s.evaluate(GRID) - dq_evaluate(n, q, GRID))) <= 1e-9

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_harmonic_support(self, seed):
        n = z23_profile(np.random.default_rng(seed))
        for q in (2, 3):
            s = dq_fourier(n, q)
            scale = max(1.0, max(abs(c) for c in s.coeffs.values()))
            assert all(abs(s[h]) <= 1e-10 * scale for h in s.harmonics() if h % q)

    def test_realness(self, rng):
        s = dq_fourier(z23_profile(rng), 3)
        for h in s.harmonics():
            assert s[-h] == pytest.approx(s[h].conjugate(), rel=1e-12, abs=1e-12)

    def test_json(self, p57):
        data = dq_fourier(p57, 2).to_json()
        assert data["q"] == 2 and [12, 35.0, 0.0] in [[h, pytest.approx(a), pytest.approx(b, abs=1e-12)]
                                                      for h, a, b in data["coeffs"]]


class TestPublishedTables:
    def test_calibration_fails_for_two_gon(self):
        cal = calibrate_printed(2)
        assert not cal.ok
        assert cal.factor.real == pytest.approx(-1.0)
        assert cal.residual == pytest.approx(144.0)

    def test_calibration_fails_for_three_gon(self):
        cal = calibrate_printed(3)
        assert not cal.ok and cal.residual > 1

    def test_printed_series_sign(self, p57):
        # cross pairs of the two-gon table are -1 times the derived kernel
        pr = printed_series(p57, 2)
        assert pr[12] == pytest.approx(-dq_fourier(p57, 2)[12])

    def test_printed_series_domain(self, p57):
        with pytest.raises(ValidationError):
            printed_series(p57, 4)

    def test_membership_precondition_noted(self, p57):
        assert tq_member(p57, 2) and tq_member(p57, 3)
