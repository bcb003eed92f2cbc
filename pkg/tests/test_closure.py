import math

import numpy as np
import pytest

from twofluid1d.closure import (
    ClosureTolerances,
    DomainError,
    GammaLaw,
    _dp_dtau_arrays,
    _solve_closure_arrays,
    closure_bracket,
    dp_dtau,
    dZ_dtau,
    dZ_partials,
    pressure_decomposition,
    solve_closure,
)


def closure_residual(Z, R, Q, g):
    return Z**g - R * Z ** (g - 1.0) - Q


def bisect_closure(R, Q, g, lo, hi, width=1e-15):
    # plain bisection oracle, independent of the Newton path under test
    a, b = lo, hi
    fa = closure_residual(a, R, Q, g)
    for _ in range(200):
        m = 0.5 * (a + b)
        if b - a <= width * max(1.0, abs(m)):
            break
        fm = closure_residual(m, R, Q, g)
        if (fa <= 0.0) == (fm <= 0.0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


LAW_EQUAL = GammaLaw(2.0, 2.0)          # g = 1, Z = R + Q in closed form
LAW_GOLDEN = GammaLaw(4.0, 2.0)         # g = 2, quadratic closure
LAW_DEFAULT = GammaLaw(2.0, 1.5)


class TestBracket:
    def test_equal_exponents_root_at_upper_end(self):
        lo, hi = closure_bracket(1.0, 1.0, LAW_EQUAL)
        assert lo == 1.0
        assert hi == 2.0
        # g = 1 forces Z = R + Q, which is exactly hi here
        assert closure_residual(hi, 1.0, 1.0, 1.0) == 0.0

    def test_cube_exponent_bracket(self):
        law = GammaLaw(4.5, 1.5)  # g = 3
        lo, hi = closure_bracket(1.0, 8.0, law)
        assert lo == pytest.approx(2.0, abs=0.0)
        assert hi == pytest.approx(2.0 ** (4.0 / 3.0), rel=1e-15)
        assert closure_residual(lo, 1.0, 8.0, 3.0) <= 0.0
        assert closure_residual(hi, 1.0, 8.0, 3.0) >= 0.0

    def test_vanishing_q_collapses_to_r(self):
        lo, hi = closure_bracket(2.0, 1e-14, LAW_GOLDEN)
        assert lo == 2.0
        res = solve_closure(2.0, 1e-14, LAW_GOLDEN)
        assert res.Z == pytest.approx(2.0, abs=1e-13)

    def test_sign_change_over_sampled_domain(self):
        # bracket soundness: f(lo) <= 0 <= f(hi) for all positive data
        rng = np.random.default_rng(7)
        for _ in range(300):
            R = 10.0 ** rng.uniform(-1, 1)
            Q = 10.0 ** rng.uniform(-1, 1)
            gp = rng.uniform(1.05, 5.0)
            gm = rng.uniform(1.05, 5.0)
            law = GammaLaw(gp, gm)
            lo, hi = closure_bracket(R, Q, law)
            assert closure_residual(lo, R, Q, law.gamma) <= 0.0
            assert closure_residual(hi, R, Q, law.gamma) >= 1e-18 * -1.0
            assert closure_residual(hi, R, Q, law.gamma) >= -1e-12 * max(1.0, Q)

    def test_rejects_nonpositive_inputs(self):
        with pytest.raises(DomainError):
            closure_bracket(0.0, 1.0, LAW_EQUAL)
        with pytest.raises(DomainError):
            closure_bracket(1.0, -2.0, LAW_EQUAL)


class TestSolveClosure:
    def test_equal_exponents_closed_form(self):
        res = solve_closure(1.0, 1.0, LAW_EQUAL)
        assert res.Z == pytest.approx(2.0, abs=1e-14)
        assert res.alpha == pytest.approx(0.5, abs=1e-14)
        assert res.p == pytest.approx(4.0, abs=1e-13)

    def test_golden_ratio_root(self):
        # g = 2: Z**2 - Z - 1 = 0, so Z is the golden ratio
        phi = 0.5 * (1.0 + math.sqrt(5.0))
        res = solve_closure(1.0, 1.0, LAW_GOLDEN)
        assert res.Z == pytest.approx(phi, abs=1e-14)
        assert res.alpha == pytest.approx(1.0 / phi, abs=1e-14)
        assert res.p == pytest.approx(phi**4, rel=1e-14)

    def test_small_q_perturbation(self):
        # g = 2 with Q = 1e-8: Z = (1 + sqrt(1 + 4e-8))/2 = 1 + 1e-8 - O(1e-16)
        law = GammaLaw(3.0, 1.5)
        res = solve_closure(1.0, 1e-8, law)
        assert abs(res.Z - (1.0 + 1e-8)) < 1e-14
        oracle = bisect_closure(1.0, 1e-8, 2.0, *closure_bracket(1.0, 1e-8, law))
        assert abs(res.Z - oracle) < 1e-14

    def test_residual_below_tolerance_and_within_bracket(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            R = 10.0 ** rng.uniform(-1, 1)
            Q = 10.0 ** rng.uniform(-1, 1)
            law = GammaLaw(rng.uniform(1.1, 4.0), rng.uniform(1.1, 4.0))
            res = solve_closure(R, Q, law)
            lo, hi = closure_bracket(R, Q, law)
            assert res.residual <= 1e-12
            assert lo <= res.Z <= hi
            assert res.Z > R
            assert 0.0 < res.alpha < 1.0
            assert res.p == res.Z**law.gamma_plus

    def test_monotone_in_q(self):
        zs = [solve_closure(1.3, q, LAW_DEFAULT).Z for q in (0.5, 0.8, 1.4, 3.0, 9.0)]
        assert all(z1 < z2 for z1, z2 in zip(zs, zs[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            solve_closure(-1.0, 1.0, LAW_DEFAULT)
        with pytest.raises(DomainError):
            solve_closure(1.0, 0.0, LAW_DEFAULT)


class TestDerivatives:
    def test_dZ_dtau_equal_exponents_closed_form(self):
        # g = 1: Z = (R0tau0 + Q0tau0)/tau, so dZ/dtau = -(R0tau0 + Q0tau0)/tau**2
        R0tau0, Q0tau0, tau = 0.4, 0.7, 0.6
        Z = (R0tau0 + Q0tau0) / tau
        got = dZ_dtau(R0tau0, Q0tau0, tau, Z, LAW_EQUAL)
        assert got == pytest.approx(-(R0tau0 + Q0tau0) / tau**2, rel=1e-14)

    def test_dZ_dtau_finite_difference(self):
        R0tau0, Q0tau0, tau = 0.5, 0.5, 0.5
        Z = solve_closure(R0tau0 / tau, Q0tau0 / tau, LAW_GOLDEN).Z
        got = dZ_dtau(R0tau0, Q0tau0, tau, Z, LAW_GOLDEN)
        h = 1e-6
        zp = solve_closure(R0tau0 / (tau + h), Q0tau0 / (tau + h), LAW_GOLDEN).Z
        zm = solve_closure(R0tau0 / (tau - h), Q0tau0 / (tau - h), LAW_GOLDEN).Z
        fd = (zp - zm) / (2.0 * h)
        assert abs(got - fd) / abs(fd) < 1e-6
        assert got < 0.0

    def test_dp_dtau_single_fluid_closed_form(self):
        # equal exponents reduce to one barotropic fluid: p = tau**(-gbar) * (R0tau0+Q0tau0)**gbar
        gbar = 2.0
        R0tau0, Q0tau0, tau = 0.3, 0.4, 0.8
        Z = (R0tau0 + Q0tau0) / tau
        got = dp_dtau(R0tau0, Q0tau0, tau, Z, LAW_EQUAL)
        expect = -gbar * tau ** (-gbar - 1.0) * (R0tau0 + Q0tau0) ** gbar
        assert got == pytest.approx(expect, rel=1e-13)

    def test_dp_dtau_finite_difference(self):
        R0tau0, Q0tau0, tau = 0.5, 0.5, 0.5
        Z = solve_closure(R0tau0 / tau, Q0tau0 / tau, LAW_GOLDEN).Z
        got = dp_dtau(R0tau0, Q0tau0, tau, Z, LAW_GOLDEN)
        h = 1e-6
        pp = solve_closure(R0tau0 / (tau + h), Q0tau0 / (tau + h), LAW_GOLDEN).p
        pm = solve_closure(R0tau0 / (tau - h), Q0tau0 / (tau - h), LAW_GOLDEN).p
        fd = (pp - pm) / (2.0 * h)
        assert abs(got - fd) / abs(fd) < 1e-6
        assert got < 0.0

    def test_dp_dtau_negative_on_samples(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            law = GammaLaw(rng.uniform(1.2, 3.0), rng.uniform(1.2, 3.0))
            R0tau0 = 10.0 ** rng.uniform(-1, 0.5)
            Q0tau0 = 10.0 ** rng.uniform(-1, 0.5)
            tau = rng.uniform(0.3, 1.5)
            Z = solve_closure(R0tau0 / tau, Q0tau0 / tau, law).Z
            assert dp_dtau(R0tau0, Q0tau0, tau, Z, law) < 0.0
            assert dZ_dtau(R0tau0, Q0tau0, tau, Z, law) < 0.0

    def test_partials_equal_exponents_closed_form(self):
        # g = 1: Z = (R0 + Q0)*tau0/tau
        Q0, R0, tau0, tau = 0.9, 1.4, 0.5, 0.7
        Z = (R0 + Q0) * tau0 / tau
        dq, dr, dt0 = dZ_partials(Q0, R0, tau0, tau, Z, LAW_EQUAL)
        assert dq == pytest.approx(tau0 / tau, rel=1e-14)
        assert dr == pytest.approx(tau0 / tau, rel=1e-14)
        assert dt0 == pytest.approx((R0 + Q0) / tau, rel=1e-14)

    def test_partials_finite_difference(self):
        Q0, R0, tau0, tau = 1.0, 1.0, 0.5, 0.5
        law = LAW_GOLDEN

        def z_of(q0, r0, t0):
            return solve_closure(r0 * t0 / tau, q0 * t0 / tau, law).Z

        Z = z_of(Q0, R0, tau0)
        dq, dr, dt0 = dZ_partials(Q0, R0, tau0, tau, Z, law)
        h = 1e-6
        fd_q = (z_of(Q0 + h, R0, tau0) - z_of(Q0 - h, R0, tau0)) / (2 * h)
        fd_r = (z_of(Q0, R0 + h, tau0) - z_of(Q0, R0 - h, tau0)) / (2 * h)
        fd_t = (z_of(Q0, R0, tau0 + h) - z_of(Q0, R0, tau0 - h)) / (2 * h)
        assert abs(dq - fd_q) / abs(fd_q) < 1e-6
        assert abs(dr - fd_r) / abs(fd_r) < 1e-6
        assert abs(dt0 - fd_t) / abs(fd_t) < 1e-6

    def test_partials_positive(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            law = GammaLaw(rng.uniform(1.2, 3.0), rng.uniform(1.2, 3.0))
            Q0 = 10.0 ** rng.uniform(-1, 1)
            R0 = 10.0 ** rng.uniform(-1, 1)
            tau0 = rng.uniform(0.3, 1.2)
            tau = rng.uniform(0.3, 1.2)
            Z = solve_closure(R0 * tau0 / tau, Q0 * tau0 / tau, law).Z
            dq, dr, dt0 = dZ_partials(Q0, R0, tau0, tau, Z, law)
            assert dq > 0.0
            assert dr > 0.0
            assert math.isfinite(dt0)

    def test_domain_error_on_bogus_root(self):
        # a wildly wrong Z makes the monotonicity denominator go nonpositive:
        # g = 2 gives denom = 2Z - R, negative when Z << R
        with pytest.raises(DomainError):
            dZ_dtau(5.0, 1e-9, 1.0, 0.1, LAW_GOLDEN)
        with pytest.raises(DomainError):
            dZ_partials(1e-9, 5.0, 1.0, 1.0, 0.1, LAW_GOLDEN)


class TestPressureDecomposition:
    def test_symmetric_case(self):
        res = solve_closure(1.0, 1.0, LAW_EQUAL)
        part_plus, part_minus = pressure_decomposition(1.0, 1.0, res, LAW_EQUAL)
        assert part_plus == pytest.approx(2.0, rel=1e-14)
        assert part_minus == pytest.approx(2.0, rel=1e-14)
        assert part_plus + part_minus == pytest.approx(res.Z**2, rel=1e-14)

    def test_golden_case(self):
        phi = 0.5 * (1.0 + math.sqrt(5.0))
        res = solve_closure(1.0, 1.0, LAW_GOLDEN)
        part_plus, part_minus = pressure_decomposition(1.0, 1.0, res, LAW_GOLDEN)
        assert part_plus + part_minus == pytest.approx(phi**4, rel=1e-12)

    def test_identity_on_grid(self):
        Rs = np.logspace(-1, 1, 20)
        Qs = np.logspace(-1, 1, 20)
        for law in (LAW_DEFAULT, GammaLaw(3.0, 1.2), GammaLaw(1.2, 3.0)):
            for R in Rs:
                for Q in Qs:
                    res = solve_closure(R, Q, law)
                    pp, pm = pressure_decomposition(R, Q, res, law)
                    assert abs(pp + pm - res.p) <= 1e-12 * res.p


class TestVectorizedKernel:
    def test_matches_scalar_solver(self):
        rng = np.random.default_rng(17)
        R = 10.0 ** rng.uniform(-1, 1, size=500)
        Q = 10.0 ** rng.uniform(-1, 1, size=500)
        for law in (LAW_DEFAULT, LAW_GOLDEN, GammaLaw(1.3, 2.6)):
            Z, residual, _ = _solve_closure_arrays(R, Q, law)
            assert np.all(residual <= 1e-12)
            scalar = np.array([solve_closure(r, q, law).Z for r, q in zip(R, Q)])
            assert np.max(np.abs(Z - scalar)) < 1e-12

    def test_warm_start_converges(self):
        rng = np.random.default_rng(19)
        R = rng.uniform(0.5, 2.0, size=200)
        Q = rng.uniform(0.5, 2.0, size=200)
        Z0, _, _ = _solve_closure_arrays(R, Q, LAW_DEFAULT)
        # perturb the data slightly, warm start from the old roots
        Z1, residual, its = _solve_closure_arrays(R * 1.001, Q * 0.999, LAW_DEFAULT, x0=Z0)
        assert np.all(residual <= 1e-12)
        assert its <= 8

    def test_dp_dtau_arrays_matches_scalar(self):
        rng = np.random.default_rng(23)
        R0tau0 = rng.uniform(0.2, 1.0, size=50)
        Q0tau0 = rng.uniform(0.2, 1.0, size=50)
        tau = rng.uniform(0.3, 1.0, size=50)
        Z, _, _ = _solve_closure_arrays(R0tau0 / tau, Q0tau0 / tau, LAW_DEFAULT)
        vec = _dp_dtau_arrays(R0tau0, Q0tau0, tau, Z, LAW_DEFAULT)
        scal = np.array(
            [
                dp_dtau(r0t0, q0t0, t, z, LAW_DEFAULT)
                for r0t0, q0t0, t, z in zip(R0tau0, Q0tau0, tau, Z)
            ]
        )
        assert np.allclose(vec, scal, rtol=1e-13, atol=0.0)


class TestTypes:
    def test_gamma_law_validation(self):
        with pytest.raises(ValueError):
            GammaLaw(0.9, 2.0)
        with pytest.raises(ValueError):
            GammaLaw(2.0, 1.0)
        law = GammaLaw(3.0, 1.5)
        assert law.gamma == 3.0 / 1.5

    def test_tolerances_validation(self):
        with pytest.raises(ValueError):
            ClosureTolerances(residual_tol=0.0)
        with pytest.raises(ValueError):
            ClosureTolerances(max_iterations=0)

    def test_loose_tolerance_still_converges(self):
        tol = ClosureTolerances(residual_tol=1e-6, max_iterations=64)
        res = solve_closure(1.0, 1.0, LAW_DEFAULT, tol)
        assert res.residual <= 1e-6
