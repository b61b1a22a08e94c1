import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddleroot import expratio as er
from saddleroot.errors import DefinitionMismatch
from saddleroot.expratio import EXP_RATIO, ExpRatioParams, PairedSample
from saddleroot.inference import fit_model, numeric_constrained_mle, numeric_mle, signed_root_R
from saddleroot.mcsim import gen_dataset
from saddleroot.numeric import fd_derivative

from oracles import bn_z_tilde_sympy

LOGLIK_FX1_1_14 = -10.691777892969703  # mpmath sum of per-pair log-densities
BN_U_FX1 = 0.40824829046386335  # sympy differentiation of the reduced log-likelihood
OMEGA_FX1 = 0.4071947167013863

positive = st.floats(0.05, 20.0, allow_nan=False)
samples = st.lists(st.tuples(positive, positive), min_size=2, max_size=12).map(PairedSample.from_pairs)


class TestSample:
    def test_read_only_copy(self):
        x = np.array([1.0, 2.0])
        s = PairedSample(x, [3.0, 4.0])
        x[0] = 99.0
        assert s.x[0] == 1.0
        with pytest.raises(ValueError):
            s.x[0] = 5.0

    @pytest.mark.parametrize("x,y", [([1.0, -1.0], [1.0, 1.0]), ([1.0, 0.0], [1.0, 1.0]), ([1.0, math.inf], [1.0, 1.0]), ([1.0], [1.0, 2.0]), ([], [])])
    def test_invalid(self, x, y):
        with pytest.raises(ValueError):
            PairedSample(x, y)

    def test_pairs_roundtrip(self, fx1):
        assert PairedSample.from_pairs(fx1.pairs).pairs == fx1.pairs


class TestLoglik:
    def test_fx1(self, fx1):
        assert er.loglik((1.0, 1.4), fx1) == pytest.approx(LOGLIK_FX1_1_14, rel=1e-14)

    def test_single_pair(self):
        assert er.loglik((1.0, 1.0), PairedSample([1.0], [1.0])) == -2.0

    def test_permutation(self, fx1):
        perm = PairedSample.from_pairs(fx1.pairs[::-1])
        assert er.loglik((1.3, 0.7), perm) == pytest.approx(er.loglik((1.3, 0.7), fx1), rel=1e-15)

    def test_additive(self, fx1):
        theta = ExpRatioParams(0.8, 1.7)
        assert er.per_obs_loglik(theta, fx1).sum() == pytest.approx(er.loglik(theta, fx1), rel=1e-14)

    def test_per_pair_densities(self, fx1):
        psi, lam = 1.7, 0.9
        mu, nu = lam / math.sqrt(psi), lam * math.sqrt(psi)
        direct = sum(-math.log(mu) - x / mu - math.log(nu) - y / nu for x, y in fx1.pairs)
        assert er.loglik((psi, lam), fx1) == pytest.approx(direct, rel=1e-14)


class TestScore:
    def test_zero_at_mle(self, fx1):
        s = er.per_obs_score(er.mle(fx1), fx1).sum(axis=0)
        assert np.all(np.abs(s) <= 1e-8)

    def test_unit_pair(self):
        s = er.per_obs_score((1.0, 1.0), PairedSample([1.0], [1.0]))
        assert s[0, 1] == 0.0

    @pytest.mark.parametrize("psi", [0.3, 0.8, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("lam", [0.4, 1.0, 3.0])
    def test_per_obs_vs_fd(self, fx1, psi, lam):
        s = er.per_obs_score((psi, lam), fx1)
        for j in range(fx1.n):
            one = PairedSample([fx1.x[j]], [fx1.y[j]])
            d_psi = fd_derivative(lambda p: er.loglik((p, lam), one), psi)
            d_lam = fd_derivative(lambda q: er.loglik((psi, q), one), lam)
            assert s[j, 0] == pytest.approx(d_psi, rel=1e-5, abs=1e-8)
            assert s[j, 1] == pytest.approx(d_lam, rel=1e-5, abs=1e-8)

    @pytest.mark.parametrize("psi", [0.3, 0.7, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("lam", [0.4, 0.9, 1.0, 2.0, 3.0])
    def test_info_vs_fd(self, fx1, psi, lam):
        j = er.observed_info((psi, lam), fx1)
        g = er.score((psi, lam), fx1)
        assert g[0] == pytest.approx(fd_derivative(lambda p: er.loglik((p, lam), fx1), psi), rel=1e-5)
        assert -j[0, 0] == pytest.approx(fd_derivative(lambda p: er.loglik((p, lam), fx1), psi, 2), rel=1e-5, abs=1e-6)
        assert -j[1, 1] == pytest.approx(fd_derivative(lambda q: er.loglik((psi, q), fx1), lam, 2), rel=1e-5, abs=1e-6)
        cross = fd_derivative(lambda q: er.score((psi, q), fx1)[0], lam)
        assert -j[0, 1] == pytest.approx(cross, rel=1e-5, abs=1e-8)


class TestMle:
    def test_fx1(self, fx1):
        psi, lam = er.mle(fx1)
        assert psi == pytest.approx(4 / 3, rel=1e-15)
        assert lam == pytest.approx(math.sqrt(1.92), rel=1e-15)

    def test_equal_means(self):
        assert er.mle(PairedSample([1.0, 3.0], [2.0, 2.0])).psi == 1.0

    @given(samples, st.floats(0.01, 100.0))
    def test_scale_equivariance(self, s, c):
        a, b = er.mle(s), er.mle(s.scaled(c))
        assert b.psi == pytest.approx(a.psi, rel=1e-12)
        assert b.lam == pytest.approx(c * a.lam, rel=1e-12)
        assert er.signed_root_closed_form(s.scaled(c), 1.3) == pytest.approx(
            er.signed_root_closed_form(s, 1.3), rel=1e-12, abs=1e-12
        )
        assert er.profile_loglik(s.scaled(c), 1.3) - er.profile_loglik(s, 1.3) == pytest.approx(
            -2 * s.n * math.log(c), rel=1e-12, abs=1e-10
        )

    def test_numeric_optimizer_agrees(self):
        rng = np.random.default_rng(20240611)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            s = PairedSample(rng.exponential(rng.uniform(0.2, 5), n), rng.exponential(rng.uniform(0.2, 5), n))
            closed, num = er.mle(s), numeric_mle(EXP_RATIO, s)
            assert num.psi == pytest.approx(closed.psi, rel=1e-8)
            assert num.chi[0] == pytest.approx(closed.lam, rel=1e-8)
            psi0 = float(rng.uniform(0.3, 3))
            assert numeric_constrained_mle(EXP_RATIO, s, psi0).chi[0] == pytest.approx(
                er.constrained_mle(s, psi0).lam, rel=1e-8
            )


class TestConstrained:
    def test_fx1(self, fx1):
        assert er.constrained_mle(fx1, 1.0).lam == pytest.approx(1.4, rel=1e-15)

    def test_at_psi_hat(self, fx1):
        assert er.constrained_mle(fx1, 4 / 3).lam == pytest.approx(math.sqrt(1.92), rel=1e-14)

    @pytest.mark.parametrize("psi0", [0.2, 1.0, 3.0])
    def test_stationary(self, fx1, psi0):
        lam = er.constrained_mle(fx1, psi0).lam
        assert abs(fd_derivative(lambda q: er.loglik((psi0, q), fx1), lam)) < 1e-6
        assert fd_derivative(lambda q: er.loglik((psi0, q), fx1), lam, 2) < 0

    def test_bad_psi0(self, fx1):
        with pytest.raises(ValueError):
            er.constrained_mle(fx1, -1.0)


class TestInfo:
    def test_expected(self):
        np.testing.assert_array_equal(er.expected_info((1.0, 1.0), 10), np.diag([5.0, 20.0]))

    @given(positive, positive, st.integers(1, 100))
    def test_orthogonal(self, psi, lam, n):
        e = er.expected_info((psi, lam), n)
        assert e[0, 1] == 0.0 and e[1, 0] == 0.0

    def test_monte_carlo_average(self):
        infos = np.array([er.observed_info((1.0, 1.0), gen_dataset(11, 0, k, 10)) for k in range(10_000)])
        mean = infos.mean(axis=0)
        se = infos.std(axis=0, ddof=1) / math.sqrt(len(infos))
        expected = er.expected_info((1.0, 1.0), 10)
        assert np.all(np.abs(mean - expected) <= 3 * se)


class TestPrior:
    def test_matching_ratio(self):
        for lam in (0.1, 1.0, 7.0):
            assert er.prior((2.0, lam)) / er.prior((1.0, lam)) == 0.5

    def test_uniform(self):
        assert er.prior((2.0, 3.0), "uniform") == er.prior((0.1, 1.0), "uniform") == 1.0

    @pytest.mark.parametrize("psi", [0.25, 0.5, 1.0, 2.0, 4.0])
    def test_orthogonal_prior_equation(self, psi):
        n, lam = 10, 1.3

        def inv_root_info(p):
            return er.expected_info((p, lam), n)[0, 0] ** -0.5

        dlogpi = fd_derivative(lambda p: math.log(er.prior((p, lam))), psi)
        residual = inv_root_info(psi) * dlogpi + fd_derivative(inv_root_info, psi)
        assert abs(residual) <= 1e-6

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            er.prior((1.0, 1.0), "jeffreys")


class TestProfile:
    def test_at_mle(self, fx1):
        assert er.profile_loglik(fx1, 4 / 3) == pytest.approx(er.loglik(er.mle(fx1), fx1), rel=1e-14)

    def test_fx1(self, fx1):
        assert er.profile_loglik(fx1, 1.0) == pytest.approx(-8 * (1 + math.log(1.4)), rel=1e-15)
        assert er.profile_loglik(fx1, 1.0) == pytest.approx(LOGLIK_FX1_1_14, rel=1e-14)

    def test_maximized_at_mle(self, fx1):
        top = er.profile_loglik(fx1, 4 / 3)
        assert all(er.profile_loglik(fx1, p) <= top for p in np.linspace(0.1, 10, 200))

    @given(samples, st.floats(0.1, 10))
    @settings(max_examples=50)
    def test_signed_root_closed_form(self, s, psi0):
        r = signed_root_R(fit_model(EXP_RATIO, s, psi0))
        assert r == pytest.approx(er.signed_root_closed_form(s, psi0), rel=1e-9, abs=1e-12)


class TestAncillary:
    def test_default_is_zero(self, fx1):
        ctx = er.ancillary_a(fx1)
        assert ctx.a == 0.0 and ctx.reference_lambda == math.sqrt(fx1.xbar * fx1.ybar)

    def test_half_lambda(self, fx1):
        ctx = er.ancillary_a(fx1, math.sqrt(fx1.xbar * fx1.ybar) / 2)
        assert ctx.a == pytest.approx(math.sqrt(2 * fx1.n), rel=1e-14)

    @given(samples, positive)
    def test_positive_shift(self, s, lam):
        ctx = er.ancillary_a(s, lam)
        assert ctx.a + math.sqrt(2 * s.n) > 0
        assert ctx.a + math.sqrt(2 * s.n) == pytest.approx(
            math.sqrt(2 * s.n) * math.sqrt(s.xbar * s.ybar) / lam, rel=1e-12
        )

    def test_bad_reference(self, fx1):
        with pytest.raises(ValueError):
            er.ancillary_a(fx1, 0.0)


class TestBNQuantities:
    def test_vanish_at_mle(self, fx1):
        q = er.bn_quantities(er.ancillary_a(fx1), fx1.ybar / fx1.xbar, warn=False)
        assert q.omega_hat == 0.0 and q.z_tilde == 0.0

    @pytest.mark.parametrize("psi", [0.2, 0.9, 1.2, 1.5, 6.0])
    def test_sign(self, fx1, psi):
        q = er.bn_quantities(er.ancillary_a(fx1), psi, warn=False)
        assert math.copysign(1, q.omega_hat) == math.copysign(1, 4 / 3 - psi)
        assert math.copysign(1, q.z_tilde) == math.copysign(1, 4 / 3 - psi)

    @pytest.mark.parametrize("psi,a", [(1.0, 0.0), (0.5, 0.0), (2.5, 0.0), (1.0, 1.7), (3.0, -1.2)])
    def test_symbolic_oracle(self, fx1, psi, a):
        lam_hat = math.sqrt(fx1.xbar * fx1.ybar)
        ref = lam_hat / (1 + a / math.sqrt(2 * fx1.n))
        ctx = er.ancillary_a(fx1, ref)
        q = er.bn_quantities(ctx, psi, warn=False)
        z, om = bn_z_tilde_sympy(fx1.n, 4 / 3, psi, a=ctx.a, lam=ref)
        assert math.sqrt(fx1.n) * q.z_tilde == pytest.approx(z, rel=1e-10)
        assert math.sqrt(fx1.n) * q.omega_hat == pytest.approx(om, rel=1e-10)

    def test_omega_profile_identity(self, fx1):
        # with a = 0: n omega^2 = 4n (t - 1) while R^2 = 4n log t
        ctx = er.ancillary_a(fx1)
        for psi in np.linspace(0.2, 6.0, 40):
            t = (psi + 4 / 3) / (2 * math.sqrt(psi * 4 / 3))
            om = er.bn_quantities(ctx, psi, warn=False).omega_hat
            r = er.signed_root_closed_form(fx1, psi)
            assert fx1.n * om**2 == pytest.approx(4 * fx1.n * (t - 1), rel=1e-10, abs=1e-14)
            assert r**2 == pytest.approx(4 * fx1.n * math.log(t), rel=1e-10, abs=1e-14)

    def test_omega_first_order_agreement(self, fx1):
        ctx = er.ancillary_a(fx1)
        for eps in (1e-2, 1e-3, 1e-4):
            psi = 4 / 3 * (1 + eps)
            ratio = math.sqrt(fx1.n) * er.bn_quantities(ctx, psi, warn=False).omega_hat / er.signed_root_closed_form(fx1, psi)
            assert abs(ratio - 1) < eps

    def test_mismatch_reported(self, fx1):
        with pytest.warns(DefinitionMismatch, match="z_tilde"):
            q = er.bn_quantities(er.ancillary_a(fx1), 1.0)
        assert {"j_psi", "z_tilde"} <= set(q.mismatches)

    def test_mismatch_silenced(self, fx1):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            er.bn_quantities(er.ancillary_a(fx1), 1.0, warn=False)

    def test_information_at_mle(self, fx1):
        ctx = er.ancillary_a(fx1)
        q = er.bn_quantities(ctx, 1.0, warn=False)
        num = -fd_derivative(lambda p: er.reduced_loglik(ctx, p), 4 / 3, 2)
        assert q.j_psi == pytest.approx(num, rel=1e-5)


class TestBnU:
    def test_fx1(self, fx1):
        assert er.bn_U(fx1, 1.0) == pytest.approx(BN_U_FX1, rel=1e-12)

    def test_at_mle(self, fx1):
        assert er.bn_U(fx1, fx1.ybar / fx1.xbar) == 0.0

    def test_sign_matches_r(self, fx1):
        for psi0 in (0.3, 1.0, 2.0, 5.0):
            assert math.copysign(1, er.bn_U(fx1, psi0)) == math.copysign(1, er.signed_root_closed_form(fx1, psi0))

    def test_guarded_in_suite(self, fx1):
        from saddleroot.inference import pvalue_suite

        grid = pvalue_suite(EXP_RATIO, fx1, 4 / 3, rows=("R", "U_bn"))
        assert grid["U_bn", "BN"].fallback_used and grid["U_bn", "BN"].one_sided == 1.0
