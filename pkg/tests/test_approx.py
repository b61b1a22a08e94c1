import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddleroot.approx import (
    PValuePair,
    SingularityPolicy,
    TailInput,
    assemble_pvalues,
    bn_format,
    guarded_pvalue,
    lr_format,
    std_normal_cdf,
    std_normal_pdf,
)
from saddleroot.errors import NearZeroRoot, NonPositiveRatio, ZeroCorrection

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


class TestNormalCdf:
    def test_centre(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_quantile(self):
        # mpmath: Phi(1.959964) = 0.97500000090...
        assert abs(std_normal_cdf(1.959964) - 0.975) < 1e-6
        assert abs(std_normal_cdf(1.959964) - 0.9750000009035576) < 1e-15

    def test_far_tail(self):
        assert std_normal_cdf(-8.0) < 1e-14

    def test_against_mpmath(self):
        xs = np.linspace(-8, 8, 321)
        err = max(abs(std_normal_cdf(x) - float(mp.ncdf(x))) for x in xs)
        assert err <= 1e-12

    def test_monotone_and_symmetric_on_grid(self):
        xs = np.linspace(-9, 9, 10_000)
        vals = np.array([std_normal_cdf(x) for x in xs])
        assert np.all(np.diff(vals) >= 0)
        sym = max(abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) for x in xs)
        assert sym <= 1e-14

    @given(st.floats(min_value=-40, max_value=40))
    def test_reflection(self, x):
        assert abs(std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))) <= 1e-15


class TestFormats:
    def test_bn_collapse(self):
        assert bn_format(TailInput(1.5, 1.5)) == pytest.approx(0.9331927987311419, abs=1e-15)
        assert bn_format(TailInput(-1.0, -1.0)) == pytest.approx(0.15865525393145705, abs=1e-15)

    def test_bn_value(self):
        # mpmath: Phi(2 + log(1.25)/2) = Phi(2.1115717756...)
        assert bn_format(TailInput(2.0, 2.5)) == pytest.approx(0.9826384022285973, abs=1e-14)

    def test_lr_values(self):
        assert lr_format(TailInput(1.5, 1.5)) == pytest.approx(0.9331927987311419, abs=1e-15)
        assert lr_format(TailInput(2.0, 2.5)) == pytest.approx(0.9826489647031396, abs=1e-14)

    def test_lr_clamp(self):
        v = lr_format(TailInput(0.2, 50.0))
        assert 0.0 <= v <= 1.0
        p = guarded_pvalue(TailInput(0.2, 50.0), "LR")
        assert p.fallback_used and p.reason == "lr_clamped" and p.cdf == 1.0

    def test_errors(self):
        with pytest.raises(NonPositiveRatio):
            bn_format(TailInput(1.0, -0.5))
        with pytest.raises(NearZeroRoot):
            bn_format(TailInput(1e-5, 0.3))
        with pytest.raises(NearZeroRoot):
            lr_format(TailInput(-5e-5, 0.3))
        with pytest.raises(ZeroCorrection):
            lr_format(TailInput(1.0, 0.0))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            TailInput(float("nan"), 1.0)

    @pytest.mark.parametrize("r", np.concatenate([np.geomspace(1e-3, 6, 40), -np.geomspace(1e-3, 6, 40)]))
    def test_collapse_property(self, r):
        t = TailInput(r, r)
        assert abs(bn_format(t) - std_normal_cdf(r)) <= 1e-12
        assert abs(lr_format(t) - std_normal_cdf(r)) <= 1e-12

    # for |r| below ~0.06 the eps**3 / r**3 term dominates and the bound fails
    @settings(max_examples=300)
    @given(
        st.floats(min_value=0.1, max_value=6.0),
        st.sampled_from([-1.0, 1.0]),
        st.floats(min_value=-1e-2, max_value=1e-2),
    )
    def test_first_order_agreement(self, mag, sign, eps):
        r = sign * mag
        t = TailInput(r, r * (1 + eps))
        gap = abs(bn_format(t) - lr_format(t))
        assert gap <= 10 * eps * eps * std_normal_pdf(r) + 1e-15


class TestAssemble:
    def test_examples(self):
        assert assemble_pvalues(0.5, "BN").two_sided == 1.0
        p = assemble_pvalues(0.975, "BN")
        assert p.one_sided == pytest.approx(0.025, abs=1e-15)
        assert p.two_sided == pytest.approx(0.05, abs=1e-15)
        p = assemble_pvalues(0.01, "LR")
        assert p.one_sided == pytest.approx(0.99, abs=1e-15)
        assert p.two_sided == pytest.approx(0.02, abs=1e-15)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_invariants(self, cdf):
        p = assemble_pvalues(cdf, "BN")
        assert 0.0 <= p.one_sided <= 1.0 and 0.0 <= p.two_sided <= 1.0
        assert p.one_sided + p.cdf == pytest.approx(1.0, abs=1e-16)
        assert p.two_sided == assemble_pvalues(1.0 - cdf, "BN").two_sided or math.isclose(
            p.two_sided, assemble_pvalues(1.0 - cdf, "BN").two_sided, abs_tol=1e-15
        )

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            assemble_pvalues(1.5, "BN")


class TestGuarded:
    def test_near_zero(self):
        p = guarded_pvalue(TailInput(1e-5, 0.3), "BN")
        assert p.one_sided == p.two_sided == 1.0
        assert p.fallback_used and p.reason == "near_zero"

    def test_sign_mismatch(self):
        p = guarded_pvalue(TailInput(1.0, -0.5), "LR")
        assert p.fallback_used and p.reason == "sign_mismatch"
        assert p.cdf == std_normal_cdf(1.0)
        assert p.one_sided == 1.0 - std_normal_cdf(1.0)

    def test_delegation(self):
        p = guarded_pvalue(TailInput(2.0, 2.5), "BN")
        assert not p.fallback_used
        assert p.cdf == bn_format(TailInput(2.0, 2.5))

    def test_custom_policy(self):
        pol = SingularityPolicy(r_threshold=0.5, near_zero_pvalue=0.7)
        p = guarded_pvalue(TailInput(0.4, 0.4), "BN", pol)
        assert p.one_sided == p.two_sided == 0.7

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            SingularityPolicy(r_threshold=0.0)
        with pytest.raises(ValueError):
            SingularityPolicy(near_zero_pvalue=1.5)

    @settings(max_examples=500)
    @given(
        st.floats(allow_nan=False, allow_infinity=False),
        st.floats(allow_nan=False, allow_infinity=False),
        st.sampled_from(["BN", "LR"]),
    )
    def test_total(self, r, u, fmt):
        p = guarded_pvalue(TailInput(r, u), fmt)
        assert isinstance(p, PValuePair)
        assert 0.0 <= p.one_sided <= 1.0 and 0.0 <= p.two_sided <= 1.0
        assert 0.0 <= p.cdf <= 1.0
