from fractions import Fraction

import pytest

from app.schemas.tower import (
    CheckMethod,
    DomainDescription,
    RegularityCase,
    RegularityData,
    Verdict,
)
from app.services.regularity import check_nonnegative, check_nonvanishing, check_regularity
from app.services.tower import adjoin_characteristic, init_tower

COUNTER_Q = "-t^2*(t + 1)*(t - 1)"


def run(tw, case, q, g=None, h=None, settings=None):
    data = RegularityData(
        q=tw.parse(q),
        g=tw.parse(g) if g else None,
        h=tw.parse(h) if h else None,
    )
    return check_regularity(tw, data, case, settings)


class TestCompactCharacteristic:
    """Test suite for the compact characteristic-function condition"""

    def test_isolated_zero_fails(self, counter_base, settings):
        """Test q = -t^2 (t + 1)(t - 1) fails at t = 0"""
        result = run(counter_base, RegularityCase.COMP, COUNTER_Q, settings=settings)
        assert result.verdict == Verdict.FAIL
        assert result.method == CheckMethod.STURM_EXACT
        assert result.witness_text == "t=0"
        assert "witness t=0" in result.describe()

    def test_simple_zeros_pass(self, counter_base, settings):
        """Test q = 1 - t^2 passes"""
        result = run(counter_base, RegularityCase.COMP, "1 - t^2", settings=settings)
        assert result.verdict == Verdict.PASS

    def test_interval_half(self, interval_tower, settings):
        """Test q = t on [-1, 1] passes"""
        assert run(interval_tower, RegularityCase.COMP, "t", settings=settings).verdict == Verdict.PASS

    def test_constant_is_vacuous(self, interval_tower, settings):
        """Test a nonzero constant q needs nothing"""
        result = run(interval_tower, RegularityCase.COMP, "3", settings=settings)
        assert result.verdict == Verdict.PASS
        assert result.method == CheckMethod.VACUOUS

    def test_zero_q_fails(self, interval_tower, settings):
        """Test q = 0 fails without a sign profile"""
        result = run(interval_tower, RegularityCase.COMP, "t - t", settings=settings)
        assert result.verdict == Verdict.FAIL
        assert result.method == CheckMethod.VACUOUS
        assert result.witness == [-1.0]

    def test_sampling_agrees_with_sturm(self, settings):
        """Test the sampling path reaches the same verdicts on a constrained domain"""
        domain = DomainDescription(
            coordinates=("t",),
            box=((Fraction(-2), Fraction(2)),),
            constraints=("4 - t^2",),
        )
        tw = init_tower(domain, ["2 - t", "2 + t"], settings=settings)
        bad = run(tw, RegularityCase.COMP, COUNTER_Q, settings=settings)
        assert bad.method == CheckMethod.SAMPLING
        assert bad.verdict == Verdict.FAIL
        assert abs(bad.witness[0]) < 0.01
        good = run(tw, RegularityCase.COMP, "1 - t^2", settings=settings)
        assert good.verdict == Verdict.PASS


class TestPiecewiseConditions:
    """Test suite for the piecewise injectivity condition"""

    def test_disagreeing_branches_fail(self, counter_base, settings):
        """Test g and h must agree where q vanishes"""
        result = run(counter_base, RegularityCase.INJ_CASE4, COUNTER_Q, "1 - t^2", "t^2 - 1", settings)
        assert result.verdict == Verdict.FAIL
        assert result.witness_text == "t=0"

    def test_agreeing_branches_pass(self, counter_base, settings):
        """Test q = 1 - t^2 where g = h = 0 at the zeros"""
        result = run(counter_base, RegularityCase.INJ_CASE4, "1 - t^2", "1 - t^2", "t^2 - 1", settings)
        assert result.verdict == Verdict.PASS
        assert result.method == CheckMethod.STURM_EXACT

    def test_identical_branches(self, interval_tower, settings):
        """Test identical branches are vacuous"""
        result = run(interval_tower, RegularityCase.INJ_CASE4, "t", "t^2", "t^2", settings)
        assert result.method == CheckMethod.VACUOUS

    def test_missing_branches(self, interval_tower, settings):
        """Test g and h are required"""
        with pytest.raises(ValueError):
            run(interval_tower, RegularityCase.INJ_CASE4, "t", settings=settings)


class TestClosureCondition:
    """Test suite for the closure characteristic-function condition"""

    def test_circle_half(self, circle_tower, settings):
        """Test zeros of y on the circle are approached from both sides"""
        result = run(circle_tower, RegularityCase.ALINJ_CASE5, "y", settings=settings)
        assert result.verdict == Verdict.PASS
        assert result.method == CheckMethod.SAMPLING

    def test_one_sided_zero_fails(self, counter_base, settings):
        """Test q = -t^2 (t + 1) on the chi(t) tower has no positive side at (0, 0)"""
        tw = adjoin_characteristic(counter_base, "y", "t", "compact", settings=settings)
        result = run(tw, RegularityCase.ALINJ_CASE5, "-t^2*(t + 1)", settings=settings)
        assert result.verdict == Verdict.FAIL
        assert result.details["missing"] == "positive"
        assert result.witness[0] == pytest.approx(0.0, abs=1e-2)
        assert result.witness[1] == pytest.approx(0.0, abs=1e-6)


class TestSignChecks:
    """Test suite for root and reciprocal domain checks"""

    def test_nonnegative(self, interval_tower, settings):
        """Test exact sign checks on [-1, 1]"""
        assert check_nonnegative(interval_tower, interval_tower.parse("t^2"), settings).holds
        check = check_nonnegative(interval_tower, interval_tower.parse("t"), settings)
        assert not check.holds
        assert check.witness_text == "t=-1/2"

    def test_nonvanishing(self, interval_tower, settings):
        """Test t vanishes at 0 while 2 + t does not"""
        check = check_nonvanishing(interval_tower, interval_tower.parse("t"), settings)
        assert not check.holds
        assert check.witness_text == "t=0"
        assert check_nonvanishing(interval_tower, interval_tower.parse("2 + t"), settings).holds

    def test_zero_polynomial(self, interval_tower, settings):
        """Test the zero polynomial is nonnegative but vanishes everywhere"""
        zero = interval_tower.parse("t - t")
        assert check_nonnegative(interval_tower, zero, settings).holds
        check = check_nonvanishing(interval_tower, zero, settings)
        assert not check.holds
        assert check.witness == [-1.0]
