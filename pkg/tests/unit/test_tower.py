from fractions import Fraction

import numpy as np
import pytest

from app.core.exceptions import DomainError, GeneratorRefutedError, RegularityError, TowerError
from app.schemas.tower import MODE_RANK, DomainDescription, Mode, SymbolKind, VariableState, Verdict
from app.services.evaluation import image_values
from app.services.tower import (
    add_generator,
    add_relation,
    adjoin_characteristic,
    adjoin_even_root,
    adjoin_odd_root,
    adjoin_piecewise,
    adjoin_reciprocal,
    archimedean_status,
    assert_mode,
    init_tower,
    separator_generator,
)
from app.services.variety import domain_box, relation_residuals, sample_domain
from tests.conftest import interval

COUNTER_Q = "-t^2*(t + 1)*(t - 1)"
CONFTEST_TOWERS = [
    "interval_tower",
    "abs_tower",
    "abs_chi_tower",
    "counter_base",
    "counter_tower",
    "circle_tower",
]
REAL_LINE = DomainDescription(coordinates=("t",), box=(None,))


def normal_forms(tw, texts):
    return {tw.ideal.normal_form(tw.parse(text)) for text in texts}


class TestInitTower:
    """Test suite for base algebras"""

    def test_interval(self, interval_tower):
        """Test [-1, 1] with 1 - t^2 is exact and archimedean"""
        assert interval_tower.mode == Mode.EXACT
        assert interval_tower.witness.archimedean
        assert interval_tower.generator_polynomials() == [interval_tower.parse("1 - t^2")]

    def test_linear_pair_bounds(self, counter_base):
        """Test 2 - t and 2 + t bound t"""
        status = counter_base.witness.status_of("t")
        assert status.state == VariableState.BOUNDED
        assert status.bound == 4
        assert counter_base.mode == Mode.EXACT

    def test_loose_generators_unverified(self, settings):
        """Test generators that admit points outside X lose exactness"""
        tw = init_tower(interval("t", -1, 1), ["4 - t^2"], settings=settings)
        assert tw.mode == Mode.UNVERIFIED

    def test_negative_base_generator(self, settings):
        """Test base generators must be nonnegative on X"""
        with pytest.raises(DomainError):
            init_tower(interval("t", -1, 1), ["t"], settings=settings)

    def test_ball_bound(self, settings):
        """Test the ball generator makes every base variable bounded"""
        tw = init_tower(REAL_LINE, ball_bound=Fraction(9), settings=settings)
        assert tw.witness.status_of("t").bound == 9
        assert tw.generator_polynomials() == [tw.parse("9 - t^2")]

    def test_whole_line(self, settings):
        """Test R without generators is exact but not archimedean"""
        tw = init_tower(REAL_LINE, settings=settings)
        assert tw.mode == Mode.EXACT
        assert not archimedean_status(tw).archimedean

    def test_elementary_coordinates(self, circle_tower):
        """Test claimed modes and the sphere relation bound"""
        assert circle_tower.mode == Mode.EXACT
        assert [s.kind for s in circle_tower.symbols] == [SymbolKind.ELEMENTARY] * 2
        assert circle_tower.witness.archimedean

    def test_unclaimed_elementary_coordinates(self, settings):
        """Test non-standard coordinates start unverified"""
        tw = init_tower(interval("t", -1, 1), coordinates=[("x", "exp(t)")], settings=settings)
        assert tw.mode == Mode.UNVERIFIED

    def test_assert_mode_only_on_base(self, abs_tower):
        """Test modes cannot be asserted after an adjunction"""
        with pytest.raises(TowerError):
            assert_mode(abs_tower, Mode.EXACT)


class TestRootAdjunctions:
    """Test suite for odd and even roots"""

    def test_odd_root(self, interval_tower):
        """Test the cube root relation"""
        tw = adjoin_odd_root(interval_tower, "r", "t", 3)
        assert tw.variables == ("t", "r")
        assert tw.relation_polynomials() == [tw.parse("r^3 - t")]
        assert tw.mode == Mode.EXACT
        assert tw.witness.status_of("r").state == VariableState.INTEGRAL

    def test_odd_root_degree(self, interval_tower):
        """Test even degrees are rejected for odd roots"""
        with pytest.raises(TowerError):
            adjoin_odd_root(interval_tower, "r", "t", 2)

    def test_even_root(self, abs_tower):
        """Test |t| as the square root of t^2"""
        assert abs_tower.relation_polynomials() == [abs_tower.parse("u^2 - t^2")]
        assert abs_tower.ideal.normal_form(abs_tower.parse("u")) in abs_tower.generator_polynomials()
        assert abs_tower.mode == Mode.EXACT

    def test_even_root_negative_radicand(self, interval_tower, settings):
        """Test sqrt(t) is undefined on [-1, 1]"""
        with pytest.raises(DomainError):
            adjoin_even_root(interval_tower, "u", "t", 2, settings)

    def test_duplicate_name(self, interval_tower):
        """Test names must be fresh"""
        with pytest.raises(TowerError):
            adjoin_odd_root(interval_tower, "t", "t", 3)


class TestReciprocal:
    """Test suite for reciprocal adjunction"""

    def test_bounded_reciprocal(self, settings):
        """Test 1/(1 + t^2) on R with bound 1"""
        base = init_tower(REAL_LINE, settings=settings)
        tw = adjoin_reciprocal(base, "f", "1 + t^2", bound=Fraction(1), settings=settings)
        assert tw.relation_polynomials() == [tw.parse("(1 + t^2)*f - 1")]
        assert tw.parse("1 - f^2") in tw.generator_polynomials()
        assert tw.witness.status_of("f").state == VariableState.BOUNDED

    def test_pole(self, interval_tower, settings):
        """Test 1/t on [-1, 1] has a pole at 0"""
        with pytest.raises(DomainError) as exc_info:
            adjoin_reciprocal(interval_tower, "f", "t", settings=settings)
        assert "t=0" in exc_info.value.message

    def test_bound_too_small(self, settings):
        """Test the square bound must hold on X"""
        base = init_tower(REAL_LINE, settings=settings)
        with pytest.raises(DomainError):
            adjoin_reciprocal(base, "f", "1/2 + t^2", bound=Fraction(1), settings=settings)


class TestPiecewise:
    """Test suite for piecewise adjunction"""

    def test_cube_root_or_square(self, interval_tower, settings):
        """Test f = cbrt(t) where t >= 0 and t^2 otherwise"""
        rooted = adjoin_odd_root(interval_tower, "r", "t", 3)
        tw = adjoin_piecewise(rooted, "f", "r", "t^2", "t", Mode.EXACT, settings=settings)
        assert tw.ideal.contains(tw.parse("(f - r)*(f - t^2)"))
        expected = normal_forms(tw, ["-t*(f - r)^2", "t*(f - t^2)^2"])
        assert expected <= set(tw.generator_polynomials())
        assert tw.mode == Mode.EXACT
        assert tw.history[-1].mode == Mode.EXACT

    def test_disagreeing_branches(self, counter_base, settings):
        """Test the gate rejects branches that disagree on {q = 0}"""
        with pytest.raises(RegularityError) as exc_info:
            adjoin_piecewise(counter_base, "f", "1 - t^2", "t^2 - 1", COUNTER_Q, Mode.EXACT, settings=settings)
        assert exc_info.value.exit_code == 2
        assert exc_info.value.result.witness_text == "t=0"

    def test_forced(self, counter_base, settings):
        """Test forcing continues with an unverified mode"""
        tw = adjoin_piecewise(
            counter_base, "f", "1 - t^2", "t^2 - 1", COUNTER_Q, Mode.EXACT, force=True, settings=settings
        )
        assert tw.mode == Mode.UNVERIFIED
        assert not tw.symbols[-1].continuous

    def test_unverified_request(self, interval_tower, settings):
        """Test a mode must be requested"""
        with pytest.raises(TowerError):
            adjoin_piecewise(interval_tower, "f", "t", "t^2", "t", Mode.UNVERIFIED, settings=settings)


class TestCharacteristic:
    """Test suite for characteristic-function adjunction"""

    def test_chi_of_half_interval(self, abs_chi_tower):
        """Test chi_[0,1] on R[t, |t|]"""
        tw = abs_chi_tower
        assert tw.ideal.contains(tw.parse("c^2 - c"))
        assert normal_forms(tw, ["t*c", "t*(c - 1)"]) <= set(tw.generator_polynomials())
        assert tw.mode == Mode.CLOSURE
        assert tw.witness.archimedean
        assert not tw.symbols[-1].continuous

    def test_isolated_zero_rejected(self, counter_base, settings):
        """Test the compact variant fails at t = 0"""
        with pytest.raises(RegularityError) as exc_info:
            adjoin_characteristic(counter_base, "f", COUNTER_Q, "compact", settings=settings)
        result = exc_info.value.result
        assert result.verdict == Verdict.FAIL
        assert result.witness_text == "t=0"

    def test_simple_zeros_accepted(self, counter_base, settings):
        """Test q = 1 - t^2 passes the compact variant"""
        tw = adjoin_characteristic(counter_base, "f", "1 - t^2", "compact", settings=settings)
        assert tw.mode == Mode.CLOSURE

    def test_forced(self, counter_tower):
        """Test forcing past a failed check"""
        assert counter_tower.mode == Mode.UNVERIFIED
        assert counter_tower.history[-1].mode == Mode.UNVERIFIED

    def test_compact_needs_compact_domain(self, settings):
        """Test the compact variant on R is rejected"""
        base = init_tower(REAL_LINE, settings=settings)
        with pytest.raises(TowerError):
            adjoin_characteristic(base, "f", "t", "compact", settings=settings)

    def test_compact_needs_continuous_predecessors(self, abs_chi_tower, settings):
        """Test a second compact characteristic after a jump is rejected"""
        with pytest.raises(TowerError):
            adjoin_characteristic(abs_chi_tower, "d", "1/4 - t^2", "compact", settings=settings)

    def test_unknown_variant(self, interval_tower, settings):
        """Test variant names are validated"""
        with pytest.raises(TowerError):
            adjoin_characteristic(interval_tower, "f", "t", "open", settings=settings)


class TestGenerators:
    """Test suite for generator and relation management"""

    def test_separator(self, counter_tower):
        """Test the separator at (0, 0) with radius 1/2"""
        sep = separator_generator(counter_tower, (0, 0), Fraction(1, 2))
        assert sep == counter_tower.ideal.normal_form(counter_tower.parse("t^2 + f^2 - 1/2"))
        assert sep == counter_tower.parse("t^2 + f - 1/2")

    def test_separator_validation(self, counter_tower):
        """Test separator radius and arity"""
        with pytest.raises(TowerError):
            separator_generator(counter_tower, (0, 0), Fraction(0))
        with pytest.raises(TowerError):
            separator_generator(counter_tower, (0,), Fraction(1, 2))

    def test_exact_stays_exact(self, interval_tower, settings):
        """Test adding to an exact tower keeps it exact"""
        tw = add_generator(interval_tower, "1 + t", settings=settings)
        assert tw.mode == Mode.EXACT
        assert tw.parse("1 + t") in tw.generator_polynomials()

    def test_closure_mode_needs_assertion(self, abs_chi_tower, settings):
        """Test generators on a closure tower drop to unverified unless asserted"""
        assert add_generator(abs_chi_tower, "1 + t", settings=settings).mode == Mode.UNVERIFIED
        asserted = add_generator(abs_chi_tower, "1 + t", asserted_mode=Mode.CLOSURE, settings=settings)
        assert asserted.mode == Mode.CLOSURE

    def test_claimed_nonnegative_refuted(self, interval_tower, settings):
        """Test a claimed nonnegative generator that is negative"""
        with pytest.raises(GeneratorRefutedError):
            add_generator(interval_tower, "t", claim_nonneg=True, settings=settings)

    def test_zero_generator(self, abs_tower, settings):
        """Test generators vanishing modulo the relations are rejected"""
        with pytest.raises(TowerError):
            add_generator(abs_tower, "u^2 - t^2", settings=settings)

    def test_relation_must_vanish(self, circle_tower, settings):
        """Test relations are checked on the image"""
        with pytest.raises(DomainError):
            add_relation(circle_tower, "x - y", settings)
        assert add_relation(circle_tower, "x^2 + y^2 - 1", settings) is circle_tower


class TestTowerInvariants:
    """Test suite for properties every tower keeps"""

    @pytest.mark.parametrize("name", CONFTEST_TOWERS)
    def test_image_satisfies_presentation(self, name, request, settings):
        """Test relations vanish and generators stay nonnegative at m(x) for 1000 domain points"""
        tw = request.getfixturevalue(name)
        xs = sample_domain(tw.domain, 1000, seed=5, box=domain_box(tw), settings=settings)
        values = image_values(tw, xs.points)
        assert np.all(relation_residuals(tw, values) <= 1e-7)
        for g in tw.generator_polynomials():
            assert g.evaluate_many(values).min() >= -1e-7

    @pytest.mark.parametrize("name", CONFTEST_TOWERS)
    def test_mode_never_upgrades(self, name, request):
        """Test the mode history is non-increasing"""
        tw = request.getfixturevalue(name)
        ranks = [MODE_RANK[event.mode] for event in tw.history]
        assert ranks == sorted(ranks, reverse=True)
        assert tw.history[-1].mode == tw.mode

    def test_mode_history_through_drops(self, abs_chi_tower, settings):
        """Test an unasserted generator drops the mode and later steps keep it down"""
        tw = add_generator(abs_chi_tower, "2 - u", settings=settings)
        tw = adjoin_odd_root(tw, "w", "t", 3)
        tw = add_relation(tw, "c*u - c*t", settings)
        assert tw.mode == Mode.UNVERIFIED
        ranks = [MODE_RANK[event.mode] for event in tw.history]
        assert ranks == sorted(ranks, reverse=True)
        assert [event.step for event in tw.history] == list(range(len(tw.history)))
