import random
from fractions import Fraction

import pytest

from app.core.exceptions import RelaxationError, VariableMismatchError
from app.services.groebner import (
    NormalFormCache,
    buchberger,
    reduce,
    s_polynomial,
    standard_monomials,
)
from app.services.polynomial import Polynomial, TermOrder, monomials_up_to, parse_polynomial

XY = ["x", "y"]
XYZ = ["x", "y", "z"]


def random_polynomial(rng: random.Random, nvars: int, degree: int) -> Polynomial:
    monomials = monomials_up_to(nvars, degree)
    terms = {m: Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for m in rng.sample(monomials, 4)}
    return Polynomial(nvars, terms)


@pytest.fixture
def circle():
    return buchberger([parse_polynomial("x^2 + y^2 - 1", XY)])


@pytest.fixture
def boolean_ideal():
    return buchberger(
        [parse_polynomial(text, XYZ) for text in ("y^2 - y", "z^2 - z", "x*y*z")]
    )


class TestGroebnerBasis:
    """Test suite for Buchberger's algorithm"""

    def test_circle_normal_form(self, circle):
        """Test x^2 + (y + 1)^2 reduces to 2y + 2 modulo the circle"""
        p = parse_polynomial("x^2 + (y + 1)^2", XY)
        assert circle.normal_form(p) == parse_polynomial("2*y + 2", XY)

    def test_adding_relation_multiple(self, circle):
        """Test (x^2 + y^2 - 1) + (2y + 2) has normal form 2y + 2"""
        p = parse_polynomial("(x^2 + y^2 - 1) + (2*y + 2)", XY)
        assert circle.normal_form(p) == parse_polynomial("2*y + 2", XY)

    def test_membership(self, boolean_ideal):
        """Test xyz lies in the ideal it generates"""
        assert boolean_ideal.normal_form(parse_polynomial("x*y*z", XYZ)).is_zero()
        assert boolean_ideal.contains(parse_polynomial("x*y^2*z", XYZ))
        assert not boolean_ideal.contains(parse_polynomial("x*y", XYZ))

    def test_unit_ideal(self):
        """Test inconsistent generators give the unit ideal"""
        gb = buchberger([parse_polynomial("x", ["x"]), parse_polynomial("x - 1", ["x"])])
        assert gb.is_unit()

    def test_reduced_basis_is_unique(self):
        """Test generator order and redundancy do not change the basis"""
        f = parse_polynomial("x^2 + y^2 - 1", XY)
        g = parse_polynomial("x - y", XY)
        assert buchberger([f, g]) == buchberger([g, f, f + g])

    def test_s_polynomials_reduce_to_zero(self, boolean_ideal):
        """Test Buchberger's criterion on the output"""
        gens = boolean_ideal.generators
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                s = s_polynomial(gens[i], gens[j], boolean_ideal.order)
                assert reduce(s, gens, boolean_ideal.order).is_zero()

    def test_empty_generators(self):
        """Test empty generator lists need an explicit order"""
        with pytest.raises(VariableMismatchError):
            buchberger([])
        gb = buchberger([], TermOrder.grevlex(2))
        assert gb.generators == ()
        p = parse_polynomial("x*y + 1", XY)
        assert gb.normal_form(p) == p

    def test_mixed_rings(self):
        """Test generators in different rings are rejected"""
        with pytest.raises(VariableMismatchError):
            buchberger([parse_polynomial("x", ["x"]), parse_polynomial("x", XY)])


class TestNormalForm:
    """Test suite for normal form properties"""

    def test_idempotent_and_multiplicative(self, boolean_ideal):
        """Test NF(NF(p)) = NF(p) and NF(pq) = NF(NF(p) NF(q)) on 1000 random inputs of degree 4"""
        rng = random.Random(7)
        nf = boolean_ideal.normal_form
        for _ in range(1000):
            p = random_polynomial(rng, 3, 4)
            q = random_polynomial(rng, 3, 4)
            assert nf(nf(p)) == nf(p)
            assert nf(p * q) == nf(nf(p) * nf(q))

    @pytest.mark.parametrize("name", ["abs_chi_tower", "counter_tower", "circle_tower"])
    def test_tower_ideals(self, name, request):
        """Test normal forms in tower presentations are idempotent and multiplicative"""
        ideal = request.getfixturevalue(name).ideal
        rng = random.Random(11)
        for _ in range(200):
            p = random_polynomial(rng, ideal.nvars, 4)
            q = random_polynomial(rng, ideal.nvars, 2)
            assert ideal.normal_form(ideal.normal_form(p)) == ideal.normal_form(p)
            assert ideal.normal_form(p * q) == ideal.normal_form(ideal.normal_form(p) * ideal.normal_form(q))

    def test_cache_matches_direct_reduction(self, circle):
        """Test the memoized products agree with direct normal forms"""
        cache = NormalFormCache(circle)
        p = parse_polynomial("x*y - 3*y^2 + 1/2", XY)
        for m in monomials_up_to(2, 3):
            expected = circle.normal_form(Polynomial.from_monomial(m) * p)
            assert cache.product(m, p) == expected
        assert cache.polynomial(p) == circle.normal_form(p)

    def test_extend_keeps_ideal(self, circle):
        """Test embedding the basis into a larger ring"""
        wide = circle.extend(3)
        p = parse_polynomial("x^2*z + y^2*z - z", XYZ)
        assert wide.contains(p)


class TestStandardMonomials:
    """Test suite for the standard monomial basis"""

    def test_circle_degree_two(self, circle):
        """Test monomials outside <y^2> up to degree 2"""
        found = standard_monomials(circle, 2)
        assert set(found) == {(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)}
        assert found[0] == (0, 0)

    def test_negative_degree(self, circle):
        """Test negative degrees give no monomials"""
        assert standard_monomials(circle, -1) == []

    def test_cap(self, circle):
        """Test the cap raises a relaxation error"""
        with pytest.raises(RelaxationError):
            standard_monomials(circle, 4, cap=3)
