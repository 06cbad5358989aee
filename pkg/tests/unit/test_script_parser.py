import pytest

from app.core.exceptions import ScriptSyntaxError
from app.schemas.script import StatementKind
from app.services.script_parser import format_statement, parse_script, print_script
from tests.conftest import FIXTURES

SCRIPTS = sorted(path.name for path in FIXTURES.glob("*.pos"))


def syntax_error(text: str) -> ScriptSyntaxError:
    with pytest.raises(ScriptSyntaxError) as exc_info:
        parse_script(text)
    return exc_info.value


class TestParseScript:
    """Test suite for the problem script parser"""

    def test_abs_chi_script(self):
        """Test statement kinds, names and options of a small script"""
        script = parse_script((FIXTURES / "abs_chi.pos").read_text(), source="abs_chi.pos")
        kinds = [s.kind for s in script.statements]
        assert kinds == [
            StatementKind.DOMAIN, StatementKind.BASE_GEN, StatementKind.ADJOIN, StatementKind.ADJOIN,
            StatementKind.REPORT, StatementKind.EXPLORE, StatementKind.CERTIFY,
        ]
        domain = script.domain
        assert domain.coordinates[0].name == "t"
        assert (domain.coordinates[0].lo, domain.coordinates[0].hi) == (-1, 1)
        chi = script.statements[3]
        assert (chi.name, chi.operator, chi.exprs) == ("c", "chi", ("t",))
        assert chi.options == {"mode": "compact"}
        assert script.statements[-1].options == {"eps": "1/10"}
        assert script.statements[2].location.line == 4

    def test_constraints_and_coordinates(self):
        """Test domain constraints and coordinate definitions"""
        script = parse_script((FIXTURES / "sign_branches.pos").read_text())
        assert script.domain.exprs == ("t^2 - 1/1000000",)
        coord = script.statements[2]
        assert coord.kind == StatementKind.COORD
        assert coord.exprs == ("sign(t)",)

    def test_flags(self):
        """Test force and claim flags"""
        script = parse_script(
            "domain t in [-2, 2];\n"
            "adjoin f = chi(-t^2*(t + 1)*(t - 1)) mode=compact force;\n"
            "add_gen 4 - f^2 claim;\n"
        )
        assert script.statements[1].flags == ("force",)
        assert script.statements[2].flags == ("claim",)

    def test_reciprocal_with_bound(self):
        """Test recip takes a single argument and an optional bound"""
        script = parse_script("domain t in [1, 2];\nadjoin w = recip(t) bound=1;\n")
        adjoin = script.statements[1]
        assert (adjoin.operator, adjoin.exprs, adjoin.options) == ("recip", ("t",), {"bound": "1"})

    def test_comments_and_whitespace(self):
        """Test comments and layout do not matter"""
        compact = parse_script("domain t in [0,1];base_gen t;")
        spaced = parse_script("# header\ndomain   t in [0, 1] ;\n\n  base_gen t ; # trailing\n")
        assert compact.normalized() == spaced.normalized()


class TestSyntaxErrors:
    """Test suite for parser diagnostics"""

    def test_empty_script(self):
        """Test an empty script expects a domain"""
        error = syntax_error("# nothing here\n")
        assert error.expected == "domain"
        assert error.exit_code == 4

    def test_domain_first(self):
        """Test tower statements cannot precede the domain"""
        assert syntax_error("base_gen t;").expected == "domain"

    def test_unknown_symbol_position(self):
        """Test line and column point at the offending name"""
        error = syntax_error("domain t in [-1, 1];\nbase_gen 1 - s;\n")
        assert (error.line, error.column) == (2, 14)
        assert "unknown symbol" in error.message

    def test_duplicate_symbol(self):
        """Test a name cannot be adjoined twice"""
        error = syntax_error("domain t in [-1, 1];\nadjoin t = oddroot(t, 3);\n")
        assert "duplicate symbol" in error.message
        error = syntax_error("domain t in [-1, 1];\nadjoin u = oddroot(t, 3);\nadjoin u = oddroot(t, 5);\n")
        assert error.line == 3

    def test_missing_semicolon(self):
        """Test a missing terminator names what was expected"""
        error = syntax_error("domain t in [-1, 1]\nbase_gen t;")
        assert error.line == 2

    def test_arity(self):
        """Test operators check their argument count"""
        syntax_error("domain t in [-1, 1];\nadjoin f = piecewise(t, t);\n")
        syntax_error("domain t in [-1, 1];\ncheck inj4(t);\n")

    def test_functions_outside_coord(self):
        """Test elementary functions only appear in coord definitions"""
        error = syntax_error("domain t in [-1, 1];\nbase_gen cos(t);\n")
        assert "not allowed" in error.message

    @pytest.mark.parametrize(
        "statement",
        ["explore samples=0;", "explore foo=1;", "certify t eps=x;", "adjoin c = chi(t) mode=open;"],
    )
    def test_option_validation(self, statement):
        """Test unknown options and bad values are rejected"""
        syntax_error(f"domain t in [-1, 1];\n{statement}\n")

    def test_preamble_order(self):
        """Test base generators must precede adjunctions"""
        error = syntax_error("domain t in [0, 1];\nadjoin u = oddroot(t, 3);\nbase_gen t;\n")
        assert "before tower statements" in error.message

    def test_exclude_point_dimension(self):
        """Test excluded points need one value per variable"""
        syntax_error("domain t in [0, 1];\nadjoin u = oddroot(t, 3);\nexclude (0) eps=1/2;\n")

    def test_empty_interval(self):
        """Test lower bounds above upper bounds are rejected"""
        syntax_error("domain t in [1, 0];")


class TestPrintScript:
    """Test suite for canonical printing"""

    @pytest.mark.parametrize("name", SCRIPTS)
    def test_print_then_parse(self, name):
        """Test printing a parsed fixture and parsing it again gives the same statements"""
        script = parse_script((FIXTURES / name).read_text(), source=name)
        reparsed = parse_script(print_script(script), source=name)
        assert reparsed.normalized() == script.normalized()
        assert print_script(reparsed) == print_script(script)

    def test_canonical_statements(self):
        """Test the printed form of a few statements"""
        script = parse_script("domain t in [-1,1] where 1-t^2>=0;\nadjoin c = chi(t)  mode=compact;\ncertify t + 1 eps=0.1;\n")
        assert [format_statement(s) for s in script.statements] == [
            "domain t in [-1, 1] where 1-t^2 >= 0;",
            "adjoin c = chi(t) mode=compact;",
            "certify t + 1 eps=1/10;",
        ]
