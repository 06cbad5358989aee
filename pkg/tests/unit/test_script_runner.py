import pytest

from app.schemas.script import OutcomeStatus
from app.services.script_parser import parse_script
from app.services.script_runner import emit_outputs, run_script
from tests.conftest import FIXTURES

SCRIPTS = sorted(path.name for path in FIXTURES.glob("*.pos"))


def run_fixture(name, settings):
    script = parse_script((FIXTURES / name).read_text(), source=name)
    return run_script(script, settings)


def verdicts(report):
    return [
        [outcome.statement.split(" ", 1)[0].rstrip(";"), outcome.verdict]
        for outcome in report.outcomes
        if outcome.verdict is not None
    ]


def matches(expected, actual):
    if len(expected) != len(actual):
        return False
    for (kind, verdict), (got_kind, got_verdict) in zip(expected, actual):
        if kind != got_kind:
            return False
        if verdict == "verified":
            if got_verdict not in ("ExactVerified", "NumericVerified"):
                return False
        elif verdict != got_verdict:
            return False
    return True


class TestFixtureScripts:
    """Test suite running every fixture script end to end"""

    @pytest.mark.slow
    @pytest.mark.parametrize("name", SCRIPTS)
    def test_expected_outcome(self, name, settings, expected_outcomes):
        """Test exit code, final mode and verdict sequence"""
        expected = expected_outcomes[name]
        run = run_fixture(name, settings)
        report = run.report
        assert report.exit_code == expected["exit_code"], report.to_text()
        assert report.final_mode == expected["final_mode"], report.to_text()
        assert matches(expected["verdicts"], verdicts(report)), report.to_text()

    def test_regularity_failure_witness(self, settings):
        """Test the failing characteristic function halts with the witness t=0"""
        report = run_fixture("isolated_zero_bad.pos", settings).report
        failed = report.outcomes[-1]
        assert failed.status == OutcomeStatus.FAILED
        assert failed.witness == "t=0"
        assert report.error.startswith(f"line {failed.line}:")
        assert report.to_text().endswith("exit code: 2\n")

    def test_pole_in_domain(self, settings):
        """Test a reciprocal with a pole on the domain is a domain error"""
        run = run_script(parse_script("domain t in [-1, 1];\nadjoin w = recip(t);\nreport;\n"), settings)
        assert run.report.exit_code == 1
        assert len(run.report.outcomes) == 2
        assert "t=0" in run.report.outcomes[-1].summary

    def test_certify_failure(self, settings):
        """Test a certify statement on a negative target exits with code 3"""
        run = run_script(parse_script("domain t in [-1, 1];\nbase_gen 1 - t^2;\ncertify t;\n"), settings)
        assert run.report.exit_code == 3
        assert run.report.outcomes[-1].verdict == "Failure"
        assert run.certificates == []

    def test_deterministic(self, settings):
        """Test identical seeds give identical reports"""
        first = run_fixture("abs_chi.pos", settings).report.to_text()
        second = run_fixture("abs_chi.pos", settings).report.to_text()
        assert first == second
        assert "seed: " in first

    def test_emit_outputs(self, settings, tmp_path):
        """Test tower, clouds, certificate and report files"""
        run = run_fixture("abs_chi.pos", settings)
        written = emit_outputs(run, tmp_path / "out")
        names = sorted(path.name for path in written)
        assert names == ["certificate.txt", "image.csv", "report.txt", "tower.txt", "variety.csv"]
        assert (tmp_path / "out" / "tower.txt").read_text().startswith("tower v1")
        assert (tmp_path / "out" / "report.txt").read_text() == run.report.to_text()
