"""
Command-line front end.

    python -m app.cli run fixtures/abs_chi.pos --out results/
    python -m app.cli check fixtures/isolated_zero_bad.pos
    python -m app.cli certify fixtures/abs_chi.pos --eps 1/10 --dmax 3
    python -m app.cli explore fixtures/isolated_zero_excluded.pos --samples 10000 --delta 0.05
    python -m app.cli fmt fixtures/abs_chi.pos

Exit codes: 0 success, 2 regularity failure, 3 certification failure,
4 syntax error, 1 anything else.
"""

import logging
from fractions import Fraction
from pathlib import Path
from typing import Optional

import click

from app.core.config import Settings, load_settings
from app.core.exceptions import PositivityError, ScriptSyntaxError
from app.schemas.script import Location, ProblemScript, Statement, StatementKind
from app.services.script_parser import parse_script, print_script
from app.services.script_runner import ScriptRun, emit_outputs, run_script

logger = logging.getLogger(__name__)


def _load(ctx: click.Context, path: str) -> ProblemScript:
    try:
        return parse_script(Path(path).read_text(), source=Path(path).name)
    except ScriptSyntaxError as exc:
        click.echo(f"{path}: {exc.message}", err=True)
        if exc.expected:
            click.echo(f"expected: {exc.expected}", err=True)
        ctx.exit(exc.exit_code)


def _finish(ctx: click.Context, run: ScriptRun, out: Optional[str]) -> None:
    if out:
        for path in emit_outputs(run, out):
            logger.info(f"wrote {path}")
    click.echo(run.report.to_text(), nl=False)
    ctx.exit(run.report.exit_code)


def _with_options(statement: Statement, **options: Optional[str]) -> Statement:
    merged = dict(statement.options)
    merged.update({key: value for key, value in options.items() if value is not None})
    return statement.model_copy(update={"options": merged})


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Env file with settings; flags override it")
@click.option("--seed", type=int, default=None, help="Seed for every sampling step")
@click.option("--force", is_flag=True, default=False, help="Continue past undecided regularity checks")
@click.option("--log-level", default=None, help="Logging level, e.g. INFO or DEBUG")
@click.pass_context
def cli(ctx: click.Context, config: Optional[str], seed: Optional[int], force: bool, log_level: Optional[str]):
    """Positivity certificates over extension towers."""
    settings: Settings = load_settings(
        config, DEFAULT_SEED=seed, FORCE_UNDECIDED=True if force else None, LOG_LEVEL=log_level,
    )
    logging.basicConfig(level=settings.LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = settings


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Directory for output files")
@click.pass_context
def run(ctx: click.Context, script: str, out: Optional[str]):
    """Run a problem script."""
    parsed = _load(ctx, script)
    _finish(ctx, run_script(parsed, ctx.obj), out)


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def check(ctx: click.Context, script: str):
    """Parse a script without running it."""
    parsed = _load(ctx, script)
    click.echo(f"{script}: {len(parsed.statements)} statements")


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.option("--eps", default=None, help="Rational eps for every certify statement")
@click.option("--dmax", type=int, default=None, help="Largest relaxation degree")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.pass_context
def certify(ctx: click.Context, script: str, eps: Optional[str], dmax: Optional[int], out: Optional[str]):
    """Run a script with the certify statements' eps and degree budget replaced."""
    parsed = _load(ctx, script)
    if eps is not None:
        try:
            eps = str(Fraction(eps))
        except (ValueError, ZeroDivisionError):
            raise click.BadParameter(f"not a rational: {eps}", param_hint="--eps")
    statements = tuple(
        _with_options(s, eps=eps, dmax=str(dmax) if dmax else None) if s.kind == StatementKind.CERTIFY else s
        for s in parsed.statements
    )
    if not any(s.kind == StatementKind.CERTIFY for s in statements):
        click.echo(f"{script}: no certify statement", err=True)
        ctx.exit(1)
    _finish(ctx, run_script(parsed.model_copy(update={"statements": statements}), ctx.obj), out)


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", type=int, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.pass_context
def explore(ctx: click.Context, script: str, samples: Optional[int], delta: Optional[float], out: Optional[str]):
    """Build the script's tower and compare its image with the variety."""
    parsed = _load(ctx, script)
    options = {"samples": str(samples) if samples else None, "delta": repr(delta) if delta else None}
    statements = [
        _with_options(s, **options) if s.kind == StatementKind.EXPLORE else s
        for s in parsed.statements
        if s.kind != StatementKind.CERTIFY
    ]
    if not any(s.kind == StatementKind.EXPLORE for s in statements):
        line = statements[-1].location.line + 1
        statements.append(_with_options(
            Statement(kind=StatementKind.EXPLORE, location=Location(line=line, column=1)), **options
        ))
    _finish(ctx, run_script(parsed.model_copy(update={"statements": tuple(statements)}), ctx.obj), out)


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.option("--write", is_flag=True, default=False, help="Rewrite the file in place")
@click.pass_context
def fmt(ctx: click.Context, script: str, write: bool):
    """Print a script in canonical form."""
    text = print_script(_load(ctx, script))
    if write:
        Path(script).write_text(text)
    else:
        click.echo(text, nl=False)


def main() -> None:
    try:
        cli(standalone_mode=True)
    except PositivityError as exc:
        click.echo(f"error: {exc.message}", err=True)
        raise SystemExit(exc.exit_code)


if __name__ == "__main__":
    main()
