from typing import Any

from fastapi import APIRouter, HTTPException, status
from fastapi.concurrency import run_in_threadpool

from app.core.config import load_settings
from app.core.exceptions import PositivityError
from app.schemas.api import (
    CheckScriptResponse,
    FormatScriptResponse,
    RunScriptRequest,
    RunScriptResponse,
    ScriptRequest,
)
from app.services.script_parser import parse_script, print_script
from app.services.script_runner import run_script
from app.utils.formats import dump_certificate, dump_tower

router = APIRouter()


def _parse(request: ScriptRequest):
    try:
        return parse_script(request.text, source=request.source)
    except PositivityError as e:
        raise HTTPException(status_code=e.status_code, detail=e.to_dict())


@router.post("/check", response_model=CheckScriptResponse)
async def check_script(request: ScriptRequest) -> Any:
    """
    Parse a problem script without running it
    """
    script = _parse(request)
    return {"statements": len(script.statements), "kinds": [s.kind.value for s in script.statements]}


@router.post("/fmt", response_model=FormatScriptResponse)
async def format_script(request: ScriptRequest) -> Any:
    """
    Return the canonical text of a problem script
    """
    return {"text": print_script(_parse(request))}


@router.post("/run", response_model=RunScriptResponse)
async def run_problem_script(request: RunScriptRequest) -> Any:
    """
    Run a problem script and return its report

    Statement failures are part of the report (``exit_code`` and ``error``);
    only syntax errors are returned as HTTP errors.
    """
    script = _parse(request)
    settings = load_settings(
        DEFAULT_SEED=request.seed,
        FORCE_UNDECIDED=True if request.force else None,
        DOMAIN_SAMPLES=request.samples,
        VARIETY_SAMPLES=request.samples,
        D_MAX=request.d_max,
    )
    try:
        run = await run_in_threadpool(run_script, script, settings)
    except PositivityError as e:
        raise HTTPException(status_code=e.status_code, detail=e.to_dict())
    return {
        "report": run.report,
        "text": run.report.to_text(),
        "tower": dump_tower(run.tower) if run.tower is not None else None,
        "certificates": [dump_certificate(c) for c in run.certificates],
    }
