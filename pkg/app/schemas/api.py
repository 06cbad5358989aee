from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.schemas.script import RunReport


# Request Models
class ScriptRequest(BaseModel):
    text: str = Field(..., description="Problem script source")
    source: str = Field(default="<request>", description="Name shown in reports")


class RunScriptRequest(ScriptRequest):
    seed: Optional[int] = Field(default=None, description="Overrides the default sampling seed")
    force: bool = Field(default=False, description="Continue past undecided regularity checks")
    samples: Optional[int] = Field(default=None, ge=1, description="Domain and variety sample sizes")
    d_max: Optional[int] = Field(default=None, ge=0, description="Largest relaxation degree")


# Response Models
class CheckScriptResponse(BaseModel):
    statements: int
    kinds: List[str]


class FormatScriptResponse(BaseModel):
    text: str


class RunScriptResponse(BaseModel):
    report: RunReport
    text: str = Field(..., description="Deterministic text rendering of the report")
    tower: Optional[str] = Field(default=None, description="Serialized final tower")
    certificates: List[str] = Field(default_factory=list)


class ErrorDetail(BaseModel):
    error: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)
