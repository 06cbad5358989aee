from app.schemas.tower import Mode, RegularityCase, TowerState, Verdict
from app.schemas.variety import GapReport, GapVerdict, PointCloud
from app.schemas.sos import Certificate, VerificationLevel, VerificationReport
from app.schemas.script import ProblemScript, RunReport, Statement, StatementKind
