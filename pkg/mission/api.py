"""
HTTP API (FastAPI)
- GET  /api/health
- GET  /api/scenarios
- POST /api/run     : 시나리오 실행 + 검증
- POST /api/verify  : 기록 검증만
"""
import logging
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import config
from .models import Report, RunLog, Scenario
from .runner import execute
from .scenario import ScenarioError, apply_overrides, list_scenarios, load_scenario, validate_scenario
from .verify import RunLogError, verify_log

logger = logging.getLogger(__name__)


class RunRequest(BaseModel):
    """name 으로 번들 시나리오, 또는 scenario 로 직접 전달"""
    name: Optional[str] = None
    scenario: Optional[Scenario] = None
    seed: Optional[int] = None
    alpha: Optional[float] = None
    horizon: Optional[int] = None
    include_log: bool = False


class RunResponse(BaseModel):
    success: bool
    report: Report
    log: Optional[RunLog] = None


class VerifyRequest(BaseModel):
    log: RunLog
    scenario: Optional[Scenario] = None


app = FastAPI(title="Communication-aware Multi-agent Planner API", version="1.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/api/health")
async def health_check():
    """헬스 체크"""
    return {"status": "healthy", "service": "planner"}


@app.get("/api/scenarios")
async def scenarios():
    return {"scenarios": list_scenarios(config.SCENARIO_DIR)}


def _resolve(request: RunRequest) -> Scenario:
    if request.scenario is not None:
        errors = validate_scenario(request.scenario)
        if errors:
            raise ScenarioError(errors)
        scenario = request.scenario
    elif request.name:
        scenario = load_scenario(request.name)
    else:
        raise ScenarioError(["name: give a bundled scenario name or an inline scenario"])
    return apply_overrides(scenario, seed=request.seed, alpha=request.alpha, horizon=request.horizon)


@app.post("/api/run", response_model=RunResponse)
async def run_endpoint(request: RunRequest):
    """계획 실행 (블로킹 연산은 스레드풀에서)"""
    try:
        scenario = _resolve(request)
        result = await run_in_threadpool(execute, scenario)
        return RunResponse(success=result.report.all_true, report=result.report,
                           log=result.log if request.include_log else None)
    except ScenarioError as e:
        raise HTTPException(status_code=422, detail=e.errors)
    except Exception as e:
        logger.error("run failed: %s", e)
        raise HTTPException(status_code=500, detail=f"run failed: {e}")


@app.post("/api/verify", response_model=Report)
async def verify_endpoint(request: VerifyRequest):
    try:
        return await run_in_threadpool(verify_log, request.log, request.scenario)
    except RunLogError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error("verify failed: %s", e)
        raise HTTPException(status_code=500, detail=f"verify failed: {e}")
