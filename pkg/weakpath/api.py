from collections import OrderedDict
import json
import os
import time
from typing import Any, Dict

from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .config import SCENARIO_MODELS, parse_config
from .exceptions import ConfigError, WeakPathError
from .fixtures import FIXTURES
from .runner import ExperimentRunner

app = FastAPI(
    title="weakpath API",
    description="REST API for weak values, pointer simulations and path-integral propagator inference",
    version=__version__,
)

origins_env = os.getenv("ALLOWED_ORIGINS", "*")
origins = origins_env.split(",") if origins_env != "*" else ["*"]

app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=origins_env != "*",
    allow_methods=["*"],
    allow_headers=["*"],
)

MAX_CACHE_SIZE = 32
_run_cache: OrderedDict = OrderedDict()


def run_experiment(config_data: Dict[str, Any]) -> Dict[str, Any]:
    config = parse_config(config_data, "request")
    cache_key = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    if cache_key in _run_cache:
        _run_cache.move_to_end(cache_key)
        return _run_cache[cache_key]

    result, _ = ExperimentRunner(config, threads=1).run()

    if len(_run_cache) >= MAX_CACHE_SIZE:
        _run_cache.popitem(last=False)
    _run_cache[cache_key] = result
    return result


@app.get("/")
async def root():
    return {"message": "weakpath API ready"}


@app.get("/scenarios")
async def list_scenarios():
    return {
        "scenarios": list(SCENARIO_MODELS),
        "fixtures": sorted(FIXTURES),
    }


@app.get("/fixtures/{name}")
async def get_fixture(name: str):
    if name not in FIXTURES:
        raise HTTPException(status_code=404, detail=f"no fixture named {name!r}")
    return FIXTURES[name]


@app.post("/run")
def run(config: Dict[str, Any] = Body(...)):
    start = time.time()
    try:
        result = run_experiment(config)
    except ConfigError as exc:
        raise HTTPException(
            status_code=422,
            detail={"error": str(exc), "key_path": [str(k) for k in exc.key_path]},
        ) from exc
    except WeakPathError as exc:
        raise HTTPException(status_code=400, detail={"error": str(exc), "type": type(exc).__name__}) from exc
    return {
        "version": __version__,
        "scenario": config.get("scenario"),
        "result": result,
        "run_time_ms": round((time.time() - start) * 1000),
    }


@app.get("/health")
async def health_check():
    return {
        "status": "healthy",
        "service": "weakpath-api",
        "version": __version__,
    }
