from typing import List, Optional
import logging

from fastapi import APIRouter, BackgroundTasks, Depends, HTTPException, Request, status
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.core.errors import ConfigurationError
from app.core.logging import api_logger, log_structured_data
from app.core.sim_defaults import DENSITY_PRESETS, RB_PER_BANDWIDTH, SCHEME_ALIASES
from app.schemas.simulation import Scheme, SimConfig, build_sim_config
from app.schemas.simulation_run import (
    PresetsOutput,
    SimulationRequest,
    SimulationRunDetail,
    SimulationRunOutput,
)
from app.services.run_registry import RunRegistry

logger = logging.getLogger(__name__)
router = APIRouter()
limiter = Limiter(key_func=get_remote_address)

_registry = RunRegistry()


def get_registry() -> RunRegistry:
    return _registry


@router.get("/presets", response_model=PresetsOutput)
async def get_presets():
    """Esquemas, presets de densidade e larguras de banda aceitos."""
    return PresetsOutput(
        schemes=[scheme.value for scheme in Scheme],
        scheme_aliases=dict(SCHEME_ALIASES),
        densities=dict(DENSITY_PRESETS),
        bandwidths_mhz=sorted(RB_PER_BANDWIDTH),
        defaults=SimConfig().model_dump(mode="json"),
    )


@router.post("/", response_model=SimulationRunOutput, status_code=status.HTTP_202_ACCEPTED)
@limiter.limit("10/minute")
async def create_simulation(
    request: Request,
    simulation_input: SimulationRequest,
    background_tasks: BackgroundTasks,
    registry: RunRegistry = Depends(get_registry),
):
    """
    Valida a configuração, registra a execução e a dispara em segundo plano.

    A resposta traz o ID da execução; o resultado fica disponível em GET /{run_id}.
    """
    try:
        config = build_sim_config(simulation_input.config_values())
    except ConfigurationError as e:
        raise HTTPException(status_code=422, detail=str(e))

    try:
        run = registry.create_run(config)
    except Exception as e:
        logger.exception("Erro ao registrar execução")
        raise HTTPException(status_code=500, detail=f"Erro ao registrar execução: {str(e)}")

    background_tasks.add_task(registry.execute, run.id)
    log_structured_data(api_logger, "info", "Simulação enfileirada",
                        {"run_id": run.id, "scheme": run.scheme, "config_hash": run.config_hash})
    return run


@router.get("/", response_model=List[SimulationRunOutput])
async def list_simulations(
    status_filter: Optional[str] = None,
    scheme: Optional[str] = None,
    limit: int = 50,
    registry: RunRegistry = Depends(get_registry),
):
    """Lista as execuções mais recentes."""
    if scheme:
        try:
            scheme = Scheme.parse(scheme).value
        except ValueError:
            raise HTTPException(status_code=422, detail=f"esquema desconhecido: {scheme}")
    return registry.list_runs(status=status_filter, scheme=scheme, limit=max(1, min(limit, 500)))


@router.get("/{run_id}", response_model=SimulationRunDetail)
async def get_simulation(run_id: str, registry: RunRegistry = Depends(get_registry)):
    """Recupera uma execução pelo ID."""
    run = registry.get_run(run_id)
    if run is None:
        raise HTTPException(status_code=404, detail=f"Execução não encontrada: {run_id}")
    return run
