from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional
import logging

from app.core.config import settings
from app.core.errors import SidelinkError
from app.core.logging import log_structured_data, registry_logger, set_run_id
from app.db.session import SessionLocal
from app.models.simulation_run import SimulationRun
from app.schemas.simulation import SimConfig, build_sim_config

logger = logging.getLogger(__name__)


class RunRegistry:
    """
    Gerencia o registro persistente de execuções de simulação.
    """

    def __init__(self, session_factory=None, output_root: Optional[str] = None):
        self.session_factory = session_factory or SessionLocal
        self.output_root = Path(output_root or settings.OUTPUT_ROOT)

    def create_run(self, config: SimConfig) -> SimulationRun:
        """
        Registra uma execução na fila.

        Args:
            config: Configuração validada

        Returns:
            O registro criado, com status "queued"
        """
        db = self.session_factory()
        try:
            run = SimulationRun(
                status="queued",
                scheme=config.scheme.value,
                seed=str(config.seed),
                density_veh_per_100m=config.density_veh_per_100m,
                bandwidth_mhz=config.bandwidth_mhz,
                duration_ms=config.duration_ms,
                config_hash=config.config_hash(),
                config=config.model_dump(mode="json"),
            )
            db.add(run)
            db.commit()
            db.refresh(run)
            log_structured_data(registry_logger, "info", f"Execução registrada: {run.id}",
                                {"scheme": run.scheme, "config_hash": run.config_hash})
            return run
        except Exception as e:
            db.rollback()
            log_structured_data(registry_logger, "error", f"Erro ao registrar execução: {str(e)}")
            raise
        finally:
            db.close()

    def _update(self, run_id: str, **values) -> Optional[SimulationRun]:
        db = self.session_factory()
        try:
            run = db.query(SimulationRun).filter(SimulationRun.id == run_id).first()
            if run is None:
                return None
            for key, value in values.items():
                setattr(run, key, value)
            db.commit()
            db.refresh(run)
            return run
        except Exception as e:
            db.rollback()
            log_structured_data(registry_logger, "error", f"Erro ao atualizar execução: {str(e)}",
                                {"run_id": run_id})
            raise
        finally:
            db.close()

    def get_run(self, run_id: str) -> Optional[SimulationRun]:
        """Recupera uma execução pelo ID (None se não existir)."""
        db = self.session_factory()
        try:
            return db.query(SimulationRun).filter(SimulationRun.id == run_id).first()
        finally:
            db.close()

    def list_runs(self, status: Optional[str] = None, scheme: Optional[str] = None,
                  limit: int = 50) -> List[SimulationRun]:
        """Execuções mais recentes primeiro, com filtros opcionais."""
        db = self.session_factory()
        try:
            query = db.query(SimulationRun)
            if status:
                query = query.filter(SimulationRun.status == status)
            if scheme:
                query = query.filter(SimulationRun.scheme == scheme)
            return query.order_by(SimulationRun.created_at.desc()).limit(limit).all()
        finally:
            db.close()

    def execute(self, run_id: str) -> Optional[SimulationRun]:
        """
        Executa uma simulação registrada e grava o resultado no registro.

        Falhas de simulação ficam no campo error com status "failed"; não são relançadas.
        """
        from app.services.simulation_engine import SimulationEngine

        run = self._update(run_id, status="running")
        if run is None:
            logger.warning(f"Execução inexistente: {run_id}")
            return None

        set_run_id(run_id)
        out_dir = self.output_root / run_id
        try:
            config = build_sim_config(run.config)
            result = SimulationEngine(config).run(out_dir)
        except SidelinkError as e:
            log_structured_data(registry_logger, "error", f"Execução falhou: {str(e)}", {"run_id": run_id})
            return self._update(run_id, status="failed", error=str(e),
                                finished_at=datetime.now(timezone.utc))
        except Exception as e:
            logger.exception("Erro inesperado na simulação")
            return self._update(run_id, status="failed", error=f"{type(e).__name__}: {e}",
                                finished_at=datetime.now(timezone.utc))

        log_structured_data(registry_logger, "info", f"Execução concluída: {run_id}",
                            {"wall_time_s": round(result.wall_time_s, 3)})
        return self._update(
            run_id,
            status="completed",
            n_vues=result.n_vues,
            prr_first_bin=result.summary["prr_first_bin"],
            mean_cbr=result.summary["mean_cbr"],
            wall_time_s=result.wall_time_s,
            output_dir=str(out_dir),
            finished_at=datetime.now(timezone.utc),
        )
