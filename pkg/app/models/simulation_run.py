import uuid
from datetime import datetime, timezone

from sqlalchemy import JSON, Column, DateTime, Float, Integer, String, Text

from app.models.base import Base


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class SimulationRun(Base):
    __tablename__ = "simulation_runs"

    id = Column(String, primary_key=True, index=True, default=lambda: str(uuid.uuid4()))
    created_at = Column(DateTime, default=_utcnow)
    finished_at = Column(DateTime, nullable=True)

    # queued -> running -> completed | failed
    status = Column(String, index=True, default="queued")
    error = Column(Text, nullable=True)

    # Parâmetros principais (a configuração completa fica em config)
    scheme = Column(String, index=True)
    seed = Column(String)  # semente de 64 bits não cabe em INTEGER do SQLite
    density_veh_per_100m = Column(Float)
    bandwidth_mhz = Column(Integer)
    duration_ms = Column(Integer)
    config_hash = Column(String, index=True)
    config = Column(JSON)

    # Resultados
    n_vues = Column(Integer, nullable=True)
    prr_first_bin = Column(Float, nullable=True)
    mean_cbr = Column(Float, nullable=True)
    wall_time_s = Column(Float, nullable=True)
    output_dir = Column(String, nullable=True)
