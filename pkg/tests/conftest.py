import os

# Registro em memória para toda a sessão de testes (antes de importar app.*)
os.environ.setdefault("DATABASE_URL", "sqlite:///:memory:")

import pytest
from fastapi.testclient import TestClient
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from app.db.session import init_db
from app.models.base import Base
from app.schemas.simulation import SimConfig
from app.services.resource_grid import build_grid_config

# Criar um banco de dados SQLite em memória para testes
SQLALCHEMY_DATABASE_URL = "sqlite:///:memory:"

engine = create_engine(
    SQLALCHEMY_DATABASE_URL,
    connect_args={"check_same_thread": False},
    poolclass=StaticPool,
)
TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


@pytest.fixture
def sim_config():
    """Configuração padrão (parâmetros de referência, densidade baixa)."""
    return SimConfig()


@pytest.fixture
def grid(sim_config):
    """Grade de 10 MHz com subcanais de 10 RBs e 2 subcanais por pacote."""
    return build_grid_config(sim_config)


@pytest.fixture
def channel_cfg(sim_config):
    return sim_config.channel_config()


@pytest.fixture
def small_config():
    """Cenário pequeno e rápido: anel de 300 m, 2 s de aquecimento, 2 s medidos."""
    return SimConfig(
        road_length_m=300,
        density_veh_per_100m=4,
        duration_ms=2000,
        warmup_ms=2000,
        seed=7,
    )


@pytest.fixture
def db_session():
    """Fixture para criar um banco de dados de teste fresco para cada teste."""
    init_db(bind=engine)
    session = TestingSessionLocal()
    try:
        yield session
    finally:
        session.close()
    Base.metadata.drop_all(bind=engine)


@pytest.fixture
def registry(db_session, tmp_path):
    """Registro de execuções apontando para o banco em memória e um diretório temporário."""
    from app.services.run_registry import RunRegistry

    return RunRegistry(session_factory=TestingSessionLocal, output_root=str(tmp_path / "runs"))


@pytest.fixture
def client(registry):
    """Fixture para criar um cliente de teste da API."""
    from app.api.v1.endpoints.simulations import get_registry
    from app.main import app

    app.dependency_overrides[get_registry] = lambda: registry

    with TestClient(app) as test_client:
        yield test_client

    app.dependency_overrides.clear()
