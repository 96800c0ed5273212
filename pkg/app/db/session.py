import logging

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from app.core.config import settings
from app.models.base import Base

logger = logging.getLogger(__name__)

DATABASE_URL = settings.DATABASE_URL
using_sqlite = DATABASE_URL.startswith("sqlite")

# Criar engine de banco de dados
if using_sqlite:
    engine = create_engine(
        DATABASE_URL,
        connect_args={"check_same_thread": False},
        echo=False,
    )
else:
    engine = create_engine(
        DATABASE_URL,
        pool_pre_ping=True,
        pool_size=10,
        max_overflow=20,
        pool_timeout=30,
        pool_recycle=1800,
        echo=False,
    )

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


def init_db(bind=None):
    """Cria as tabelas do registro de execuções."""
    # Importa os modelos para registrá-los no metadata
    from app.models import simulation_run  # noqa: F401

    try:
        Base.metadata.create_all(bind=bind or engine)
        logger.info("Tabelas do registro de execuções criadas com sucesso.")
    except Exception as init_error:
        logger.error(f"Erro ao criar tabelas do banco de dados: {init_error}")
        raise
