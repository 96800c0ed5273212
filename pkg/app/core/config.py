from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    API_V1_STR: str = "/api/v1"

    # CORS settings
    BACKEND_CORS_ORIGINS: list[str] = ["http://localhost:3000", "http://localhost:8080"]

    # Registro de execuções (SQLite por padrão, qualquer URL SQLAlchemy funciona)
    DATABASE_URL: str = "sqlite:///./sidelink_runs.db"

    # Diretório raiz para resultados das simulações
    OUTPUT_ROOT: str = "./results"

    # Paralelismo padrão para varreduras de parâmetros
    SWEEP_JOBS: int = 1

    # Service settings
    ENVIRONMENT: str = "dev"
    DEBUG: bool = True
    LOG_LEVEL: str = "INFO"
    LOG_DIR: Optional[str] = None

    class Config:
        case_sensitive = True
        env_file = ".env"
        env_file_encoding = "utf-8"


settings = Settings()
