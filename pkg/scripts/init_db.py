#!/usr/bin/env python3

import logging
import sys
from pathlib import Path

from dotenv import load_dotenv
from sqlalchemy import text

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

# Carregar variáveis de ambiente antes de importar a sessão
load_dotenv()

from app.db.session import engine, init_db  # noqa: E402

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def main() -> None:
    logger.info("Inicializando registro de execuções...")
    try:
        with engine.connect() as conn:
            conn.execute(text("SELECT 1"))
        init_db()
    except Exception as e:
        logger.error(f"Falha ao inicializar o banco de dados: {e}")
        sys.exit(1)
    logger.info(f"Registro pronto em {engine.url}")


if __name__ == "__main__":
    main()
