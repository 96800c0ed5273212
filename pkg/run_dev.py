#!/usr/bin/env python3

"""
Script para iniciar a API de simulações em ambiente de desenvolvimento
"""

import os
import sys
import uvicorn
import logging
import argparse
from dotenv import load_dotenv

# Configurar logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

def parse_args():
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="Inicia a API de simulações em modo de desenvolvimento")
    parser.add_argument("--port", type=int, default=8080, help="Porta do servidor")
    parser.add_argument("--no-reload", action="store_true", help="Desativa o recarregamento automático")
    return parser.parse_args()

def setup_environment():
    """Configura variáveis de ambiente se necessário."""
    load_dotenv()

    if not os.getenv('DATABASE_URL'):
        os.environ['DATABASE_URL'] = "sqlite:///./sidelink_runs.db"
        logger.info("Configurada DATABASE_URL padrão: sqlite:///./sidelink_runs.db")
    else:
        logger.info(f"DATABASE_URL já configurada: {os.getenv('DATABASE_URL')}")

    os.environ.setdefault('OUTPUT_ROOT', './results')
    os.environ['ENVIRONMENT'] = 'dev'
    logger.info("Ambiente configurado como: dev")

def start_dev_server(port: int, reload: bool) -> bool:
    """Inicializa o registro e sobe o servidor."""
    try:
        # init_db só pode ser importado depois das variáveis de ambiente
        from app.db.session import init_db

        logger.info("Inicializando tabelas do registro de execuções...")
        init_db()

        logger.info("Iniciando servidor FastAPI...")
        uvicorn.run(
            "app.main:app",
            host="0.0.0.0",
            port=port,
            reload=reload,
            log_level="debug"
        )
        return True

    except Exception as e:
        logger.error(f"Erro ao iniciar o servidor: {e}")
        return False

if __name__ == "__main__":
    args = parse_args()
    logger.info("Iniciando API de simulações em modo de desenvolvimento...")
    setup_environment()
    if not start_dev_server(args.port, reload=not args.no_reload):
        logger.error("Falha ao iniciar a API de simulações.")
        sys.exit(1)
