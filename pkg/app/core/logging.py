import logging
import os
import json
import uuid
from contextvars import ContextVar
from datetime import datetime
from typing import Dict, Any, Optional

# Context variable para correlacionar logs de uma mesma execução (inclusive em workers de sweep)
run_id_context: ContextVar[Optional[str]] = ContextVar('run_id', default=None)

def get_run_id() -> str:
    """
    Retorna o ID da execução corrente, gerando um novo se ainda não existir.

    Returns:
        String UUID da execução corrente
    """
    current_id = run_id_context.get()
    if current_id is None:
        current_id = str(uuid.uuid4())
        run_id_context.set(current_id)
    return current_id

def set_run_id(run_id: str) -> None:
    """Define explicitamente o ID da execução corrente."""
    run_id_context.set(run_id)

# Configurar o logger base
def setup_logger(name: str, log_level: str = "INFO") -> logging.Logger:
    """
    Configura um logger com o nível especificado.

    Args:
        name: Nome do logger
        log_level: Nível de log (DEBUG, INFO, WARNING, ERROR, CRITICAL)

    Returns:
        Um objeto logger configurado
    """
    logger = logging.getLogger(name)

    # Converter string de nível para constante de logging
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f'Nível de log inválido: {log_level}')

    logger.setLevel(numeric_level)

    # Adicionar handler para console se não existir
    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

        # Em produção, também registrar em arquivo
        if os.environ.get("ENVIRONMENT", "dev") == "prod":
            log_dir = os.environ.get("LOG_DIR") or "./logs"
            os.makedirs(log_dir, exist_ok=True)

            file_handler = logging.FileHandler(
                f"{log_dir}/sidelink-{datetime.now().strftime('%Y-%m-%d')}.log"
            )
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger

_LEVEL = os.environ.get("LOG_LEVEL", "INFO")

# Logger do laço de simulação (relógio de subquadros)
engine_logger = setup_logger("sidelink.engine", _LEVEL)

# Logger do escalonador SB-SPS
mac_logger = setup_logger("sidelink.mac", _LEVEL)

# Logger do canal físico
phy_logger = setup_logger("sidelink.phy", _LEVEL)

# Logger do controle de congestionamento
congestion_logger = setup_logger("sidelink.congestion", _LEVEL)

# Logger de métricas e relatórios
metrics_logger = setup_logger("sidelink.metrics", _LEVEL)

# Logger de varreduras de parâmetros
sweep_logger = setup_logger("sidelink.sweep", _LEVEL)

# Logger para eventos de API
api_logger = setup_logger("sidelink.api", _LEVEL)

# Logger do registro de execuções
registry_logger = setup_logger("sidelink.registry", _LEVEL)

# Função helper para serializar logs com informações estruturadas
def log_structured_data(logger: logging.Logger, level: str, message: str, data: Dict[str, Any] = None):
    """
    Loga uma mensagem com dados estruturados adicionais em formato JSON.

    Args:
        logger: O logger a ser usado
        level: Nível de log (debug, info, warning, error, critical)
        message: Mensagem de log
        data: Dados estruturados adicionais para incluir no log
    """
    log_method = getattr(logger, level.lower())
    if not logger.isEnabledFor(getattr(logging, level.upper())):
        return

    payload = dict(data or {})
    payload.setdefault("run_id", get_run_id())
    try:
        json_data = " - " + json.dumps(payload, default=str)
    except Exception as e:
        json_data = f" - ERROR serializing data: {str(e)}"

    log_method(f"{message}{json_data}")

# Função para log de métricas para monitoramento
def log_metric(name: str, value: float, dimensions: Dict[str, str] = None):
    """
    Loga uma métrica para monitoramento.

    Args:
        name: Nome da métrica
        value: Valor da métrica
        dimensions: Dimensões adicionais da métrica
    """
    metrics_logger_ = setup_logger("sidelink.metrics")
    dims = dict(dimensions or {})
    dims.setdefault("run_id", get_run_id())
    metrics_logger_.info(f"METRIC: {name}={value} {json.dumps(dims, default=str)}")
