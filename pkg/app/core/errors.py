"""
Exceções do simulador de sidelink.
"""


class SidelinkError(Exception):
    """Base de todos os erros do simulador."""


class ConfigurationError(SidelinkError, ValueError):
    """Configuração inválida ou inviável (validada antes da execução)."""


class SchedulingError(SidelinkError, RuntimeError):
    """Violação de invariante interno do escalonador."""


class EventLogError(SidelinkError):
    """Log de eventos ilegível ou incompatível com esta versão."""
