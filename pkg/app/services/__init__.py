"""
Serviços do simulador de sidelink: grade de recursos, canal, escalonador SB-SPS,
controle de congestionamento, one-shot, cenário, métricas e o motor de eventos.
"""

from app.services.simulation_engine import RunResult, SimulationEngine
from app.services.event_log import replay
from app.services.sweep_service import run_sweep
from app.services.plot_service import plot_results
from app.services.run_registry import RunRegistry

__all__ = [
    'SimulationEngine',
    'RunResult',
    'replay',
    'run_sweep',
    'plot_results',
    'RunRegistry',
]
