"""
Transmissões one-shot sobre o controle só de taxa: a cada 2 a 6 transmissões
periódicas uma transmissão é desviada para um recurso avulso escolhido pelo
procedimento SB-SPS, sem alterar o modelo periódico.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.schemas.events import ResourceId
from app.schemas.simulation import GridConfig, MacConfig, OneShotConfig
from app.services.sbsps_mac import SchedulerState, SensingHistory, choose_resource


@dataclass
class OneShotState:
    counter: int
    pending_oneshot: Optional[ResourceId] = None
    diverted: int = 0
    periodic: int = 0


@dataclass(frozen=True)
class OneShotAction:
    kind: str
    resource: Optional[ResourceId] = None

    @property
    def is_oneshot(self) -> bool:
        return self.kind == "oneshot"


TRANSMIT_ON_TEMPLATE = OneShotAction("template")


def draw_oneshot_counter(cfg: OneShotConfig, rng: np.random.Generator) -> int:
    return int(rng.integers(cfg.counter_min, cfg.counter_max + 1))


def new_oneshot_state(cfg: OneShotConfig, rng: np.random.Generator) -> OneShotState:
    return OneShotState(counter=draw_oneshot_counter(cfg, rng))


def on_periodic_tx(state: OneShotState, scheduler: SchedulerState, history: SensingHistory, now: int,
                   grid: GridConfig, mac: MacConfig, cfg: OneShotConfig,
                   rng: np.random.Generator) -> OneShotAction:
    """
    Decide se a próxima transmissão sai no modelo periódico ou num recurso avulso.

    Com o contador em zero a transmissão é desviada e o contador é sorteado
    de novo; caso contrário a transmissão usa o modelo e o contador decrementa.
    O contador de reseleção do SPS não é tocado aqui.
    """
    if state.counter > 0:
        state.counter -= 1
        state.periodic += 1
        state.pending_oneshot = None
        return TRANSMIT_ON_TEMPLATE

    resource = choose_resource(history, now, grid, scheduler, mac, rng)
    state.counter = draw_oneshot_counter(cfg, rng)
    state.pending_oneshot = resource
    state.diverted += 1
    return OneShotAction("oneshot", resource)
