"""
Controle de congestionamento: medição de CBR, estimativa de densidade e as
leis de controle de taxa (pela densidade) e de potência (pelo CBR).

Regiões de ativação:
    densidade < 30 veh/100m      -> controle dormente (ITT 100 ms, 23 dBm)
    densidade >= 30 veh/100m     -> ITT cresce linearmente com a densidade
    CBR entre 0.65 e 0.80        -> potência cai linearmente de 23 para 10 dBm
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from app.core.logging import congestion_logger, log_structured_data
from app.schemas.events import ResourceId
from app.schemas.simulation import CongestionConfig, Scheme


@dataclass
class CbrTracker:
    measurement_interval_ms: int = 100
    threshold_dbm: float = -92.0
    last_cbr: float = 0.0


def update_cbr(tracker: CbrTracker, interval_measurements: Iterable[Tuple[ResourceId, Optional[float]]]) -> float:
    """
    Fecha um intervalo de medição: CBR = recursos ocupados / recursos mensuráveis.

    Medições None (subquadros em que o dono transmitiu) não contam. Sem
    nenhum recurso mensurável o CBR anterior é mantido.
    """
    busy = 0
    measurable = 0
    for _, rssi_dbm in interval_measurements:
        if rssi_dbm is None:
            continue
        measurable += 1
        if rssi_dbm > tracker.threshold_dbm:
            busy += 1
    if measurable:
        tracker.last_cbr = busy / measurable
    return tracker.last_cbr


class CbrMonitor:
    """Contadores de CBR de toda a frota para o intervalo corrente."""

    def __init__(self, n_vues: int, cfg: CongestionConfig):
        self.cfg = cfg
        self.busy = np.zeros(n_vues, dtype=np.int64)
        self.measurable = np.zeros(n_vues, dtype=np.int64)
        self.last_cbr = np.zeros(n_vues, dtype=np.float64)

    def accumulate(self, subchannel_rssi_dbm: np.ndarray, transmitting: np.ndarray) -> None:
        """Soma um subquadro: RSSI (subcanais × N); quem transmitiu não mede."""
        listening = ~transmitting
        busy = (subchannel_rssi_dbm > self.cfg.cbr_threshold_dbm).sum(axis=0)
        self.busy[listening] += busy[listening]
        self.measurable[listening] += subchannel_rssi_dbm.shape[0]

    def accumulate_idle(self, n_subchannels: int) -> None:
        """Subquadro sem transmissões: tudo mensurável e livre."""
        self.measurable += n_subchannels

    def close_interval(self) -> np.ndarray:
        measured = self.measurable > 0
        self.last_cbr[measured] = self.busy[measured] / self.measurable[measured]
        self.busy[:] = 0
        self.measurable[:] = 0
        return self.last_cbr


@dataclass
class DensityEstimate:
    vehicles_per_100m: float = 0.0
    updated_at_ms: int = -1


def density_from_count(source_count: Union[int, np.ndarray], cfg: CongestionConfig) -> Union[float, np.ndarray]:
    """Normaliza a contagem de fontes em ±raio para veículos por 100 m."""
    return source_count * 100.0 / (2.0 * cfg.density_radius_m)


def estimate_densities(distances_m: np.ndarray, cfg: CongestionConfig,
                       last_reception_ms: Optional[np.ndarray] = None, now: int = 0) -> np.ndarray:
    """
    Densidade percebida por cada VUE.

    Args:
        distances_m: Distâncias (N, N) entre VUEs
        cfg: Configuração do controle
        last_reception_ms: (N receptores, N fontes) instante da última recepção;
            None usa a verdade de campo (todos os vizinhos no raio)
        now: Subquadro atual

    Returns:
        Array (N,) em veículos / 100 m
    """
    nearby = distances_m <= cfg.density_radius_m
    np.fill_diagonal(nearby, False)
    if last_reception_ms is not None:
        recent = last_reception_ms > now - cfg.density_update_ms
        nearby &= recent & (last_reception_ms >= 0)
    return density_from_count(nearby.sum(axis=1), cfg)


@dataclass
class CongestionState:
    scheme: Scheme
    itt_ms: int = 100
    tx_power_dbm: float = 23.0
    itt_filtered: float = 100.0
    density: float = 0.0

    @classmethod
    def initial(cls, scheme: Scheme, cfg: CongestionConfig) -> "CongestionState":
        """Estado de partida: ITT base e potência configurada (tx_power_dbm), ambos dentro dos limites."""
        itt = int(np.clip(cfg.itt_base_ms, cfg.itt_min_ms, cfg.itt_max_ms))
        power = float(np.clip(cfg.tx_power_dbm, cfg.power_min_dbm, cfg.power_max_dbm))
        return cls(scheme=scheme, itt_ms=itt, tx_power_dbm=power, itt_filtered=float(itt))


def rate_control(density: DensityEstimate, state: CongestionState, cfg: CongestionConfig) -> int:
    """
    ITT alvo = itt_base × max(1, densidade / 30), filtrado exponencialmente
    (coeficiente 0.5) e limitado a [100, 600] ms, arredondado para ms inteiros.
    """
    if not state.scheme.uses_rate_control:
        raise ValueError(f"controle de taxa não se aplica ao esquema {state.scheme.value}")
    target = cfg.itt_base_ms * max(1.0, density.vehicles_per_100m / cfg.density_activation_per_100m)
    alpha = cfg.itt_filter_coefficient
    state.itt_filtered = alpha * target + (1.0 - alpha) * state.itt_filtered
    state.density = density.vehicles_per_100m
    state.itt_ms = int(np.clip(round(state.itt_filtered), cfg.itt_min_ms, cfg.itt_max_ms))
    return state.itt_ms


def power_control(cbr: float, state: CongestionState, cfg: CongestionConfig) -> float:
    """Potência linear por partes: máxima até o joelho inferior, mínima a partir do superior."""
    if not state.scheme.uses_power_control:
        raise ValueError(f"controle de potência não se aplica ao esquema {state.scheme.value}")
    if cbr <= cfg.cbr_knee_low:
        power = cfg.power_max_dbm
    elif cbr >= cfg.cbr_knee_high:
        power = cfg.power_min_dbm
    else:
        fraction = (cbr - cfg.cbr_knee_low) / (cfg.cbr_knee_high - cfg.cbr_knee_low)
        power = cfg.power_max_dbm - fraction * (cfg.power_max_dbm - cfg.power_min_dbm)
    state.tx_power_dbm = float(np.clip(power, cfg.power_min_dbm, cfg.power_max_dbm))
    return state.tx_power_dbm


def apply_rate_control(states, densities: np.ndarray, now: int, cfg: CongestionConfig) -> np.ndarray:
    """
    Atualização de segundo em segundo para a frota.

    Returns:
        Índices dos VUEs cujo ITT mudou (precisam reselecionar com o novo RRI)
    """
    changed = []
    for vue, state in enumerate(states):
        previous = state.itt_ms
        rate_control(DensityEstimate(float(densities[vue]), now), state, cfg)
        if state.itt_ms != previous:
            changed.append(vue)
    if changed:
        log_structured_data(congestion_logger, "debug", "ITT alterado pelo controle de taxa",
                            {"now": now, "vues": len(changed)})
    return np.asarray(changed, dtype=np.int64)
