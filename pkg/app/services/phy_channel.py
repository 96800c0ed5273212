"""
Canal físico do sidelink: perda de percurso, sombreamento, potência recebida,
interferência, ruído e decisão de recepção por pacote (com half-duplex).

O núcleo é vetorizado sobre (pacotes do subquadro × receptores); as funções
escalares `receive` e `measure_rssi` usam o mesmo núcleo com um receptor.
"""
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from app.core.logging import log_structured_data, phy_logger
from app.core.sim_defaults import RB_BANDWIDTH_HZ
from app.schemas.events import (
    CAUSE_BY_CODE, FAILURE_CODES, FailureCause, ReceptionOutcome, ResourceId, TransmissionEvent,
)
from app.schemas.simulation import ChannelConfig, GridConfig

ArrayLike = Union[float, np.ndarray]

_HALF_DUPLEX = FAILURE_CODES[FailureCause.HALF_DUPLEX]
_BELOW_SENSITIVITY = FAILURE_CODES[FailureCause.BELOW_SENSITIVITY]
_SINR_FAIL = FAILURE_CODES[FailureCause.SINR_FAIL]
_COLLISION = FAILURE_CODES[FailureCause.COLLISION_SAME_RESOURCE]


def pathloss_db(distance_m: ArrayLike, cfg: ChannelConfig) -> ArrayLike:
    """
    Perda de percurso log-distância com dois segmentos.

    Distâncias abaixo de 1 m são tratadas como 1 m. Contínua no ponto de quebra.
    """
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), 1.0)
    near = cfg.pl0_db + 10.0 * cfg.exponent_near * np.log10(d)
    at_break = cfg.pl0_db + 10.0 * cfg.exponent_near * np.log10(cfg.breakpoint_m)
    far = at_break + 10.0 * cfg.exponent_far * np.log10(d / cfg.breakpoint_m)
    loss = np.where(d <= cfg.breakpoint_m, near, far)
    if np.ndim(loss) == 0:
        return float(loss)
    return loss


def noise_dbm(n_subchannels: int, cfg: ChannelConfig) -> float:
    """Ruído térmico + figura de ruído sobre n subcanais."""
    bandwidth_hz = n_subchannels * cfg.subchannel_size_rb * RB_BANDWIDTH_HZ
    return cfg.thermal_noise_density_dbm_hz + 10.0 * np.log10(bandwidth_hz) + cfg.noise_figure_db


def rsrp_dbm(rx_power_dbm: ArrayLike, n_subchannels: int, cfg: ChannelConfig) -> ArrayLike:
    """RSRP por elemento de recurso: potência recebida dividida pelos 12 subportadores de cada RB ocupado."""
    return np.asarray(rx_power_dbm, dtype=np.float64) - 10.0 * np.log10(12 * n_subchannels * cfg.subchannel_size_rb)


def dbm_to_mw(value_dbm: ArrayLike) -> ArrayLike:
    return np.power(10.0, np.asarray(value_dbm, dtype=np.float64) / 10.0)


def mw_to_dbm(value_mw: ArrayLike) -> ArrayLike:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(value_mw)


class ShadowingCache:
    """
    Sombreamento lognormal por par não ordenado de VUEs.

    O valor de um par é sorteado de novo a cada `shadowing_decorrelation_m`
    de deslocamento relativo. Com velocidade constante o deslocamento
    relativo depende apenas de |dir_i - dir_j|, então a época é comum a
    todos os pares da mesma classe de sentido.
    """

    def __init__(self, directions: np.ndarray, speed_mps: float, cfg: ChannelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.speed_mps = speed_mps
        directions = np.asarray(directions, dtype=np.int64)
        self.n = directions.size
        self.values = np.zeros((self.n, self.n), dtype=np.float32)
        self._relative = np.abs(directions[:, None] - directions[None, :]).astype(np.int8)
        self._classes = sorted(int(c) for c in np.unique(self._relative))
        self._epochs = {c: -1 for c in self._classes}

    def epoch(self, relative_factor: int, time_ms: int) -> int:
        displacement = relative_factor * self.speed_mps * time_ms / 1000.0
        return int(np.floor(displacement / self.cfg.shadowing_decorrelation_m))

    def update(self, time_ms: int) -> int:
        """
        Sorteia novamente os pares cuja época mudou.

        Returns:
            Número de pares sorteados
        """
        if self.cfg.shadowing_sigma_db <= 0.0 or self.n < 2:
            return 0
        redrawn = 0
        for relative_factor in self._classes:
            current = self.epoch(relative_factor, time_ms)
            if current == self._epochs[relative_factor]:
                continue
            self._epochs[relative_factor] = current
            rows, cols = np.nonzero(np.triu(self._relative == relative_factor, k=1))
            if rows.size == 0:
                continue
            draws = self.rng.normal(0.0, self.cfg.shadowing_sigma_db, size=rows.size).astype(np.float32)
            self.values[rows, cols] = draws
            self.values[cols, rows] = draws
            redrawn += rows.size
        return redrawn

    def rows(self, tx_ids: np.ndarray) -> np.ndarray:
        return self.values[tx_ids].astype(np.float64)


@dataclass
class SubframeResolution:
    """Resultado da camada física para um subquadro (K pacotes × N receptores)."""
    rx_power_dbm: np.ndarray
    success: np.ndarray
    sinr_db: np.ndarray
    cause: np.ndarray
    subchannel_rssi_dbm: np.ndarray
    occupancy: np.ndarray

    def outcome(self, k: int, rx: int, event: TransmissionEvent) -> ReceptionOutcome:
        code = int(self.cause[k, rx])
        return ReceptionOutcome(
            packet_id=event.packet_id,
            tx_vue=event.tx_vue,
            rx_vue=rx,
            success=bool(self.success[k, rx]),
            sinr_db=float(self.sinr_db[k, rx]),
            failure_cause=CAUSE_BY_CODE[code],
        )


class PhyChannel:
    """Resolve todas as recepções de um subquadro."""

    def __init__(self, cfg: ChannelConfig, grid: GridConfig, rng: Optional[np.random.Generator] = None):
        self.cfg = cfg
        self.grid = grid
        self.rng = rng
        if cfg.reception_model == "logistic" and rng is None:
            raise ValueError("modelo de recepção logístico exige um gerador aleatório")
        self.subchannel_noise_mw = float(dbm_to_mw(noise_dbm(1, cfg)))

    def rx_power_dbm(self, tx_power_dbm: np.ndarray, distance_m: np.ndarray,
                     shadowing_db: Optional[np.ndarray] = None) -> np.ndarray:
        """Potência recebida (K, N) = potência de Tx − perda de percurso − sombreamento."""
        power = np.asarray(tx_power_dbm, dtype=np.float64)[:, None] - pathloss_db(distance_m, self.cfg)
        if shadowing_db is not None:
            power = power - shadowing_db
        return power

    def occupancy(self, events: Sequence[TransmissionEvent]) -> np.ndarray:
        occ = np.zeros((len(events), self.grid.subchannels_per_subframe), dtype=bool)
        for k, event in enumerate(events):
            occ[k, event.subchannel_start:event.subchannel_stop] = True
        return occ

    def resolve(self, events: Sequence[TransmissionEvent], rx_power_dbm: np.ndarray,
                rx_transmitting: np.ndarray) -> SubframeResolution:
        """
        Decide o sucesso de cada par (pacote, receptor) de um subquadro.

        Args:
            events: Transmissões do subquadro (todas no mesmo subquadro)
            rx_power_dbm: Potência recebida (K, N) de cada pacote em cada receptor
            rx_transmitting: (N,) receptores que transmitem neste subquadro

        Returns:
            SubframeResolution com sucesso, SINR, causa e RSSI por subcanal
        """
        n_events, n_rx = rx_power_dbm.shape
        occ = self.occupancy(events)
        occ_f = occ.astype(np.float64)
        widths = occ_f.sum(axis=1)
        power_mw = dbm_to_mw(rx_power_dbm)

        # RSSI por subcanal: ruído de um subcanal + a fração da potência de cada pacote que cai no subcanal
        subchannel_mw = (occ_f / widths[:, None]).T @ power_mw + self.subchannel_noise_mw
        subchannel_rssi = mw_to_dbm(subchannel_mw)

        overlap = occ_f @ occ_f.T
        np.fill_diagonal(overlap, 0.0)
        interference_mw = (overlap / widths[:, None]) @ power_mw
        noise_mw = widths[:, None] * self.subchannel_noise_mw
        sinr_db = mw_to_dbm(power_mw / (interference_mw + noise_mw))

        half_duplex = np.broadcast_to(np.asarray(rx_transmitting, dtype=bool)[None, :], (n_events, n_rx))
        audible = rx_power_dbm >= self.cfg.sensitivity_dbm
        if self.cfg.reception_model == "logistic":
            probability = 1.0 / (1.0 + np.exp(-(sinr_db - self.cfg.sinr_threshold_db) / self.cfg.bler_slope_db))
            decoded = self.rng.random((n_events, n_rx)) < probability
        else:
            decoded = sinr_db >= self.cfg.sinr_threshold_db
        success = ~half_duplex & audible & decoded

        starts = np.array([e.subchannel_start for e in events], dtype=np.int64)
        counts = np.array([e.subchannel_count for e in events], dtype=np.int64)
        same = (starts[:, None] == starts[None, :]) & (counts[:, None] == counts[None, :])
        np.fill_diagonal(same, False)
        same_resource = same.any(axis=1)
        failed_sinr = np.where(same_resource[:, None], _COLLISION, _SINR_FAIL)
        cause = np.where(
            half_duplex, _HALF_DUPLEX,
            np.where(~audible, _BELOW_SENSITIVITY, np.where(success, 0, failed_sinr)),
        ).astype(np.int8)

        return SubframeResolution(
            rx_power_dbm=rx_power_dbm,
            success=success,
            sinr_db=sinr_db,
            cause=cause,
            subchannel_rssi_dbm=subchannel_rssi,
            occupancy=occ,
        )


def _single_receiver_powers(events: Sequence[TransmissionEvent], rx_power_by_tx: Mapping[int, float]) -> np.ndarray:
    try:
        return np.array([[rx_power_by_tx[event.tx_vue]] for event in events], dtype=np.float64)
    except KeyError as exc:
        raise ValueError(f"potência recebida ausente para o transmissor {exc.args[0]}") from None


def receive(tx_event: TransmissionEvent, rx_vue: int, concurrent_events: Sequence[TransmissionEvent],
            rx_power_by_tx: Mapping[int, float], cfg: ChannelConfig, grid: GridConfig,
            rng: Optional[np.random.Generator] = None) -> ReceptionOutcome:
    """
    Recepção de um único pacote em um receptor.

    Args:
        tx_event: Pacote de interesse
        rx_vue: Receptor
        concurrent_events: Demais transmissões do mesmo subquadro (pode incluir tx_event)
        rx_power_by_tx: Potência recebida em rx_vue de cada transmissor (dBm)
        cfg: Configuração do canal
        grid: Configuração da grade

    Returns:
        ReceptionOutcome do par (tx_event, rx_vue)
    """
    events = [tx_event] + [e for e in concurrent_events if e is not tx_event and e != tx_event]
    if any(e.subframe != tx_event.subframe for e in events):
        raise ValueError("todas as transmissões devem pertencer ao mesmo subquadro")
    powers = _single_receiver_powers(events, rx_power_by_tx)
    transmitting = np.array([any(e.tx_vue == rx_vue for e in events)])
    resolution = PhyChannel(cfg, grid, rng).resolve(events, powers, transmitting)
    outcome = resolution.outcome(0, 0, tx_event)
    return ReceptionOutcome(
        packet_id=outcome.packet_id,
        tx_vue=outcome.tx_vue,
        rx_vue=rx_vue,
        success=outcome.success,
        sinr_db=outcome.sinr_db,
        failure_cause=outcome.failure_cause,
    )


def measure_rssi(resource: ResourceId, events: Sequence[TransmissionEvent], rx_vue: int,
                 rx_power_by_tx: Mapping[int, float], cfg: ChannelConfig) -> Optional[float]:
    """
    RSSI (dBm) de um subcanal em um subquadro, visto por rx_vue. Um pacote de
    largura w contribui com 1/w da sua potência em cada subcanal ocupado.

    Returns:
        None quando rx_vue transmite nesse subquadro (recurso não mensurável)
    """
    in_subframe = [e for e in events if e.subframe == resource.subframe_index]
    if any(e.tx_vue == rx_vue for e in in_subframe):
        log_structured_data(phy_logger, "debug", "Recurso não mensurável (half-duplex)",
                            {"rx_vue": rx_vue, "subframe": resource.subframe_index})
        return None
    total_mw = float(dbm_to_mw(noise_dbm(1, cfg)))
    for event in in_subframe:
        if event.subchannel_start <= resource.subchannel_index < event.subchannel_stop:
            total_mw += float(dbm_to_mw(rx_power_by_tx[event.tx_vue])) / event.subchannel_count
    return float(mw_to_dbm(total_mw))
