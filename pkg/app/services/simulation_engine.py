"""
Motor de eventos discretos com relógio de subquadros de 1 ms.

Ordem dentro de cada subquadro t:
    1. mobilidade e sombreamento
    2. geração de BSMs (em ordem de vue_id): SPS / one-shot decidem o recurso
    3. transmissões agendadas para t passam pela camada física
    4. métricas (t >= warmup), histórico de sensoriamento e contadores de CBR
    5. fechamento de CBR e controle de potência a cada 100 ms;
       densidade e controle de taxa a cada 1000 ms
"""
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.core.errors import ConfigurationError
from app.core.logging import engine_logger, get_run_id, log_metric, log_structured_data
from app.core.sim_defaults import RNG_STREAMS
from app.schemas.events import ResourceId, TransmissionEvent, VuePose
from app.schemas.simulation import Scheme, SimConfig
from app.services.congestion_control import (
    CbrMonitor, CongestionState, apply_rate_control, estimate_densities, power_control,
)
from app.services.event_log import EventLog
from app.services.metrics import MetricsStore, finalize
from app.services.oneshot import new_oneshot_state, on_periodic_tx
from app.services.phy_channel import PhyChannel, ShadowingCache, dbm_to_mw, rsrp_dbm
from app.services.resource_grid import build_grid_config
from app.services.sbsps_mac import SchedulerState, SensingStore, on_transmit_opportunity, reselect
from app.services.scenario import Highway, spawn

RESULT_FORMAT = "sidelink-sim/1"


def make_streams(seed: int) -> Dict[str, np.random.Generator]:
    """Um gerador independente por subsistema, derivado de (semente, id do fluxo)."""
    return {name: np.random.default_rng([seed, stream_id]) for name, stream_id in RNG_STREAMS.items()}


@dataclass
class PendingTx:
    vue: int
    subchannel_start: int
    rri_ms: int
    packet_id: int
    is_oneshot: bool = False


@dataclass
class RunResult:
    out_dir: Optional[Path]
    files: Dict[str, Path]
    summary: Dict[str, Any]
    n_vues: int
    config_hash: str
    wall_time_s: float = 0.0
    events_path: Optional[Path] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


class SimulationEngine:
    """Uma execução completa de uma SimConfig."""

    def __init__(self, config: SimConfig, poses: Optional[List[VuePose]] = None, record_events: Optional[bool] = None):
        self.config = config
        self.scheme = config.scheme
        self.grid = build_grid_config(config)
        self.channel_cfg = config.channel_config()
        self.mac_cfg = config.mac_config()
        self.congestion_cfg = config.congestion_config()
        self.oneshot_cfg = config.oneshot_config()
        self.scenario_cfg = config.scenario_config()
        self.streams = make_streams(config.seed)

        if poses is None:
            poses = spawn(self.scenario_cfg, self.streams["placement"])
        if not poses:
            raise ConfigurationError("cenário sem veículos")
        self.highway = Highway(poses, self.scenario_cfg)
        self.n_vues = self.highway.size

        self.shadowing = ShadowingCache(self.highway.direction, self.scenario_cfg.speed_mps,
                                        self.channel_cfg, self.streams["shadowing"])
        self.phy = PhyChannel(self.channel_cfg, self.grid, self.streams["reception"])
        self.sensing = SensingStore(self.n_vues, self.mac_cfg.sensing_window_ms, self.grid.subchannels_per_subframe,
                                    self.phy.subchannel_noise_mw)
        self.cbr = CbrMonitor(self.n_vues, self.congestion_cfg)

        self.congestion = [CongestionState.initial(self.scheme, self.congestion_cfg) for _ in range(self.n_vues)]
        self.schedulers = [
            SchedulerState(
                rri_ms=state.itt_ms,
                keep_probability=self.mac_cfg.keep_probability,
                rsrp_exclusion_threshold_dbm=self.mac_cfg.rsrp_threshold_dbm,
            )
            for state in self.congestion
        ]
        self.oneshot = None
        if self.scheme is Scheme.ONESHOT_RC:
            self.oneshot = [new_oneshot_state(self.oneshot_cfg, self.streams["oneshot"]) for _ in range(self.n_vues)]

        self.last_rx_ms = np.full((self.n_vues, self.n_vues), -1, dtype=np.int32)
        self.densities = np.zeros(self.n_vues, dtype=np.float64)

        traffic = self.streams["traffic"]
        self.next_generation = np.array(
            [int(traffic.integers(0, state.itt_ms)) for state in self.congestion], dtype=np.int64,
        )
        self.pending: Dict[int, List[PendingTx]] = {}
        self._packet_counter = 0

        self.metrics = MetricsStore(self.n_vues)
        self.metadata = self._metadata()
        if record_events is None:
            record_events = config.save_events
        self.event_log = EventLog(self.metadata) if record_events else None

    # Configuração auxiliar

    def _metadata(self) -> Dict[str, Any]:
        return {
            "format": RESULT_FORMAT,
            "seed": self.config.seed,
            "scheme": self.scheme.value,
            "config_hash": self.config.config_hash(),
            "n_vues": self.n_vues,
            "duration_ms": self.config.duration_ms,
            "warmup_ms": self.config.warmup_ms,
            "subchannels_needed": self.grid.subchannels_needed,
            "subchannels_per_subframe": self.grid.subchannels_per_subframe,
            "config": self.config.model_dump(mode="json"),
        }

    def pin_template(self, vue: int, subframe: int, subchannel: int,
                     first_generation: Optional[int] = None, counter: Optional[int] = None) -> None:
        """Fixa o modelo periódico de um VUE (cenários roteirizados)."""
        scheduler = self.schedulers[vue]
        scheduler.template = ResourceId(subframe, subchannel)
        scheduler.needs_reselection = False
        scheduler.reselection_counter = counter if counter is not None else self.mac_cfg.reselection_counter_max
        if first_generation is None:
            first_generation = subframe - self.mac_cfg.selection_t1_ms
        self.next_generation[vue] = first_generation

    # Laço principal

    def run(self, out_dir: Optional[Path] = None) -> RunResult:
        total = self.config.warmup_ms + self.config.duration_ms
        log_structured_data(engine_logger, "info", "Iniciando simulação",
                            {"scheme": self.scheme.value, "seed": self.config.seed, "n_vues": self.n_vues,
                             "subframes": total, "config_hash": self.metadata["config_hash"]})
        started = time.perf_counter()
        if self.config.duration_ms > 0:
            for t in range(total):
                self.step(t)
                if (t + 1) % 1000 == 0:
                    engine_logger.debug(f"Subquadro {t + 1}/{total} ({get_run_id()})")
        wall = time.perf_counter() - started

        files: Dict[str, Path] = {}
        events_path = None
        if out_dir is not None:
            out_dir = Path(out_dir)
            files = finalize(self.metrics, out_dir, self.metadata)
            if self.event_log is not None:
                events_path = self.event_log.save(out_dir / "events.npz")

        summary = self.metrics.summary()
        log_metric("sim_wall_time_s", round(wall, 3), {"scheme": self.scheme.value})
        if wall > 0:
            log_metric("sim_subframes_per_s", round(total / wall, 1), {"scheme": self.scheme.value})
        log_structured_data(engine_logger, "info", "Simulação concluída",
                            {"wall_time_s": round(wall, 3), "prr_first_bin": summary["prr_first_bin"],
                             "mean_cbr": summary["mean_cbr"]})
        return RunResult(
            out_dir=out_dir,
            files=files,
            summary=summary,
            n_vues=self.n_vues,
            config_hash=self.metadata["config_hash"],
            wall_time_s=wall,
            events_path=events_path,
            metadata=self.metadata,
        )

    def step(self, t: int) -> List[TransmissionEvent]:
        self.highway.move_to(t)
        self.shadowing.update(t)

        for vue in np.flatnonzero(self.next_generation == t):
            self._generate(int(vue), t)

        events = self._collect(t)
        row = self.sensing.begin_write(t)
        if events:
            self._resolve(t, row, events)
        else:
            self.cbr.accumulate_idle(self.grid.subchannels_per_subframe)

        if (t + 1) % self.congestion_cfg.cbr_interval_ms == 0:
            self._close_cbr_interval(t)
        if (t + 1) % self.congestion_cfg.density_update_ms == 0:
            self._update_rate_control(t)
        return events

    # Geração e escalonamento

    def _generate(self, vue: int, t: int) -> None:
        scheduler = self.schedulers[vue]
        itt = self.congestion[vue].itt_ms
        self.next_generation[vue] = t + itt
        self._packet_counter += 1
        packet_id = self._packet_counter
        history = self.sensing.history(vue)
        first = t + self.mac_cfg.selection_t1_ms
        last = t + self.mac_cfg.selection_t2_ms

        occurrence = None
        if scheduler.template is not None and not scheduler.needs_reselection:
            occurrence = scheduler.next_occurrence(first)
            if occurrence.subframe_index > last:
                occurrence = None
        if occurrence is None:
            scheduler.rri_ms = itt
            occurrence = reselect(scheduler, history, t, self.grid, self.mac_cfg, self.streams["scheduler"])

        if self.oneshot is not None:
            action = on_periodic_tx(self.oneshot[vue], scheduler, history, t, self.grid,
                                    self.mac_cfg, self.oneshot_cfg, self.streams["oneshot"])
            if action.is_oneshot:
                self._schedule(action.resource, PendingTx(vue, action.resource.subchannel_index, 0, packet_id, True))
                return

        self._schedule(occurrence, PendingTx(vue, occurrence.subchannel_index, scheduler.rri_ms, packet_id))
        on_transmit_opportunity(scheduler, self.streams["scheduler"], self.mac_cfg)

    def _schedule(self, resource: ResourceId, pending: PendingTx) -> None:
        self.pending.setdefault(resource.subframe_index, []).append(pending)

    def _collect(self, t: int) -> List[TransmissionEvent]:
        due = sorted(self.pending.pop(t, []), key=lambda p: p.vue)
        return [
            TransmissionEvent(
                tx_vue=p.vue,
                subframe=t,
                subchannel_start=p.subchannel_start,
                subchannel_count=self.grid.subchannels_needed,
                tx_power_dbm=self.congestion[p.vue].tx_power_dbm,
                packet_id=p.packet_id,
                rri_ms=p.rri_ms,
                is_oneshot=p.is_oneshot,
            )
            for p in due
        ]

    # Camada física, métricas e sensoriamento

    def _resolve(self, t: int, row: int, events: List[TransmissionEvent]) -> None:
        tx_ids = np.array([e.tx_vue for e in events], dtype=np.int64)
        transmitting = np.zeros(self.n_vues, dtype=bool)
        transmitting[tx_ids] = True

        distances = self.highway.distances_from(tx_ids)
        powers = self.phy.rx_power_dbm(
            np.array([e.tx_power_dbm for e in events]), distances, self.shadowing.rows(tx_ids),
        )
        resolution = self.phy.resolve(events, powers, transmitting)
        measuring = t >= self.config.warmup_ms

        for k, event in enumerate(events):
            receivers = np.flatnonzero(resolution.success[k])
            if measuring:
                attempts = self.metrics.record_tx(event, distances[k])
                self.metrics.record_receptions(event.tx_vue, receivers, distances[k, receivers], t)
                if self.event_log is not None:
                    self.event_log.append_transmission(event, attempts)
                    self.event_log.append_receptions(t, event.tx_vue, receivers, distances[k, receivers])
            self.sensing.write_decoded(
                row, receivers, event.subchannel_start, event.subchannel_count,
                rsrp_dbm(powers[k, receivers], event.subchannel_count, self.channel_cfg), event.rri_ms,
            )
            self.last_rx_ms[receivers, event.tx_vue] = t

        self.sensing.write_rssi(row, dbm_to_mw(resolution.subchannel_rssi_dbm))
        self.sensing.write_unmeasurable(row, tx_ids)
        self.cbr.accumulate(resolution.subchannel_rssi_dbm, transmitting)

    # Controle de congestionamento

    def _close_cbr_interval(self, t: int) -> None:
        cbr = self.cbr.close_interval()
        if self.scheme.uses_power_control:
            for vue, state in enumerate(self.congestion):
                power_control(float(cbr[vue]), state, self.congestion_cfg)
        if t < self.config.warmup_ms:
            return
        time_ms = t + 1
        itt = np.array([s.itt_ms for s in self.congestion], dtype=np.float64)
        power = np.array([s.tx_power_dbm for s in self.congestion], dtype=np.float64)
        self.metrics.record_cbr(time_ms, cbr)
        self.metrics.record_control(time_ms, itt, power, self.densities)
        if self.event_log is not None:
            self.event_log.append_cbr(self.metrics.cbr_samples[-1])
            self.event_log.append_control(self.metrics.control_samples[-1])

    def _update_rate_control(self, t: int) -> None:
        last_rx = self.last_rx_ms if self.congestion_cfg.density_source == "reception" else None
        self.densities = estimate_densities(self.highway.all_distances(), self.congestion_cfg, last_rx, t)
        if not self.scheme.uses_rate_control:
            return
        for vue in apply_rate_control(self.congestion, self.densities, t, self.congestion_cfg):
            self.schedulers[vue].needs_reselection = True


def run(config: SimConfig, out_dir: Optional[Path] = None) -> RunResult:
    """Executa uma configuração e escreve os arquivos de resultado em out_dir."""
    return SimulationEngine(config).run(out_dir)
