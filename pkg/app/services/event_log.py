"""
Log de eventos da execução (transmissões com tentativas por faixa, recepções
bem-sucedidas com a distância do par, amostras de CBR e de controle).

Persistido em .npz comprimido com colunas numpy. O replay dobra o log pelos
mesmos acumuladores de `metrics` e reproduz os CSVs byte a byte.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from app.core.errors import EventLogError
from app.core.logging import engine_logger, log_structured_data
from app.schemas.events import TransmissionEvent
from app.services.metrics import MetricsStore, N_PRR_BINS, finalize

FORMAT_VERSION = 1

_TX_INT_COLUMNS = ("tx_subframe", "tx_vue", "tx_packet_id", "tx_subchannel_start",
                   "tx_subchannel_count", "tx_rri_ms", "tx_is_oneshot")


class EventLog:
    """Sequência somente-anexação, estritamente ordenada por subquadro."""

    def __init__(self, metadata: Optional[Dict[str, Any]] = None):
        self.metadata: Dict[str, Any] = dict(metadata or {})
        self._tx_int: List[List[int]] = []
        self._tx_power: List[float] = []
        self._tx_attempts: List[np.ndarray] = []
        self._rx_subframe: List[np.ndarray] = []
        self._rx_tx_vue: List[np.ndarray] = []
        self._rx_vue: List[np.ndarray] = []
        self._rx_distance: List[np.ndarray] = []
        self.cbr_samples: List[List[float]] = []
        self.control_samples: List[List[float]] = []
        self._last_subframe = -1

    def _check_order(self, subframe: int) -> None:
        if subframe < self._last_subframe:
            raise EventLogError(f"evento fora de ordem: subquadro {subframe} após {self._last_subframe}")
        self._last_subframe = subframe

    def append_transmission(self, event: TransmissionEvent, attempts: np.ndarray) -> None:
        self._check_order(event.subframe)
        self._tx_int.append([
            event.subframe, event.tx_vue, event.packet_id, event.subchannel_start,
            event.subchannel_count, event.rri_ms, int(event.is_oneshot),
        ])
        self._tx_power.append(float(event.tx_power_dbm))
        self._tx_attempts.append(np.asarray(attempts, dtype=np.int64))

    def append_receptions(self, subframe: int, tx_vue: int, rx_vues: np.ndarray, distance_m: np.ndarray) -> None:
        self._check_order(subframe)
        if len(rx_vues) == 0:
            return
        self._rx_subframe.append(np.full(len(rx_vues), subframe, dtype=np.int64))
        self._rx_tx_vue.append(np.full(len(rx_vues), tx_vue, dtype=np.int64))
        self._rx_vue.append(np.asarray(rx_vues, dtype=np.int64))
        self._rx_distance.append(np.asarray(distance_m, dtype=np.float64))

    def append_cbr(self, row: List[float]) -> None:
        self.cbr_samples.append(list(row))

    def append_control(self, row: List[float]) -> None:
        self.control_samples.append(list(row))

    @property
    def transmission_count(self) -> int:
        return len(self._tx_int)

    # Colunas

    def columns(self) -> Dict[str, np.ndarray]:
        tx_int = np.asarray(self._tx_int, dtype=np.int64).reshape(-1, len(_TX_INT_COLUMNS))
        arrays = {name: tx_int[:, i] for i, name in enumerate(_TX_INT_COLUMNS)}
        arrays["tx_power_dbm"] = np.asarray(self._tx_power, dtype=np.float64)
        arrays["tx_attempts"] = (np.vstack(self._tx_attempts) if self._tx_attempts
                                 else np.zeros((0, N_PRR_BINS), dtype=np.int64))

        def _cat(chunks: List[np.ndarray], dtype) -> np.ndarray:
            return np.concatenate(chunks).astype(dtype) if chunks else np.zeros(0, dtype=dtype)

        arrays["rx_subframe"] = _cat(self._rx_subframe, np.int64)
        arrays["rx_tx_vue"] = _cat(self._rx_tx_vue, np.int64)
        arrays["rx_vue"] = _cat(self._rx_vue, np.int64)
        arrays["rx_distance_m"] = _cat(self._rx_distance, np.float64)
        arrays["cbr_samples"] = np.asarray(self.cbr_samples, dtype=np.float64).reshape(-1, 3)
        arrays["control_samples"] = np.asarray(self.control_samples, dtype=np.float64).reshape(-1, 6)
        return arrays

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arrays = self.columns()
        arrays["format_version"] = np.array(FORMAT_VERSION, dtype=np.int64)
        arrays["metadata_json"] = np.array(json.dumps(self.metadata, sort_keys=True, default=str))
        with open(path, "wb") as handle:
            np.savez_compressed(handle, **arrays)
        log_structured_data(engine_logger, "info", "Log de eventos salvo",
                            {"path": str(path), "transmissions": self.transmission_count,
                             "receptions": int(arrays["rx_vue"].size)})
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EventLog":
        path = Path(path)
        if not path.is_file():
            raise EventLogError(f"log de eventos não encontrado: {path}")
        try:
            with np.load(path, allow_pickle=False) as data:
                arrays = {name: data[name] for name in data.files}
        except Exception as exc:
            raise EventLogError(f"log de eventos ilegível: {path} ({exc})") from None
        version = int(arrays.get("format_version", np.array(-1)))
        if version != FORMAT_VERSION:
            raise EventLogError(f"versão de log incompatível: {version} (esperada {FORMAT_VERSION})")

        log = cls(json.loads(str(arrays["metadata_json"])))
        tx_int = np.column_stack([arrays[name] for name in _TX_INT_COLUMNS]) if arrays["tx_subframe"].size \
            else np.zeros((0, len(_TX_INT_COLUMNS)), dtype=np.int64)
        log._tx_int = tx_int.tolist()
        log._tx_power = arrays["tx_power_dbm"].tolist()
        log._tx_attempts = list(arrays["tx_attempts"])
        if arrays["rx_vue"].size:
            log._rx_subframe = [arrays["rx_subframe"]]
            log._rx_tx_vue = [arrays["rx_tx_vue"]]
            log._rx_vue = [arrays["rx_vue"]]
            log._rx_distance = [arrays["rx_distance_m"]]
        log.cbr_samples = arrays["cbr_samples"].tolist()
        log.control_samples = arrays["control_samples"].tolist()
        if log._tx_int:
            log._last_subframe = int(tx_int[:, 0].max())
        return log


def fold(log: EventLog) -> MetricsStore:
    """Reconstrói os acumuladores de métricas a partir do log."""
    n_vues = int(log.metadata.get("n_vues", 0))
    columns = log.columns()
    if n_vues <= 0:
        seen = [columns["tx_vue"], columns["rx_vue"], columns["rx_tx_vue"]]
        n_vues = int(max((int(a.max()) for a in seen if a.size), default=-1)) + 1
    store = MetricsStore(n_vues)

    for attempts in columns["tx_attempts"]:
        store.prr.record_attempts(attempts)

    subframes = columns["rx_subframe"]
    if subframes.size:
        if np.any(np.diff(subframes) < 0):
            raise EventLogError("recepções fora de ordem no log")
        boundaries = np.flatnonzero(np.diff(subframes)) + 1
        for chunk in np.split(np.arange(subframes.size), boundaries):
            now = int(subframes[chunk[0]])
            distance = columns["rx_distance_m"][chunk]
            store.prr.record_received(distance)
            store.ia.record(columns["rx_tx_vue"][chunk], columns["rx_vue"][chunk], now, distance)

    store.cbr_samples = [[int(row[0])] + [float(v) for v in row[1:]] for row in log.cbr_samples]
    store.control_samples = [[int(row[0])] + [float(v) for v in row[1:]] for row in log.control_samples]
    return store


def replay(events_path: Union[str, Path], out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Carrega um log salvo e reescreve os arquivos de métricas em out_dir."""
    log = EventLog.load(events_path)
    store = fold(log)
    log_structured_data(engine_logger, "info", "Replay do log de eventos",
                        {"events": str(events_path), "transmissions": log.transmission_count})
    return finalize(store, Path(out_dir), log.metadata)
