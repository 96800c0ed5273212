"""
Métricas de desempenho: PRR por faixa de distância e Information Age (IA)
por faixa de distância, com emissão das tabelas CSV da execução.

As métricas são uma dobra pura sobre dois tipos de registro (tentativas por
faixa de cada transmissão e recepções bem-sucedidas com a distância do par);
o replay de um log de eventos passa pelas mesmas funções.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from app.core.logging import log_structured_data, metrics_logger
from app.core.sim_defaults import IA_BINS_M, IA_CCDF_RESOLUTION_MS, PRR_BIN_WIDTH_M, PRR_MAX_RANGE_M
from app.schemas.events import ReceptionOutcome, TransmissionEvent

FLOAT_FORMAT = "%.10g"
PRR_COLUMNS = ["bin_low_m", "bin_high_m", "attempted", "received", "prr"]
IA_COLUMNS = ["bin_label", "ia_ms", "ccdf"]
CBR_COLUMNS = ["time_ms", "mean_cbr", "max_cbr"]
CONTROL_COLUMNS = [
    "time_ms", "mean_itt_ms", "max_itt_ms", "mean_tx_power_dbm", "min_tx_power_dbm", "mean_density_per_100m",
]
N_PRR_BINS = int(round(PRR_MAX_RANGE_M / PRR_BIN_WIDTH_M))


def prr_bin_index(distance_m: np.ndarray) -> np.ndarray:
    """Faixa de PRR de cada distância; −1 fora de [0, 1000] m (1000 m cai na última faixa)."""
    d = np.asarray(distance_m, dtype=np.float64)
    index = np.minimum(np.floor(d / PRR_BIN_WIDTH_M).astype(np.int64), N_PRR_BINS - 1)
    return np.where(d <= PRR_MAX_RANGE_M, index, -1)


def attempt_counts(distance_m: np.ndarray) -> np.ndarray:
    """Tentativas por faixa para um vetor de distâncias de receptores."""
    index = prr_bin_index(distance_m)
    return np.bincount(index[index >= 0], minlength=N_PRR_BINS).astype(np.int64)


class PrrAccumulator:
    def __init__(self):
        self.attempted = np.zeros(N_PRR_BINS, dtype=np.int64)
        self.received = np.zeros(N_PRR_BINS, dtype=np.int64)
        self.total_attempted = 0
        self.total_received = 0

    def record_attempts(self, counts: np.ndarray) -> None:
        self.attempted += counts
        self.total_attempted += int(counts.sum())

    def record_received(self, distance_m: np.ndarray) -> None:
        index = prr_bin_index(distance_m)
        index = index[index >= 0]
        np.add.at(self.received, index, 1)
        self.total_received += int(index.size)

    def table(self) -> pd.DataFrame:
        low = np.arange(N_PRR_BINS) * PRR_BIN_WIDTH_M
        if self.total_attempted == 0:
            return pd.DataFrame(columns=PRR_COLUMNS)
        with np.errstate(invalid="ignore", divide="ignore"):
            prr = np.where(self.attempted > 0, self.received / np.maximum(self.attempted, 1), np.nan)
        return pd.DataFrame({
            "bin_low_m": low,
            "bin_high_m": low + PRR_BIN_WIDTH_M,
            "attempted": self.attempted,
            "received": self.received,
            "prr": prr,
        }, columns=PRR_COLUMNS)


def ia_bin_label(distance_m: float) -> Optional[str]:
    for label, (low, high) in IA_BINS_M.items():
        if low <= distance_m < high:
            return label
    return None


class IaAccumulator:
    """
    Lacunas entre recepções consecutivas de cada par (receptor, transmissor),
    guardadas como histogramas em ms por faixa de distância.
    """

    def __init__(self, n_vues: int):
        self.last_ms = np.full((n_vues, n_vues), -1, dtype=np.int64)
        self.histograms: Dict[str, np.ndarray] = {label: np.zeros(0, dtype=np.int64) for label in IA_BINS_M}

    def _add(self, label: str, gaps: np.ndarray) -> None:
        if gaps.size == 0:
            return
        hist = self.histograms[label]
        needed = int(gaps.max()) + 1
        if needed > hist.size:
            grown = np.zeros(max(needed, 2 * hist.size), dtype=np.int64)
            grown[:hist.size] = hist
            hist = grown
        hist += np.bincount(gaps, minlength=hist.size)
        self.histograms[label] = hist

    def record(self, tx_vue: int, rx_vues: np.ndarray, now: int, distance_m: np.ndarray) -> None:
        """Recepções de um pacote de tx_vue em `rx_vues` no instante `now`."""
        rx_vues = np.asarray(rx_vues, dtype=np.int64)
        if rx_vues.size == 0:
            return
        previous = self.last_ms[rx_vues, tx_vue]
        self.last_ms[rx_vues, tx_vue] = now
        has_previous = (previous >= 0) & (previous < now)
        gaps = now - previous
        d = np.asarray(distance_m, dtype=np.float64)
        for label, (low, high) in IA_BINS_M.items():
            in_bin = has_previous & (d >= low) & (d < high)
            self._add(label, gaps[in_bin])

    def sample_count(self, label: str) -> int:
        return int(self.histograms[label].sum())

    def ccdf(self, label: str) -> pd.DataFrame:
        """CCDF P[IA > x] na grade de 10 ms, de 0 até a maior lacuna arredondada para cima."""
        hist = self.histograms[label]
        total = int(hist.sum())
        if total == 0:
            return pd.DataFrame(columns=IA_COLUMNS)
        largest = int(np.flatnonzero(hist)[-1])
        step = IA_CCDF_RESOLUTION_MS
        lattice = np.arange(0, -(-largest // step) * step + 1, step, dtype=np.int64)
        at_most = np.cumsum(hist)
        greater = total - at_most[np.minimum(lattice, hist.size - 1)]
        return pd.DataFrame({
            "bin_label": label,
            "ia_ms": lattice,
            "ccdf": greater / total,
        }, columns=IA_COLUMNS)

    def table(self) -> pd.DataFrame:
        frames = [self.ccdf(label) for label in IA_BINS_M]
        frames = [frame for frame in frames if not frame.empty]
        if not frames:
            return pd.DataFrame(columns=IA_COLUMNS)
        return pd.concat(frames, ignore_index=True)


class MetricsStore:
    """Acumuladores de uma execução (um único escritor: o laço de simulação)."""

    def __init__(self, n_vues: int):
        self.n_vues = n_vues
        self.prr = PrrAccumulator()
        self.ia = IaAccumulator(n_vues)
        self.cbr_samples: List[List[float]] = []
        self.control_samples: List[List[float]] = []

    def record_tx(self, event: TransmissionEvent, distance_m: np.ndarray) -> np.ndarray:
        """
        Conta uma tentativa para cada receptor a até 1000 m (inclusive os
        bloqueados por half-duplex). `distance_m` é a linha (N,) do transmissor.

        Returns:
            Tentativas por faixa (o que o log de eventos persiste)
        """
        others = np.arange(distance_m.size) != event.tx_vue
        counts = attempt_counts(distance_m[others])
        self.prr.record_attempts(counts)
        return counts

    def record_receptions(self, tx_vue: int, rx_vues: np.ndarray, distance_m: np.ndarray, now: int) -> None:
        self.prr.record_received(distance_m)
        self.ia.record(tx_vue, rx_vues, now, distance_m)

    def record_rx(self, outcome: ReceptionOutcome, distance_m: float, now: int) -> None:
        if not outcome.success:
            raise ValueError("record_rx recebe apenas recepções bem-sucedidas")
        self.record_receptions(outcome.tx_vue, np.array([outcome.rx_vue]), np.array([distance_m]), now)

    def record_cbr(self, time_ms: int, cbr: np.ndarray) -> None:
        if cbr.size:
            self.cbr_samples.append([time_ms, float(cbr.mean()), float(cbr.max())])

    def record_control(self, time_ms: int, itt_ms: np.ndarray, tx_power_dbm: np.ndarray, density: np.ndarray) -> None:
        if itt_ms.size:
            self.control_samples.append([
                time_ms, float(itt_ms.mean()), float(itt_ms.max()),
                float(tx_power_dbm.mean()), float(tx_power_dbm.min()), float(density.mean()),
            ])

    def cbr_table(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.cbr_samples, columns=CBR_COLUMNS)
        return frame.astype({"time_ms": np.int64})

    def control_table(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.control_samples, columns=CONTROL_COLUMNS)
        return frame.astype({"time_ms": np.int64})

    def summary(self) -> Dict[str, Any]:
        first = self.prr.attempted[0]
        return {
            "total_attempted": self.prr.total_attempted,
            "total_received": self.prr.total_received,
            "prr_first_bin": float(self.prr.received[0] / first) if first else None,
            "mean_cbr": float(np.mean([row[1] for row in self.cbr_samples])) if self.cbr_samples else None,
            "ia_samples": {label: self.ia.sample_count(label) for label in IA_BINS_M},
        }


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")


def finalize(store: MetricsStore, out_dir: Path, metadata: Dict[str, Any]) -> Dict[str, Path]:
    """
    Escreve prr.csv, ia_ccdf.csv, cbr.csv, control.csv e metadata.json.

    Args:
        store: Acumuladores da execução
        out_dir: Diretório de saída (criado se necessário)
        metadata: Semente, esquema, hash da configuração etc. (sem timestamps)

    Returns:
        Caminhos dos arquivos escritos
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "prr": out_dir / "prr.csv",
        "ia_ccdf": out_dir / "ia_ccdf.csv",
        "cbr": out_dir / "cbr.csv",
        "control": out_dir / "control.csv",
        "metadata": out_dir / "metadata.json",
    }
    _write_csv(store.prr.table(), paths["prr"])
    _write_csv(store.ia.table(), paths["ia_ccdf"])
    _write_csv(store.cbr_table(), paths["cbr"])
    _write_csv(store.control_table(), paths["control"])

    document = dict(metadata)
    document["summary"] = store.summary()
    paths["metadata"].write_text(json.dumps(document, sort_keys=True, indent=2, default=str) + "\n", encoding="utf-8")

    log_structured_data(metrics_logger, "info", "Métricas finalizadas",
                        {"out_dir": str(out_dir), **{k: v for k, v in document["summary"].items() if k != "ia_samples"}})
    return paths
