"""
Escalonamento semi-persistente baseado em sensoriamento (SB-SPS, Modo 4).

Cada VUE mantém um histórico de 1000 ms com o RSRP das SCIs decodificadas
(e o RRI anunciado) por subcanal, além dos subquadros em que ele mesmo
transmitiu. Na reseleção, as reservas decodificadas são projetadas sobre a
janela de seleção [t+T1, t+T2]; slots com RSRP acima do limiar, ou em fase
com subquadros não sensoriados, são excluídos. Se sobrarem menos de 20% dos
slots, o limiar sobe 3 dB e o procedimento se repete. Dos que sobram, ficam os
20% de menor RSSI médio nos subquadros em fase, e um deles é sorteado.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from app.core.errors import SchedulingError
from app.core.logging import log_structured_data, mac_logger
from app.schemas.events import ResourceId
from app.schemas.simulation import GridConfig, MacConfig


class SensingHistory:
    """
    Histórico de sensoriamento de um VUE (anel de `window_ms` linhas × subcanais).

    Pode ser independente (testes) ou uma visão sobre o armazenamento da frota
    (`SensingStore.history`); em ambos os casos as escritas vão para os mesmos arrays.
    Além das SCIs decodificadas guarda o RSSI linear (mW) medido em cada subcanal,
    que inclui a energia de transmissões que não puderam ser decodificadas.
    """

    def __init__(self, rsrp_dbm: np.ndarray, sci_rri_ms: np.ndarray,
                 unmeasurable: np.ndarray, row_subframe: np.ndarray, rssi_mw: Optional[np.ndarray] = None):
        self.rsrp_dbm = rsrp_dbm
        self.sci_rri_ms = sci_rri_ms
        self.unmeasurable = unmeasurable
        self.row_subframe = row_subframe
        self.rssi_mw = rssi_mw if rssi_mw is not None else np.zeros(rsrp_dbm.shape, dtype=np.float32)

    @classmethod
    def empty(cls, window_ms: int, n_subchannels: int) -> "SensingHistory":
        return cls(
            rsrp_dbm=np.full((window_ms, n_subchannels), -np.inf),
            sci_rri_ms=np.zeros((window_ms, n_subchannels), dtype=np.int32),
            unmeasurable=np.zeros(window_ms, dtype=bool),
            row_subframe=np.full(window_ms, -1, dtype=np.int64),
            rssi_mw=np.zeros((window_ms, n_subchannels), dtype=np.float32),
        )

    @property
    def window_ms(self) -> int:
        return self.row_subframe.shape[0]

    def _row(self, subframe: int) -> int:
        row = subframe % self.window_ms
        if self.row_subframe[row] != subframe:
            self.rsrp_dbm[row] = -np.inf
            self.sci_rri_ms[row] = 0
            self.unmeasurable[row] = False
            self.rssi_mw[row] = 0.0
            self.row_subframe[row] = subframe
        return row

    def record_sci(self, subframe: int, subchannel_start: int, width: int, rsrp_dbm: float, rri_ms: int) -> None:
        """Registra uma SCI decodificada (RSRP e RRI anunciado) nos subcanais ocupados."""
        row = self._row(subframe)
        cols = slice(subchannel_start, subchannel_start + width)
        stronger = rsrp_dbm > self.rsrp_dbm[row, cols]
        self.rsrp_dbm[row, cols] = np.where(stronger, rsrp_dbm, self.rsrp_dbm[row, cols])
        self.sci_rri_ms[row, cols] = np.where(stronger, rri_ms, self.sci_rri_ms[row, cols])

    def record_rssi(self, subframe: int, rssi_dbm: np.ndarray) -> None:
        """RSSI medido em cada subcanal do subquadro (dBm)."""
        row = self._row(subframe)
        self.rssi_mw[row] = np.power(10.0, np.asarray(rssi_dbm, dtype=np.float64) / 10.0)

    def mark_unmeasurable(self, subframe: int) -> None:
        """O dono transmitiu neste subquadro e não sensoriou nada."""
        row = self._row(subframe)
        self.unmeasurable[row] = True

    def valid_rows(self, now: int) -> np.ndarray:
        """Linhas dentro de [now − window, now); nada mais antigo influencia decisões."""
        return (self.row_subframe >= max(0, now - self.window_ms)) & (self.row_subframe < now)


class SensingStore:
    """Históricos de toda a frota em arrays (N, janela, subcanais)."""

    def __init__(self, n_vues: int, window_ms: int, n_subchannels: int, noise_floor_mw: float = 0.0):
        self.window_ms = window_ms
        self.noise_floor_mw = noise_floor_mw
        self.rsrp_dbm = np.full((n_vues, window_ms, n_subchannels), -np.inf, dtype=np.float32)
        self.sci_rri_ms = np.zeros((n_vues, window_ms, n_subchannels), dtype=np.int32)
        self.rssi_mw = np.full((n_vues, window_ms, n_subchannels), noise_floor_mw, dtype=np.float32)
        self.unmeasurable = np.zeros((n_vues, window_ms), dtype=bool)
        self.row_subframe = np.full(window_ms, -1, dtype=np.int64)

    def history(self, vue: int) -> SensingHistory:
        return SensingHistory(self.rsrp_dbm[vue], self.sci_rri_ms[vue], self.unmeasurable[vue],
                              self.row_subframe, self.rssi_mw[vue])

    def begin_write(self, subframe: int) -> int:
        """Recicla a linha do anel para `subframe` (descarta o que tinha 1000 ms); RSSI volta ao piso de ruído."""
        row = subframe % self.window_ms
        self.rsrp_dbm[:, row] = -np.inf
        self.sci_rri_ms[:, row] = 0
        self.rssi_mw[:, row] = self.noise_floor_mw
        self.unmeasurable[:, row] = False
        self.row_subframe[row] = subframe
        return row

    def write_decoded(self, row: int, receivers: np.ndarray, subchannel_start: int, width: int,
                      rsrp_dbm: np.ndarray, rri_ms: int) -> None:
        """SCIs decodificadas por `receivers` (RSRP por receptor) de um mesmo pacote."""
        if receivers.size == 0:
            return
        cols = slice(subchannel_start, subchannel_start + width)
        current = self.rsrp_dbm[receivers, row, cols]
        incoming = rsrp_dbm.astype(np.float32)[:, None]
        stronger = incoming > current
        self.rsrp_dbm[receivers, row, cols] = np.where(stronger, incoming, current)
        self.sci_rri_ms[receivers, row, cols] = np.where(stronger, rri_ms, self.sci_rri_ms[receivers, row, cols])

    def write_rssi(self, row: int, subchannel_mw: np.ndarray) -> None:
        """RSSI linear (subcanais × N) do subquadro para toda a frota."""
        self.rssi_mw[:, row] = subchannel_mw.T

    def write_unmeasurable(self, row: int, transmitters: np.ndarray) -> None:
        self.unmeasurable[transmitters, row] = True


@dataclass
class CandidateSet:
    """
    Slots da janela de seleção. `mask[i, s]` indica se o slot que começa no
    subcanal `s` do subquadro `window_start + i` é candidato.
    """
    window_start: int
    window_end: int
    width: int
    mask: np.ndarray
    reserved: np.ndarray
    unmeasurable: np.ndarray
    threshold_dbm: float
    threshold_steps: int = 0

    @property
    def total(self) -> int:
        return int(self.mask.size)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def ratio(self) -> float:
        return self.count / self.total if self.total else 0.0

    @property
    def candidates(self) -> List[ResourceId]:
        rows, starts = np.nonzero(self.mask)
        return [ResourceId(self.window_start + int(r), int(s)) for r, s in zip(rows, starts)]

    @property
    def excluded(self) -> List[Tuple[ResourceId, str]]:
        result = []
        rows, starts = np.nonzero(~self.mask)
        for r, s in zip(rows, starts):
            if self.reserved[r, s]:
                reason = "reserved"
            elif self.unmeasurable[r, s]:
                reason = "unmeasurable"
            else:
                reason = "rssi_rank"
            result.append((ResourceId(self.window_start + int(r), int(s)), reason))
        return result


class Decision(str, Enum):
    KEEP = "keep"
    RESELECT = "reselect"


@dataclass
class SchedulerState:
    """Estado SPS de um VUE: modelo periódico, contador e RRI."""
    rri_ms: int = 100
    reselection_counter: int = 0
    keep_probability: float = 0.8
    rsrp_exclusion_threshold_dbm: float = -128.0
    template: Optional[ResourceId] = None
    needs_reselection: bool = True
    reselections: int = field(default=0, repr=False)

    def next_occurrence(self, earliest: int) -> Optional[ResourceId]:
        """Primeira ocorrência do modelo periódico em subquadro >= earliest."""
        if self.template is None:
            return None
        base = self.template.subframe_index
        if earliest <= base:
            return self.template
        periods = -(-(earliest - base) // self.rri_ms)
        return ResourceId(base + periods * self.rri_ms, self.template.subchannel_index)


def _projected_rsrp(history: SensingHistory, now: int, mac: MacConfig, n_rows: int) -> np.ndarray:
    """RSRP máximo projetado (linhas da janela × subcanais) a partir das SCIs decodificadas."""
    projected = np.full((n_rows, history.rsrp_dbm.shape[1]), -np.inf)
    valid = history.valid_rows(now)
    rri = np.where(valid[:, None], history.sci_rri_ms, 0)
    rows, cols = np.nonzero(rri > 0)
    if rows.size == 0:
        return projected
    sensed = history.row_subframe[rows]
    periods = rri[rows, cols].astype(np.int64)
    rsrp = history.rsrp_dbm[rows, cols].astype(np.float64)
    first = now + mac.selection_t1_ms
    last = now + mac.selection_t2_ms
    # primeira projeção s + k·rri com k >= 1 dentro ou depois do início da janela
    k = np.maximum(1, -(-(first - sensed) // periods))
    target = sensed + k * periods
    while True:
        inside = target <= last
        if not inside.any():
            break
        np.maximum.at(projected, (target[inside] - first, cols[inside]), rsrp[inside])
        target = target + periods
    return projected


def _unmeasurable_rows(history: SensingHistory, now: int, mac: MacConfig, n_rows: int) -> np.ndarray:
    """Subquadros da janela em fase (passo de 100 ms) com subquadros não sensoriados."""
    blocked = np.zeros(n_rows, dtype=bool)
    own = history.row_subframe[history.unmeasurable & history.valid_rows(now)]
    if own.size == 0:
        return blocked
    first = now + mac.selection_t1_ms
    last = now + mac.selection_t2_ms
    step = mac.unmeasurable_step_ms
    k = np.maximum(1, -(-(first - own) // step))
    target = own + k * step
    while True:
        inside = target <= last
        if not inside.any():
            break
        blocked[target[inside] - first] = True
        target = target + step
    return blocked


def _slot_max(projected: np.ndarray, width: int) -> np.ndarray:
    n_slots = projected.shape[1] - width + 1
    slot = projected[:, :n_slots].copy()
    for offset in range(1, width):
        slot = np.maximum(slot, projected[:, offset:offset + n_slots])
    return slot


def build_candidates(history: SensingHistory, now: int, needed_subchannels: int, grid: GridConfig,
                     state: SchedulerState, mac: MacConfig) -> CandidateSet:
    """
    Monta o conjunto de candidatos da janela de seleção [now+T1, now+T2].

    Args:
        history: Histórico de sensoriamento do VUE
        now: Subquadro atual (ms)
        needed_subchannels: Largura do pacote em subcanais
        grid: Configuração da grade
        state: Estado SPS (fornece o limiar inicial de RSRP)
        mac: Parâmetros do SB-SPS

    Returns:
        CandidateSet que satisfaz a regra dos 20%
    """
    n_rows = mac.selection_t2_ms - mac.selection_t1_ms + 1
    n_slots = grid.subchannels_per_subframe - needed_subchannels + 1
    if n_slots < 1:
        raise SchedulingError(f"pacote de {needed_subchannels} subcanais não cabe na grade")
    window_start = now + mac.selection_t1_ms
    window_end = now + mac.selection_t2_ms + 1
    threshold = state.rsrp_exclusion_threshold_dbm

    if now < mac.sensing_window_ms:
        # Sem 1000 ms de histórico: seleção uniforme sobre todos os slots
        everything = np.ones((n_rows, n_slots), dtype=bool)
        nothing = np.zeros((n_rows, n_slots), dtype=bool)
        return CandidateSet(window_start, window_end, needed_subchannels, everything, nothing, nothing.copy(), threshold)

    slot_rsrp = _slot_max(_projected_rsrp(history, now, mac, n_rows), needed_subchannels)
    blocked = np.broadcast_to(_unmeasurable_rows(history, now, mac, n_rows)[:, None], (n_rows, n_slots))
    highest = slot_rsrp.max()
    required = mac.min_candidate_ratio * n_rows * n_slots
    steps = 0
    while True:
        reserved = slot_rsrp > threshold
        mask = ~reserved & ~blocked
        if mask.sum() >= required - 1e-9:
            break
        if threshold >= highest:
            # Nenhuma reserva restante: abre mão da exclusão por não sensoriamento
            mask = ~reserved
            blocked = np.zeros_like(mask)
            break
        threshold += mac.rsrp_step_db
        steps += 1

    candidate_set = CandidateSet(
        window_start=window_start,
        window_end=window_end,
        width=needed_subchannels,
        mask=mask,
        reserved=reserved,
        unmeasurable=blocked & ~reserved,
        threshold_dbm=threshold,
        threshold_steps=steps,
    )
    if steps:
        log_structured_data(mac_logger, "debug", "Limiar de RSRP elevado na seleção de recursos",
                            {"now": now, "steps": steps, "threshold_dbm": threshold,
                             "candidate_ratio": round(candidate_set.ratio, 4)})
    return candidate_set


def select_resource(candidates: CandidateSet, rng: np.random.Generator) -> ResourceId:
    """Sorteio uniforme entre os candidatos (subquadro, subcanal inicial)."""
    flat = np.flatnonzero(candidates.mask)
    if flat.size == 0:
        raise SchedulingError("conjunto de candidatos vazio")
    choice = int(flat[rng.integers(flat.size)])
    row, start = divmod(choice, candidates.mask.shape[1])
    return ResourceId(candidates.window_start + row, start)


def _average_rssi(history: SensingHistory, now: int, mac: MacConfig, n_rows: int) -> np.ndarray:
    """
    RSSI linear médio (linhas da janela × subcanais) nos subquadros y − j·passo
    do histórico. Linhas sem nenhuma medição válida ficam em +inf.
    """
    step = mac.unmeasurable_step_ms
    window_subframes = now + mac.selection_t1_ms + np.arange(n_rows)
    periods = np.arange(1, history.window_ms // step + 1)
    sensed = window_subframes[:, None] - periods[None, :] * step
    rows = sensed % history.window_ms
    valid = (
        (history.row_subframe[rows] == sensed)
        & (sensed >= max(0, now - history.window_ms))
        & (sensed < now)
        & ~history.unmeasurable[rows]
    )
    values = np.where(valid[..., None], history.rssi_mw[rows].astype(np.float64), 0.0)
    count = valid.sum(axis=1)
    average = np.full((n_rows, history.rssi_mw.shape[1]), np.inf)
    measured = count > 0
    average[measured] = values[measured].sum(axis=1) / count[measured, None]
    return average


def _slot_mean(per_subchannel: np.ndarray, width: int) -> np.ndarray:
    n_slots = per_subchannel.shape[1] - width + 1
    total = per_subchannel[:, :n_slots].copy()
    for offset in range(1, width):
        total = total + per_subchannel[:, offset:offset + n_slots]
    return total / width


def rank_by_rssi(candidates: CandidateSet, history: SensingHistory, now: int, mac: MacConfig,
                 rng: np.random.Generator) -> CandidateSet:
    """
    Ordena os candidatos pelo RSSI médio e mantém os mais silenciosos, exatamente
    20% do total de slots da janela. Empates são desfeitos por sorteio.

    O RSSI enxerga transmissões cuja SCI não foi decodificada (colisões próximas),
    que a exclusão por RSRP não vê. Conjuntos já no limite dos 20% voltam intactos.
    """
    keep = int(np.ceil(mac.min_candidate_ratio * candidates.total - 1e-9))
    if candidates.count <= keep:
        return candidates
    slot_rssi = _slot_mean(_average_rssi(history, now, mac, candidates.mask.shape[0]), candidates.width)
    flat = np.flatnonzero(candidates.mask)
    order = np.lexsort((rng.random(flat.size), slot_rssi.ravel()[flat]))
    mask = np.zeros(candidates.mask.size, dtype=bool)
    mask[flat[order[:keep]]] = True
    return replace(candidates, mask=mask.reshape(candidates.mask.shape))


def choose_resource(history: SensingHistory, now: int, grid: GridConfig, state: SchedulerState,
                    mac: MacConfig, rng: np.random.Generator) -> ResourceId:
    """Procedimento completo de escolha: exclusão, ordenação por RSSI (se ativa) e sorteio."""
    needed = grid.subchannels_needed or 1
    candidates = build_candidates(history, now, needed, grid, state, mac)
    if mac.rssi_ranking and now >= mac.sensing_window_ms:
        candidates = rank_by_rssi(candidates, history, now, mac, rng)
    return select_resource(candidates, rng)


def reselection_counter_bounds(rri_ms: int, mac: MacConfig) -> Tuple[int, int]:
    """Faixa do contador [5, 15] escalada por 100/RRI."""
    scale = 100.0 / rri_ms
    low = max(1, int(round(mac.reselection_counter_min * scale)))
    high = max(low, int(round(mac.reselection_counter_max * scale)))
    return low, high


def draw_reselection_counter(rri_ms: int, mac: MacConfig, rng: np.random.Generator) -> int:
    low, high = reselection_counter_bounds(rri_ms, mac)
    return int(rng.integers(low, high + 1))


def on_transmit_opportunity(state: SchedulerState, rng: np.random.Generator, mac: MacConfig) -> Decision:
    """
    Decrementa o contador após uma transmissão periódica. Ao chegar em zero,
    mantém o recurso com probabilidade keep_probability (novo contador) ou
    pede reseleção.
    """
    if state.reselection_counter > 0:
        state.reselection_counter -= 1
    if state.reselection_counter > 0:
        return Decision.KEEP
    if rng.random() < state.keep_probability:
        state.reselection_counter = draw_reselection_counter(state.rri_ms, mac, rng)
        return Decision.KEEP
    state.needs_reselection = True
    return Decision.RESELECT


def reselect(state: SchedulerState, history: SensingHistory, now: int, grid: GridConfig,
             mac: MacConfig, rng: np.random.Generator) -> ResourceId:
    """Reseleção completa: escolha do recurso, novo modelo periódico e novo contador."""
    chosen = choose_resource(history, now, grid, state, mac, rng)
    state.template = chosen
    state.reselection_counter = draw_reselection_counter(state.rri_ms, mac, rng)
    state.needs_reselection = False
    state.reselections += 1
    return chosen
