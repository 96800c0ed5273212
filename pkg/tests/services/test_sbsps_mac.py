import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.errors import SchedulingError
from app.schemas.events import ResourceId
from app.schemas.simulation import GridConfig, MacConfig
from app.services.sbsps_mac import (
    CandidateSet,
    Decision,
    SchedulerState,
    SensingHistory,
    SensingStore,
    build_candidates,
    choose_resource,
    on_transmit_opportunity,
    rank_by_rssi,
    reselect,
    reselection_counter_bounds,
    select_resource,
)

# Grade mínima para o oráculo: janela de sensoriamento de 20 ms, seleção em [t+1, t+10]
TINY_MAC = MacConfig(sensing_window_ms=20, selection_t1_ms=1, selection_t2_ms=10, unmeasurable_step_ms=10)
TINY_NOW = 30
GRID = GridConfig(bandwidth_mhz=10)


def _oracle(scis, own, now, width, mac, n_sc, threshold):
    """Exclusão por enumeração direta de cada slot e de cada passo do limiar."""
    first, last = now + mac.selection_t1_ms, now + mac.selection_t2_ms
    projected = {}
    for subframe, start, w, rsrp, rri in scis:
        if not (now - mac.sensing_window_ms <= subframe < now):
            continue
        t = subframe + rri
        while t <= last:
            if t >= first:
                for c in range(start, start + w):
                    projected[(t, c)] = max(projected.get((t, c), -math.inf), rsrp)
            t += rri
    blocked = set()
    for subframe in own:
        if not (now - mac.sensing_window_ms <= subframe < now):
            continue
        t = subframe + mac.unmeasurable_step_ms
        while t <= last:
            if t >= first:
                blocked.add(t)
            t += mac.unmeasurable_step_ms

    slots = [(t, s) for t in range(first, last + 1) for s in range(n_sc - width + 1)]
    slot_rsrp = {(t, s): max(projected.get((t, c), -math.inf) for c in range(s, s + width)) for t, s in slots}
    highest = max(slot_rsrp.values())
    required = mac.min_candidate_ratio * len(slots)
    while True:
        candidates = {slot for slot in slots if slot_rsrp[slot] <= threshold and slot[0] not in blocked}
        if len(candidates) >= required - 1e-9:
            return candidates, threshold
        if threshold >= highest:
            return {slot for slot in slots if slot_rsrp[slot] <= threshold}, threshold
        threshold += mac.rsrp_step_db


sci_strategy = st.tuples(
    st.integers(0, 4),            # subcanal inicial
    st.integers(1, 2),            # largura
    st.integers(-140, -95),       # RSRP (dBm)
    st.sampled_from([5, 10, 20]), # RRI anunciado
)


class TestCandidateExclusion:
    """Testes para a montagem do conjunto de candidatos do SB-SPS."""

    def setup_method(self):
        self.state = SchedulerState()

    @settings(max_examples=300, deadline=None)
    @given(
        st.dictionaries(st.integers(TINY_NOW - 20, TINY_NOW - 1), sci_strategy, max_size=20),
        st.sets(st.integers(TINY_NOW - 20, TINY_NOW - 1), max_size=4),
        st.integers(1, 3),
    )
    def test_matches_brute_force_oracle(self, sci_by_subframe, own, width):
        """Conjunto de candidatos e limiar final coincidem com o oráculo de força bruta."""
        history = SensingHistory.empty(TINY_MAC.sensing_window_ms, GRID.subchannels_per_subframe)
        scis = []
        for subframe, (start, w, rsrp, rri) in sorted(sci_by_subframe.items()):
            w = min(w, GRID.subchannels_per_subframe - start)
            history.record_sci(subframe, start, w, float(rsrp), rri)
            scis.append((subframe, start, w, float(rsrp), rri))
        for subframe in sorted(own):
            history.mark_unmeasurable(subframe)

        result = build_candidates(history, TINY_NOW, width, GRID, SchedulerState(), TINY_MAC)
        expected, threshold = _oracle(scis, own, TINY_NOW, width, TINY_MAC,
                                      GRID.subchannels_per_subframe, self.state.rsrp_exclusion_threshold_dbm)

        got = {(r.subframe_index, r.subchannel_index) for r in result.candidates}
        assert got == expected, "Candidatos devem coincidir com o oráculo"
        assert result.threshold_dbm == pytest.approx(threshold)
        assert result.ratio >= TINY_MAC.min_candidate_ratio - 1e-9, "Regra dos 20% deve valer ao final"

    def test_tiny_grid_threshold_raise(self):
        """9 de 10 slots ocupados: limiar sobe 3 dB, 4 ocupantes saem e restam 5 candidatos."""
        history = SensingHistory.empty(TINY_MAC.sensing_window_ms, GRID.subchannels_per_subframe)
        for i, subframe in enumerate(range(21, 30)):
            rsrp = -120.0 if i < 5 else -127.0
            history.record_sci(subframe, 0, 5, rsrp, 10)
        result = build_candidates(history, TINY_NOW, 5, GRID, SchedulerState(), TINY_MAC)
        assert result.total == 10, "Janela de 10 subquadros com 1 slot cada"
        assert result.threshold_steps == 1, "Limiar deve subir exatamente uma vez"
        assert result.threshold_dbm == pytest.approx(-125.0)
        assert result.count == 5, "Restam 5 candidatos após elevar o limiar"

    def test_empty_history_all_candidates(self):
        """Sem SCIs decodificadas, todos os slots são candidatos."""
        mac = MacConfig()
        grid = GridConfig(bandwidth_mhz=10, subchannels_needed=2)
        history = SensingHistory.empty(mac.sensing_window_ms, grid.subchannels_per_subframe)
        result = build_candidates(history, 1500, 2, grid, SchedulerState(), mac)
        assert result.count == result.total == 97 * 4

    def test_own_transmission_phase_unmeasurable(self):
        """Subquadro em fase com uma transmissão própria é excluído como não mensurável."""
        mac = MacConfig()
        history = SensingHistory.empty(mac.sensing_window_ms, GRID.subchannels_per_subframe)
        history.mark_unmeasurable(1450)
        result = build_candidates(history, 1500, 2, GRID, SchedulerState(), mac)
        excluded = dict(result.excluded)
        for start in range(4):
            assert excluded.get(ResourceId(1550, start)) == "unmeasurable"
        assert result.count == result.total - 4

    def test_startup_uniform_over_all_slots(self):
        """Antes de 1000 ms de histórico, a seleção é uniforme sobre todos os slots."""
        mac = MacConfig()
        history = SensingHistory.empty(mac.sensing_window_ms, GRID.subchannels_per_subframe)
        history.record_sci(10, 0, 2, -90.0, 100)
        result = build_candidates(history, 20, 2, GRID, SchedulerState(), mac)
        assert result.count == result.total

    def test_stale_rows_ignored(self):
        """SCIs com mais de 1000 ms não influenciam a decisão."""
        mac = MacConfig()
        history = SensingHistory.empty(mac.sensing_window_ms, GRID.subchannels_per_subframe)
        history.record_sci(400, 0, 5, -90.0, 100)
        result = build_candidates(history, 1500, 2, GRID, SchedulerState(), mac)
        assert result.count == result.total


class TestSelectResource:
    """Testes para o sorteio entre candidatos."""

    def _candidate_set(self, mask):
        mask = np.asarray(mask, dtype=bool)
        zeros = np.zeros_like(mask)
        return CandidateSet(100, 100 + mask.shape[0], 2, mask, ~mask, zeros, -128.0)

    def test_singleton(self):
        mask = np.zeros((5, 4), dtype=bool)
        mask[3, 2] = True
        chosen = select_resource(self._candidate_set(mask), np.random.default_rng(1))
        assert chosen == ResourceId(103, 2)

    def test_empty_raises(self):
        with pytest.raises(SchedulingError):
            select_resource(self._candidate_set(np.zeros((2, 2))), np.random.default_rng(1))

    def test_reproducible(self):
        """Mesma semente, mesma escolha em 500 candidatos."""
        candidates = self._candidate_set(np.ones((125, 4)))
        first = select_resource(candidates, np.random.default_rng(99))
        second = select_resource(candidates, np.random.default_rng(99))
        assert first == second

    def test_uniformity(self):
        """10.000 sorteios em 5 candidatos: cada um escolhido 2000 ± 150 vezes."""
        candidates = self._candidate_set(np.ones((5, 1)))
        rng = np.random.default_rng(2024)
        counts = Counter(select_resource(candidates, rng) for _ in range(10_000))
        assert len(counts) == 5
        for resource, count in counts.items():
            assert abs(count - 2000) <= 150, f"{resource} escolhido {count} vezes"


class TestReselectionCounter:
    """Testes para o contador de reseleção e a decisão de manter o recurso."""

    def setup_method(self):
        self.mac = MacConfig()

    def test_counter_decrement_keeps(self):
        state = SchedulerState(reselection_counter=3)
        decision = on_transmit_opportunity(state, np.random.default_rng(0), self.mac)
        assert decision == Decision.KEEP
        assert state.reselection_counter == 2

    def test_zero_keep_probability_reselects(self):
        state = SchedulerState(reselection_counter=1, keep_probability=0.0, needs_reselection=False)
        decision = on_transmit_opportunity(state, np.random.default_rng(0), self.mac)
        assert decision == Decision.RESELECT
        assert state.needs_reselection

    def test_keep_probability_fraction(self):
        """Com keep_probability 0,8, a fração de reseleções é 0,2 ± 0,015."""
        rng = np.random.default_rng(11)
        reselections = 0
        for _ in range(10_000):
            state = SchedulerState(reselection_counter=1, keep_probability=0.8)
            if on_transmit_opportunity(state, rng, self.mac) == Decision.RESELECT:
                reselections += 1
        assert abs(reselections / 10_000 - 0.2) <= 0.015

    def test_kept_resource_gets_new_counter(self):
        state = SchedulerState(reselection_counter=1, keep_probability=1.0)
        assert on_transmit_opportunity(state, np.random.default_rng(0), self.mac) == Decision.KEEP
        assert 5 <= state.reselection_counter <= 15

    def test_counter_bounds_scale_with_rri(self):
        """A faixa [5, 15] é escalada por 100/RRI."""
        assert reselection_counter_bounds(100, self.mac) == (5, 15)
        assert reselection_counter_bounds(50, self.mac) == (10, 30)


class TestReselectAndTemplate:
    """Testes para a reseleção completa e o modelo periódico."""

    def test_reselect_sets_template_inside_window(self):
        mac = MacConfig()
        grid = GridConfig(bandwidth_mhz=10, subchannels_needed=2)
        history = SensingHistory.empty(mac.sensing_window_ms, grid.subchannels_per_subframe)
        state = SchedulerState()
        chosen = reselect(state, history, 2000, grid, mac, np.random.default_rng(5))
        assert 2004 <= chosen.subframe_index <= 2100
        assert 0 <= chosen.subchannel_index <= 3
        assert state.template == chosen
        assert not state.needs_reselection
        assert 5 <= state.reselection_counter <= 15

    def test_next_occurrence(self):
        state = SchedulerState(template=ResourceId(105, 2), rri_ms=100)
        assert state.next_occurrence(100) == ResourceId(105, 2)
        assert state.next_occurrence(106) == ResourceId(205, 2)
        assert state.next_occurrence(205) == ResourceId(205, 2)
        assert SchedulerState().next_occurrence(0) is None


class TestSensingStore:
    """Testes para o armazenamento de sensoriamento da frota."""

    def test_decoded_sci_written_per_receiver(self):
        store = SensingStore(3, 20, 5)
        row = store.begin_write(25)
        store.write_decoded(row, np.array([0, 2]), 1, 2, np.array([-100.0, -110.0]), 100)
        store.write_unmeasurable(row, np.array([1]))
        assert np.all(store.history(0).rsrp_dbm[row, 1:3] == -100.0)
        assert np.all(store.history(2).rsrp_dbm[row, 1:3] == -110.0)
        assert np.all(np.isneginf(store.history(1).rsrp_dbm[row]))
        assert store.history(1).unmeasurable[row]
        assert store.history(0).valid_rows(26)[row]

    def test_ring_row_recycled(self):
        store = SensingStore(1, 20, 5)
        row = store.begin_write(5)
        store.write_decoded(row, np.array([0]), 0, 2, np.array([-100.0]), 100)
        assert store.begin_write(25) == row
        assert np.all(np.isneginf(store.history(0).rsrp_dbm[row]))

    def test_rssi_written_and_recycled(self):
        """RSSI da frota por linha; a linha reciclada volta ao piso de ruído."""
        store = SensingStore(2, 20, 5, noise_floor_mw=1e-10)
        row = store.begin_write(3)
        store.write_rssi(row, np.full((5, 2), 2e-9))
        np.testing.assert_allclose(store.history(1).rssi_mw[row], 2e-9, rtol=1e-6)
        store.begin_write(23)
        np.testing.assert_allclose(store.history(1).rssi_mw[row], 1e-10, rtol=1e-6)


class TestRssiRanking:
    """Testes para a ordenação dos candidatos pelo RSSI médio."""

    def setup_method(self):
        self.mac = MacConfig()
        self.grid = GridConfig(bandwidth_mhz=10, subchannels_needed=2)
        self.history = SensingHistory.empty(self.mac.sensing_window_ms, self.grid.subchannels_per_subframe)
        self.now = 2000

    def _fill(self, loud_subchannels):
        for subframe in range(self.now - 1000, self.now):
            rssi = np.full(self.grid.subchannels_per_subframe, -105.0)
            rssi[loud_subchannels] = -75.0
            self.history.record_rssi(subframe, rssi)

    def _candidates(self):
        return build_candidates(self.history, self.now, 2, self.grid, SchedulerState(), self.mac)

    def test_keeps_exactly_twenty_percent(self):
        self._fill([])
        ranked = rank_by_rssi(self._candidates(), self.history, self.now, self.mac, np.random.default_rng(3))
        assert ranked.count == math.ceil(0.2 * ranked.total)
        assert ranked.ratio >= 0.2

    def test_quietest_slots_kept(self):
        """Subcanais 0 e 1 ocupados: só sobram slots que começam no subcanal 2 ou 3."""
        self._fill([0, 1])
        ranked = rank_by_rssi(self._candidates(), self.history, self.now, self.mac, np.random.default_rng(3))
        starts = {r.subchannel_index for r in ranked.candidates}
        assert starts <= {2, 3}
        reasons = {reason for _, reason in ranked.excluded}
        assert reasons == {"rssi_rank"}

    def test_undecoded_energy_avoided(self):
        """Energia sem SCI decodificada (colisão) também afasta a escolha."""
        for subframe in range(self.now - 1000, self.now):
            rssi = np.full(self.grid.subchannels_per_subframe, -105.0)
            if subframe % 100 < 50:
                rssi[:] = -70.0
            self.history.record_rssi(subframe, rssi)
        state = SchedulerState()
        rng = np.random.default_rng(12)
        for _ in range(30):
            chosen = reselect(state, self.history, self.now, self.grid, self.mac, rng)
            assert chosen.subframe_index % 100 >= 50

    def test_set_at_minimum_untouched(self):
        """Conjunto já no limite dos 20% volta sem cortes."""
        mask = np.zeros(97 * 4, dtype=bool)
        mask[:78] = True
        mask = mask.reshape(97, 4)
        candidates = CandidateSet(self.now + 4, self.now + 101, 2, mask, ~mask, np.zeros_like(mask), -128.0)
        ranked = rank_by_rssi(candidates, self.history, self.now, self.mac, np.random.default_rng(1))
        assert ranked is candidates

    def test_ranking_disabled(self):
        """Com rssi_ranking desligado a escolha volta a ser uniforme sobre todos os candidatos."""
        self._fill([0, 1])
        mac = MacConfig(rssi_ranking=False)
        rng = np.random.default_rng(4)
        starts = {choose_resource(self.history, self.now, self.grid, SchedulerState(), mac, rng).subchannel_index
                  for _ in range(200)}
        assert 0 in starts
