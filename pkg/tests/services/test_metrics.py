import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from app.schemas.events import FailureCause, ReceptionOutcome, TransmissionEvent
from app.services.metrics import (
    IaAccumulator,
    MetricsStore,
    PrrAccumulator,
    attempt_counts,
    finalize,
    ia_bin_label,
    prr_bin_index,
)


def _tx(vue=0, subframe=0):
    return TransmissionEvent(tx_vue=vue, subframe=subframe, subchannel_start=0, subchannel_count=2,
                             tx_power_dbm=23.0, packet_id=subframe)


class TestPrr:
    """Testes para o PRR por faixa de distância."""

    def test_bin_index(self):
        np.testing.assert_array_equal(prr_bin_index(np.array([0.0, 99.9, 100.0, 999.0, 1000.0, 1000.1])),
                                      [0, 0, 1, 9, 9, -1])

    def test_record_tx_bins(self):
        """Receptores a 50/250/1200 m: tentativas em [0,100) e [200,300); 1200 m fica de fora."""
        store = MetricsStore(4)
        counts = store.record_tx(_tx(0), np.array([0.0, 50.0, 250.0, 1200.0]))
        assert counts.tolist() == [1, 0, 1, 0, 0, 0, 0, 0, 0, 0]
        assert store.prr.total_attempted == 2

    def test_no_receivers_in_range(self):
        store = MetricsStore(2)
        store.record_tx(_tx(0), np.array([0.0, 1500.0]))
        assert store.prr.total_attempted == 0
        assert store.prr.attempted.sum() == 0

    def test_thousand_attempts(self):
        """10 Hz com receptor fixo a 150 m por 100 s: exatamente 1000 tentativas em [100,200)."""
        store = MetricsStore(2)
        for k in range(1000):
            store.record_tx(_tx(0, subframe=100 * k), np.array([0.0, 150.0]))
        assert store.prr.attempted[1] == 1000
        assert store.prr.total_attempted == 1000

    def test_ratio(self):
        """9 recebidos de 10 tentados: PRR 0,9."""
        prr = PrrAccumulator()
        prr.record_attempts(attempt_counts(np.full(10, 50.0)))
        prr.record_received(np.full(9, 50.0))
        table = prr.table()
        assert table.loc[0, "prr"] == pytest.approx(0.9)
        assert pd.isna(table.loc[1, "prr"]), "Faixa sem tentativas fica vazia"
        assert table["attempted"].sum() == prr.total_attempted
        assert table["received"].sum() == prr.total_received

    def test_empty_table_header_only(self):
        assert PrrAccumulator().table().empty


class TestInformationAge:
    """Testes para o Information Age por faixa de distância."""

    def test_single_gap(self):
        """Recepções em 100 e 200 ms a 150 m: uma amostra de 100 ms em 0-200 m."""
        ia = IaAccumulator(2)
        ia.record(0, np.array([1]), 100, np.array([150.0]))
        ia.record(0, np.array([1]), 200, np.array([150.0]))
        assert ia.sample_count("0-200") == 1
        assert ia.histograms["0-200"][100] == 1

    def test_gaps_sequence(self):
        """Recepções em 100, 200 e 400 ms: amostras {100, 300}."""
        ia = IaAccumulator(2)
        for t in (100, 200, 400):
            ia.record(0, np.array([1]), t, np.array([150.0]))
        hist = ia.histograms["0-200"]
        assert np.flatnonzero(hist).tolist() == [100, 300]

    def test_routed_by_distance(self):
        ia = IaAccumulator(2)
        ia.record(0, np.array([1]), 100, np.array([250.0]))
        ia.record(0, np.array([1]), 200, np.array([250.0]))
        assert ia.sample_count("200-300") == 1
        assert ia.sample_count("0-200") == 0
        assert ia_bin_label(250.0) == "200-300"
        assert ia_bin_label(400.0) is None

    def test_ccdf_strict_inequality(self):
        """Amostras {100, 100, 300}: ccdf(100) = 1/3, ccdf(300) = 0."""
        ia = IaAccumulator(3)
        ia.record(0, np.array([1, 2]), 0, np.array([50.0, 50.0]))
        ia.record(0, np.array([1, 2]), 100, np.array([50.0, 50.0]))
        ia.record(0, np.array([1]), 400, np.array([50.0]))
        ccdf = ia.ccdf("0-200").set_index("ia_ms")["ccdf"]
        assert ccdf[0] == pytest.approx(1.0)
        assert ccdf[100] == pytest.approx(1 / 3)
        assert ccdf[300] == pytest.approx(0.0)
        assert ccdf.index.max() == 300

    def test_empty_bin_header_only(self):
        assert IaAccumulator(2).ccdf("200-300").empty

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 2000), min_size=1, max_size=60))
    def test_ccdf_non_increasing(self, gaps):
        """A CCDF é não crescente, começa em 1 e termina em 0."""
        ia = IaAccumulator(2)
        now = 0
        ia.record(0, np.array([1]), now, np.array([80.0]))
        for gap in gaps:
            now += gap
            ia.record(0, np.array([1]), now, np.array([80.0]))
        values = ia.ccdf("0-200")["ccdf"].to_numpy()
        assert values[0] == pytest.approx(1.0)
        assert values[-1] == pytest.approx(0.0)
        assert np.all(np.diff(values) <= 1e-12)


class TestFinalize:
    """Testes para a emissão dos arquivos de métricas."""

    def test_writes_all_files(self, tmp_path):
        store = MetricsStore(2)
        store.record_tx(_tx(0), np.array([0.0, 50.0]))
        store.record_rx(ReceptionOutcome(1, 0, 1, True, 20.0), 50.0, 100)
        store.record_cbr(100, np.array([0.1, 0.3]))
        store.record_control(100, np.array([100.0, 100.0]), np.array([23.0, 23.0]), np.array([13.2, 13.2]))
        paths = finalize(store, tmp_path, {"seed": 1, "scheme": "no_cc"})

        assert set(paths) == {"prr", "ia_ccdf", "cbr", "control", "metadata"}
        prr = pd.read_csv(paths["prr"])
        assert prr.loc[0, "prr"] == pytest.approx(1.0)
        cbr = pd.read_csv(paths["cbr"])
        assert cbr.loc[0, "mean_cbr"] == pytest.approx(0.2)
        assert cbr.loc[0, "max_cbr"] == pytest.approx(0.3)
        metadata = json.loads(paths["metadata"].read_text())
        assert metadata["summary"]["prr_first_bin"] == pytest.approx(1.0)
        assert metadata["seed"] == 1

    def test_record_rx_rejects_failures(self):
        store = MetricsStore(2)
        with pytest.raises(ValueError):
            store.record_rx(ReceptionOutcome(1, 0, 1, False, -3.0, FailureCause.SINR_FAIL), 50.0, 100)

    def test_empty_files_have_headers(self, tmp_path):
        paths = finalize(MetricsStore(2), tmp_path, {})
        assert paths["prr"].read_text() == "bin_low_m,bin_high_m,attempted,received,prr\n"
        assert paths["ia_ccdf"].read_text() == "bin_label,ia_ms,ccdf\n"
        assert paths["cbr"].read_text() == "time_ms,mean_cbr,max_cbr\n"
