"""
Comparações entre esquemas em escala de bancada (anel de 1200 m, 30 s, 3 sementes).

Verificam direção e ordenação dos efeitos, não os valores absolutos.
"""
import numpy as np
import pytest

from app.services.sweep_service import ia_at_ccdf

SEEDS = (1, 2, 3)

SCHEMES = ("no_cc", "cc", "rc_only", "oneshot_rc")
DENSITIES = ("low", "heavy")


class TestReliability:
    """Confiabilidade a curta distância e degradação em alta densidade."""

    @pytest.mark.parametrize("density", DENSITIES)
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_close_range_prr(self, desk_run, scheme, density):
        for seed in SEEDS:
            prr = desk_run(scheme, density, seed).prr_bin(0)
            assert prr > 0.85, f"PRR em [0,100) m = {prr:.3f} ({scheme}, {density}, semente {seed})"

    def test_heavy_density_degrades_with_distance(self, desk_run):
        for seed in SEEDS:
            run = desk_run("no_cc", "heavy", seed)
            drop = run.prr_bin(0) - run.prr_bin(200)
            assert drop >= 0.15, f"Queda de PRR até [200,300) m deveria ser >= 15 pp (semente {seed}: {drop:.3f})"


class TestCongestionControl:
    """Ganhos do controle de congestionamento em alta densidade."""

    def test_rate_control_prr_gain(self, desk_run):
        for low_m in (100, 200):
            baseline = np.mean([desk_run("no_cc", "heavy", s).prr_bin(low_m) for s in SEEDS])
            controlled = np.mean([desk_run("rc_only", "heavy", s).prr_bin(low_m) for s in SEEDS])
            assert controlled >= 1.2 * baseline, f"Ganho relativo insuficiente em [{low_m},{low_m + 100}) m"

    @pytest.mark.parametrize("density", DENSITIES)
    def test_rate_and_power_match_rate_only(self, desk_run, density):
        cc = np.mean([desk_run("cc", density, s).prr_upto(500) for s in SEEDS], axis=0)
        rc = np.mean([desk_run("rc_only", density, s).prr_upto(500) for s in SEEDS], axis=0)
        assert np.all(np.abs(cc - rc) <= 0.05), "Controle de potência não deveria mudar o PRR em mais de 5 pp"

    def test_ia_tail_improvement(self, desk_run):
        for seed in SEEDS:
            baseline, controlled = desk_run("no_cc", "heavy", seed), desk_run("rc_only", "heavy", seed)
            for label, level, margin in (("0-200", 1e-3, 200), ("200-300", 1e-2, 500)):
                before = ia_at_ccdf(baseline.ia_ccdf(label), level)
                after = ia_at_ccdf(controlled.ia_ccdf(label), level)
                assert before - after >= margin, f"IA em CCDF={level:g} ({label}, semente {seed}): {before} -> {after}"

    @pytest.mark.parametrize("scheme", ("cc", "rc_only"))
    def test_dormant_at_low_density(self, desk_run, scheme):
        for seed in SEEDS:
            control = desk_run(scheme, "low", seed).control
            assert (control["max_itt_ms"] == 100).all(), "ITT deve ficar em 100 ms"
            assert (control["min_tx_power_dbm"] == 23).all(), "Potência deve ficar em 23 dBm"


class TestOneShot:
    """Transmissões one-shot cortam a cauda da IA sem custo de PRR."""

    def test_tail_cut(self, desk_run):
        for seed in SEEDS:
            rc = desk_run("rc_only", "heavy", seed)
            oneshot = desk_run("oneshot_rc", "heavy", seed)
            before = ia_at_ccdf(rc.ia_ccdf("200-300"), 1e-3)
            after = ia_at_ccdf(oneshot.ia_ccdf("200-300"), 1e-3)
            assert after < before, f"One-shot deveria reduzir a cauda da IA (semente {seed}): {before} -> {after}"
            difference = np.abs(rc.prr_upto(1000) - oneshot.prr_upto(1000))
            assert (difference <= 0.03).all(), "PRR com one-shot deve ficar a 3 pp do rc_only"


class TestBandwidth:
    """20 MHz supera 10 MHz."""

    @pytest.mark.parametrize("density", DENSITIES)
    def test_bandwidth_ordering(self, desk_run, density):
        for seed in SEEDS:
            narrow = desk_run("no_cc", density, seed, bandwidth=10).prr_upto(1000)
            wide = desk_run("no_cc", density, seed, bandwidth=20).prr_upto(1000)
            assert (wide >= narrow).all(), f"20 MHz abaixo de 10 MHz em algum bin ({density}, semente {seed})"
            if density == "heavy":
                beyond = (wide - narrow)[wide.index >= 200]
                assert beyond.max() >= 0.05, "Esperado ganho >= 5 pp além de 200 m"
