import pandas as pd
import pytest

from app.core.errors import ConfigurationError
from app.schemas.simulation import SimConfig
from app.services.sweep_service import (
    combine_ia,
    expand_sweep,
    ia_at_ccdf,
    parse_axis,
    run_label,
    run_sweep,
)


class TestExpandSweep:
    """Testes para a expansão dos eixos de varredura."""

    def setup_method(self):
        self.base = SimConfig()

    def test_cross_product(self):
        """4 esquemas x 2 densidades: 8 execuções."""
        cells = expand_sweep(self.base, ["scheme=no_cc,cc,rc_only,oneshot_rc", "density=low,heavy"])
        assert len(cells) == 8
        assert len({cell.label for cell in cells}) == 8
        assert len({cell.cell for cell in cells}) == 8

    def test_seeds_share_cell(self):
        cells = expand_sweep(self.base, ["seed=1,2,3,4,5"])
        assert len(cells) == 5
        assert len({cell.cell for cell in cells}) == 1

    def test_aliases_conflict(self):
        """cc e cc_rate_power gravariam no mesmo diretório."""
        with pytest.raises(ConfigurationError):
            expand_sweep(self.base, ["scheme=cc,cc_rate_power"])

    def test_duplicate_axis(self):
        with pytest.raises(ConfigurationError):
            expand_sweep(self.base, ["density=low", "density_veh_per_100m=heavy"])

    def test_undeclared_axis(self):
        with pytest.raises(ConfigurationError):
            parse_axis("lanes=4,6")

    def test_invalid_value(self):
        with pytest.raises(ConfigurationError):
            expand_sweep(self.base, ["bandwidth=15"])

    def test_run_label(self):
        config = SimConfig(scheme="rc_only", density_veh_per_100m="heavy", bandwidth_mhz=20, seed=3)
        assert run_label(config) == "rate_only_d83.2_bw20_s3"


class TestRunSweep:
    """Testes de integração da varredura."""

    def test_combined_tables(self, small_config, tmp_path):
        """Duas sementes x dois esquemas: tabelas combinadas com média e faixa min/max."""
        base = small_config.with_overrides(duration_ms=1000)
        runs = run_sweep(base, ["scheme=no_cc,rc_only", "seed=1,2"], tmp_path, jobs=1)
        assert len(runs) == 4
        assert set(runs["config_hash"]) == {
            base.with_overrides(scheme=s, seed=k).config_hash() for s in ("no_cc", "rc_only") for k in (1, 2)
        }

        runs_csv = pd.read_csv(tmp_path / "sweep_runs.csv")
        assert len(runs_csv) == 4
        prr = pd.read_csv(tmp_path / "combined_prr.csv")
        assert set(prr["cell"]) == set(runs["cell"])
        # Faixas além de meia volta do anel não têm tentativas
        prr = prr.dropna(subset=["prr_mean"])
        assert not prr.empty
        assert (prr["prr_min"] <= prr["prr_mean"] + 1e-12).all()
        assert (prr["prr_mean"] <= prr["prr_max"] + 1e-12).all()
        assert (prr["runs"] <= 2).all()

        ia = pd.read_csv(tmp_path / "combined_ia_ccdf.csv")
        assert set(ia["cell"]) <= set(runs["cell"])
        for (cell, label), group in ia.groupby(["cell", "bin_label"]):
            assert group["ia_ms"].is_monotonic_increasing

    def test_ccdf_alignment_zero_extends(self, tmp_path):
        """Lacunas além do máximo de uma execução contam como CCDF zero."""
        short, long = tmp_path / "a", tmp_path / "b"
        short.mkdir()
        long.mkdir()
        pd.DataFrame({"bin_label": "0-200", "ia_ms": [0, 10], "ccdf": [1.0, 0.0]}).to_csv(short / "ia_ccdf.csv", index=False)
        pd.DataFrame({"bin_label": "0-200", "ia_ms": [0, 10, 20], "ccdf": [1.0, 0.5, 0.0]}).to_csv(long / "ia_ccdf.csv", index=False)
        runs = pd.DataFrame({"cell": ["x", "x"], "out_dir": [str(short), str(long)]})
        combined = combine_ia(runs).set_index("ia_ms")
        assert combined.loc[10, "ccdf_mean"] == pytest.approx(0.25)
        assert combined.loc[20, "ccdf_max"] == pytest.approx(0.0)
        assert combined.loc[10, "runs"] == 2

    def test_ia_at_ccdf(self):
        ccdf = pd.DataFrame({"ia_ms": [0, 100, 200, 300], "ccdf": [1.0, 0.1, 0.001, 0.0]})
        assert ia_at_ccdf(ccdf, 1e-3) == 200
        assert ia_at_ccdf(ccdf.iloc[:2], 1e-3) is None
