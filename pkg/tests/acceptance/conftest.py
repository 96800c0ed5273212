import os
from functools import lru_cache
from pathlib import Path

import pandas as pd
import pytest

from app.schemas.simulation import SimConfig
from app.services.simulation_engine import SimulationEngine

DESK_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "desk-scale.env"


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SIDELINK_ACCEPTANCE") == "1":
        return
    skip = pytest.mark.skip(reason="defina SIDELINK_ACCEPTANCE=1 para rodar os cenários de bancada")
    for item in items:
        if "acceptance" in item.nodeid:
            item.add_marker(skip)


class DeskRun:
    """Resultados de uma execução em escala de bancada, lidos dos CSVs."""

    def __init__(self, out_dir: Path):
        self.prr = pd.read_csv(out_dir / "prr.csv")
        self.ia = pd.read_csv(out_dir / "ia_ccdf.csv")
        self.control = pd.read_csv(out_dir / "control.csv")

    def prr_bin(self, low_m: float) -> float:
        return float(self.prr.loc[self.prr["bin_low_m"] == low_m, "prr"].iloc[0])

    def prr_upto(self, max_m: float) -> pd.Series:
        rows = self.prr[(self.prr["bin_low_m"] < max_m) & self.prr["attempted"].gt(0)]
        return rows.set_index("bin_low_m")["prr"]

    def ia_ccdf(self, label: str) -> pd.DataFrame:
        return self.ia[self.ia["bin_label"] == label]


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    """Executa (com cache) uma célula: desk_run(scheme, density, seed, bandwidth=10)."""
    root = tmp_path_factory.mktemp("desk")

    @lru_cache(maxsize=None)
    def run(scheme: str, density: str, seed: int, bandwidth: int = 10) -> DeskRun:
        config = SimConfig.from_file(DESK_CONFIG, {
            "scheme": scheme, "density_veh_per_100m": density, "seed": seed, "bandwidth_mhz": bandwidth,
        })
        out_dir = root / f"{scheme}_{density}_bw{bandwidth}_s{seed}"
        SimulationEngine(config).run(out_dir)
        return DeskRun(out_dir)

    return run
