"""
Varreduras de parâmetros: produto cartesiano dos eixos declarados, execuções
independentes (opcionalmente em paralelo) e tabelas combinadas alinhadas.
"""
import itertools
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.core.errors import ConfigurationError
from app.core.logging import log_structured_data, set_run_id, sweep_logger
from app.schemas.simulation import SimConfig, build_sim_config

# Eixos aceitos -> campo da SimConfig
SWEEP_AXES = {
    "scheme": "scheme",
    "density": "density_veh_per_100m",
    "density_veh_per_100m": "density_veh_per_100m",
    "bandwidth": "bandwidth_mhz",
    "bandwidth_mhz": "bandwidth_mhz",
    "seed": "seed",
}
CELL_FIELDS = ("scheme", "density_veh_per_100m", "bandwidth_mhz")
FLOAT_FORMAT = "%.10g"


@dataclass
class SweepCell:
    label: str
    cell: str
    config: SimConfig


def parse_axis(spec: str) -> Tuple[str, List[str]]:
    """Converte 'scheme=no_cc,cc' em ('scheme', ['no_cc', 'cc'])."""
    if "=" not in spec:
        raise ConfigurationError(f"eixo inválido '{spec}': use chave=v1,v2,...")
    key, raw = spec.split("=", 1)
    key = key.strip().lower()
    if key not in SWEEP_AXES:
        raise ConfigurationError(f"eixo de varredura não suportado: {key} (aceitos: {', '.join(sorted(SWEEP_AXES))})")
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not values:
        raise ConfigurationError(f"eixo {key} sem valores")
    return SWEEP_AXES[key], values


def cell_label(config: SimConfig) -> str:
    return f"{config.scheme.value}_d{config.density_veh_per_100m:g}_bw{config.bandwidth_mhz}"


def run_label(config: SimConfig) -> str:
    return f"{cell_label(config)}_s{config.seed}"


def expand_sweep(base: SimConfig, axes: Sequence[str]) -> List[SweepCell]:
    """
    Expande os eixos em configurações completas.

    Raises:
        ConfigurationError: eixo repetido, valor inválido ou dois pontos com o mesmo diretório de saída
    """
    parsed: Dict[str, List[str]] = {}
    for spec in axes:
        field_name, values = parse_axis(spec)
        if field_name in parsed:
            raise ConfigurationError(f"eixo declarado mais de uma vez: {field_name}")
        parsed[field_name] = values

    base_values = base.model_dump(mode="json")
    cells: List[SweepCell] = []
    seen: Dict[str, str] = {}
    names = list(parsed)
    for combination in itertools.product(*(parsed[name] for name in names)):
        values = dict(base_values)
        values.update(dict(zip(names, combination)))
        config = build_sim_config(values)
        label = run_label(config)
        origin = ", ".join(f"{k}={v}" for k, v in zip(names, combination))
        if label in seen:
            raise ConfigurationError(f"saídas conflitantes: '{origin}' e '{seen[label]}' gravariam em {label}")
        seen[label] = origin
        cells.append(SweepCell(label=label, cell=cell_label(config), config=config))
    return cells


def _run_cell(task: Tuple[Dict[str, Any], str, str]) -> Dict[str, Any]:
    """Executa um ponto da varredura (função de topo para o Pool)."""
    from app.services.simulation_engine import SimulationEngine

    values, out_dir, label = task
    set_run_id(label)
    config = build_sim_config(values)
    result = SimulationEngine(config).run(Path(out_dir))
    return {
        "label": label,
        "scheme": config.scheme.value,
        "density_veh_per_100m": config.density_veh_per_100m,
        "bandwidth_mhz": config.bandwidth_mhz,
        "seed": config.seed,
        "config_hash": result.config_hash,
        "n_vues": result.n_vues,
        "prr_first_bin": result.summary["prr_first_bin"],
        "mean_cbr": result.summary["mean_cbr"],
        "out_dir": str(out_dir),
    }


def run_sweep(base: SimConfig, axes: Sequence[str], out_root: Path, jobs: int = 1) -> pd.DataFrame:
    """
    Executa todas as combinações e grava sweep_runs.csv, combined_prr.csv e
    combined_ia_ccdf.csv em out_root.

    Returns:
        DataFrame com uma linha por execução
    """
    cells = expand_sweep(base, axes)
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    tasks = [(cell.config.model_dump(mode="json"), str(out_root / cell.label), cell.label) for cell in cells]
    log_structured_data(sweep_logger, "info", "Iniciando varredura",
                        {"runs": len(tasks), "jobs": jobs, "out_root": str(out_root)})

    if jobs > 1 and len(tasks) > 1:
        with Pool(min(jobs, len(tasks))) as pool:
            rows = pool.map(_run_cell, tasks)
    else:
        rows = [_run_cell(task) for task in tasks]

    runs = pd.DataFrame(rows).sort_values("label", kind="stable").reset_index(drop=True)
    cell_by_label = {cell.label: cell.cell for cell in cells}
    runs["cell"] = runs["label"].map(cell_by_label)
    runs.to_csv(out_root / "sweep_runs.csv", index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    combine_prr(runs).to_csv(out_root / "combined_prr.csv", index=False, float_format=FLOAT_FORMAT,
                             na_rep="", lineterminator="\n")
    combine_ia(runs).to_csv(out_root / "combined_ia_ccdf.csv", index=False, float_format=FLOAT_FORMAT,
                            na_rep="", lineterminator="\n")
    log_structured_data(sweep_logger, "info", "Varredura concluída", {"runs": len(runs)})
    return runs


def _cell_keys(runs: pd.DataFrame) -> List[Tuple[str, pd.DataFrame]]:
    return [(cell, group) for cell, group in runs.groupby("cell", sort=True)]


def combine_prr(runs: pd.DataFrame) -> pd.DataFrame:
    """PRR por célula e faixa: média, mínimo e máximo sobre as sementes."""
    frames = []
    for cell, group in _cell_keys(runs):
        per_run = []
        for _, row in group.iterrows():
            table = pd.read_csv(Path(row["out_dir"]) / "prr.csv")
            if not table.empty:
                per_run.append(table.assign(seed=row["seed"]))
        if not per_run:
            continue
        stacked = pd.concat(per_run, ignore_index=True)
        grouped = stacked.groupby(["bin_low_m", "bin_high_m"], sort=True)
        summary = grouped.agg(
            attempted=("attempted", "sum"),
            received=("received", "sum"),
            prr_mean=("prr", "mean"),
            prr_min=("prr", "min"),
            prr_max=("prr", "max"),
            runs=("seed", "nunique"),
        ).reset_index()
        first = group.iloc[0]
        summary.insert(0, "bandwidth_mhz", first["bandwidth_mhz"])
        summary.insert(0, "density_veh_per_100m", first["density_veh_per_100m"])
        summary.insert(0, "scheme", first["scheme"])
        summary.insert(0, "cell", cell)
        frames.append(summary)
    if not frames:
        return pd.DataFrame(columns=["cell", "scheme", "density_veh_per_100m", "bandwidth_mhz", "bin_low_m",
                                     "bin_high_m", "attempted", "received", "prr_mean", "prr_min", "prr_max", "runs"])
    return pd.concat(frames, ignore_index=True)


def _aligned_ccdf(table: pd.DataFrame, lattice: np.ndarray) -> np.ndarray:
    """CCDF de uma execução na grade comum; zero além da maior lacuna da execução."""
    series = pd.Series(table["ccdf"].to_numpy(), index=table["ia_ms"].to_numpy())
    return series.reindex(lattice, fill_value=0.0).to_numpy()


def combine_ia(runs: pd.DataFrame) -> pd.DataFrame:
    """CCDF de IA por célula, faixa e ponto da grade: média, mínimo e máximo."""
    rows = []
    for cell, group in _cell_keys(runs):
        tables = [pd.read_csv(Path(out_dir) / "ia_ccdf.csv") for out_dir in group["out_dir"]]
        labels = sorted({label for table in tables for label in table["bin_label"].unique()})
        for label in labels:
            per_run = [table[table["bin_label"] == label] for table in tables]
            per_run = [table for table in per_run if not table.empty]
            lattice = np.unique(np.concatenate([table["ia_ms"].to_numpy() for table in per_run]))
            matrix = np.vstack([_aligned_ccdf(table, lattice) for table in per_run])
            rows.append(pd.DataFrame({
                "cell": cell,
                "bin_label": label,
                "ia_ms": lattice,
                "ccdf_mean": matrix.mean(axis=0),
                "ccdf_min": matrix.min(axis=0),
                "ccdf_max": matrix.max(axis=0),
                "runs": len(per_run),
            }))
    if not rows:
        return pd.DataFrame(columns=["cell", "bin_label", "ia_ms", "ccdf_mean", "ccdf_min", "ccdf_max", "runs"])
    return pd.concat(rows, ignore_index=True)


def ia_at_ccdf(ccdf: pd.DataFrame, level: float, column: str = "ccdf") -> Optional[float]:
    """Menor valor de IA da grade cuja CCDF fica <= level (None se a CCDF nunca chega lá)."""
    below = ccdf[ccdf[column] <= level]
    if below.empty:
        return None
    return float(below["ia_ms"].min())
