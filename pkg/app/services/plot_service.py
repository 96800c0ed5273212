"""
Gráficos SVG a partir dos CSVs de uma execução ou de uma varredura.
"""
from pathlib import Path
from typing import Dict

import matplotlib

matplotlib.use("Agg")
# ids determinísticos nos SVGs
matplotlib.rcParams["svg.hashsalt"] = "sidelink"
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from app.core.errors import ConfigurationError  # noqa: E402
from app.core.logging import log_structured_data, metrics_logger  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # metadata Date=None deixa o SVG estável entre execuções
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_run(in_dir: Path, out_dir: Path) -> Dict[str, Path]:
    """prr.svg, ia_ccdf.svg (escala log) e cbr.svg de um diretório de resultado."""
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}

    prr = pd.read_csv(in_dir / "prr.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    if not prr.empty:
        centers = (prr["bin_low_m"] + prr["bin_high_m"]) / 2
        ax.plot(centers, prr["prr"], marker="o")
    ax.set_xlabel("Distância Tx-Rx (m)")
    ax.set_ylabel("PRR")
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    written["prr"] = _save(fig, out_dir / "prr.svg")

    ia = pd.read_csv(in_dir / "ia_ccdf.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, group in ia.groupby("bin_label", sort=True):
        positive = group[group["ccdf"] > 0]
        ax.step(positive["ia_ms"], positive["ccdf"], where="post", label=f"{label} m")
    ax.set_yscale("log")
    ax.set_xlabel("Information Age (ms)")
    ax.set_ylabel("CCDF")
    ax.grid(True, which="both", alpha=0.3)
    if not ia.empty:
        ax.legend()
    written["ia_ccdf"] = _save(fig, out_dir / "ia_ccdf.svg")

    cbr = pd.read_csv(in_dir / "cbr.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    if not cbr.empty:
        ax.plot(cbr["time_ms"] / 1000.0, cbr["mean_cbr"], label="média")
        ax.plot(cbr["time_ms"] / 1000.0, cbr["max_cbr"], label="máximo", alpha=0.6)
        ax.legend()
    ax.set_xlabel("Tempo (s)")
    ax.set_ylabel("CBR")
    ax.set_ylim(0, 1)
    ax.grid(True, alpha=0.3)
    written["cbr"] = _save(fig, out_dir / "cbr.svg")
    return written


def plot_sweep(in_dir: Path, out_dir: Path) -> Dict[str, Path]:
    """Curvas de PRR e CCDF de IA por célula a partir das tabelas combinadas."""
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}

    prr = pd.read_csv(in_dir / "combined_prr.csv")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for cell, group in prr.groupby("cell", sort=True):
        centers = (group["bin_low_m"] + group["bin_high_m"]) / 2
        ax.plot(centers, group["prr_mean"], marker="o", label=cell)
        ax.fill_between(centers, group["prr_min"], group["prr_max"], alpha=0.15)
    ax.set_xlabel("Distância Tx-Rx (m)")
    ax.set_ylabel("PRR")
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    if not prr.empty:
        ax.legend(fontsize="small")
    written["prr"] = _save(fig, out_dir / "combined_prr.svg")

    ia = pd.read_csv(in_dir / "combined_ia_ccdf.csv")
    for label, by_bin in ia.groupby("bin_label", sort=True):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for cell, group in by_bin.groupby("cell", sort=True):
            positive = group[group["ccdf_mean"] > 0]
            ax.step(positive["ia_ms"], positive["ccdf_mean"], where="post", label=cell)
        ax.set_yscale("log")
        ax.set_xlabel("Information Age (ms)")
        ax.set_ylabel(f"CCDF ({label} m)")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize="small")
        written[f"ia_{label}"] = _save(fig, out_dir / f"combined_ia_ccdf_{label}.svg")
    return written


def plot_results(in_dir: Path, out_dir: Path) -> Dict[str, Path]:
    """Detecta se in_dir é uma execução ou uma varredura e gera os SVGs."""
    in_dir = Path(in_dir)
    if (in_dir / "combined_prr.csv").is_file():
        written = plot_sweep(in_dir, out_dir)
    elif (in_dir / "prr.csv").is_file():
        written = plot_run(in_dir, out_dir)
    else:
        raise ConfigurationError(f"nenhum resultado encontrado em {in_dir}")
    log_structured_data(metrics_logger, "info", "Gráficos gerados",
                        {"in_dir": str(in_dir), "files": sorted(p.name for p in written.values())})
    return written
