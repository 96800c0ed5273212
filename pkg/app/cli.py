"""
Linha de comando do simulador: run, sweep, replay, plot e serve.
"""
from pathlib import Path
from typing import Annotated, List, Optional

import typer

from app.core.config import settings
from app.core.errors import SidelinkError
from app.schemas.simulation import SimConfig

app = typer.Typer(help="Simulador de sidelink LTE-V2X Modo 4 (SB-SPS, controle de congestionamento, one-shot).",
                  add_completion=False, no_args_is_help=True)

ConfigOption = Annotated[Optional[Path], typer.Option("--config", "-c", help="Arquivo de configuração KEY=value")]


def _fail(error: Exception) -> None:
    typer.echo(f"erro: {error}", err=True)
    raise typer.Exit(code=2)


@app.command()
def run(
    config: ConfigOption = None,
    seed: Annotated[Optional[int], typer.Option(help="Semente de 64 bits")] = None,
    scheme: Annotated[Optional[str], typer.Option(help="no_cc | cc | rc_only | oneshot_rc")] = None,
    density: Annotated[Optional[str], typer.Option(help="low | heavy | veículos por 100 m")] = None,
    bandwidth: Annotated[Optional[int], typer.Option(help="10 | 20 MHz")] = None,
    duration: Annotated[Optional[float], typer.Option(help="Duração após o aquecimento, em segundos")] = None,
    out: Annotated[Path, typer.Option(help="Diretório de saída")] = Path("results/run"),
    save_events: Annotated[bool, typer.Option("--save-events", help="Grava events.npz para replay")] = False,
):
    """Executa uma simulação e grava prr.csv, ia_ccdf.csv, cbr.csv, control.csv e metadata.json."""
    from app.services.simulation_engine import SimulationEngine

    overrides = {
        "seed": seed,
        "scheme": scheme,
        "density_veh_per_100m": density,
        "bandwidth_mhz": bandwidth,
        "duration_ms": int(round(duration * 1000)) if duration is not None else None,
        "save_events": True if save_events else None,
    }
    try:
        sim_config = SimConfig.from_file(config, overrides)
        result = SimulationEngine(sim_config).run(out)
    except SidelinkError as e:
        _fail(e)
    prr = result.summary["prr_first_bin"]
    typer.echo(f"{result.n_vues} VUEs, PRR [0,100) m = {prr if prr is None else round(prr, 4)}, "
               f"saída em {result.out_dir}")


@app.command()
def sweep(
    config: ConfigOption = None,
    axis: Annotated[List[str], typer.Option("--axis", "-a", help="Eixo chave=v1,v2 (scheme, density, bandwidth, seed)")] = [],
    jobs: Annotated[int, typer.Option(min=1, help="Execuções em paralelo")] = settings.SWEEP_JOBS,
    out: Annotated[Path, typer.Option(help="Diretório raiz da varredura")] = Path("results/sweep"),
):
    """Executa o produto cartesiano dos eixos e grava as tabelas combinadas."""
    from app.services.sweep_service import run_sweep

    try:
        base = SimConfig.from_file(config)
        runs = run_sweep(base, axis, out, jobs=jobs)
    except SidelinkError as e:
        _fail(e)
    typer.echo(f"{len(runs)} execuções, tabelas combinadas em {out}")


@app.command()
def replay(
    events: Annotated[Path, typer.Option(help="Arquivo events.npz gravado com --save-events")],
    out: Annotated[Path, typer.Option(help="Diretório de saída")],
):
    """Reconstrói os CSVs de métricas a partir de um log de eventos."""
    from app.services.event_log import replay as replay_events

    try:
        files = replay_events(events, out)
    except SidelinkError as e:
        _fail(e)
    typer.echo(f"{len(files)} arquivos reescritos em {out}")


@app.command()
def plot(
    in_dir: Annotated[Path, typer.Option("--in", help="Diretório de uma execução ou varredura")],
    out: Annotated[Path, typer.Option(help="Diretório dos SVGs")],
):
    """Gera gráficos SVG de PRR, CCDF de IA e CBR."""
    from app.services.plot_service import plot_results

    try:
        written = plot_results(in_dir, out)
    except SidelinkError as e:
        _fail(e)
    typer.echo(f"{len(written)} gráficos em {out}")


@app.command()
def serve(
    host: Annotated[str, typer.Option(help="Endereço")] = "127.0.0.1",
    port: Annotated[int, typer.Option(help="Porta")] = 8080,
):
    """Sobe a API HTTP de execuções."""
    import uvicorn

    uvicorn.run("app.main:app", host=host, port=port)
