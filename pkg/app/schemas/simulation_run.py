from datetime import datetime
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class SimulationRequest(BaseModel):
    """Dados de entrada para disparar uma simulação pela API."""
    scheme: str = Field("no_cc", description="Esquema (no_cc, cc_rate_power, rate_only, oneshot_rc ou aliases cc, rc_only)")
    seed: int = Field(1, ge=0, lt=2**64, description="Semente de 64 bits")
    preset: Union[float, str] = Field("low", description="Preset de densidade (low, heavy) ou veículos/100 m")
    bandwidth_mhz: int = Field(10, description="Largura de banda (10 ou 20 MHz)")
    duration_s: Optional[float] = Field(None, ge=0, description="Duração após o aquecimento (s)")
    overrides: Dict[str, Any] = Field({}, description="Demais chaves de configuração (mesmos nomes do arquivo de configuração)")

    def config_values(self) -> Dict[str, Any]:
        values = dict(self.overrides)
        values.update({
            "scheme": self.scheme,
            "seed": self.seed,
            "density_veh_per_100m": self.preset,
            "bandwidth_mhz": self.bandwidth_mhz,
        })
        if self.duration_s is not None:
            values["duration_ms"] = int(round(self.duration_s * 1000))
        return values


class SimulationRunOutput(BaseModel):
    """Estado de uma execução registrada."""
    model_config = ConfigDict(from_attributes=True)

    id: str
    status: str
    created_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None
    scheme: str
    seed: str
    density_veh_per_100m: float
    bandwidth_mhz: int
    duration_ms: int
    config_hash: str
    n_vues: Optional[int] = None
    prr_first_bin: Optional[float] = None
    mean_cbr: Optional[float] = None
    wall_time_s: Optional[float] = None
    output_dir: Optional[str] = None
    error: Optional[str] = None


class SimulationRunDetail(SimulationRunOutput):
    config: Dict[str, Any]


class PresetsOutput(BaseModel):
    schemes: List[str]
    scheme_aliases: Dict[str, str]
    densities: Dict[str, float]
    bandwidths_mhz: List[int]
    defaults: Dict[str, Any]
