import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.errors import ConfigurationError
from app.core.sim_defaults import (
    CARRIER_FREQUENCY_GHZ, ANTENNA_HEIGHT_M, CBR_INTERVAL_MS, CBR_THRESHOLD_DBM,
    CHANNEL_DEFAULTS, CONGESTION_DEFAULTS, DENSITY_PRESETS, DURATION_MS, LANES,
    MAC_DEFAULTS, MCS_INDEX, ONESHOT_DEFAULTS, PACKET_SIZE_BYTES, RB_PER_BANDWIDTH,
    ROAD_LENGTH_M, SCENARIO_DEFAULTS, SCHEME_ALIASES, SPEED_MPS, SUBCHANNEL_SIZE_RB,
    TX_FREQUENCY_BASELINE_HZ, TX_POWER_BASELINE_DBM,
)


class Scheme(str, Enum):
    """Esquemas de controle de congestionamento."""
    NO_CC = "no_cc"
    CC_RATE_POWER = "cc_rate_power"
    RATE_ONLY = "rate_only"
    ONESHOT_RC = "oneshot_rc"

    @classmethod
    def parse(cls, value: Union[str, "Scheme"]) -> "Scheme":
        if isinstance(value, cls):
            return value
        name = str(value).strip().lower()
        return cls(SCHEME_ALIASES.get(name, name))

    @property
    def uses_rate_control(self) -> bool:
        return self is not Scheme.NO_CC

    @property
    def uses_power_control(self) -> bool:
        return self is Scheme.CC_RATE_POWER


_FROZEN = ConfigDict(frozen=True, extra="forbid")


# Sub-configurações imutáveis derivadas de SimConfig

class GridConfig(BaseModel):
    """Estrutura tempo/frequência do pool de recursos do sidelink."""
    model_config = _FROZEN

    bandwidth_mhz: int = Field(10, description="Largura de banda do canal (10 ou 20 MHz)")
    subchannel_size_rb: int = Field(SUBCHANNEL_SIZE_RB, gt=0, description="RBs por subcanal")
    mcs_index: int = Field(MCS_INDEX, ge=0, description="Índice MCS")
    payload_bytes: int = Field(PACKET_SIZE_BYTES, gt=0, description="Tamanho do BSM")
    rb_count_per_subframe: int = Field(0, description="RBs por subquadro (derivado da banda)")
    subchannels_per_subframe: int = Field(0, description="Subcanais por subquadro (derivado)")
    subframe_duration_ms: Literal[1] = 1
    subchannels_needed: Optional[int] = Field(None, description="Subcanais ocupados por pacote (cache do TBS)")

    @model_validator(mode="before")
    @classmethod
    def derive_counts(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            bandwidth = int(data.get("bandwidth_mhz", 10))
            size = data.get("subchannel_size_rb", SUBCHANNEL_SIZE_RB)
            if bandwidth not in RB_PER_BANDWIDTH:
                raise ValueError(f"bandwidth_mhz deve ser 10 ou 20, recebido {bandwidth}")
            rb_count = RB_PER_BANDWIDTH[bandwidth]
            if not size or rb_count % size != 0:
                raise ValueError(f"{rb_count} RBs não são divisíveis por subchannel_size_rb={size}")
            data["rb_count_per_subframe"] = rb_count
            data["subchannels_per_subframe"] = rb_count // size
        return data

    @model_validator(mode="after")
    def check_needed(self) -> "GridConfig":
        if self.subchannels_needed is not None and not (1 <= self.subchannels_needed <= self.subchannels_per_subframe):
            raise ValueError("subchannels_needed fora de [1, subchannels_per_subframe]")
        return self

    @property
    def slots_per_subframe(self) -> int:
        """Posições de início possíveis para um pacote de largura subchannels_needed."""
        return self.subchannels_per_subframe - (self.subchannels_needed or 1) + 1


class ChannelConfig(BaseModel):
    model_config = _FROZEN

    model: Literal["dual_slope_log_distance"] = "dual_slope_log_distance"
    pl0_db: float = CHANNEL_DEFAULTS["pl0_db"]
    exponent_near: float = Field(CHANNEL_DEFAULTS["exponent_near"], ge=2.0)
    exponent_far: float = Field(CHANNEL_DEFAULTS["exponent_far"], ge=2.0)
    breakpoint_m: float = Field(CHANNEL_DEFAULTS["breakpoint_m"], gt=1.0)
    shadowing_sigma_db: float = Field(CHANNEL_DEFAULTS["shadowing_sigma_db"], ge=0.0)
    shadowing_decorrelation_m: float = Field(CHANNEL_DEFAULTS["shadowing_decorrelation_m"], gt=0.0)
    noise_figure_db: float = CHANNEL_DEFAULTS["noise_figure_db"]
    thermal_noise_density_dbm_hz: float = CHANNEL_DEFAULTS["thermal_noise_density_dbm_hz"]
    # Informativos: entram no hash e nos metadados, o modelo de perda não os usa
    carrier_frequency_ghz: float = CARRIER_FREQUENCY_GHZ
    antenna_height_m: float = ANTENNA_HEIGHT_M
    sensitivity_dbm: float = CHANNEL_DEFAULTS["sensitivity_dbm"]
    sinr_threshold_db: float = CHANNEL_DEFAULTS["sinr_threshold_db"]
    reception_model: Literal["threshold", "logistic"] = "threshold"
    bler_slope_db: float = Field(CHANNEL_DEFAULTS["bler_slope_db"], gt=0.0)
    subchannel_size_rb: int = SUBCHANNEL_SIZE_RB


class MacConfig(BaseModel):
    model_config = _FROZEN

    sensing_window_ms: int = Field(MAC_DEFAULTS["sensing_window_ms"], gt=0)
    selection_t1_ms: int = Field(MAC_DEFAULTS["selection_t1_ms"], ge=1)
    selection_t2_ms: int = Field(MAC_DEFAULTS["selection_t2_ms"], ge=1)
    rsrp_threshold_dbm: float = MAC_DEFAULTS["rsrp_threshold_dbm"]
    rsrp_step_db: float = Field(MAC_DEFAULTS["rsrp_step_db"], gt=0.0)
    min_candidate_ratio: float = Field(MAC_DEFAULTS["min_candidate_ratio"], gt=0.0, le=1.0)
    reselection_counter_min: int = Field(MAC_DEFAULTS["reselection_counter_min"], ge=1)
    reselection_counter_max: int = Field(MAC_DEFAULTS["reselection_counter_max"], ge=1)
    keep_probability: float = Field(MAC_DEFAULTS["keep_probability"], ge=0.0, le=1.0)
    unmeasurable_step_ms: int = Field(MAC_DEFAULTS["unmeasurable_step_ms"], gt=0)
    rssi_ranking: bool = MAC_DEFAULTS["rssi_ranking"]

    @model_validator(mode="after")
    def check_ranges(self) -> "MacConfig":
        if self.selection_t1_ms > self.selection_t2_ms:
            raise ValueError("selection_t1_ms deve ser <= selection_t2_ms")
        if self.reselection_counter_min > self.reselection_counter_max:
            raise ValueError("reselection_counter_min deve ser <= reselection_counter_max")
        return self


class CongestionConfig(BaseModel):
    model_config = _FROZEN

    cbr_threshold_dbm: float = CBR_THRESHOLD_DBM
    cbr_interval_ms: int = Field(CBR_INTERVAL_MS, gt=0)
    itt_base_ms: int = Field(100, gt=0)
    tx_power_dbm: float = TX_POWER_BASELINE_DBM
    itt_min_ms: int = Field(CONGESTION_DEFAULTS["itt_min_ms"], gt=0)
    itt_max_ms: int = Field(CONGESTION_DEFAULTS["itt_max_ms"], gt=0)
    density_activation_per_100m: float = Field(CONGESTION_DEFAULTS["density_activation_per_100m"], gt=0.0)
    itt_filter_coefficient: float = Field(CONGESTION_DEFAULTS["itt_filter_coefficient"], ge=0.0, le=1.0)
    power_min_dbm: float = CONGESTION_DEFAULTS["power_min_dbm"]
    power_max_dbm: float = CONGESTION_DEFAULTS["power_max_dbm"]
    cbr_knee_low: float = Field(CONGESTION_DEFAULTS["cbr_knee_low"], ge=0.0, le=1.0)
    cbr_knee_high: float = Field(CONGESTION_DEFAULTS["cbr_knee_high"], ge=0.0, le=1.0)
    density_radius_m: float = Field(CONGESTION_DEFAULTS["density_radius_m"], gt=0.0)
    density_update_ms: int = Field(CONGESTION_DEFAULTS["density_update_ms"], gt=0)
    density_source: Literal["reception", "ground_truth"] = "reception"

    @model_validator(mode="after")
    def check_bounds(self) -> "CongestionConfig":
        if self.itt_min_ms > self.itt_max_ms:
            raise ValueError("itt_min_ms deve ser <= itt_max_ms")
        if self.power_min_dbm > self.power_max_dbm:
            raise ValueError("power_min_dbm deve ser <= power_max_dbm")
        if self.cbr_knee_low >= self.cbr_knee_high:
            raise ValueError("cbr_knee_low deve ser < cbr_knee_high")
        return self


class OneShotConfig(BaseModel):
    model_config = _FROZEN

    counter_min: int = Field(ONESHOT_DEFAULTS["oneshot_counter_min"], ge=0)
    counter_max: int = Field(ONESHOT_DEFAULTS["oneshot_counter_max"], ge=0)

    @model_validator(mode="after")
    def check_range(self) -> "OneShotConfig":
        if self.counter_min > self.counter_max:
            raise ValueError("oneshot_counter_min deve ser <= oneshot_counter_max")
        return self


class ScenarioConfig(BaseModel):
    model_config = _FROZEN

    road_length_m: float = Field(ROAD_LENGTH_M, gt=0.0)
    lanes: int = Field(LANES, ge=1)
    speed_mps: float = Field(SPEED_MPS, ge=0.0)
    density_veh_per_100m: float = Field(DENSITY_PRESETS["low"], gt=0.0)
    lane_width_m: float = Field(SCENARIO_DEFAULTS["lane_width_m"], ge=0.0)
    min_headway_m: float = Field(SCENARIO_DEFAULTS["min_headway_m"], ge=0.0)
    wraparound: bool = True

    @property
    def vehicle_count(self) -> int:
        return int(round(self.density_veh_per_100m * self.road_length_m / 100.0))


class SimConfig(BaseModel):
    """
    Configuração completa de uma execução. Namespace plano: cada chave do
    arquivo de configuração corresponde a um campo deste modelo.
    """
    model_config = _FROZEN

    # Execução
    scheme: Scheme = Scheme.NO_CC
    seed: int = Field(1, ge=0, lt=2**64)
    duration_ms: int = Field(DURATION_MS, ge=0)
    warmup_ms: int = Field(2000, ge=0)
    save_events: bool = False

    # Rádio / grade
    bandwidth_mhz: int = 10
    subchannel_size_rb: int = Field(SUBCHANNEL_SIZE_RB, gt=0)
    mcs_index: int = Field(MCS_INDEX, ge=0)
    payload_bytes: int = Field(PACKET_SIZE_BYTES, gt=0)
    tx_power_dbm: float = TX_POWER_BASELINE_DBM
    tx_frequency_hz: float = Field(TX_FREQUENCY_BASELINE_HZ, gt=0.0)

    # Canal
    carrier_frequency_ghz: float = CARRIER_FREQUENCY_GHZ
    antenna_height_m: float = ANTENNA_HEIGHT_M
    pl0_db: float = CHANNEL_DEFAULTS["pl0_db"]
    exponent_near: float = CHANNEL_DEFAULTS["exponent_near"]
    exponent_far: float = CHANNEL_DEFAULTS["exponent_far"]
    breakpoint_m: float = CHANNEL_DEFAULTS["breakpoint_m"]
    shadowing_sigma_db: float = CHANNEL_DEFAULTS["shadowing_sigma_db"]
    shadowing_decorrelation_m: float = CHANNEL_DEFAULTS["shadowing_decorrelation_m"]
    noise_figure_db: float = CHANNEL_DEFAULTS["noise_figure_db"]
    thermal_noise_density_dbm_hz: float = CHANNEL_DEFAULTS["thermal_noise_density_dbm_hz"]
    sensitivity_dbm: float = CHANNEL_DEFAULTS["sensitivity_dbm"]
    sinr_threshold_db: float = CHANNEL_DEFAULTS["sinr_threshold_db"]
    reception_model: Literal["threshold", "logistic"] = "threshold"
    bler_slope_db: float = CHANNEL_DEFAULTS["bler_slope_db"]

    # SB-SPS
    sensing_window_ms: int = MAC_DEFAULTS["sensing_window_ms"]
    selection_t1_ms: int = MAC_DEFAULTS["selection_t1_ms"]
    selection_t2_ms: int = MAC_DEFAULTS["selection_t2_ms"]
    rsrp_threshold_dbm: float = MAC_DEFAULTS["rsrp_threshold_dbm"]
    rsrp_step_db: float = MAC_DEFAULTS["rsrp_step_db"]
    min_candidate_ratio: float = MAC_DEFAULTS["min_candidate_ratio"]
    reselection_counter_min: int = MAC_DEFAULTS["reselection_counter_min"]
    reselection_counter_max: int = MAC_DEFAULTS["reselection_counter_max"]
    keep_probability: float = MAC_DEFAULTS["keep_probability"]
    unmeasurable_step_ms: int = MAC_DEFAULTS["unmeasurable_step_ms"]
    rssi_ranking: bool = MAC_DEFAULTS["rssi_ranking"]

    # Controle de congestionamento
    cbr_threshold_dbm: float = CBR_THRESHOLD_DBM
    cbr_interval_ms: int = CBR_INTERVAL_MS
    itt_min_ms: int = CONGESTION_DEFAULTS["itt_min_ms"]
    itt_max_ms: int = CONGESTION_DEFAULTS["itt_max_ms"]
    density_activation_per_100m: float = CONGESTION_DEFAULTS["density_activation_per_100m"]
    itt_filter_coefficient: float = CONGESTION_DEFAULTS["itt_filter_coefficient"]
    power_min_dbm: float = CONGESTION_DEFAULTS["power_min_dbm"]
    power_max_dbm: float = CONGESTION_DEFAULTS["power_max_dbm"]
    cbr_knee_low: float = CONGESTION_DEFAULTS["cbr_knee_low"]
    cbr_knee_high: float = CONGESTION_DEFAULTS["cbr_knee_high"]
    density_radius_m: float = CONGESTION_DEFAULTS["density_radius_m"]
    density_update_ms: int = CONGESTION_DEFAULTS["density_update_ms"]
    density_source: Literal["reception", "ground_truth"] = "reception"

    # One-shot
    oneshot_counter_min: int = ONESHOT_DEFAULTS["oneshot_counter_min"]
    oneshot_counter_max: int = ONESHOT_DEFAULTS["oneshot_counter_max"]

    # Cenário
    road_length_m: float = ROAD_LENGTH_M
    lanes: int = LANES
    speed_mps: float = SPEED_MPS
    density_veh_per_100m: float = DENSITY_PRESETS["low"]
    lane_width_m: float = SCENARIO_DEFAULTS["lane_width_m"]
    min_headway_m: float = SCENARIO_DEFAULTS["min_headway_m"]
    wraparound: bool = True

    @field_validator("scheme", mode="before")
    @classmethod
    def parse_scheme(cls, value: Any) -> Scheme:
        return Scheme.parse(value)

    @field_validator("density_veh_per_100m", mode="before")
    @classmethod
    def parse_density(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() in DENSITY_PRESETS:
            return DENSITY_PRESETS[value.strip().lower()]
        return value

    @model_validator(mode="after")
    def check_sub_configs(self) -> "SimConfig":
        # Constrói cada sub-configuração para validar seus invariantes
        self.grid_config()
        self.channel_config()
        self.mac_config()
        self.congestion_config()
        self.oneshot_config()
        self.scenario_config()
        return self

    # Sub-configurações

    def grid_config(self) -> GridConfig:
        return GridConfig(
            bandwidth_mhz=self.bandwidth_mhz,
            subchannel_size_rb=self.subchannel_size_rb,
            mcs_index=self.mcs_index,
            payload_bytes=self.payload_bytes,
        )

    def channel_config(self) -> ChannelConfig:
        return ChannelConfig(
            pl0_db=self.pl0_db,
            exponent_near=self.exponent_near,
            exponent_far=self.exponent_far,
            breakpoint_m=self.breakpoint_m,
            shadowing_sigma_db=self.shadowing_sigma_db,
            shadowing_decorrelation_m=self.shadowing_decorrelation_m,
            noise_figure_db=self.noise_figure_db,
            thermal_noise_density_dbm_hz=self.thermal_noise_density_dbm_hz,
            carrier_frequency_ghz=self.carrier_frequency_ghz,
            antenna_height_m=self.antenna_height_m,
            sensitivity_dbm=self.sensitivity_dbm,
            sinr_threshold_db=self.sinr_threshold_db,
            reception_model=self.reception_model,
            bler_slope_db=self.bler_slope_db,
            subchannel_size_rb=self.subchannel_size_rb,
        )

    def mac_config(self) -> MacConfig:
        return MacConfig(
            sensing_window_ms=self.sensing_window_ms,
            selection_t1_ms=self.selection_t1_ms,
            selection_t2_ms=self.selection_t2_ms,
            rsrp_threshold_dbm=self.rsrp_threshold_dbm,
            rsrp_step_db=self.rsrp_step_db,
            min_candidate_ratio=self.min_candidate_ratio,
            reselection_counter_min=self.reselection_counter_min,
            reselection_counter_max=self.reselection_counter_max,
            keep_probability=self.keep_probability,
            unmeasurable_step_ms=self.unmeasurable_step_ms,
            rssi_ranking=self.rssi_ranking,
        )

    def congestion_config(self) -> CongestionConfig:
        return CongestionConfig(
            cbr_threshold_dbm=self.cbr_threshold_dbm,
            cbr_interval_ms=self.cbr_interval_ms,
            itt_base_ms=int(round(1000.0 / self.tx_frequency_hz)),
            tx_power_dbm=self.tx_power_dbm,
            itt_min_ms=self.itt_min_ms,
            itt_max_ms=self.itt_max_ms,
            density_activation_per_100m=self.density_activation_per_100m,
            itt_filter_coefficient=self.itt_filter_coefficient,
            power_min_dbm=self.power_min_dbm,
            power_max_dbm=self.power_max_dbm,
            cbr_knee_low=self.cbr_knee_low,
            cbr_knee_high=self.cbr_knee_high,
            density_radius_m=self.density_radius_m,
            density_update_ms=self.density_update_ms,
            density_source=self.density_source,
        )

    def oneshot_config(self) -> OneShotConfig:
        return OneShotConfig(counter_min=self.oneshot_counter_min, counter_max=self.oneshot_counter_max)

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig(
            road_length_m=self.road_length_m,
            lanes=self.lanes,
            speed_mps=self.speed_mps,
            density_veh_per_100m=self.density_veh_per_100m,
            lane_width_m=self.lane_width_m,
            min_headway_m=self.min_headway_m,
            wraparound=self.wraparound,
        )

    # Serialização

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides: Any) -> "SimConfig":
        """Retorna uma cópia validada com as chaves sobrescritas."""
        merged = self.model_dump(mode="json")
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return build_sim_config(merged)

    @classmethod
    def from_file(cls, path: Union[str, Path, None], overrides: Optional[Dict[str, Any]] = None) -> "SimConfig":
        """
        Carrega um arquivo de configuração plano (KEY=value) e aplica overrides.

        Args:
            path: Caminho do arquivo (None usa apenas os padrões)
            overrides: Valores vindos da linha de comando (None é ignorado)

        Returns:
            SimConfig validado
        """
        values: Dict[str, Any] = {}
        if path is not None:
            file_path = Path(path)
            if not file_path.is_file():
                raise ConfigurationError(f"arquivo de configuração não encontrado: {file_path}")
            for key, value in dotenv_values(file_path).items():
                if value is None or value == "":
                    continue
                values[key.strip().lower()] = value
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return build_sim_config(values)


def build_sim_config(values: Dict[str, Any]) -> SimConfig:
    """Valida um dicionário plano, convertendo erros de validação em ConfigurationError."""
    try:
        return SimConfig(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ())) or "config"
        message = " ".join(str(first.get("msg", "valor inválido")).split())
        raise ConfigurationError(f"{location}: {message}") from None
