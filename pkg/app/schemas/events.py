"""
Tipos de evento do laço de simulação.

São dataclasses com __slots__ (e não modelos pydantic) porque são criadas
milhares de vezes por segundo simulado.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional


@dataclass(frozen=True, slots=True)
class ResourceId:
    subframe_index: int
    subchannel_index: int


@dataclass(frozen=True, slots=True)
class BsmPacket:
    packet_id: int
    source_vue: int
    generation_time: int
    payload_bytes: int
    subchannels_needed: int

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes deve ser positivo")
        if self.subchannels_needed < 1:
            raise ValueError("subchannels_needed deve ser >= 1")


@dataclass(frozen=True, slots=True)
class TransmissionEvent:
    """Uma transmissão de BSM (SCI + TB) ocupando subcanais adjacentes de um subquadro."""
    tx_vue: int
    subframe: int
    subchannel_start: int
    subchannel_count: int
    tx_power_dbm: float
    packet_id: int
    rri_ms: int = 100
    is_oneshot: bool = False

    @property
    def subchannel_stop(self) -> int:
        return self.subchannel_start + self.subchannel_count

    def overlap(self, other: "TransmissionEvent") -> int:
        """Número de subcanais compartilhados com outra transmissão do mesmo subquadro."""
        if other.subframe != self.subframe:
            return 0
        return max(0, min(self.subchannel_stop, other.subchannel_stop) - max(self.subchannel_start, other.subchannel_start))


class FailureCause(str, Enum):
    HALF_DUPLEX = "half_duplex"
    BELOW_SENSITIVITY = "below_sensitivity"
    SINR_FAIL = "sinr_fail"
    COLLISION_SAME_RESOURCE = "collision_same_resource"


# Códigos inteiros usados nos arrays vetorizados (0 = sucesso)
FAILURE_CODES = {
    None: 0,
    FailureCause.HALF_DUPLEX: 1,
    FailureCause.BELOW_SENSITIVITY: 2,
    FailureCause.SINR_FAIL: 3,
    FailureCause.COLLISION_SAME_RESOURCE: 4,
}
CAUSE_BY_CODE = {code: cause for cause, code in FAILURE_CODES.items()}


@dataclass(frozen=True, slots=True)
class ReceptionOutcome:
    packet_id: int
    tx_vue: int
    rx_vue: int
    success: bool
    sinr_db: float
    failure_cause: Optional[FailureCause] = None

    def __post_init__(self):
        if self.success and self.failure_cause is not None:
            raise ValueError("recepção bem-sucedida não pode ter causa de falha")


@dataclass(frozen=True, slots=True)
class LinkSample:
    tx_vue: int
    rx_vue: int
    distance_m: float
    rx_power_dbm: float
    subframe_index: int


@dataclass(slots=True)
class VuePose:
    vue_id: int
    lane: int
    longitudinal_m: float
    direction: int
