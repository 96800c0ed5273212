"""
Rodovia bidirecional com velocidade constante.

As faixas 0..lanes/2-1 seguem no sentido +1 e as demais no sentido −1. Em
modo anel (wraparound) a distância longitudinal é medida no toro; em modo
finito os veículos reentram pela outra ponta mas a distância é linear.
"""
from typing import List

import numpy as np

from app.core.errors import ConfigurationError
from app.core.logging import engine_logger, log_structured_data
from app.schemas.events import VuePose
from app.schemas.simulation import ScenarioConfig


def lane_direction(lane: int, lanes: int) -> int:
    return 1 if lane < (lanes + 1) // 2 else -1


def vehicles_per_lane(cfg: ScenarioConfig) -> List[int]:
    total = cfg.vehicle_count
    base, extra = divmod(total, cfg.lanes)
    return [base + (1 if lane < extra else 0) for lane in range(cfg.lanes)]


def spawn(cfg: ScenarioConfig, rng: np.random.Generator) -> List[VuePose]:
    """
    Posiciona os veículos uniformemente em cada faixa, respeitando a distância
    mínima entre veículos consecutivos.

    Raises:
        ConfigurationError: densidade inviável para a distância mínima
    """
    if cfg.density_veh_per_100m <= 0:
        raise ConfigurationError("density_veh_per_100m deve ser positiva")
    poses: List[VuePose] = []
    for lane, count in enumerate(vehicles_per_lane(cfg)):
        if count == 0:
            continue
        free_length = cfg.road_length_m - count * cfg.min_headway_m
        if free_length < 0:
            raise ConfigurationError(
                f"{count} veículos não cabem na faixa {lane} de {cfg.road_length_m:g} m "
                f"com distância mínima de {cfg.min_headway_m:g} m"
            )
        offsets = np.sort(rng.uniform(0.0, free_length, size=count))
        positions = offsets + np.arange(count) * cfg.min_headway_m
        direction = lane_direction(lane, cfg.lanes)
        for position in positions:
            poses.append(VuePose(vue_id=len(poses), lane=lane, longitudinal_m=float(position), direction=direction))
    log_structured_data(engine_logger, "info", "Cenário posicionado",
                        {"vehicles": len(poses), "density_veh_per_100m": cfg.density_veh_per_100m,
                         "road_length_m": cfg.road_length_m})
    return poses


def advance(poses: List[VuePose], dt_ms: int, cfg: ScenarioConfig) -> List[VuePose]:
    """Avança cada veículo direction × speed × dt, módulo o comprimento da via."""
    step = cfg.speed_mps * dt_ms / 1000.0
    return [
        VuePose(
            vue_id=pose.vue_id,
            lane=pose.lane,
            longitudinal_m=float((pose.longitudinal_m + pose.direction * step) % cfg.road_length_m),
            direction=pose.direction,
        )
        for pose in poses
    ]


class Highway:
    """
    Estado vetorizado da frota. A posição em t é calculada a partir da
    posição inicial (sem acumular erro de arredondamento passo a passo).
    """

    def __init__(self, poses: List[VuePose], cfg: ScenarioConfig):
        self.cfg = cfg
        ordered = sorted(poses, key=lambda p: p.vue_id)
        self.initial_m = np.array([p.longitudinal_m for p in ordered], dtype=np.float64)
        self.lane = np.array([p.lane for p in ordered], dtype=np.int64)
        self.direction = np.array([p.direction for p in ordered], dtype=np.int64)
        self.lateral_m = self.lane * cfg.lane_width_m
        self.position_m = self.initial_m.copy()

    @property
    def size(self) -> int:
        return self.initial_m.size

    def move_to(self, time_ms: int) -> np.ndarray:
        displacement = self.direction * self.cfg.speed_mps * time_ms / 1000.0
        self.position_m = np.mod(self.initial_m + displacement, self.cfg.road_length_m)
        return self.position_m

    def poses(self) -> List[VuePose]:
        return [
            VuePose(int(i), int(self.lane[i]), float(self.position_m[i]), int(self.direction[i]))
            for i in range(self.size)
        ]

    def distances_from(self, sources: np.ndarray) -> np.ndarray:
        """Distâncias (len(sources), N) de cada fonte para todos os VUEs."""
        return pairwise_distance(
            self.position_m[sources], self.lateral_m[sources],
            self.position_m, self.lateral_m, self.cfg,
        )

    def all_distances(self) -> np.ndarray:
        return self.distances_from(np.arange(self.size))


def pairwise_distance(x_a: np.ndarray, y_a: np.ndarray, x_b: np.ndarray, y_b: np.ndarray,
                      cfg: ScenarioConfig) -> np.ndarray:
    """Distância euclidiana (len(a), len(b)); longitudinal no toro quando wraparound."""
    dx = np.abs(np.asarray(x_a, dtype=np.float64)[:, None] - np.asarray(x_b, dtype=np.float64)[None, :])
    if cfg.wraparound:
        dx = np.minimum(dx, cfg.road_length_m - dx)
    dy = np.asarray(y_a, dtype=np.float64)[:, None] - np.asarray(y_b, dtype=np.float64)[None, :]
    return np.hypot(dx, dy)


def pose_distance(a: VuePose, b: VuePose, cfg: ScenarioConfig) -> float:
    return float(pairwise_distance(
        np.array([a.longitudinal_m]), np.array([a.lane * cfg.lane_width_m]),
        np.array([b.longitudinal_m]), np.array([b.lane * cfg.lane_width_m]), cfg,
    )[0, 0])
