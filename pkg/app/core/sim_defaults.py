"""
Parâmetros padrão do simulador de sidelink LTE-V2X Modo 4.
Este arquivo centraliza todos os valores (tabela de parâmetros de simulação e
constantes de projeto de cada módulo) para facilitar ajustes.
"""

# Parâmetros de simulação de referência
PACKET_SIZE_BYTES = 190
TX_POWER_BASELINE_DBM = 23.0
TX_FREQUENCY_BASELINE_HZ = 10
MCS_INDEX = 5
CARRIER_FREQUENCY_GHZ = 5.89
CBR_THRESHOLD_DBM = -92.0
BANDWIDTHS_MHZ = (10, 20)
ANTENNA_HEIGHT_M = 1.6
ROAD_LENGTH_M = 4800.0
LANES = 6
SPEED_MPS = 30.0  # 108 km/h
DURATION_MS = 100_000
CBR_INTERVAL_MS = 100

# Presets de densidade (veículos / 100 m)
DENSITY_PRESETS = {
    "low": 13.2,
    "heavy": 83.2,
}

# Grade de recursos
RB_PER_BANDWIDTH = {
    10: 50,
    20: 100,
}
SUBCHANNEL_SIZE_RB = 10
RB_BANDWIDTH_HZ = 180_000
PSCCH_RB = 2  # RBs do canal de controle adjacente a cada transmissão

# Tabela TBS (3GPP 36.213, Tabela 7.1.7.2.1-1), linhas I_TBS 0..10, N_PRB 1..20.
# Para o sidelink com QPSK, MCS 0..10 mapeia direto em I_TBS.
TBS_TABLE = {
    0: [16, 32, 56, 88, 120, 152, 176, 208, 224, 256, 288, 328, 344, 376, 392, 424, 456, 488, 504, 536],
    1: [24, 56, 88, 144, 176, 208, 224, 256, 328, 344, 376, 424, 456, 488, 520, 568, 600, 632, 680, 712],
    2: [32, 72, 144, 176, 208, 256, 296, 328, 376, 424, 472, 520, 568, 616, 648, 696, 744, 776, 840, 872],
    3: [40, 104, 176, 208, 256, 328, 392, 440, 504, 568, 616, 680, 744, 808, 872, 904, 968, 1032, 1096, 1160],
    4: [56, 120, 208, 256, 328, 408, 488, 552, 632, 696, 776, 840, 904, 1000, 1064, 1128, 1192, 1256, 1320, 1384],
    5: [72, 144, 224, 328, 424, 504, 600, 680, 776, 872, 968, 1032, 1128, 1224, 1320, 1384, 1480, 1544, 1672, 1736],
    6: [88, 176, 256, 392, 504, 600, 712, 808, 936, 1032, 1128, 1224, 1352, 1480, 1544, 1672, 1736, 1864, 1992, 2088],
    7: [104, 224, 328, 472, 584, 712, 840, 968, 1096, 1224, 1320, 1480, 1608, 1672, 1800, 1928, 2088, 2216, 2344, 2472],
    8: [120, 256, 392, 536, 680, 808, 968, 1096, 1256, 1384, 1544, 1672, 1800, 1928, 2088, 2216, 2344, 2536, 2664, 2792],
    9: [136, 296, 456, 616, 776, 936, 1096, 1256, 1416, 1544, 1736, 1864, 2024, 2216, 2344, 2536, 2664, 2856, 2984, 3112],
    10: [144, 328, 504, 680, 872, 1032, 1224, 1384, 1544, 1736, 1928, 2088, 2216, 2408, 2600, 2728, 2984, 3112, 3240, 3496],
}

# Canal (modelo log-distância de dois segmentos)
CHANNEL_DEFAULTS = {
    "pl0_db": 47.0,
    "exponent_near": 2.75,
    "exponent_far": 3.5,
    "breakpoint_m": 200.0,
    "shadowing_sigma_db": 3.0,
    "shadowing_decorrelation_m": 10.0,
    "noise_figure_db": 5.0,
    "thermal_noise_density_dbm_hz": -174.0,
    "sensitivity_dbm": -103.5,
    "sinr_threshold_db": 5.0,
    "bler_slope_db": 1.0,
}

# SB-SPS
MAC_DEFAULTS = {
    "sensing_window_ms": 1000,
    "selection_t1_ms": 4,
    "selection_t2_ms": 100,
    "rsrp_threshold_dbm": -128.0,
    "rsrp_step_db": 3.0,
    "min_candidate_ratio": 0.2,
    "reselection_counter_min": 5,
    "reselection_counter_max": 15,
    "keep_probability": 0.8,
    "unmeasurable_step_ms": 100,
    "rssi_ranking": True,
}

# Controle de congestionamento (características de ativação taxa/potência)
CONGESTION_DEFAULTS = {
    "itt_min_ms": 100,
    "itt_max_ms": 600,
    "density_activation_per_100m": 30.0,
    "itt_filter_coefficient": 0.5,
    "power_min_dbm": 10.0,
    "power_max_dbm": 23.0,
    "cbr_knee_low": 0.65,
    "cbr_knee_high": 0.80,
    "density_radius_m": 100.0,
    "density_update_ms": 1000,
}

# Transmissões one-shot
ONESHOT_DEFAULTS = {
    "oneshot_counter_min": 2,
    "oneshot_counter_max": 6,
}

# Cenário
SCENARIO_DEFAULTS = {
    "lane_width_m": 4.0,
    "min_headway_m": 5.0,
}

# Métricas
PRR_BIN_WIDTH_M = 100.0
PRR_MAX_RANGE_M = 1000.0
IA_BINS_M = {
    "0-200": (0.0, 200.0),
    "200-300": (200.0, 300.0),
}
IA_CCDF_RESOLUTION_MS = 10

# Fluxos de números aleatórios nomeados (o ID entra na semente de cada fluxo)
RNG_STREAMS = {
    "placement": 1,
    "traffic": 2,
    "shadowing": 3,
    "scheduler": 4,
    "oneshot": 5,
    "reception": 6,
}

# Nomes aceitos para os esquemas de controle
SCHEME_ALIASES = {
    "cc": "cc_rate_power",
    "rc_only": "rate_only",
}
