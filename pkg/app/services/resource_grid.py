"""
Estrutura tempo/frequência do pool de recursos do sidelink e mapeamento de
um BSM (SCI + TB) em subcanais.

O número de subcanais por pacote vem da tabela de TBS (TS 36.213): para o
sidelink em QPSK o índice MCS 0..10 é o próprio I_TBS. Cada transmissão
reserva 2 RBs para o PSCCH adjacente e o PSSCH usa o maior número de PRBs da
forma 2^a·3^b·5^c que cabe no restante.

Exemplo de derivação (190 bytes = 1520 bits, MCS 5, subcanais de 10 RBs):
    1 subcanal  -> 10 - 2 = 8 PRBs  -> TBS 680  (insuficiente)
    2 subcanais -> 20 - 2 = 18 PRBs -> TBS 1544 (>= 1520)  => 2 subcanais
"""
from functools import lru_cache
from typing import List

from app.core.errors import ConfigurationError
from app.core.sim_defaults import PSCCH_RB, TBS_TABLE
from app.schemas.events import ResourceId
from app.schemas.simulation import GridConfig, SimConfig


@lru_cache(maxsize=None)
def _dft_friendly(limit: int) -> int:
    """Maior inteiro <= limit cujos únicos fatores primos são 2, 3 e 5."""
    for candidate in range(limit, 0, -1):
        value = candidate
        for prime in (2, 3, 5):
            while value % prime == 0:
                value //= prime
        if value == 1:
            return candidate
    return 0


def transport_block_bits(mcs_index: int, n_prb: int) -> int:
    """
    TBS em bits para o par (I_TBS, N_PRB).

    Acima de 20 PRBs o valor é extrapolado linearmente a partir da coluna 20.
    """
    if mcs_index not in TBS_TABLE:
        raise ConfigurationError(f"mcs_index {mcs_index} fora da faixa suportada 0..{max(TBS_TABLE)}")
    if n_prb <= 0:
        return 0
    row = TBS_TABLE[mcs_index]
    if n_prb <= len(row):
        return row[n_prb - 1]
    return int(row[-1] * n_prb / len(row))


def subchannels_for_packet(payload_bytes: int, mcs_index: int, grid: GridConfig) -> int:
    """
    Número de subcanais adjacentes ocupados por um pacote.

    Args:
        payload_bytes: Tamanho do BSM em bytes
        mcs_index: Índice MCS (0..10)
        grid: Configuração da grade

    Returns:
        Menor k tal que o TBS de k subcanais comporta o pacote

    Raises:
        ConfigurationError: payload inválido ou que não cabe em um subquadro
    """
    if payload_bytes <= 0:
        raise ConfigurationError(f"payload_bytes deve ser positivo, recebido {payload_bytes}")
    payload_bits = payload_bytes * 8
    for k in range(1, grid.subchannels_per_subframe + 1):
        n_prb = _dft_friendly(k * grid.subchannel_size_rb - PSCCH_RB)
        if transport_block_bits(mcs_index, n_prb) >= payload_bits:
            return k
    raise ConfigurationError(
        f"pacote de {payload_bytes} bytes não cabe em um subquadro "
        f"({grid.subchannels_per_subframe} subcanais) com MCS {mcs_index}"
    )


def build_grid_config(config: SimConfig) -> GridConfig:
    """Constrói a GridConfig com subchannels_needed já calculado (constante na execução)."""
    base = config.grid_config()
    needed = subchannels_for_packet(base.payload_bytes, base.mcs_index, base)
    return base.model_copy(update={"subchannels_needed": needed})


def resources_in_window(start: int, end: int, grid: GridConfig) -> List[ResourceId]:
    """Todos os recursos de [start, end), ordenados por subquadro e depois por subcanal."""
    if start >= end:
        raise ValueError(f"janela vazia ou invertida: [{start}, {end})")
    return [
        ResourceId(subframe, subchannel)
        for subframe in range(start, end)
        for subchannel in range(grid.subchannels_per_subframe)
    ]
