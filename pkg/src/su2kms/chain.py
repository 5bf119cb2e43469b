"""Fixed-magnetization bases of an N-qubit ring and dense operator blocks.

Conventions: Pauli matrices have eigenvalues +-1, S_z = (1/2) sum_j sigma_z^(j),
so each qubit contributes +-1/2 to m.  Basis bit-strings ascend as unsigned
integers with site 1 at the least significant bit; bit value 1 means spin up.
All operators here are real in this basis, so blocks are float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMagnetization
from .halfint import HalfInt

__all__ = [
    "ModelConfig",
    "SpinSector",
    "OperatorBlock",
    "build_sector",
    "build_all_sectors",
    "build_hamiltonian",
    "build_s2",
    "build_sz",
    "build_s_plus",
    "build_s_minus",
]


@dataclass(frozen=True)
class ModelConfig:
    """Ring Hamiltonian parameters.

    n_sites >= 6 is required: for N < 6 the next-nearest-neighbor pairs in the
    coupling sum repeat, which would silently double-count bonds.
    """

    n_sites: int
    coupling_j: float = 1.0
    lambda_mix: float = 0.25

    def __post_init__(self):
        if self.n_sites < 6:
            raise ValueError("n_sites must be >= 6 (next-nearest bonds repeat below that)")
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise ValueError("lambda_mix must lie in [0, 1]")


@dataclass(frozen=True)
class SpinSector:
    """Ordered computational basis of one S_z sector."""

    n_sites: int
    m: HalfInt
    states: np.ndarray = field(repr=False)
    index_of: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class OperatorBlock:
    """Dense matrix of an operator from one sector to another (rows: target)."""

    source_m: HalfInt
    target_m: HalfInt
    matrix: np.ndarray = field(repr=False)


def build_sector(n_sites: int, m) -> SpinSector:
    """Enumerate the bit-string basis of the magnetization-m sector."""
    m = HalfInt.of(m)
    if (n_sites + m.twice) % 2 != 0:
        raise InvalidMagnetization(f"m={m} has wrong parity for N={n_sites}")
    if abs(m.twice) > n_sites:
        raise InvalidMagnetization(f"|m|={abs(m.twice)/2} exceeds N/2={n_sites/2}")
    n_up = (n_sites + m.twice) // 2
    all_states = np.arange(1 << n_sites, dtype=np.uint64)
    states = all_states[np.bitwise_count(all_states) == n_up].astype(np.int64)
    index_of = {int(s): i for i, s in enumerate(states)}
    return SpinSector(n_sites=n_sites, m=m, states=states, index_of=index_of)


def build_all_sectors(n_sites: int) -> dict:
    """All sectors keyed by m, from -N/2 to N/2."""
    return {
        HalfInt(t): build_sector(n_sites, HalfInt(t))
        for t in range(-n_sites, n_sites + 1, 2)
    }


def _bond_list(n_sites: int, lam: float):
    bonds = []
    for j in range(n_sites):
        bonds.append((j, (j + 1) % n_sites, lam))
        bonds.append((j, (j + 2) % n_sites, 1.0 - lam))
    return bonds


def build_hamiltonian(config: ModelConfig, sector: SpinSector) -> OperatorBlock:
    """H = -(J/2) sum_j [lam sig_j.sig_{j+1} + (1-lam) sig_j.sig_{j+2}], periodic.

    Each Heisenberg bond contributes sigma_z sigma_z on the diagonal and a
    two-site swap with amplitude 2 off the diagonal; the result is real
    symmetric by construction.
    """
    if sector.n_sites != config.n_sites:
        raise ValueError("sector was built for a different site count")
    bonds = _bond_list(config.n_sites, config.lambda_mix)
    dim = sector.dim
    h = np.zeros((dim, dim))
    states = sector.states
    index_of = sector.index_of
    for i in range(dim):
        st = int(states[i])
        diag = 0.0
        for a, b, w in bonds:
            if ((st >> a) ^ (st >> b)) & 1:
                diag -= w
                h[index_of[st ^ ((1 << a) | (1 << b))], i] += 2.0 * w
            else:
                diag += w
        h[i, i] += diag
    h *= -config.coupling_j / 2.0
    return OperatorBlock(source_m=sector.m, target_m=sector.m, matrix=h)


def build_s2(sector: SpinSector) -> OperatorBlock:
    """Total-spin Casimir S^2 restricted to one sector.

    Within a fixed-m sector, S^2 = (N/2 + m^2) I + sum_{i<j} swap_ij, where the
    swap acts only on anti-aligned pairs.
    """
    n = sector.n_sites
    dim = sector.dim
    mat = np.zeros((dim, dim))
    const = n / 2.0 + float(sector.m) ** 2
    states = sector.states
    index_of = sector.index_of
    for i in range(dim):
        st = int(states[i])
        mat[i, i] += const
        for a in range(n):
            for b in range(a + 1, n):
                if ((st >> a) ^ (st >> b)) & 1:
                    mat[index_of[st ^ ((1 << a) | (1 << b))], i] += 1.0
    return OperatorBlock(source_m=sector.m, target_m=sector.m, matrix=mat)


def build_sz(sector: SpinSector) -> OperatorBlock:
    """S_z, which is m times the identity on its own sector."""
    mat = float(sector.m) * np.eye(sector.dim)
    return OperatorBlock(source_m=sector.m, target_m=sector.m, matrix=mat)


def _ladder_block(sector: SpinSector, target: SpinSector, raising: bool) -> OperatorBlock:
    mat = np.zeros((target.dim, sector.dim))
    n = sector.n_sites
    for i in range(sector.dim):
        st = int(sector.states[i])
        for a in range(n):
            bit = (st >> a) & 1
            if raising and not bit:
                mat[target.index_of[st | (1 << a)], i] += 1.0
            elif not raising and bit:
                mat[target.index_of[st & ~(1 << a)], i] += 1.0
    return OperatorBlock(source_m=sector.m, target_m=target.m, matrix=mat)


def build_s_plus(sector: SpinSector, target: SpinSector | None = None) -> OperatorBlock:
    """Total raising operator sum_j sigma_+^(j), mapping m to m+1.

    At the top sector the operator is the zero block with an empty target.
    """
    m_t = sector.m + 1
    if m_t.twice > sector.n_sites:
        return OperatorBlock(sector.m, m_t, np.zeros((0, sector.dim)))
    if target is None:
        target = build_sector(sector.n_sites, m_t)
    return _ladder_block(sector, target, raising=True)


def build_s_minus(sector: SpinSector, target: SpinSector | None = None) -> OperatorBlock:
    """Total lowering operator sum_j sigma_-^(j), mapping m to m-1."""
    m_t = sector.m - 1
    if -m_t.twice > sector.n_sites:
        return OperatorBlock(sector.m, m_t, np.zeros((0, sector.dim)))
    if target is None:
        target = build_sector(sector.n_sites, m_t)
    return _ladder_block(sector, target, raising=False)
