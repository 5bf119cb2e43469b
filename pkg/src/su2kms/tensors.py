"""Spherical tensor operators as sector-block matrices.

Builders assemble each local term directly in the bit-string sector bases;
nothing 2^N by 2^N is ever materialized.  Lowered/raised components divide by
the ladder normalization sqrt(k(k+1) - q(q -+ 1)), so every component carries
standard spherical-tensor normalization; the normalization cancels in every
log-ratio and only rescales raw correlator magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ModelConfig, OperatorBlock, build_s_minus, build_s_plus
from .errors import BottomComponent, TopComponent
from .halfint import HalfInt
from .su2 import CgKey, cg

__all__ = [
    "SphericalTensor",
    "ReducedElementTable",
    "build_t00",
    "build_t20",
    "build_t44",
    "build_t10_site",
    "lower",
    "raise_",
    "reduced_elements",
]


@dataclass(frozen=True)
class SphericalTensor:
    """One (k, q) component, stored as blocks keyed by source magnetization."""

    k: HalfInt
    q: HalfInt
    blocks: dict = field(repr=False)
    label: str = ""

    def block(self, m) -> OperatorBlock | None:
        return self.blocks.get(HalfInt.of(m))

    def scaled(self, c: float) -> "SphericalTensor":
        out = {
            m: OperatorBlock(b.source_m, b.target_m, c * b.matrix)
            for m, b in self.blocks.items()
        }
        return SphericalTensor(self.k, self.q, out, f"{c}*{self.label}")


@dataclass(frozen=True)
class ReducedElementTable:
    """Reduced matrix elements keyed by (target multiplet, source multiplet).

    `residual` is the worst spread of one reduced element across the (m, q)
    observations that produced it: the Wigner-Eckart inconsistency.
    """

    entries: dict
    residual: float


def _diag_offdiag_tensor(sectors, k, diag_w, off_w, scale, label) -> SphericalTensor:
    """Sum over nearest-neighbor bonds of diag_w*zz + off_w*(hop + h.c.), times scale."""
    blocks = {}
    for m, sector in sectors.items():
        n = sector.n_sites
        dim = sector.dim
        mat = np.zeros((dim, dim))
        for i in range(dim):
            st = int(sector.states[i])
            diag = 0.0
            for j in range(n):
                a, b = j, (j + 1) % n
                if ((st >> a) ^ (st >> b)) & 1:
                    diag -= diag_w
                    mat[sector.index_of[st ^ ((1 << a) | (1 << b))], i] += off_w
                else:
                    diag += diag_w
            mat[i, i] += diag
        blocks[m] = OperatorBlock(m, m, scale * mat)
    return SphericalTensor(HalfInt.of(k), HalfInt(0), blocks, label)


def build_t00(config: ModelConfig, sectors) -> SphericalTensor:
    """Scalar bond operator: (-1/(12N)) sum_j [2(hop + h.c.) + zz]."""
    return _diag_offdiag_tensor(
        sectors, 0, 1.0, 2.0, -1.0 / (12.0 * config.n_sites), "T00"
    )


def build_t20(config: ModelConfig, sectors) -> SphericalTensor:
    """Rank-2, q=0 bond operator: (1/(sqrt(24) N)) sum_j [zz - (hop + h.c.)]."""
    return _diag_offdiag_tensor(
        sectors, 2, 1.0, -1.0, 1.0 / (math.sqrt(24.0) * config.n_sites), "T20"
    )


def build_t44(config: ModelConfig, sectors) -> SphericalTensor:
    """Top component of the rank-4 family: (1/N) sum_j four consecutive raisers."""
    n = config.n_sites
    blocks = {}
    for m, sector in sorted(sectors.items(), key=lambda kv: kv[0].twice):
        m_t = m + 4
        target = sectors.get(m_t)
        if target is None:
            continue
        mat = np.zeros((target.dim, sector.dim))
        for i in range(sector.dim):
            st = int(sector.states[i])
            for j in range(n):
                sites = [(j + d) % n for d in range(4)]
                mask = 0
                for a in sites:
                    mask |= 1 << a
                if st & mask == 0:
                    mat[target.index_of[st | mask], i] += 1.0 / n
        if np.any(mat):
            blocks[m] = OperatorBlock(m, m_t, mat)
    return SphericalTensor(HalfInt.of(4), HalfInt.of(4), blocks, "T44")


def build_t10_site(config: ModelConfig, sectors, site: int = 0) -> SphericalTensor:
    """Single-site sigma_z as a rank-1, q=0 tensor (handy local vector operator)."""
    blocks = {}
    for m, sector in sectors.items():
        diag = np.where((sector.states >> site) & 1 == 1, 1.0, -1.0)
        blocks[m] = OperatorBlock(m, m, np.diag(diag))
    return SphericalTensor(HalfInt.of(1), HalfInt(0), blocks, f"sigma_z[{site}]")


def _ladder_component(t: SphericalTensor, sectors, up: bool) -> SphericalTensor:
    k, q = t.k, t.q
    if up and q == k:
        raise TopComponent(f"cannot raise q={q} of a rank-{k} tensor")
    if not up and q == -k:
        raise BottomComponent(f"cannot lower q={q} of a rank-{k} tensor")
    q_new = q + 1 if up else q - 1
    factor = math.sqrt(k.casimir() - float(q) * float(q_new))
    build_ladder = build_s_plus if up else build_s_minus
    n = next(iter(sectors.values())).n_sites

    def sblock(m_from):
        m_to = m_from + 1 if up else m_from - 1
        if m_from not in sectors or m_to not in sectors:
            return None
        return build_ladder(sectors[m_from], sectors[m_to]).matrix

    blocks = {}
    for m in sorted(sectors, key=lambda h: h.twice):
        m_t = m + q_new
        if abs(m_t.twice) > n:
            continue
        acc = None
        blk = t.block(m)
        if blk is not None:
            s_out = sblock(m + q)
            if s_out is not None:
                acc = s_out @ blk.matrix
        # Commutator second term: for lowering, [S-, T](m) = S- T(m) - T(m-1) S-(m).
        prev = t.block(m + 1) if up else t.block(m - 1)
        s_in = sblock(m)
        if prev is not None and s_in is not None:
            term = prev.matrix @ s_in
            acc = term * -1.0 if acc is None else acc - term
        if acc is None or not np.any(acc):
            continue
        blocks[m] = OperatorBlock(m, m_t, acc / factor)
    return SphericalTensor(k, q_new, blocks, f"{'raise' if up else 'lower'}({t.label})")


def lower(t: SphericalTensor, sectors) -> SphericalTensor:
    """[S_-, T^(k)_q] / sqrt(k(k+1) - q(q-1)): the standard T^(k)_{q-1}."""
    return _ladder_component(t, sectors, up=False)


def raise_(t: SphericalTensor, sectors) -> SphericalTensor:
    """[S_+, T^(k)_q] / sqrt(k(k+1) - q(q+1)): the standard T^(k)_{q+1}."""
    return _ladder_component(t, sectors, up=True)


def reduced_elements(t: SphericalTensor, systems, cg_floor: float = 1e-12) -> ReducedElementTable:
    """Wigner-Eckart reduced elements <alpha||T||alpha'> extracted per sector pair.

    Requires multiplet-linked systems (see `laddered_systems`), so one reduced
    element can be compared across every m where its Clebsch-Gordan factor is
    above `cg_floor`.
    """
    k, q = t.k, t.q
    seen: dict = {}
    for m in sorted(t.blocks, key=lambda h: h.twice):
        if m not in systems:
            continue
        src = systems[m]
        tgt = systems.get(m + q)
        if tgt is None:
            continue
        if src.multiplets is None or tgt.multiplets is None:
            raise ValueError("reduced_elements needs multiplet-linked systems")
        mat = tgt.vectors.T @ (t.blocks[m].matrix @ src.vectors)
        for i in range(tgt.n):
            s_i = tgt.spins[i]
            for j in range(src.n):
                c = cg(CgKey(s1=src.spins[j], m1=m, s2=k, m2=q, S=s_i, M=m + q))
                if abs(c) < cg_floor:
                    continue
                key = (tgt.multiplets[i], src.multiplets[j])
                seen.setdefault(key, []).append(mat[i, j] / c)
    entries = {key: math.fsum(vals) / len(vals) for key, vals in seen.items()}
    residual = max(
        (max(vals) - min(vals) for vals in seen.values() if len(vals) > 1),
        default=0.0,
    )
    return ReducedElementTable(entries=entries, residual=residual)
