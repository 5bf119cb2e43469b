"""Sector eigensystems: diagonalization, spin labeling, selection, and disk cache.

Spin labels are assigned after the fact: energies are grouped within a
tolerance, S^2 is diagonalized inside each degenerate group, and the rotated
vectors get sharp half-integer spins.  `laddered_systems` builds one base
sector and generates every other sector by applying total ladder operators,
which keeps multiplet members phase-consistent across sectors (required for
element-wise Wigner-Eckart identities when translation symmetry degenerates
the spectrum).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chain import (
    ModelConfig,
    build_hamiltonian,
    build_s2,
    build_s_minus,
    build_s_plus,
    build_sector,
)
from .errors import (
    ChecksumMismatch,
    CorruptCache,
    EmptySpinSubspace,
    SpinLabelFailure,
    VersionMismatch,
)
from .halfint import HalfInt

__all__ = [
    "DegeneracyPolicy",
    "EigenRecord",
    "EigenSystem",
    "diagonalize",
    "laddered_systems",
    "select_eigenstate",
    "thermal_energy",
    "eigenstate_window",
    "save_cache",
    "load_cache",
]

CACHE_MAGIC = b"KMS1"
CACHE_VERSION = 1


@dataclass(frozen=True)
class DegeneracyPolicy:
    """Tolerances for grouping degenerate energies and rounding spin labels.

    energy_tol defaults to 1e-9 * N (eigenvalue spread grows with N; this sits
    far below level spacings at desk scale but above eigensolver noise).
    """

    energy_tol: float | None = None
    spin_round_tol: float = 1e-4

    def resolved_energy_tol(self, n_sites: int) -> float:
        tol = 1e-9 * n_sites if self.energy_tol is None else self.energy_tol
        if tol <= 0 or self.spin_round_tol <= 0:
            raise ValueError("tolerances must be positive")
        return tol


@dataclass(frozen=True)
class EigenRecord:
    """One labeled eigenstate: energy, sharp spin, magnetization, coefficients."""

    energy: float
    spin: HalfInt
    m: HalfInt
    vector: np.ndarray
    multiplet: int | None = None


class EigenSystem:
    """All eigenstates of one sector, sorted by energy.

    Vectors are the columns of `vectors`; `multiplets` (when present) links
    records across sectors built by `laddered_systems`.
    """

    def __init__(self, config, m, energies, spins, vectors, multiplets=None):
        self.config = config
        self.m = HalfInt.of(m)
        self.energies = np.asarray(energies, dtype=np.float64)
        self.spins = list(spins)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.multiplets = None if multiplets is None else list(multiplets)
        if self.vectors.shape[1] != len(self.energies):
            raise ValueError("vector count does not match energy count")
        if len(self.spins) != len(self.energies):
            raise ValueError("spin count does not match energy count")
        self._records = None

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def records(self) -> list[EigenRecord]:
        if self._records is None:
            mult = self.multiplets or [None] * self.n
            self._records = [
                EigenRecord(
                    energy=float(self.energies[i]),
                    spin=self.spins[i],
                    m=self.m,
                    vector=self.vectors[:, i],
                    multiplet=mult[i],
                )
                for i in range(self.n)
            ]
        return self._records

    def spin_indices(self, s) -> np.ndarray:
        s = HalfInt.of(s)
        return np.array([i for i, sp in enumerate(self.spins) if sp == s], dtype=np.int64)


def _energy_groups(energies: np.ndarray, tol: float):
    """Split sorted energies into runs of consecutive near-degenerate values."""
    groups = []
    start = 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[i - 1] > tol:
            groups.append(range(start, i))
            start = i
    return groups


def _spin_from_casimir(x: float, tol: float, n_sites: int, m: HalfInt) -> HalfInt:
    raw = (math.sqrt(max(4.0 * x + 1.0, 0.0)) - 1.0) / 2.0
    twice = round(2.0 * raw)
    if abs(raw - twice / 2.0) > tol:
        raise SpinLabelFailure(f"<S^2>={x} gives s={raw}, not near a half-integer")
    s = HalfInt(int(twice))
    if s.twice < abs(m.twice) or s.twice > n_sites:
        raise SpinLabelFailure(f"labeled spin {s} out of range for m={m}, N={n_sites}")
    return s


def _fix_signs(vectors: np.ndarray) -> None:
    """Deterministic gauge: the largest-magnitude entry of each column is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    flips = vectors[idx, np.arange(vectors.shape[1])] < 0
    vectors[:, flips] *= -1.0


def diagonalize(config: ModelConfig, m, policy: DegeneracyPolicy | None = None) -> EigenSystem:
    """Dense eigendecomposition of one sector with sharp spin labels."""
    policy = policy or DegeneracyPolicy()
    m = HalfInt.of(m)
    tol = policy.resolved_energy_tol(config.n_sites)
    sector = build_sector(config.n_sites, m)
    h = build_hamiltonian(config, sector).matrix
    energies, vectors = scipy.linalg.eigh(h, check_finite=False)
    s2 = build_s2(sector).matrix
    s2v = s2 @ vectors

    spins: list[HalfInt] = []
    for group in _energy_groups(energies, tol):
        idx = list(group)
        if len(idx) == 1:
            i = idx[0]
            x = float(vectors[:, i] @ s2v[:, i])
            spins.append(_spin_from_casimir(x, policy.spin_round_tol, config.n_sites, m))
            continue
        sub = vectors[:, idx].T @ s2v[:, idx]
        sub = 0.5 * (sub + sub.T)
        vals, rot = scipy.linalg.eigh(sub, check_finite=False)
        vectors[:, idx] = vectors[:, idx] @ rot
        s2v[:, idx] = s2v[:, idx] @ rot
        group_spins = [
            _spin_from_casimir(float(v), policy.spin_round_tol, config.n_sites, m)
            for v in vals
        ]
        # Keep a deterministic order inside the degenerate group: by spin.
        order = sorted(range(len(idx)), key=lambda j: group_spins[j].twice)
        vectors[:, idx] = vectors[:, [idx[j] for j in order]]
        s2v[:, idx] = s2v[:, [idx[j] for j in order]]
        spins.extend(group_spins[j] for j in order)
    _fix_signs(vectors)
    return EigenSystem(config, m, energies, spins, vectors)


def laddered_systems(config: ModelConfig, policy: DegeneracyPolicy | None = None) -> dict:
    """Eigensystems for every sector, generated from one base by S_+/S_-.

    The base sector (m=0 for even N, m=1/2 for odd) is diagonalized once;
    every other sector's vectors are normalized ladder images, so the member
    of a multiplet at any m carries a consistent Condon-Shortley phase and a
    shared `multiplet` id.
    """
    base_m = HalfInt(0) if config.n_sites % 2 == 0 else HalfInt(1)
    base = diagonalize(config, base_m, policy)
    base.multiplets = list(range(base.n))
    base._records = None
    systems = {base_m: base}

    def ladder(cur: EigenSystem, up: bool) -> EigenSystem:
        m_new = cur.m + 1 if up else cur.m - 1
        sec_cur = build_sector(config.n_sites, cur.m)
        sec_new = build_sector(config.n_sites, m_new)
        op = (build_s_plus if up else build_s_minus)(sec_cur, sec_new).matrix
        keep = [i for i, s in enumerate(cur.spins) if s.twice >= abs(m_new.twice)]
        raw = op @ cur.vectors[:, keep]
        norms = np.linalg.norm(raw, axis=0)
        return EigenSystem(
            config,
            m_new,
            cur.energies[keep],
            [cur.spins[i] for i in keep],
            raw / norms,
            [cur.multiplets[i] for i in keep],
        )

    cur = base
    while cur.m.twice < config.n_sites:
        cur = ladder(cur, up=True)
        systems[cur.m] = cur
    cur = base
    while cur.m.twice > -config.n_sites:
        cur = ladder(cur, up=False)
        systems[cur.m] = cur
    return systems


def thermal_energy(system: EigenSystem, s, beta: float) -> float:
    """Boltzmann-averaged energy over the spin-s subspace, overflow-shifted."""
    idx = system.spin_indices(s)
    if len(idx) == 0:
        raise EmptySpinSubspace(f"no eigenstates with s={HalfInt.of(s)} in m={system.m}")
    e = system.energies[idx]
    w = np.exp(-beta * (e - e.min()))
    num = math.fsum(ei * wi for ei, wi in zip(e, w))
    den = math.fsum(w)
    return num / den


def select_eigenstate(system: EigenSystem, s, beta: float) -> int:
    """Index of the spin-s record closest in energy to the thermal average.

    Ties break toward lower energy (records are energy-sorted and argmin takes
    the first minimum).
    """
    target = thermal_energy(system, s, beta)
    idx = system.spin_indices(s)
    return int(idx[np.argmin(np.abs(system.energies[idx] - target))])


def eigenstate_window(system: EigenSystem, s, beta: float, window: float) -> list[int]:
    """All spin-s indices within window/2 of the thermal average energy.

    May be empty: at small N the thermal energy can fall into a gap of the
    spin-s level sequence (it does for s=0 at N=10).  See
    `eigenstate_window_selected` for the variant anchored at the selected
    eigenstate, which always contains at least that state.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    target = thermal_energy(system, s, beta)
    idx = system.spin_indices(s)
    return [int(i) for i in idx if abs(system.energies[i] - target) <= window / 2.0]


def eigenstate_window_selected(system: EigenSystem, s, beta: float, window: float) -> list[int]:
    """Spin-s indices within window/2 of the `select_eigenstate` energy."""
    if window <= 0:
        raise ValueError("window must be positive")
    center = float(system.energies[select_eigenstate(system, s, beta)])
    idx = system.spin_indices(s)
    return [int(i) for i in idx if abs(system.energies[i] - center) <= window / 2.0]


def _header_bytes(system: EigenSystem, checksum: str) -> bytes:
    header = {
        "checksum": checksum,
        "config": {
            "coupling_j": system.config.coupling_j,
            "lambda_mix": system.config.lambda_mix,
            "n_sites": system.config.n_sites,
        },
        "dim": system.dim,
        "format": CACHE_VERSION,
        "m_twice": system.m.twice,
        "multiplets": system.multiplets,
        "n_records": system.n,
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode()


def _payload_bytes(system: EigenSystem) -> bytes:
    energies = np.ascontiguousarray(system.energies, dtype="<f8")
    spins = np.array([s.twice for s in system.spins], dtype="<f8")
    vectors = np.ascontiguousarray(system.vectors.T, dtype="<f8")
    return energies.tobytes() + spins.tobytes() + vectors.tobytes()


def save_cache(system: EigenSystem, path) -> None:
    """Write magic, version, JSON header, then raw little-endian float64 arrays.

    The destination is claimed with an exclusive create, so an unserialized
    concurrent writer fails loudly instead of silently racing (remove a stale
    file before rewriting it).  Content then lands via an atomic rename; a
    crash between the two leaves an empty file that loads as CorruptCache.
    """
    payload = _payload_bytes(system)
    checksum = hashlib.sha256(payload).hexdigest()
    header = _header_bytes(system, checksum)
    blob = CACHE_MAGIC + struct.pack("<I", CACHE_VERSION)
    blob += struct.pack("<Q", len(header)) + header + payload
    claim = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o644)
    os.close(claim)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o644)
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        if os.path.exists(path) and os.path.getsize(path) == 0:
            os.unlink(path)
        raise


def load_cache(path) -> EigenSystem:
    """Read a cache file back; checksum and version are verified."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise
    if len(blob) < 16 or blob[:4] != CACHE_MAGIC:
        raise CorruptCache(f"{path}: bad magic or truncated preamble")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != CACHE_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {CACHE_VERSION}")
    (hlen,) = struct.unpack("<Q", blob[8:16])
    if len(blob) < 16 + hlen:
        raise CorruptCache(f"{path}: truncated header")
    try:
        header = json.loads(blob[16 : 16 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCache(f"{path}: unreadable header ({exc})")
    payload = blob[16 + hlen :]
    n, dim = header["n_records"], header["dim"]
    expected = 8 * (n + n + n * dim)
    if len(payload) != expected:
        raise CorruptCache(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    if hashlib.sha256(payload).hexdigest() != header["checksum"]:
        raise ChecksumMismatch(f"{path}: payload checksum mismatch")
    energies = np.frombuffer(payload[: 8 * n], dtype="<f8")
    spins_twice = np.frombuffer(payload[8 * n : 16 * n], dtype="<f8")
    vectors = np.frombuffer(payload[16 * n :], dtype="<f8").reshape(n, dim).T.copy()
    cfg = ModelConfig(**header["config"])
    return EigenSystem(
        cfg,
        HalfInt(header["m_twice"]),
        energies.copy(),
        [HalfInt(int(t)) for t in spins_twice],
        vectors,
        header.get("multiplets"),
    )
