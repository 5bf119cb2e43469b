"""Fine-grained dynamical and thermal correlators, log-ratios, and KMS diagnostics.

A peak list resolves every transition by (Omega, dm, ds); binning puts bin
edges at integer multiples of the width, so +Omega and -Omega bins mirror each
other and the log-ratio pairing of bin n with bin -n-1 is unambiguous.  The
exact KMS statement holds peak by peak; a finite-width bin mixes frequencies,
so binned log-ratios of a thermal state track beta*(Omega - mu dm - gamma ds)
only to O(beta * bin_width) unless every occupied bin is mono-frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import EmptyWindow, GridMismatch, NoBinsInRange
from .halfint import HalfInt
from .spectral import EigenSystem, eigenstate_window, eigenstate_window_selected
from .su2 import m3_shift
from .tensors import SphericalTensor

__all__ = [
    "ThermoParams",
    "PeakList",
    "FineGrainedCorrelator",
    "LogRatioCurve",
    "eigen_peaks",
    "static_correlator",
    "bin_peaks",
    "nats_peaks",
    "nats_kms_max_error",
    "log_ratio",
    "ensemble_log_ratio",
    "ensemble_log_ratios",
    "beta_eff",
    "delta_beta",
    "beta_gamma_eff",
    "delta_beta_gamma",
    "transport_log_ratio",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ThermoParams:
    """Modified thermal-state parameters (beta, mu, gamma)."""

    beta: float
    mu: float = 0.0
    gamma: float = 0.0

    def log_weight(self, energy, m_value, s_value):
        return -self.beta * (energy - self.mu * m_value - self.gamma * s_value)


@dataclass(frozen=True)
class PeakList:
    """Parallel arrays of transition peaks: frequency, (dm, ds) tags, weight."""

    omegas: np.ndarray = field(repr=False)
    dm_twice: np.ndarray = field(repr=False)
    ds_twice: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    origin: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.omegas)

    def __iter__(self):
        for i in range(len(self.omegas)):
            yield (
                float(self.omegas[i]),
                HalfInt(int(self.dm_twice[i])),
                HalfInt(int(self.ds_twice[i])),
                float(self.weights[i]),
            )

    def total_weight(self) -> float:
        return math.fsum(self.weights)


@dataclass
class FineGrainedCorrelator:
    """Binned fine-grained correlator: (dm, ds) -> {bin index -> weight/dw}.

    Bin n covers [n*dw, (n+1)*dw) with center (n+1/2)*dw.  `counts` tracks the
    number of peaks per bin.  `coarse()` sums the (dm, ds) channels in sorted
    key order; that order-fixed reduction *is* the un-fine-grained correlator,
    so the sum rule is exact in floating point.
    """

    bin_width: float
    bins: dict
    counts: dict
    origin: dict = field(default_factory=dict)

    def value(self, dm, ds, n: int) -> float:
        key = (HalfInt.of(dm).twice, HalfInt.of(ds).twice)
        return self.bins.get(key, {}).get(n, 0.0)

    def channels(self):
        return sorted(self.bins)

    def coarse(self) -> dict:
        out: dict = {}
        for key in sorted(self.bins):
            for n, v in self.bins[key].items():
                out[n] = out.get(n, 0.0) + v
        return out

    def total_weight(self) -> float:
        return math.fsum(
            v * self.bin_width for key in sorted(self.bins) for v in self.bins[key].values()
        )


@dataclass
class LogRatioCurve:
    """Per-bin mean/std/count of the log-ratio, with its analysis metadata."""

    omegas: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    counts: np.ndarray
    bin_index: np.ndarray
    bin_width: float
    k: HalfInt | None = None
    q: HalfInt | None = None
    ds: HalfInt | None = None
    s: HalfInt | None = None
    beta: float | None = None


def _partner_index(src: EigenSystem, alpha_index: int, tgt: EigenSystem, q: HalfInt):
    """Index in `tgt` of the same multiplet as record alpha_index of `src`."""
    if q.twice == 0:
        return alpha_index
    if src.multiplets is None or tgt.multiplets is None:
        raise ValueError(
            "q != 0 correlators need multiplet-linked systems (laddered_systems)"
        )
    mult = src.multiplets[alpha_index]
    for j, mj in enumerate(tgt.multiplets):
        if mj == mult:
            return j
    return None


def _check_pair(a: SphericalTensor, b: SphericalTensor):
    if (a.q + b.q).twice != 0:
        raise ValueError(f"operator components must be (-q, q); got {a.q}, {b.q}")


def eigen_peaks(a: SphericalTensor, b: SphericalTensor, systems, m, alpha_index: int) -> PeakList:
    """Dynamical fine-grained peaks of <alpha,m| a(t) b |alpha,m>.

    One peak per eigenstate alpha' != alpha of the target sector, at
    Omega = E' - E with weight 2*pi <a,m|A|a',m+q><a',m+q|B|a,m>, tagged
    (dm = q, ds = s' - s).  Degenerate alpha' with E' = E are kept.
    """
    _check_pair(a, b)
    m = HalfInt.of(m)
    q = b.q
    src = systems[m]
    if not 0 <= alpha_index < src.n:
        raise IndexError(f"alpha_index {alpha_index} outside 0..{src.n - 1}")
    rec_e = float(src.energies[alpha_index])
    rec_s = src.spins[alpha_index]
    origin = {
        "kind": "eigenstate",
        "m_twice": m.twice,
        "index": alpha_index,
        "energy": rec_e,
        "spin_twice": rec_s.twice,
    }
    tgt = systems.get(m + q)
    b_blk = b.block(m)
    a_blk = a.block(m + q)
    if tgt is None or b_blk is None or a_blk is None:
        z = np.empty(0)
        return PeakList(z, z.astype(np.int64), z.astype(np.int64), z, origin)
    vec = src.vectors[:, alpha_index]
    amp_b = tgt.vectors.T @ (b_blk.matrix @ vec)
    amp_a = tgt.vectors.T @ (a_blk.matrix.T @ vec)
    weights = TWO_PI * amp_a * amp_b
    keep = np.ones(tgt.n, dtype=bool)
    partner = _partner_index(src, alpha_index, tgt, q)
    if partner is not None:
        keep[partner] = False
    # Selection rule |ds| <= min(k, k'): outside it the weights are exact zeros
    # up to roundoff, so drop those channels from the list.
    ds_all = np.array([sp.twice - rec_s.twice for sp in tgt.spins], dtype=np.int64)
    keep &= np.abs(ds_all) <= min(a.k.twice, b.k.twice)
    omegas = tgt.energies[keep] - rec_e
    dm = np.full(len(omegas), q.twice, dtype=np.int64)
    return PeakList(omegas, dm, ds_all[keep], weights[keep], origin)


def static_correlator(a: SphericalTensor, b: SphericalTensor, systems, m, alpha_index: int) -> float:
    """2*pi (<a,m|A|a,m+q><a,m+q|B|a,m> - <a,m|A|a,m><a,m|B|a,m>).

    Identically zero at q = 0 (the two terms coincide) and whenever the
    multiplet has no member at m+q (s < |m+q|).
    """
    _check_pair(a, b)
    m = HalfInt.of(m)
    q = b.q
    if q.twice == 0:
        return 0.0
    src = systems[m]
    tgt = systems.get(m + q)
    b_blk = b.block(m)
    a_blk = a.block(m + q)
    if tgt is None or b_blk is None or a_blk is None:
        return 0.0
    partner = _partner_index(src, alpha_index, tgt, q)
    if partner is None:
        return 0.0
    vec = src.vectors[:, alpha_index]
    pvec = tgt.vectors[:, partner]
    return TWO_PI * float(vec @ (a_blk.matrix @ pvec)) * float(pvec @ (b_blk.matrix @ vec))


def bin_peaks(peaks: PeakList, bin_width: float) -> FineGrainedCorrelator:
    """Accumulate peaks into (dm, ds) channels of width-`bin_width` bins."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    bins: dict = {}
    counts: dict = {}
    ns = np.floor(peaks.omegas / bin_width).astype(np.int64)
    for i in range(len(peaks)):
        key = (int(peaks.dm_twice[i]), int(peaks.ds_twice[i]))
        n = int(ns[i])
        ch = bins.setdefault(key, {})
        ch[n] = ch.get(n, 0.0) + peaks.weights[i] / bin_width
        cc = counts.setdefault(key, {})
        cc[n] = cc.get(n, 0) + 1
    return FineGrainedCorrelator(bin_width, bins, counts, dict(peaks.origin))


def _nats_log_probs(systems, thermo: ThermoParams):
    """Per-sector occupation probabilities of the modified thermal state."""
    keys = sorted(systems, key=lambda h: h.twice)
    logs = {
        m: np.array(
            [
                thermo.log_weight(systems[m].energies[i], float(m), float(systems[m].spins[i]))
                for i in range(systems[m].n)
            ]
        )
        for m in keys
    }
    log_z = logsumexp(np.concatenate([logs[m] for m in keys]))
    return {m: np.exp(logs[m] - log_z) for m in keys}, float(log_z)


def _nats_weight_matrix(a, b, systems, m, probs):
    """2*pi p_i <i,m|A|j,m+q><j,m+q|B|i,m> for one source sector; rows i, cols j."""
    q = b.q
    tgt = systems.get(m + q)
    b_blk = b.block(m)
    a_blk = a.block(m + q)
    if tgt is None or b_blk is None or a_blk is None:
        return None
    src = systems[m]
    bt = tgt.vectors.T @ (b_blk.matrix @ src.vectors)   # <j|B|i>
    at = src.vectors.T @ (a_blk.matrix @ tgt.vectors)   # <i|A|j>
    return TWO_PI * probs[m][:, None] * at * bt.T


def nats_peaks(a: SphericalTensor, b: SphericalTensor, systems, thermo: ThermoParams) -> PeakList:
    """Fine-grained connected correlator of the modified thermal state.

    Every transition (alpha, m) -> (alpha', m+q) contributes one peak; the
    connected subtraction lands as a single extra peak at (0, 0, 0) with
    weight -2*pi <A><B> (nonzero only for q = 0 operators).
    """
    _check_pair(a, b)
    probs, _ = _nats_log_probs(systems, thermo)
    q = b.q
    omegas, dms, dss, weights = [], [], [], []
    for m in sorted(systems, key=lambda h: h.twice):
        w = _nats_weight_matrix(a, b, systems, m, probs)
        if w is None:
            continue
        src, tgt = systems[m], systems[m + q]
        om = (tgt.energies[None, :] - src.energies[:, None]).ravel()
        ds = np.array(
            [tj.twice - si.twice for si in src.spins for tj in tgt.spins], dtype=np.int64
        )
        omegas.append(om)
        dss.append(ds)
        dms.append(np.full(om.size, q.twice, dtype=np.int64))
        weights.append(w.ravel())
    origin = {"kind": "nats", "beta": thermo.beta, "mu": thermo.mu, "gamma": thermo.gamma}
    if not omegas:
        z = np.empty(0)
        return PeakList(z, z.astype(np.int64), z.astype(np.int64), z, origin)
    omegas = np.concatenate(omegas)
    dms = np.concatenate(dms)
    dss = np.concatenate(dss)
    weights = np.concatenate(weights)
    if q.twice == 0:
        mean_a = math.fsum(
            float(probs[m] @ np.diag(systems[m].vectors.T @ (a.block(m).matrix @ systems[m].vectors)))
            for m in sorted(systems, key=lambda h: h.twice)
            if a.block(m) is not None
        )
        mean_b = math.fsum(
            float(probs[m] @ np.diag(systems[m].vectors.T @ (b.block(m).matrix @ systems[m].vectors)))
            for m in sorted(systems, key=lambda h: h.twice)
            if b.block(m) is not None
        )
        omegas = np.append(omegas, 0.0)
        dms = np.append(dms, 0)
        dss = np.append(dss, 0)
        weights = np.append(weights, -TWO_PI * mean_a * mean_b)
    return PeakList(omegas, dms, dss, weights, origin)


def nats_kms_max_error(a: SphericalTensor, b: SphericalTensor, systems, thermo: ThermoParams) -> float:
    """Worst relative violation of the per-peak KMS pairing between AB and BA.

    For every transition, w_AB(Omega, dm, ds) must equal
    exp(beta(Omega - mu dm - gamma ds)) * w_BA(-Omega, -dm, -ds).
    """
    _check_pair(a, b)
    probs, _ = _nats_log_probs(systems, thermo)
    q = b.q
    worst = 0.0
    for m in sorted(systems, key=lambda h: h.twice):
        w_ab = _nats_weight_matrix(a, b, systems, m, probs)
        if w_ab is None:
            continue
        w_ba = _nats_weight_matrix(b, a, systems, m + q, probs)
        src, tgt = systems[m], systems[m + q]
        om = tgt.energies[None, :] - src.energies[:, None]
        ds = np.array([[tj.twice - si.twice for tj in tgt.spins] for si in src.spins]) / 2.0
        expected = w_ba.T * np.exp(
            thermo.beta * (om - thermo.mu * float(q) - thermo.gamma * ds)
        )
        scale = np.maximum(np.abs(w_ab), np.abs(expected))
        live = scale > 0
        if np.any(live):
            worst = max(worst, float(np.max(np.abs(w_ab - expected)[live] / scale[live])))
    return worst


def _infer_q(corr: FineGrainedCorrelator) -> int:
    qs = {dm for dm, _ in corr.bins}
    if len(qs) != 1:
        raise ValueError(f"correlator carries {len(qs)} distinct dm channels, expected 1")
    return qs.pop()


def log_ratio(a_corr: FineGrainedCorrelator, b_corr: FineGrainedCorrelator, ds) -> LogRatioCurve:
    """Per-bin ln[C_AB(Omega, q, ds) / C_BA(-Omega, -q, -ds)].

    A bin is defined only where both magnitudes clear 1e-12 of their channel
    maxima and the ratio is positive; undefined bins are dropped, not zeroed.
    """
    if a_corr.bin_width != b_corr.bin_width:
        raise GridMismatch("correlators use different bin widths")
    ds = HalfInt.of(ds)
    if not a_corr.bins:
        empty = np.empty(0)
        return LogRatioCurve(
            omegas=empty,
            mean=empty,
            std=empty,
            counts=np.empty(0, dtype=np.int64),
            bin_index=np.empty(0, dtype=np.int64),
            bin_width=a_corr.bin_width,
            ds=ds,
        )
    q2 = _infer_q(a_corr)
    ch_a = a_corr.bins.get((q2, ds.twice), {})
    ch_b = b_corr.bins.get((-q2, -ds.twice), {})
    # The floor is relative to each correlator's overall max bin, so a channel
    # that is pure roundoff (e.g. killed by a momentum selection rule) yields
    # no defined bins at all.
    floor_a = 1e-12 * max(
        (abs(v) for ch in a_corr.bins.values() for v in ch.values()), default=0.0
    )
    floor_b = 1e-12 * max(
        (abs(v) for ch in b_corr.bins.values() for v in ch.values()), default=0.0
    )
    idx, vals = [], []
    for n in sorted(ch_a):
        va = ch_a[n]
        vb = ch_b.get(-n - 1)
        if vb is None or abs(va) <= floor_a or abs(vb) <= floor_b:
            continue
        ratio = va / vb
        if ratio <= 0.0:
            continue
        idx.append(n)
        vals.append(math.log(ratio))
    idx = np.array(idx, dtype=np.int64)
    vals = np.array(vals)
    return LogRatioCurve(
        omegas=(idx + 0.5) * a_corr.bin_width,
        mean=vals,
        std=np.zeros_like(vals),
        counts=np.ones(len(vals), dtype=np.int64),
        bin_index=idx,
        bin_width=a_corr.bin_width,
        q=HalfInt(q2),
        ds=ds,
    )


def _single_state_curves(a, b, systems, m, index, bin_width, ds_list):
    fwd = bin_peaks(eigen_peaks(a, b, systems, m, index), bin_width)
    rev = bin_peaks(eigen_peaks(b, a, systems, m, index), bin_width)
    return {ds.twice: log_ratio(fwd, rev, ds) for ds in ds_list}


def ensemble_log_ratios(
    a: SphericalTensor,
    b: SphericalTensor,
    systems,
    s,
    beta: float,
    window: float,
    bin_width: float,
    ds_list,
    m=HalfInt(0),
    workers: int = 1,
    anchor: str = "thermal",
    indices=None,
) -> dict:
    """Mean/std log-ratio curves over the eigenstate window, one per ds.

    `anchor` picks the window center: "thermal" uses the Boltzmann-averaged
    energy (can leave an empty window in a spectral gap at small N);
    "selected" centers the same window on the representative eigenstate, which
    is always a member.  An explicit `indices` list overrides the window
    entirely.  Per-eigenstate curves are independent; when workers > 1 they
    are computed in a thread pool and merged in eigenstate order, so output is
    deterministic.
    """
    m = HalfInt.of(m)
    s = HalfInt.of(s)
    ds_list = [HalfInt.of(d) for d in ds_list]
    if indices is None:
        if anchor == "thermal":
            indices = eigenstate_window(systems[m], s, beta, window)
        elif anchor == "selected":
            indices = eigenstate_window_selected(systems[m], s, beta, window)
        else:
            raise ValueError(f"unknown anchor {anchor!r}")
    if not indices:
        raise EmptyWindow(f"no spin-{s} eigenstates within {window} of the thermal energy")

    def one(idx):
        return _single_state_curves(a, b, systems, m, idx, bin_width, ds_list)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_state = list(pool.map(one, indices))
    else:
        per_state = [one(idx) for idx in indices]

    out = {}
    for ds in ds_list:
        collected: dict = {}
        for curves in per_state:
            curve = curves[ds.twice]
            for n, v in zip(curve.bin_index, curve.mean):
                collected.setdefault(int(n), []).append(float(v))
        ns = np.array(sorted(collected), dtype=np.int64)
        mean = np.array([np.mean(collected[n]) for n in ns])
        std = np.array([np.std(collected[n]) for n in ns])
        counts = np.array([len(collected[n]) for n in ns], dtype=np.int64)
        out[ds.twice] = LogRatioCurve(
            omegas=(ns + 0.5) * bin_width,
            mean=mean,
            std=std,
            counts=counts,
            bin_index=ns,
            bin_width=bin_width,
            k=b.k,
            q=b.q,
            ds=ds,
            s=s,
            beta=beta,
        )
    return out


def ensemble_log_ratio(
    a,
    b,
    systems,
    s,
    beta,
    window,
    bin_width,
    ds,
    m=HalfInt(0),
    workers=1,
    anchor="thermal",
    indices=None,
):
    """Single-ds convenience wrapper around `ensemble_log_ratios`."""
    return ensemble_log_ratios(
        a, b, systems, s, beta, window, bin_width, [ds], m, workers, anchor, indices
    )[HalfInt.of(ds).twice]


def _range_mask(curve: LogRatioCurve, omega_range) -> np.ndarray:
    lo, hi = omega_range
    return (curve.omegas >= lo) & (curve.omegas <= hi)


def beta_eff(curve: LogRatioCurve, omega_range=(2.0, 5.0)) -> float:
    """Mean of L/Omega over the curve's defined bins inside `omega_range`."""
    sel = _range_mask(curve, omega_range)
    if not np.any(sel):
        raise NoBinsInRange(f"no defined bins in Omega range {omega_range}")
    return float(np.mean(curve.mean[sel] / curve.omegas[sel]))


def delta_beta(curve: LogRatioCurve, beta: float, omega_range=(2.0, 5.0)) -> float:
    """RMS of (L/Omega - beta) over the defined bins inside `omega_range`."""
    sel = _range_mask(curve, omega_range)
    if not np.any(sel):
        raise NoBinsInRange(f"no defined bins in Omega range {omega_range}")
    dev = curve.mean[sel] / curve.omegas[sel] - beta
    return float(np.sqrt(np.mean(dev**2)))


def beta_gamma_eff(curve_minus: LogRatioCurve, curve_plus: LogRatioCurve):
    """Per-bin [L(Omega, ds=-2) - L(Omega, ds=+2)] / 4 on the common grid."""
    if curve_minus.bin_width != curve_plus.bin_width:
        raise GridMismatch("curves use different bin widths")
    common = sorted(set(curve_minus.bin_index) & set(curve_plus.bin_index))
    lut_m = dict(zip(curve_minus.bin_index, curve_minus.mean))
    lut_p = dict(zip(curve_plus.bin_index, curve_plus.mean))
    ns = np.array(common, dtype=np.int64)
    vals = np.array([(lut_m[n] - lut_p[n]) / 4.0 for n in common])
    return (ns + 0.5) * curve_minus.bin_width, vals


def delta_beta_gamma(
    curve_minus: LogRatioCurve,
    curve_plus: LogRatioCurve,
    beta_gamma_ref: float,
    omega_range=(2.0, 5.0),
) -> float:
    """RMS of ((beta*gamma)_eff - reference) over `omega_range`."""
    omegas, vals = beta_gamma_eff(curve_minus, curve_plus)
    lo, hi = omega_range
    sel = (omegas >= lo) & (omegas <= hi)
    if not np.any(sel):
        raise NoBinsInRange(f"no common defined bins in Omega range {omega_range}")
    return float(np.sqrt(np.mean((vals[sel] - beta_gamma_ref) ** 2)))


def transport_log_ratio(curve: LogRatioCurve, s, ds, m, k, kp, q) -> LogRatioCurve:
    """Move a (q=0, m=0) log-ratio curve to labels (m, q) by adding the constant shift."""
    shift = m3_shift(s, ds, m, k, kp, q)
    return LogRatioCurve(
        omegas=curve.omegas.copy(),
        mean=curve.mean + shift,
        std=curve.std.copy(),
        counts=curve.counts.copy(),
        bin_index=curve.bin_index.copy(),
        bin_width=curve.bin_width,
        k=HalfInt.of(k),
        q=HalfInt.of(q),
        ds=HalfInt.of(ds),
        s=HalfInt.of(s),
        beta=curve.beta,
    )
