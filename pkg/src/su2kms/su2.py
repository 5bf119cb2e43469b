"""Clebsch-Gordan coefficients, their large-s asymptote, and log-ratio transport factors.

Coefficients follow the Condon-Shortley phase convention.  Evaluation uses
log-factorial accumulation with the sign tracked separately, so spins up to a
few hundred stay in double-precision range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import ZeroDenominator
from .halfint import HalfInt

__all__ = [
    "CgKey",
    "cg",
    "cg_asymptotic",
    "cg_product",
    "m1_ratio",
    "m2_ratio",
    "m3_shift",
]


@dataclass(frozen=True)
class CgKey:
    """Arguments of <S, M | s1, m1; s2, m2>.

    Construction rejects malformed parity (m must differ from its s by an
    integer); out-of-range quantum numbers are legal and make `cg` return 0.
    """

    s1: HalfInt
    m1: HalfInt
    s2: HalfInt
    m2: HalfInt
    S: HalfInt
    M: HalfInt

    def __post_init__(self):
        for name in ("s1", "m1", "s2", "m2", "S", "M"):
            object.__setattr__(self, name, HalfInt.of(getattr(self, name)))
        for s, m in ((self.s1, self.m1), (self.s2, self.m2), (self.S, self.M)):
            if s.twice < 0:
                raise ValueError(f"negative spin {s} in CgKey")
            if (s.twice - m.twice) % 2 != 0:
                raise ValueError(f"m={m} has wrong parity for s={s}")


def _flog(n: int) -> float:
    return math.lgamma(n + 1)


def _half(h: HalfInt) -> int:
    if h.twice % 2 != 0:
        raise ValueError(f"{h} is not an integer where one is required")
    return h.twice // 2


@lru_cache(maxsize=200_000)
def _cg_cached(key: CgKey) -> float:
    s1, m1, s2, m2, S, M = key.s1, key.m1, key.s2, key.m2, key.S, key.M
    if (m1 + m2).twice != M.twice:
        return 0.0
    if S.twice > (s1 + s2).twice or S.twice < abs(s1.twice - s2.twice):
        return 0.0
    if abs(m1.twice) > s1.twice or abs(m2.twice) > s2.twice or abs(M.twice) > S.twice:
        return 0.0
    if (s1.twice + s2.twice - S.twice) % 2 != 0:
        return 0.0

    # Integer factorial arguments; all are non-negative once the rules above hold.
    a_num = [
        _half(S + s1 - s2),      # (2s + nu - k)!
        _half(s2 + S - s1),      # (k + nu)!
        _half(s1 + s2 - S),      # (k - nu)!
        _half(S + M),
        _half(S - M),
        _half(s1 + m1),
        _half(s1 - m1),
        _half(s2 + m2),
        _half(s2 - m2),
    ]
    a_den = _half(s1 + s2 + S) + 1  # (2s + nu + k + 1)!
    log_pref = 0.5 * (
        math.log(S.twice + 1)
        + sum(_flog(a) for a in a_num)
        - _flog(a_den)
    )

    # Sum limits: every factorial argument in the summand must be >= 0.
    k_m_nu = _half(s1 + s2 - S)          # k - nu - l >= 0
    s_m_m = _half(s1 - m1)               # s - m - l >= 0
    k_p_q = _half(s2 + m2)               # k + q - l >= 0
    base1 = _half(S - s2 + m1)           # s + m + nu - k + l >= 0
    base2 = _half(S - s1 - m2)           # nu - q + l >= 0
    lo = max(0, -base1, -base2)
    hi = min(k_m_nu, s_m_m, k_p_q)
    if lo > hi:
        return 0.0

    logs = []
    signs = []
    for ell in range(lo, hi + 1):
        logs.append(
            -(
                _flog(ell)
                + _flog(k_m_nu - ell)
                + _flog(s_m_m - ell)
                + _flog(k_p_q - ell)
                + _flog(base1 + ell)
                + _flog(base2 + ell)
            )
        )
        signs.append(-1.0 if ell % 2 else 1.0)
    log_max = max(logs)
    acc = math.fsum(sg * math.exp(lg - log_max) for sg, lg in zip(signs, logs))
    if acc == 0.0:
        return 0.0
    return math.copysign(math.exp(log_pref + log_max + math.log(abs(acc))), acc)


def cg(key: CgKey) -> float:
    """Clebsch-Gordan coefficient <S, M | s1, m1; s2, m2>.

    Returns exactly 0.0 when selection rules fail (M != m1+m2, triangle rule,
    or any |m| > s).
    """
    return _cg_cached(key)


def cg_asymptotic(nu, k, q) -> float:
    """Large-s limit of <s+nu, m+q | s, m; k, q> at fixed m, k, q."""
    nu, k, q = HalfInt.of(nu), HalfInt.of(k), HalfInt.of(q)
    if abs(nu.twice) > k.twice or abs(q.twice) > k.twice:
        raise ValueError("require |nu| <= k and |q| <= k")
    kv, nv, qv = _half(k), _half(nu), _half(q)
    lo = max(0, qv - nv)
    hi = min(kv + qv, kv - nv)
    if lo > hi:
        return 0.0
    total = sum(
        (-1) ** ell * math.comb(kv + qv, ell) * math.comb(kv - qv, nv - qv + ell)
        for ell in range(lo, hi + 1)
    )
    pref = 0.5 ** kv * math.sqrt(
        math.factorial(kv + nv)
        * math.factorial(kv - nv)
        / (math.factorial(kv + qv) * math.factorial(kv - qv))
    )
    return pref * total


def cg_product(nu, s, m, k, kp, q) -> float:
    """Clebsch-Gordan product <s,m | s+nu, m+q; k', -q> <s+nu, m+q | s,m; k, q>."""
    nu, s, m = HalfInt.of(nu), HalfInt.of(s), HalfInt.of(m)
    k, kp, q = HalfInt.of(k), HalfInt.of(kp), HalfInt.of(q)
    if (s + nu).twice < 0:
        return 0.0
    first = cg(CgKey(s1=s + nu, m1=m + q, s2=kp, m2=-q, S=s, M=m))
    second = cg(CgKey(s1=s, m1=m, s2=k, m2=q, S=s + nu, M=m + q))
    return first * second


def m1_ratio(s, sp, m, k, q) -> float:
    """<s', m+q | s, m; k, q> divided by the q=0 reference <s', 0 | s, 0; k, 0>."""
    s, sp, m = HalfInt.of(s), HalfInt.of(sp), HalfInt.of(m)
    k, q = HalfInt.of(k), HalfInt.of(q)
    den = cg(CgKey(s1=s, m1=HalfInt(0), s2=k, m2=HalfInt(0), S=sp, M=HalfInt(0)))
    if den == 0.0:
        raise ZeroDenominator(
            f"<{sp},0|{s},0;{k},0> = 0; (m,q)->(0,0) transport undefined"
        )
    num = cg(CgKey(s1=s, m1=m, s2=k, m2=q, S=sp, M=m + q))
    return num / den


def m2_ratio(s, ds, m, k, kp, q) -> float:
    """Correlator transport factor: M1(s+ds, s, m+q, k', -q) * M1(s, s+ds, m, k, q)."""
    s, ds, m = HalfInt.of(s), HalfInt.of(ds), HalfInt.of(m)
    k, kp, q = HalfInt.of(k), HalfInt.of(kp), HalfInt.of(q)
    return m1_ratio(s + ds, s, m + q, kp, -q) * m1_ratio(s, s + ds, m, k, q)


def m3_shift(s, ds, m, k, kp, q) -> float:
    """Constant added to the (q=0, m=0) log-ratio when moving to labels (m, q)."""
    num = m2_ratio(s, ds, m, k, kp, q)
    den = m2_ratio(s, -HalfInt.of(ds), m, kp, k, -HalfInt.of(q))
    if den == 0.0 or num / den <= 0.0:
        raise ZeroDenominator("log of a non-positive transport ratio")
    return math.log(num / den)
