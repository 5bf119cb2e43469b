"""Independent oracles the tests check the library against.

The Clebsch-Gordan oracle builds coupled states by explicit highest-weight
construction plus lowering, never touching the closed-form factorial sum.
The full-space oracle builds 2^N operators by Kronecker products and projects
them onto sector bases, never touching the bit-manipulation builders.
"""

from __future__ import annotations

import numpy as np


def cg_table_ladder(s1: float, s2: float) -> dict:
    """All <S,M|s1,m1;s2,m2> for one (s1, s2), via ladder recursion.

    Basis: product states |m1, m2> ordered by (m1 desc, m2 desc).  For each S
    from s1+s2 down: the top state |S,S> is fixed by orthogonality to every
    higher multiplet at M=S with the Condon-Shortley sign convention
    (coefficient of the largest m1 positive); lower M states follow from
    J- = J1- + J2-.

    Returns {(2m1, 2m2, 2S, 2M): coefficient}.
    """
    d1 = int(round(2 * s1)) + 1
    d2 = int(round(2 * s2)) + 1
    m1s = [s1 - i for i in range(d1)]
    m2s = [s2 - i for i in range(d2)]
    prod_index = {}
    for i, m1 in enumerate(m1s):
        for j, m2 in enumerate(m2s):
            prod_index[(round(2 * m1), round(2 * m2))] = i * d2 + j
    dim = d1 * d2

    def lower_product(vec):
        out = np.zeros(dim)
        for (tm1, tm2), idx in prod_index.items():
            amp = vec[idx]
            if amp == 0.0:
                continue
            m1, m2 = tm1 / 2.0, tm2 / 2.0
            if m1 - 1 >= -s1:
                c = np.sqrt(s1 * (s1 + 1) - m1 * (m1 - 1))
                out[prod_index[(tm1 - 2, tm2)]] += c * amp
            if m2 - 1 >= -s2:
                c = np.sqrt(s2 * (s2 + 1) - m2 * (m2 - 1))
                out[prod_index[(tm1, tm2 - 2)]] += c * amp
        return out

    table = {}
    states = {}  # (2S, 2M) -> vector
    s_top = s1 + s2
    s_val = s_top
    while s_val >= abs(s1 - s2) - 1e-9:
        t_s = round(2 * s_val)
        m_val = s_val
        # Highest-weight state at M = S: orthogonal complement within the M=S
        # product subspace of all previously built |S', S> with S' > S.
        subspace = [
            (tm1, tm2)
            for (tm1, tm2) in prod_index
            if tm1 + tm2 == round(2 * m_val)
        ]
        prev = [v for (ts, tm), v in states.items() if tm == round(2 * m_val)]
        vec = None
        for key in subspace:
            cand = np.zeros(dim)
            cand[prod_index[key]] = 1.0
            for p in prev:
                cand -= (p @ cand) * p
            if np.linalg.norm(cand) > 1e-8:
                vec = cand
                break
        for p in prev:
            vec -= (p @ vec) * p
        vec /= np.linalg.norm(vec)
        # Condon-Shortley: coefficient of the maximal m1 in |S,S> is positive.
        top_key = max(subspace, key=lambda k: k[0])
        if vec[prod_index[top_key]] < 0:
            vec = -vec
        states[(t_s, round(2 * m_val))] = vec
        while m_val - 1 >= -s_val - 1e-9:
            c = np.sqrt(s_val * (s_val + 1) - m_val * (m_val - 1))
            vec = lower_product(vec) / c
            m_val -= 1
            states[(t_s, round(2 * m_val))] = vec
        s_val -= 1

    for (t_s, t_m), vec in states.items():
        for (tm1, tm2), idx in prod_index.items():
            if abs(vec[idx]) > 0.0:
                table[(tm1, tm2, t_s, t_m)] = float(vec[idx])
    return table


# Single-qubit operators in the basis (bit=0 down, bit=1 up).
SZ1 = np.array([[-1.0, 0.0], [0.0, 1.0]])
SP1 = np.array([[0.0, 0.0], [1.0, 0.0]])  # sigma_+ = |up><down|
SM1 = SP1.T
ID1 = np.eye(2)


def site_op(n_sites: int, ops: dict) -> np.ndarray:
    """Kronecker product with site j at bit j (least significant)."""
    out = np.array([[1.0]])
    for j in range(n_sites):
        out = np.kron(ops.get(j, ID1), out)
    return out


def full_heisenberg(n_sites: int, coupling_j: float, lam: float) -> np.ndarray:
    dim = 1 << n_sites
    h = np.zeros((dim, dim))
    for j in range(n_sites):
        for step, w in ((1, lam), (2, 1.0 - lam)):
            b = (j + step) % n_sites
            h += w * (
                2.0 * site_op(n_sites, {j: SP1, b: SM1})
                + 2.0 * site_op(n_sites, {j: SM1, b: SP1})
                + site_op(n_sites, {j: SZ1, b: SZ1})
            )
    return -coupling_j / 2.0 * h


def full_total(n_sites: int, op1: np.ndarray) -> np.ndarray:
    dim = 1 << n_sites
    out = np.zeros((dim, dim))
    for j in range(n_sites):
        out += site_op(n_sites, {j: op1})
    return out


def project_block(full: np.ndarray, target_states, source_states) -> np.ndarray:
    return full[np.ix_(np.asarray(target_states), np.asarray(source_states))]
