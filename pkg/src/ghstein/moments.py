"""Raw moments of the centred GH law via a forward recurrence.

Plugging f(x) = x^k into the Stein operator and taking expectations gives,
for k >= 2,

    gamma^2 M_{k+1} = 2 (lam + k) beta M_k + (k(k-1) + 2 lam k + beta^2 delta^2) M_{k-1}
                      + (2k - 1) beta delta^2 M_{k-2} + k (k - 2) delta^2 M_{k-3}.

For k < 2 negative powers of x appear, so the recurrence is seeded with
M_0..M_3 from closed forms and the moment generating function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import (GHParams, gh_expectation, gh_mean, gh_mgf, gh_variance,
                            gig_moment)
from .numerics import QuadratureConfig

_ORACLE_CFG = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-14, max_subdivisions=4000)


@dataclass(frozen=True)
class MomentTable:
    params: GHParams
    moments: tuple
    provenance: tuple

    def __post_init__(self):
        if len(self.moments) != len(self.provenance):
            raise ValueError("moments and provenance differ in length")

    def __getitem__(self, k):
        return self.moments[k]

    def __len__(self):
        return len(self.moments)

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(),
                "moments": [{"k": k, "value": float(m), "source": s}
                            for k, (m, s) in enumerate(zip(self.moments, self.provenance))]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def hankel(self, size: int = 4) -> np.ndarray:
        """Moment matrix [M_{i+j}], 0 <= i, j < size."""
        if 2 * size - 1 > len(self.moments):
            raise ValueError(f"need moments up to {2 * size - 2}")
        m = np.asarray(self.moments, dtype=float)
        i = np.arange(size)
        return m[i[:, None] + i[None, :]]


def _third_difference(p: GHParams, h: float) -> float:
    """Central third difference of the MGF at 0; error O(h^2)."""
    m = gh_mgf(p, np.array([2 * h, h, -h, -2 * h]))
    return (m[0] - 2 * m[1] + 2 * m[2] - m[3]) / (2 * h ** 3)


def third_moment_mgf(p: GHParams, levels: int = 4) -> float:
    """E X^3 by Richardson-extrapolated differences of the MGF (mu = 0).

    The first step is 8% of the distance from 0 to the nearest singularity of
    the MGF; each level halves it and removes one more even power of h.
    """
    h0 = 0.08 * (p.alpha - abs(p.beta))
    d = [_third_difference(p, h0 / 2 ** j) for j in range(levels)]
    for s in range(1, levels):
        f = 4.0 ** s
        d = [(f * d[j + 1] - d[j]) / (f - 1) for j in range(len(d) - 1)]
    return d[0]


def seed_moments(p: GHParams) -> MomentTable:
    """M_0..M_3 from the mean, variance and the MGF."""
    if p.mu != 0:
        raise ValueError("moments are tabulated for mu = 0")
    if p.beta == 0:
        m1 = m3 = 0.0
        m2 = gh_variance(p)
    else:
        m1 = gh_mean(p)
        m2 = gh_variance(p) + m1 * m1
        m3 = third_moment_mgf(p)
    return MomentTable(p, (1.0, m1, m2, m3), ("seed",) * 4)


def recurrence_rhs(p: GHParams, m, k: int) -> float:
    """Right-hand side of the recurrence at index k (equals gamma^2 M_{k+1})."""
    if k < 2:
        raise ValueError("recurrence holds for k >= 2 only (negative moments otherwise)")
    lam, b, d2 = p.lam, p.beta, p.delta ** 2
    out = (2 * (lam + k) * b * m[k] + (k * (k - 1) + 2 * lam * k + b * b * d2) * m[k - 1]
           + (2 * k - 1) * b * d2 * m[k - 2])
    if k >= 3:
        out += k * (k - 2) * d2 * m[k - 3]
    return out


def extend_moments(table: MomentTable, K: int) -> MomentTable:
    """Extend a seeded table to M_0..M_K with the recurrence."""
    if K < 0:
        raise ValueError("K must be non-negative")
    if len(table) < 4:
        raise ValueError("table must be seeded through M_3")
    if K < len(table):
        return table
    p = table.params
    g2 = p.gamma ** 2
    m = list(table.moments)
    prov = list(table.provenance)
    for k in range(len(m) - 1, K):
        nxt = recurrence_rhs(p, m, k) / g2
        if p.beta == 0 and (k + 1) % 2 == 1:
            nxt = 0.0
        m.append(nxt)
        prov.append("recurrence")
    return MomentTable(p, tuple(m), tuple(prov))


def moment_table(p: GHParams, K: int) -> MomentTable:
    return extend_moments(seed_moments(p), K)


def moment_oracle(p: GHParams, k: int, cfg: Optional[QuadratureConfig] = None) -> float:
    """E X^k by direct quadrature of x^k times the density."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    if p.mu != 0:
        raise ValueError("moments are tabulated for mu = 0")
    if k == 0:
        return 1.0
    val, _ = gh_expectation(p, lambda x: x ** int(k), (), cfg or _ORACLE_CFG,
                            decay=(p.alpha - abs(p.beta)) / 2)
    return val


def mixture_moment(p: GHParams, k: int) -> float:
    """E X^k from the variance-mean mixture (mu = 0), closed form for k <= 4."""
    g = p.mixing()
    b = p.beta
    ev = [gig_moment(g, r) for r in range(5)]
    if k == 0:
        return 1.0
    if k == 1:
        return b * ev[1]
    if k == 2:
        return b * b * ev[2] + ev[1]
    if k == 3:
        return b ** 3 * ev[3] + 3 * b * ev[2]
    if k == 4:
        return b ** 4 * ev[4] + 6 * b * b * ev[3] + 3 * ev[2]
    raise ValueError("closed form provided for k <= 4")

