"""Generalized hyperbolic (GH) and generalized inverse Gaussian (GIG) laws.

The GH law arises as a normal variance-mean mixture: with
``V ~ GIG(lam, a=gamma^2, b=delta^2)`` and ``Z ~ N(0, 1)`` independent,
``mu + beta V + sqrt(V) Z`` is GH(lam, alpha, beta, delta, mu) where
``gamma = sqrt(alpha^2 - beta^2)``.  Samplers use exactly that route.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .bessel import bessel_k_scaled, log_bessel_k
from .numerics import (QuadratureConfig, RandomStream, integrate,
                       integrate_cumulative, integrate_semi_infinite)

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_CDF_CFG = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-14, max_subdivisions=4000)


def _check_finite(**kw):
    for k, v in kw.items():
        if not math.isfinite(v):
            raise ValueError(f"{k} must be finite (got {v!r})")


@dataclass(frozen=True)
class GHParams:
    """GH parameters ``(lam, alpha, beta, delta, mu)``; requires alpha > |beta|, delta > 0."""

    lam: float
    alpha: float
    beta: float
    delta: float
    mu: float = 0.0

    def __post_init__(self):
        _check_finite(lam=self.lam, alpha=self.alpha, beta=self.beta,
                      delta=self.delta, mu=self.mu)
        if not self.delta > 0:
            raise ValueError(f"delta must be positive (got {self.delta})")
        if not self.alpha > abs(self.beta):
            raise ValueError(
                f"alpha must exceed |beta| (got alpha={self.alpha}, beta={self.beta})")

    @cached_property
    def gamma(self) -> float:
        # factored form keeps precision when |beta| is close to alpha
        return math.sqrt((self.alpha - abs(self.beta)) * (self.alpha + abs(self.beta)))

    @property
    def omega(self) -> float:
        return self.delta * self.gamma

    def mixing(self) -> "GIGParams":
        return GIGParams(self.lam, self.gamma ** 2, self.delta ** 2)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "alpha": self.alpha, "beta": self.beta,
                "delta": self.delta, "mu": self.mu}

    @classmethod
    def from_dict(cls, d: dict) -> "GHParams":
        return cls(float(d["lambda"]), float(d["alpha"]), float(d["beta"]),
                   float(d["delta"]), float(d.get("mu", 0.0)))


@dataclass(frozen=True)
class GIGParams:
    """GIG(lam, a, b) with density proportional to x^(lam-1) exp(-(a x + b/x)/2)."""

    lam: float
    a: float
    b: float

    def __post_init__(self):
        _check_finite(lam=self.lam, a=self.a, b=self.b)
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"a and b must be positive (got a={self.a}, b={self.b})")

    @property
    def omega(self) -> float:
        return math.sqrt(self.a * self.b)

    @property
    def scale(self) -> float:
        return math.sqrt(self.b / self.a)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "a": self.a, "b": self.b}


@dataclass
class SampleSet:
    """Draws together with the parameters and seed that produced them."""

    values: np.ndarray
    params: Optional[dict] = None
    seed: Optional[int] = None
    stream_id: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()

    def __len__(self):
        return self.values.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("value\n")
        for v in self.values:
            buf.write(repr(float(v)) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"params": self.params, "seed": self.seed,
                           "stream_id": self.stream_id,
                           "values": [float(v) for v in self.values]})

    def save(self, path) -> None:
        path = Path(path)
        text = self.to_json() if path.suffix.lower() == ".json" else self.to_csv()
        path.write_text(text)

    @classmethod
    def load(cls, path) -> "SampleSet":
        """Read a CSV (optional ``value`` header) or a JSON array / object."""
        text = Path(path).read_text()
        stripped = text.lstrip()
        if stripped.startswith("[") or stripped.startswith("{"):
            obj = json.loads(text)
            if isinstance(obj, dict):
                return cls(np.asarray(obj["values"], float), obj.get("params"),
                           obj.get("seed"), obj.get("stream_id", 0))
            return cls(np.asarray(obj, float))
        vals = []
        for i, row in enumerate(csv.reader(io.StringIO(text))):
            if not row or not row[0].strip():
                continue
            cell = row[0].strip()
            if i == 0 and cell.lower() == "value":
                continue
            vals.append(float(cell))
        return cls(np.asarray(vals, float))


# ---------------------------------------------------------------- GH density

def _gh_log_norm(p: GHParams) -> float:
    return (p.lam * math.log(p.gamma) - _LOG_SQRT_2PI
            - (p.lam - 0.5) * math.log(p.alpha) - p.lam * math.log(p.delta)
            - log_bessel_k(p.lam, p.omega))


def gh_log_pdf(p: GHParams, x):
    """Log density of GH(p) at ``x`` (vectorised)."""
    x = np.asarray(x, dtype=float)
    y = x - p.mu
    r = np.hypot(p.delta, y)
    nu = p.lam - 0.5
    out = _gh_log_norm(p) + p.beta * y + nu * np.log(r) + log_bessel_k(nu, p.alpha * r)
    return float(out) if np.ndim(out) == 0 else out


def gh_pdf(p: GHParams, x):
    """Density of GH(p) at ``x``."""
    return np.exp(gh_log_pdf(p, x))


def gh_pdf_derivatives(p: GHParams, x):
    """Density and its first two derivatives, from Bessel ladder identities.

    Returns
    -------
    (pdf, d_pdf, d2_pdf) : tuple of ndarray
    """
    x = np.asarray(x, dtype=float)
    y = x - p.mu
    r = np.hypot(p.delta, y)
    z = p.alpha * r
    nu = p.lam - 0.5
    a = p.alpha
    common = np.exp(_gh_log_norm(p) + p.beta * y - z)
    k0 = bessel_k_scaled(nu, z)
    k1 = bessel_k_scaled(nu - 1.0, z)
    k2 = bessel_k_scaled(nu - 2.0, z)
    u = r ** nu * k0
    u1 = -a * y * r ** (nu - 1) * k1
    u2 = -a * r ** (nu - 1) * k1 + a * a * y * y * r ** (nu - 2) * k2
    b = p.beta
    return common * u, common * (b * u + u1), common * (b * b * u + 2 * b * u1 + u2)


def gh_mean(p: GHParams) -> float:
    r1 = bessel_k_scaled(p.lam + 1, p.omega) / bessel_k_scaled(p.lam, p.omega)
    return p.mu + p.delta * p.beta * r1 / p.gamma


def gh_variance(p: GHParams) -> float:
    w = p.omega
    k0 = bessel_k_scaled(p.lam, w)
    r1 = bessel_k_scaled(p.lam + 1, w) / k0
    r2 = bessel_k_scaled(p.lam + 2, w) / k0
    g = p.gamma
    return p.delta * r1 / g + (p.beta * p.delta / g) ** 2 * (r2 - r1 * r1)


def gh_log_mgf(p: GHParams, t):
    """Log moment generating function; defined for |beta + t| < alpha."""
    t = np.asarray(t, dtype=float)
    bt = p.beta + t
    if np.any(np.abs(bt) >= p.alpha):
        raise ValueError("mgf requires |beta + t| < alpha")
    gt2 = (p.alpha - bt) * (p.alpha + bt)
    out = (p.mu * t + p.lam * math.log(p.gamma) - 0.5 * p.lam * np.log(gt2)
           + log_bessel_k(p.lam, p.delta * np.sqrt(gt2)) - log_bessel_k(p.lam, p.omega))
    return float(out) if np.ndim(out) == 0 else out


def gh_mgf(p: GHParams, t):
    """Moment generating function E exp(t X)."""
    return np.exp(gh_log_mgf(p, t))


def gh_log_tail_leading(p: GHParams, x):
    """Log of the leading-order tail approximation of the density.

    ``gamma^lam / (2 (alpha delta)^lam K_lam(delta gamma)) |x|^(lam-1)
    exp(-alpha |x-mu| + beta (x-mu))``
    """
    x = np.asarray(x, dtype=float)
    y = x - p.mu
    out = (p.lam * math.log(p.gamma) - math.log(2.0)
           - p.lam * math.log(p.alpha * p.delta) - log_bessel_k(p.lam, p.omega)
           + (p.lam - 1) * np.log(np.abs(x)) - p.alpha * np.abs(y) + p.beta * y)
    return float(out) if np.ndim(out) == 0 else out


def gh_tail_leading(p: GHParams, x):
    return np.exp(gh_log_tail_leading(p, x))


def _gh_center(p: GHParams) -> float:
    return gh_mean(p)


def gh_cdf(p: GHParams, x, cfg: Optional[QuadratureConfig] = None):
    """Distribution function by quadrature, monotone in ``x`` by construction.

    The lower tail is integrated up to an anchor near the mean; other points
    are reached by cumulative integration outward from the anchor.
    """
    cfg = cfg or _CDF_CFG
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    c = _gh_center(p)
    decay = p.alpha - abs(p.beta)
    f = lambda t: gh_pdf(p, t)  # noqa: E731
    fc, _ = integrate_semi_infinite(f, c, decay, cfg, side="lower", points=[p.mu])
    out = np.empty_like(flat)
    left = flat < c
    if left.any():
        pts = np.unique(flat[left])
        grid = np.concatenate([pts, [c]])
        cum = integrate_cumulative(f, grid, cfg)
        vals = fc - (cum[-1] - cum[:-1])
        out[left] = vals[np.searchsorted(pts, flat[left])]
    if (~left).any():
        pts = np.unique(flat[~left])
        grid = np.concatenate([[c], pts])
        cum = integrate_cumulative(f, grid, cfg)
        out[~left] = (fc + cum[1:])[np.searchsorted(pts, flat[~left])]
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def gh_expectation(p: GHParams, h, points=(), cfg: Optional[QuadratureConfig] = None,
                   decay: Optional[float] = None):
    """``E h(X)`` for X ~ GH(p) by quadrature; returns (value, err_estimate).

    ``points`` lists kinks/jumps of ``h``.  Tails beyond the outermost break
    are integrated with decay rate ``alpha - |beta|`` unless ``decay`` is
    given (pass a smaller rate when h itself grows).
    """
    cfg = cfg or _CDF_CFG
    pts = sorted({p.mu, gh_mean(p), *map(float, points)})
    f = lambda t: h(t) * gh_pdf(p, t)  # noqa: E731
    decay = decay or p.alpha - abs(p.beta)
    lo, e1 = integrate_semi_infinite(f, pts[0], decay, cfg, side="lower")
    mid, e2 = integrate(f, pts[0], pts[-1], cfg, points=pts[1:-1])
    hi, e3 = integrate_semi_infinite(f, pts[-1], decay, cfg, side="upper")
    return math.fsum([lo, mid, hi]), e1 + e2 + e3


def gh_ppf(p: GHParams, q, cfg: Optional[QuadratureConfig] = None):
    """Quantiles by Newton iteration on :func:`gh_cdf` (bracketed)."""
    cfg = cfg or _CDF_CFG
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any((q <= 0) | (q >= 1)):
        raise ValueError("quantile levels must lie in (0, 1)")
    m, s = gh_mean(p), math.sqrt(gh_variance(p))
    span = 12 * s + 40.0 / (p.alpha - abs(p.beta))
    grid = np.linspace(m - span, m + span, 801)
    fg = gh_cdf(p, grid, cfg)
    out = np.empty_like(q)
    for i, qi in enumerate(q):
        j = int(np.clip(np.searchsorted(fg, qi), 1, grid.size - 1))
        lo, hi = grid[j - 1], grid[j]
        xk, fk = lo, fg[j - 1]
        for _ in range(60):
            step = (qi - fk) / gh_pdf(p, xk)
            xn = xk + step
            if not lo <= xn <= hi:
                xn = 0.5 * (lo + hi)
            fk = gh_cdf(p, xn, cfg)
            if fk < qi:
                lo = xn
            else:
                hi = xn
            if abs(xn - xk) <= 1e-13 * max(1.0, abs(xn)):
                xk = xn
                break
            xk = xn
        out[i] = xk
    return out


# --------------------------------------------------------------- GIG density

def gig_log_pdf(g: GIGParams, x):
    """Log density of GIG(g); support is x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("GIG density is defined for x > 0 only")
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    lognorm = (0.5 * g.lam * math.log(g.a / g.b) - math.log(2.0)
               - log_bessel_k(g.lam, g.omega))
    out = lognorm + (g.lam - 1) * np.log(xs) - 0.5 * (g.a * xs + g.b / xs)
    out = np.where(pos, out, -np.inf)
    return float(out) if np.ndim(out) == 0 else out


def gig_pdf(g: GIGParams, x):
    return np.exp(gig_log_pdf(g, x))


def gig_moment(g: GIGParams, r: float) -> float:
    """E V^r = (b/a)^(r/2) K_{lam+r}(omega) / K_lam(omega), any real r."""
    w = g.omega
    return g.scale ** r * bessel_k_scaled(g.lam + r, w) / bessel_k_scaled(g.lam, w)


def gig_mean(g: GIGParams) -> float:
    return gig_moment(g, 1.0)


def gig_cdf(g: GIGParams, x, cfg: Optional[QuadratureConfig] = None):
    """GIG distribution function by cumulative quadrature from the mean."""
    cfg = cfg or _CDF_CFG
    x = np.asarray(x, dtype=float)
    flat = np.maximum(x.ravel(), 0.0)
    c = gig_mean(g)
    f = lambda t: gig_pdf(g, t)  # noqa: E731
    fc, _ = integrate(f, 0.0, c, cfg, points=[0.5 * c])
    out = np.empty_like(flat)
    left = flat < c
    if left.any():
        pts = np.unique(flat[left])
        cum = integrate_cumulative(f, np.concatenate([pts, [c]]), cfg)
        out[left] = (fc - (cum[-1] - cum[:-1]))[np.searchsorted(pts, flat[left])]
    if (~left).any():
        pts = np.unique(flat[~left])
        cum = integrate_cumulative(f, np.concatenate([[c], pts]), cfg)
        out[~left] = (fc + cum[1:])[np.searchsorted(pts, flat[~left])]
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def _gig_standard(lam: float, omega: float, n: int, rng: np.random.Generator):
    """Draws from GIG with density prop. to x^(lam-1) exp(-omega (x + 1/x)/2), lam >= 0.

    Ratio-of-uniforms with the mode shifted to the origin (Dagpunar /
    Hormann-Leydold), vectorised in batches.
    """
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = (math.sqrt((lam - 1) ** 2 + omega * omega) + (lam - 1)) / omega
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)

    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    fi = math.acos(-q / (2.0 * math.sqrt(-p ** 3 / 27.0)))
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0

    def h(y):
        return t * math.log(y) - s * (y + 1.0 / y) - nc

    uplus = (y1 - xm) * math.exp(h(y1))
    uminus = (y2 - xm) * math.exp(h(y2))

    out = np.empty(n)
    filled = 0
    while filled < n:
        m = int((n - filled) * 1.6) + 64
        u = uminus + rng.random(m) * (uplus - uminus)
        v = rng.random(m)
        xx = u / v + xm
        ok = xx > 0
        xx, v = xx[ok], v[ok]
        acc = np.log(v) <= t * np.log(xx) - s * (xx + 1.0 / xx) - nc
        got = xx[acc][: n - filled]
        out[filled:filled + got.size] = got
        filled += got.size
    return out


def gig_sample_values(g: GIGParams, n: int, rng: np.random.Generator) -> np.ndarray:
    lam = abs(g.lam)
    z = _gig_standard(lam, g.omega, n, rng)
    if g.lam < 0:
        z = 1.0 / z
    return g.scale * z


def gig_sample(g: GIGParams, n: int, stream: RandomStream) -> SampleSet:
    """Draw ``n`` GIG variates reproducibly from ``stream``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    vals = gig_sample_values(g, int(n), stream.generator())
    return SampleSet(vals, g.to_dict(), stream.seed, stream.stream_id)


def gh_sample(p: GHParams, n: int, stream: RandomStream) -> SampleSet:
    """Draw ``n`` GH variates through the normal variance-mean mixture."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = stream.generator()
    v = gig_sample_values(p.mixing(), int(n), rng)
    z = rng.standard_normal(int(n))
    vals = p.mu + p.beta * v + np.sqrt(v) * z
    return SampleSet(vals, p.to_dict(), stream.seed, stream.stream_id)


def affine_transform(p: GHParams, a: float, b: float) -> GHParams:
    """Parameters of ``a X + b`` for X ~ GH(p), a != 0."""
    if a == 0 or not math.isfinite(a) or not math.isfinite(b):
        raise ValueError("scale must be finite and non-zero")
    s = abs(a)
    return GHParams(p.lam, p.alpha / s, p.beta / a, p.delta * s, a * p.mu + b)
