"""Limiting and special cases of the GH law: their Stein operators, numerical
convergence of the GH operator coefficients along each limit path, closed-form
densities, and the GIG Stein-equation solution with its sup-norm bound.

Limit paths (all with mu = 0):

* VG2 (variance-gamma): delta -> 0 with lam = nu + 1/2.
* Student's t: alpha, beta -> 0 with lam = -nu/2; the GH operator is rewritten
  for the unknown g with f' = x g.
* GIG: beta = alpha - a/2, delta^2 = b/alpha, alpha -> inf; the GH operator is
  rewritten for g with f = x g and divided by beta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bessel import bessel_k_scaled, log_bessel_k
from .distributions import GHParams, GIGParams, gig_log_pdf, gig_mean
from .numerics import QuadratureConfig, integrate, integrate_semi_infinite
from .stein import DiscrepancyEntry, OperatorCoefficients, gh_operator

CASES = ("VG2", "VG1", "gamma", "normal", "laplace", "product_normal", "student_t", "gig")


@dataclass(frozen=True)
class VG2Params:
    nu: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.nu > -0.5:
            raise ValueError("VG2 requires nu > -1/2")
        if not self.alpha > abs(self.beta):
            raise ValueError("alpha must exceed |beta|")


@dataclass(frozen=True)
class VG1Params:
    r: float
    theta: float
    sigma: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("VG1 requires r > 0")
        if not self.sigma >= 0:
            raise ValueError("VG1 requires sigma >= 0")


@dataclass(frozen=True)
class GammaParams:
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("gamma requires shape > 0 and rate > 0")


@dataclass(frozen=True)
class ScaleParams:
    """Single scale parameter (normal: standard deviation; Laplace: sigma)."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class ProductNormalParams:
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("standard deviations must be positive")


@dataclass(frozen=True)
class StudentTParams:
    nu: float
    delta: float
    mu: float = 0.0

    def __post_init__(self):
        if not (self.nu > 0 and self.delta > 0):
            raise ValueError("Student's t requires nu > 0 and delta > 0")


_PARAM_TYPES = {
    "VG2": VG2Params, "VG1": VG1Params, "gamma": GammaParams, "normal": ScaleParams,
    "laplace": ScaleParams, "product_normal": ProductNormalParams,
    "student_t": StudentTParams, "gig": GIGParams,
}


@dataclass(frozen=True)
class LimitCase:
    name: str
    params: object

    def __post_init__(self):
        if self.name not in _PARAM_TYPES:
            raise ValueError(f"unknown case {self.name!r}; expected one of {CASES}")
        if not isinstance(self.params, _PARAM_TYPES[self.name]):
            raise TypeError(f"{self.name} needs {_PARAM_TYPES[self.name].__name__}")


def vg_reparameterize(r: float, theta: float, sigma: float):
    """(r, theta, sigma) -> (nu, alpha, beta) for the variance-gamma law."""
    if not r > 0:
        raise ValueError("r must be positive")
    if not sigma > 0:
        raise ValueError("sigma must be positive (sigma = 0 is the gamma limit)")
    s2 = sigma * sigma
    return 0.5 * (r - 1), math.sqrt(theta * theta + s2) / s2, theta / s2


def _const(c):
    return lambda x: np.full(np.shape(x), float(c))


def limit_operator(case: LimitCase) -> OperatorCoefficients:
    """Stein operator of a limiting case; first-order cases have A == 0."""
    n, q = case.name, case.params
    if n == "VG2":
        k = 2 * q.nu + 1
        g2 = (q.alpha - q.beta) * (q.alpha + q.beta)
        return OperatorCoefficients(lambda x: x, lambda x: k + 2 * q.beta * x,
                                    lambda x: k * q.beta - g2 * x, name=n)
    if n == "VG1":
        s2 = q.sigma ** 2
        if s2 == 0:
            return OperatorCoefficients(_const(0), lambda x: 2 * q.theta * x,
                                        lambda x: q.r * q.theta - x, order=1, name=n)
        return OperatorCoefficients(lambda x: s2 * x, lambda x: s2 * q.r + 2 * q.theta * x,
                                    lambda x: q.r * q.theta - x, name=n)
    if n == "gamma":
        return OperatorCoefficients(_const(0), lambda x: x, lambda x: q.shape - q.rate * x,
                                    order=1, name=n)
    if n == "normal":
        return OperatorCoefficients(_const(0), _const(q.sigma ** 2), lambda x: -x,
                                    order=1, name=n)
    if n == "laplace":
        s2 = q.sigma ** 2
        return OperatorCoefficients(lambda x: s2 * x, _const(2 * s2), lambda x: -x, name=n)
    if n == "product_normal":
        s2 = (q.sigma_x * q.sigma_y) ** 2
        return OperatorCoefficients(lambda x: s2 * x, _const(s2), lambda x: -x, name=n)
    if n == "student_t":
        return OperatorCoefficients(_const(0), lambda x: (x - q.mu) ** 2 + q.delta ** 2,
                                    lambda x: -(q.nu - 1) * (x - q.mu),
                                    order=1, unknown="g", name=n)
    if n == "gig":
        return OperatorCoefficients(_const(0), lambda x: 2 * x * x,
                                    lambda x: -q.a * x * x + 2 * (q.lam + 1) * x + q.b,
                                    order=1, unknown="g", name=n)
    raise ValueError(f"unknown case {n!r}")


def vg1_gamma_limit(r: float, theta: float, sigma: float = 0.0):
    """Gamma operator coefficients (x, s - rate x) read off VG1 at sigma = 0.

    With r = 2s and theta = 1/(2 rate), multiplying the sigma = 0 VG1
    operator by ``rate`` gives the classical gamma operator.
    """
    op = limit_operator(LimitCase("VG1", VG1Params(r, theta, sigma)))
    rate = 1.0 / (2.0 * theta)
    return (lambda x: rate * op.B(x)), (lambda x: rate * op.C(x))


# ------------------------------------------------------------ GH-side paths

def gh_path_coefficients(case_name: str, p: GHParams, x):
    """GH operator coefficients rewritten to match a limit case.

    Returns a tuple ``(A, B, C)`` evaluated at ``x``, in the same unknown as
    :func:`limit_operator` (for first-order targets, ``A`` is the leftover
    second-order coefficient and must vanish in the limit).
    """
    x = np.asarray(x, dtype=float)
    op = gh_operator(p)
    A, B, C = op.A(x), op.B(x), op.C(x)
    if case_name == "VG2":
        return A, B, C
    if case_name == "student_t":
        # f' = x g: A (g + x g') + B x g + C f; f itself has coefficient C
        return C, A * x, A + B * x
    if case_name == "gig":
        # f = x g, divided by beta
        return (A * x / p.beta, (2 * A + B * x) / p.beta, (B + C * x) / p.beta)
    raise ValueError(f"no GH path defined for case {case_name!r}")


def _target_coefficients(case: LimitCase, x):
    op = limit_operator(case)
    x = np.asarray(x, dtype=float)
    if case.name == "student_t":
        # ordering (f coefficient, g', g) to line up with gh_path_coefficients
        return np.zeros_like(x), op.B(x), op.C(x)
    return op.A(x), op.B(x), op.C(x)


def default_path(case: LimitCase) -> list:
    """Default approach sequences for the three limit paths."""
    q = case.params
    if case.name == "VG2":
        return [GHParams(q.nu + 0.5, q.alpha, q.beta, d) for d in (1e-1, 1e-2, 1e-3)]
    if case.name == "student_t":
        return [GHParams(-q.nu / 2, e, e / 2, q.delta) for e in (1e-2, 1e-3, 1e-4)]
    if case.name == "gig":
        return [GHParams(q.lam, a, a - q.a / 2, math.sqrt(q.b / a)) for a in (1e3, 1e4, 1e5)]
    raise ValueError(f"case {case.name!r} has no GH limit path")


def default_case(name: str) -> LimitCase:
    if name == "VG2":
        return LimitCase("VG2", VG2Params(0.5, 2.0, 0.5))
    if name == "student_t":
        return LimitCase("student_t", StudentTParams(3.0, 1.0))
    if name == "gig":
        return LimitCase("gig", GIGParams(1.0, 2.0, 1.0))
    raise ValueError(f"case {name!r} has no GH limit path")


def default_probes(case: LimitCase):
    if case.name == "gig":
        return [0.5, 1.0, 2.0]
    return [-2.0, -0.5, 0.5, 1.0, 2.0]


@dataclass
class ConvergenceReport:
    case: str
    probes: list
    sequence: list
    deviations: np.ndarray          # [entry, probe, coefficient]
    coefficient_names: tuple = ("A", "B", "C")
    meta: dict = field(default_factory=dict)

    @property
    def max_deviation(self) -> np.ndarray:
        """[entry, probe] max over coefficients."""
        return self.deviations.max(axis=2)

    def final_deviation(self) -> float:
        return float(self.max_deviation[-1].max())

    def monotone_tail(self, last: int = 3) -> bool:
        d = self.max_deviation[-last:]
        return bool(np.all(np.diff(d, axis=0) < 0))

    def to_dict(self) -> dict:
        rows = []
        for i, p in enumerate(self.sequence):
            for j, x in enumerate(self.probes):
                rows.append({"entry": i, "params": p.to_dict(), "x": x,
                             **{n: float(self.deviations[i, j, c])
                                for c, n in enumerate(self.coefficient_names)},
                             "max": float(self.max_deviation[i, j])})
        return {"case": self.case, "rows": rows,
                "monotone_last3": self.monotone_tail(),
                "final_max_deviation": self.final_deviation(), **self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def gh_to_limit_convergence(case: LimitCase, sequence: Optional[Sequence[GHParams]] = None,
                            probes: Optional[Sequence[float]] = None) -> ConvergenceReport:
    """Tabulate |GH-path coefficient - limit coefficient| along a sequence."""
    sequence = list(sequence) if sequence is not None else default_path(case)
    probes = list(probes) if probes is not None else default_probes(case)
    if any(x == 0 for x in probes):
        raise ValueError("probe points must avoid the singular point x = 0")
    if case.name == "gig" and any(x <= 0 for x in probes):
        raise ValueError("GIG probes must be positive")
    xs = np.asarray(probes, dtype=float)
    target = np.stack(_target_coefficients(case, xs), axis=-1)
    dev = np.empty((len(sequence), xs.size, 3))
    for i, p in enumerate(sequence):
        got = np.stack(gh_path_coefficients(case.name, p, xs), axis=-1)
        dev[i] = np.abs(got - target)
    names = ("f", "g'", "g") if case.name == "student_t" else \
        ("g''", "g'", "g") if case.name == "gig" else ("A", "B", "C")
    return ConvergenceReport(case.name, [float(x) for x in xs], sequence, dev, names)


# ------------------------------------------------------ closed-form densities

def hyperbolic_pdf(p: GHParams, x):
    """lam = 1 density: gamma/(2 alpha delta K_1(delta gamma)) e^{-alpha r + beta(x-mu)}."""
    y = np.asarray(x, dtype=float) - p.mu
    r = np.hypot(p.delta, y)
    w = p.omega
    c = p.gamma / (2 * p.alpha * p.delta * bessel_k_scaled(1.0, w))
    return c * np.exp(w - p.alpha * r + p.beta * y)


def nig_pdf(p: GHParams, x):
    """lam = -1/2 density: alpha delta K_1(alpha r) e^{delta gamma + beta(x-mu)} / (pi r)."""
    y = np.asarray(x, dtype=float) - p.mu
    r = np.hypot(p.delta, y)
    z = p.alpha * r
    return (p.alpha * p.delta * bessel_k_scaled(1.0, z) / (np.pi * r)
            * np.exp(p.omega - z + p.beta * y))


def student_t_pdf(q: StudentTParams, x):
    y = (np.asarray(x, dtype=float) - q.mu) / q.delta
    lc = (math.lgamma((q.nu + 1) / 2) - math.lgamma(q.nu / 2)
          - 0.5 * math.log(math.pi) - math.log(q.delta))
    return np.exp(lc - 0.5 * (q.nu + 1) * np.log1p(y * y))


def vg2_pdf(q: VG2Params, x):
    """Variance-gamma density gamma^{2nu+1} |x|^nu K_nu(alpha|x|) e^{beta x} / (sqrt(pi) Gamma(nu+1/2) (2 alpha)^nu)."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0) and q.nu <= 0:
        raise ValueError("VG2 density is unbounded at 0 for nu <= 0")
    ax = np.abs(x)
    g = math.sqrt((q.alpha - q.beta) * (q.alpha + q.beta))
    lc = ((2 * q.nu + 1) * math.log(g) - 0.5 * math.log(math.pi)
          - math.lgamma(q.nu + 0.5) - q.nu * math.log(2 * q.alpha))
    with np.errstate(divide="ignore"):
        out = np.exp(lc + q.nu * np.log(ax) + log_bessel_k(q.nu, np.where(ax > 0, q.alpha * ax, 1.0))
                     + q.beta * x)
    if np.any(ax == 0):
        # nu > 0: K_nu(z) z^nu -> 2^(nu-1) Gamma(nu)
        lim = math.exp(lc + math.lgamma(q.nu) + (q.nu - 1) * math.log(2)
                       - q.nu * math.log(q.alpha))
        out = np.where(ax == 0, lim, out)
    return out


def limit_pdf(name: str, params, x):
    """Closed-form density of a special or limiting case.

    ``name`` is one of hyperbolic, nig (GHParams), student_t, VG2, gig,
    gamma, normal, laplace.
    """
    x = np.asarray(x, dtype=float)
    if name == "hyperbolic":
        return hyperbolic_pdf(params, x)
    if name == "nig":
        return nig_pdf(params, x)
    if name == "student_t":
        return student_t_pdf(params, x)
    if name == "VG2":
        return vg2_pdf(params, x)
    if name == "gig":
        if np.any(x <= 0):
            raise ValueError("GIG support is x > 0")
        return np.exp(gig_log_pdf(params, x))
    if name == "gamma":
        if np.any(x <= 0):
            raise ValueError("gamma support is x > 0")
        s, r = params.shape, params.rate
        return np.exp(s * math.log(r) - math.lgamma(s) + (s - 1) * np.log(x) - r * x)
    if name == "normal":
        s = params.sigma
        return np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))
    if name == "laplace":
        # VG1 with r = 2, theta = 0 is Laplace with scale sigma
        b = params.sigma
        return np.exp(-np.abs(x) / b) / (2 * b)
    raise ValueError(f"no closed-form density for {name!r}")


def limit_discrepancy(case: LimitCase, values, f, f1, f2=None, name: str = "f"):
    """Mean, standard error and z of a limit operator applied over a sample."""
    op = limit_operator(case)
    x = np.asarray(values, dtype=float)
    A, B, C = op.A(x), op.B(x), op.C(x)
    v = B * f1(x) + C * f(x)
    if op.order == 2:
        v = v + A * f2(x)
    n = v.size
    mean = math.fsum(v) / n
    se = math.sqrt(math.fsum((v - mean) ** 2) / (n - 1) / n)
    return DiscrepancyEntry(name, mean, se, mean / se if se > 0 else 0.0)


# ------------------------------------------------------- GIG Stein solution

_GIG_CFG = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16, max_subdivisions=4000)


class GIGSteinSolution:
    """Solution of ``2 x^2 g' + (-a x^2 + 2(lam+1) x + b) g = h - E h`` on x > 0.

    ``g(x) = (2 x^2 p(x))^{-1} int_0^x (h - E h) p dt``; for x beyond the mean
    the equivalent form ``-int_x^inf`` is used, which keeps the integral on
    the side where the density is small.
    """

    def __init__(self, g: GIGParams, h, breakpoints: Sequence[float] = (),
                 cfg: Optional[QuadratureConfig] = None):
        self.params = g
        self.h = h
        self.quadrature = cfg or _GIG_CFG
        self._brk = tuple(sorted(float(b) for b in breakpoints if b > 0))
        self.mean_x = gig_mean(g)
        self.mean_h, self.mean_h_err = self._expect(h)

    def _pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(gig_log_pdf(self.params, np.maximum(t, 1e-300)))

    def _expect(self, fn):
        c = self.mean_x
        f = lambda t: fn(t) * self._pdf(t)  # noqa: E731
        pts = [q for q in self._brk if q < c]
        v1, e1 = integrate(f, 0.0, c, self.quadrature, pts)
        v2, e2 = integrate_semi_infinite(f, c, self.params.a / 4, self.quadrature,
                                         [q for q in self._brk if q > c])
        return v1 + v2, e1 + e2

    def hbar(self, t):
        return np.asarray(self.h(t), dtype=float) - self.mean_h

    def _integral(self, x, form, fn=None):
        """int (h - E h) p / p(x) over (0, x] or [x, inf), scaled to avoid underflow."""
        lx = float(gig_log_pdf(self.params, x))
        fn = self.hbar if fn is None else fn
        f = lambda t: fn(t) * np.exp(gig_log_pdf(self.params, np.maximum(t, 1e-300)) - lx)  # noqa: E731
        if form == "lower":
            # near 0 the scaled integrand lives within ~2x^2/b of x
            w = 2 * x * x / self.params.b
            pts = [x - w * 4.0 ** k for k in range(8) if w * 4.0 ** k < x]
            pts += [q for q in self._brk if q < x]
            return integrate(f, 0.0, x, self.quadrature, sorted(pts))
        v, e = integrate_semi_infinite(f, x, self.params.a / 4, self.quadrature,
                                       [q for q in self._brk if q > x])
        return -v, e

    def evaluate(self, x: float, form: str = "auto"):
        """``(g(x), tol)`` from the lower (from 0) or upper (to infinity) form."""
        x = float(x)
        if not x > 0:
            raise ValueError("GIG Stein solution is defined for x > 0")
        if form == "auto":
            form = "lower" if x <= self.mean_x else "upper"
        if form not in ("lower", "upper"):
            raise ValueError("form must be 'lower', 'upper' or 'auto'")
        v, e = self._integral(x, form)
        d = 2 * x * x
        # E h error enters through the centred integrand
        mass = abs(self._integral(x, form, lambda t: np.ones_like(t))[0])
        return v / d, (e + self.mean_h_err * mass) / d

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self.evaluate(v)[0] for v in xs])
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))

    def derivative(self, x):
        """g' from the quotient rule with p'/p = (lam-1)/x - a/2 + b/(2x^2)."""
        x = np.asarray(x, dtype=float)
        g = self(x)
        q = self.params
        dlogp = (q.lam - 1) / x - q.a / 2 + q.b / (2 * x * x)
        return self.hbar(x) / (2 * x * x) - g * (2 / x + dlogp)

    def h_sup(self, grid=None) -> float:
        """sup over the support of |h - E h|, on a dense log-spaced grid."""
        if grid is None:
            grid = np.unique(np.concatenate([np.geomspace(1e-8, 1e8, 20001),
                                             np.asarray(self._brk, float)]))
        return float(np.max(np.abs(self.hbar(grid))))

    def bound(self) -> float:
        """``sup|h - E h| / (2 l^2 p(l))`` with l the mean of the GIG law."""
        l = self.mean_x
        return self.h_sup() / (2 * l * l * float(self._pdf(l)))


def gig_stein_solve(g: GIGParams, h, x, breakpoints: Sequence[float] = ()):
    """GIG Stein-equation solution at ``x`` (scalar or array, x > 0)."""
    return GIGSteinSolution(g, h, breakpoints)(x)

