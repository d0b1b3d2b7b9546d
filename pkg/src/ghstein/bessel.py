"""Modified Bessel functions of the first and second kind, real order.

K is computed with Temme's series for x < 2 and Steed's continued fraction
beyond, then carried to the requested order by forward recurrence.  I comes
from the continued fraction for I'/I, a downward recurrence and the Wronskian
I_nu K_nu' - I_nu' K_nu = -1/x.  For large arguments I switches to its
asymptotic expansion.  All routines accept scalars or numpy arrays and
broadcast order against argument.

Scaled variants return ``exp(x) K_nu(x)`` and ``exp(-x) I_nu(x)`` so that
callers can work far outside the range where the raw values under/overflow.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-16
_FPMIN = np.finfo(float).tiny / _EPS
_MAXIT = 20000
_XMIN = 2.0
_RESCALE = 1e250

# Power-series coefficients of 1/Gamma(z) = sum_k c_k z^k (k >= 1).
_RGAMMA = np.array([
    1.0, 0.5772156649015329, -0.6558780715202538, -0.0420026350340952,
    0.1665386113822915, -0.0421977345555443, -0.0096219715278770,
    0.0072189432466630, -0.0011651675918591, -0.0002152416741149,
    0.0001280502823882, -0.0000201348547807, -0.0000012504934821,
    0.0000011330272320, -0.0000002056338417, 0.0000000061160950,
    0.0000000050020075, -0.0000000011812746, 0.0000000001043427,
    0.0000000000077823, -0.0000000000036968, 0.0000000000005100,
    -0.0000000000000206, -0.0000000000000054, 0.0000000000000014,
    0.0000000000000001,
])
_ODD = _RGAMMA[0::2]    # c1, c3, c5, ...
_EVEN = _RGAMMA[1::2]   # c2, c4, c6, ...


def _gammas(mu):
    """Return gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu) for |mu| <= 1/2."""
    m2 = mu * mu
    gam2 = np.polynomial.polynomial.polyval(m2, _ODD)
    gam1 = -np.polynomial.polynomial.polyval(m2, _EVEN)
    gampl = gam2 - mu * gam1
    gammi = gam2 + mu * gam1
    return gam1, gam2, gampl, gammi


def _temme(mu, x):
    """Scaled K_mu and K_{mu+1} for |mu| <= 1/2 and 0 < x < 2."""
    x2 = 0.5 * x
    pimu = np.pi * mu
    with np.errstate(invalid="ignore", divide="ignore"):
        fact = np.where(np.abs(pimu) < _EPS, 1.0, pimu / np.sin(pimu))
        d = -np.log(x2)
        e = mu * d
        fact2 = np.where(np.abs(e) < _EPS, 1.0, np.sinh(e) / e)
    gam1, gam2, gampl, gammi = _gammas(mu)
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    ee = np.exp(e)
    p = 0.5 * ee / gampl
    q = 0.5 / (ee * gammi)
    c = np.ones_like(x)
    dd = x2 * x2
    total1 = p.copy()
    mu2 = mu * mu
    active = np.arange(x.size)
    for i in range(1, _MAXIT):
        a = active
        ff[a] = (i * ff[a] + p[a] + q[a]) / (i * i - mu2[a])
        c[a] *= dd[a] / i
        p[a] /= i - mu[a]
        q[a] /= i + mu[a]
        dl = c[a] * ff[a]
        total[a] += dl
        total1[a] += c[a] * (p[a] - i * ff[a])
        active = a[np.abs(dl) >= np.abs(total[a]) * _EPS]
        if active.size == 0:
            break
    else:
        raise ArithmeticError("Temme series did not converge")
    scale = np.exp(x)
    return total * scale, total1 * (2.0 / x) * scale


def _steed(mu, x):
    """Scaled K_mu and K_{mu+1} for |mu| <= 1/2 and x >= 2."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu * mu
    q = a1.copy()
    c = a1.copy()
    a = -a1
    s = 1.0 + q * delh
    active = np.arange(x.size)
    for i in range(2, _MAXIT):
        k = active
        a[k] -= 2 * (i - 1)
        c[k] = -a[k] * c[k] / i
        qnew = (q1[k] - b[k] * q2[k]) / a[k]
        q1[k] = q2[k]
        q2[k] = qnew
        q[k] += c[k] * qnew
        b[k] += 2.0
        d[k] = 1.0 / (b[k] + a[k] * d[k])
        delh[k] = (b[k] * d[k] - 1.0) * delh[k]
        h[k] += delh[k]
        dels = q[k] * delh[k]
        s[k] += dels
        active = k[np.abs(dels / s[k]) >= _EPS]
        if active.size == 0:
            break
    else:
        raise ArithmeticError("Steed continued fraction did not converge")
    h = a1 * h
    kmu = np.sqrt(np.pi / (2.0 * x)) / s
    return kmu, kmu * (mu + x + 0.5 - h) / x


def _k_pair(nu, x):
    """Scaled K_nu, K_{nu+1} for nu >= 0, x > 0 (1-d arrays)."""
    nl = np.floor(nu + 0.5)
    mu = nu - nl
    kmu = np.empty_like(x)
    k1 = np.empty_like(x)
    lo = x < _XMIN
    if lo.any():
        kmu[lo], k1[lo] = _temme(mu[lo], x[lo])
    if (~lo).any():
        kmu[~lo], k1[~lo] = _steed(mu[~lo], x[~lo])
    nmax = int(nl.max()) if nl.size else 0
    for i in range(1, nmax + 1):
        m = nl >= i
        knew = (mu[m] + i) * (2.0 / x[m]) * k1[m] + kmu[m]
        kmu[m] = k1[m]
        k1[m] = knew
    return kmu, k1


def _cf1(nu, x):
    """Continued fraction for I_nu'/I_nu (modified Lentz)."""
    xi = 1.0 / x
    xi2 = 2.0 * xi
    h = np.maximum(nu * xi, _FPMIN)
    b = xi2 * nu
    d = np.zeros_like(x)
    c = h.copy()
    active = np.arange(x.size)
    for _ in range(_MAXIT):
        k = active
        b[k] += xi2[k]
        d[k] = 1.0 / (b[k] + d[k])
        c[k] = b[k] + 1.0 / c[k]
        dl = c[k] * d[k]
        h[k] *= dl
        active = k[np.abs(dl - 1.0) >= _EPS]
        if active.size == 0:
            break
    else:
        raise ArithmeticError("continued fraction for I'/I did not converge")
    return h


def _i_scaled_recurrence(nu, x):
    """Scaled I_nu for nu >= 0 via CF1, downward recurrence and the Wronskian."""
    nl = np.floor(nu + 0.5)
    mu = nu - nl
    f1 = _cf1(nu, x)
    ril = np.full_like(x, _FPMIN)
    ripl = f1 * ril
    ril1 = ril.copy()
    fact = nu / x
    nmax = int(nl.max()) if nl.size else 0
    for i in range(nmax, 0, -1):
        m = nl >= i
        ritemp = fact[m] * ril[m] + ripl[m]
        fact[m] -= 1.0 / x[m]
        ripl[m] = fact[m] * ritemp + ril[m]
        ril[m] = ritemp
        big = np.abs(ril) > _RESCALE
        if big.any():
            ril[big] /= _RESCALE
            ripl[big] /= _RESCALE
            ril1[big] /= _RESCALE
    f = ripl / ril
    kmu, k1 = np.empty_like(x), np.empty_like(x)
    lo = x < _XMIN
    if lo.any():
        kmu[lo], k1[lo] = _temme(mu[lo], x[lo])
    if (~lo).any():
        kmu[~lo], k1[~lo] = _steed(mu[~lo], x[~lo])
    kmup = mu / x * kmu - k1
    # Wronskian in scaled form: Ie_mu (f Ke_mu - Ke_mu') = 1/x
    imu = (1.0 / x) / (f * kmu - kmup)
    return imu * ril1 / ril


def asymptotic_coeff(order, k):
    """Coefficient a_k(nu) of the large-argument expansion.

    ``a_k = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k)``, with ``a_0 = 1``.
    """
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    out = 1.0
    m = 4.0 * float(order) ** 2
    for j in range(1, int(k) + 1):
        out *= (m - (2 * j - 1) ** 2) / (8.0 * j)
    return out


def _asymptotic_sum(nu, x, sign, terms):
    """Sum sign^k a_k(nu) / x^k with optimal truncation (capped) or fixed terms."""
    m = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    if terms is not None:
        for k in range(1, int(terms)):
            term = term * sign * (m - (2 * k - 1) ** 2) / (8.0 * k * x)
            total = total + term
        return total
    live = np.ones(x.shape, bool)
    for k in range(1, 10):
        new = term * sign * (m - (2 * k - 1) ** 2) / (8.0 * k * x)
        live &= np.abs(new) < np.abs(term)
        total = np.where(live, total + new, total)
        term = np.where(live, new, term)
    return total


def _prepare(order, x):
    nu, xx = np.broadcast_arrays(np.asarray(order, float), np.asarray(x, float))
    scalar = nu.ndim == 0
    return nu.ravel().copy(), xx.ravel().copy(), nu.shape, scalar


def _finish(values, shape, scalar):
    if scalar:
        return float(values[0])
    return values.reshape(shape)


def bessel_k_scaled(order, x):
    """``exp(x) * K_order(x)`` for real order and x > 0."""
    nu, xx, shape, scalar = _prepare(order, x)
    if np.any(~np.isfinite(xx)) or np.any(xx <= 0):
        raise ValueError("bessel_k requires finite x > 0")
    if np.any(~np.isfinite(nu)):
        raise ValueError("order must be finite")
    out, _ = _k_pair(np.abs(nu), xx) if xx.size else (xx, xx)
    return _finish(out, shape, scalar)


def bessel_k(order, x):
    """Modified Bessel function of the second kind, K_order(x), x > 0.

    Underflows to 0 for large x; use :func:`log_bessel_k` or
    :func:`bessel_k_scaled` there.
    """
    ke = np.asarray(bessel_k_scaled(order, x))
    with np.errstate(under="ignore"):
        out = ke * np.exp(-np.broadcast_to(np.asarray(x, float), ke.shape))
    return float(out) if out.ndim == 0 else out


def log_bessel_k(order, x):
    """``log K_order(x)`` without underflow."""
    ke = np.asarray(bessel_k_scaled(order, x))
    out = np.log(ke) - np.broadcast_to(np.asarray(x, float), ke.shape)
    return float(out) if out.ndim == 0 else out


def _sinpi(v):
    """sin(pi v) with the argument reduced first; exact zeros at integers."""
    n = np.round(v)
    return np.where(np.mod(n, 2) == 0, 1.0, -1.0) * np.sin(np.pi * (v - n))


def _asymptotic_threshold(nu):
    return np.maximum(50.0, 2.0 * nu * nu)


def bessel_i_scaled(order, x):
    """``exp(-x) * I_order(x)`` for real order and x >= 0."""
    nu, xx, shape, scalar = _prepare(order, x)
    if np.any(~np.isfinite(xx)) or np.any(xx < 0):
        raise ValueError("bessel_i requires finite x >= 0")
    if np.any(~np.isfinite(nu)):
        raise ValueError("order must be finite")
    a = np.abs(nu)
    out = np.empty_like(xx)
    zero = xx == 0
    if zero.any():
        # I_0(0) = 1, I_nu(0) = 0 for nu > 0; negative non-integer orders blow up
        az, nz = a[zero], nu[zero]
        integer = nz == np.round(nz)
        val = np.where(az == 0, 1.0, 0.0)
        val = np.where((nz < 0) & ~integer, np.inf, val)
        out[zero] = val
    big = ~zero & (xx >= _asymptotic_threshold(a))
    mid = ~zero & ~big
    if big.any():
        xb = xx[big]
        out[big] = _asymptotic_sum(a[big], xb, -1.0, None) / np.sqrt(2 * np.pi * xb)
    if mid.any():
        out[mid] = _i_scaled_recurrence(a[mid], xx[mid])
    neg = ~zero & (nu < 0) & (nu != np.round(nu))
    if neg.any():
        # I_{-v} = I_v + (2/pi) sin(pi v) K_v
        xn = xx[neg]
        ke, _ = _k_pair(a[neg], xn)
        out[neg] += (2.0 / np.pi) * _sinpi(a[neg]) * ke * np.exp(-2.0 * xn)
    return _finish(out, shape, scalar)


def bessel_i(order, x):
    """Modified Bessel function of the first kind, I_order(x), x >= 0.

    Raises
    ------
    OverflowError
        If the result is not representable in double precision.
    """
    ie = np.asarray(bessel_i_scaled(order, x))
    xx = np.broadcast_to(np.asarray(x, float), ie.shape)
    with np.errstate(over="ignore", divide="ignore"):
        logv = np.log(np.abs(ie)) + xx
    if np.any(np.isfinite(ie) & (logv > 709.78)):
        raise OverflowError("I_nu(x) overflows double precision; use bessel_i_scaled")
    out = ie * np.exp(xx)
    return float(out) if out.ndim == 0 else out


def bessel_k_derivative(order, x):
    """d/dx K_order(x) = -K_{order+1}(x) + (order/x) K_order(x)."""
    nu = np.asarray(order, float)
    return -np.asarray(bessel_k(nu + 1.0, x)) + nu / np.asarray(x, float) * bessel_k(nu, x)


def bessel_i_derivative(order, x):
    """d/dx I_order(x) = I_{order+1}(x) + (order/x) I_order(x)."""
    nu = np.asarray(order, float)
    return np.asarray(bessel_i(nu + 1.0, x)) + nu / np.asarray(x, float) * bessel_i(nu, x)


def asymptotic_k(order, x, terms=None, scaled=False):
    """Large-argument expansion of K_order(x).

    With ``terms=None`` the series is truncated at its smallest term (at most
    ten terms); otherwise exactly ``terms`` terms are used.
    """
    nu, xx = np.broadcast_arrays(np.asarray(order, float), np.asarray(x, float))
    s = _asymptotic_sum(np.abs(nu), xx.astype(float), 1.0, terms)
    out = np.sqrt(np.pi / (2 * xx)) * s
    if not scaled:
        out = out * np.exp(-xx)
    return float(out) if out.ndim == 0 else out


def asymptotic_i(order, x, terms=None, scaled=False):
    """Large-argument expansion of I_order(x); see :func:`asymptotic_k`."""
    nu, xx = np.broadcast_arrays(np.asarray(order, float), np.asarray(x, float))
    s = _asymptotic_sum(np.abs(nu), xx.astype(float), -1.0, terms)
    out = s / np.sqrt(2 * np.pi * xx)
    if not scaled:
        out = out * np.exp(xx)
    return float(out) if out.ndim == 0 else out

