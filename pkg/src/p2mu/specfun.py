"""Modified Bessel functions of small fractional order and the generalized
Airy pair f, g solving phi'' = x**mu * phi.

All kernels work with exponentially scaled values (I*exp(-z), K*exp(z)) so
that large arguments neither overflow nor underflow.
"""
import math
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .errors import DomainError

# argument crossovers for the three evaluation routes
K_SERIES_MAX = 1.0
ASYMPTOTIC_MIN = 25.0


@dataclass(frozen=True)
class ProblemSpec:
    mu: int

    def __post_init__(self):
        if isinstance(self.mu, bool) or int(self.mu) != self.mu or self.mu < 1:
            raise DomainError(f"mu must be a positive integer, got {self.mu!r}")
        object.__setattr__(self, "mu", int(self.mu))

    @property
    def alpha(self):
        return (self.mu + 2) / 2.0

    @property
    def nu(self):
        return 1.0 / (2.0 * self.alpha)

    @property
    def odd(self):
        return self.mu % 2 == 1


@jit
def _iv_series_scaled(nu, z):
    half = 0.5 * z
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0))
    q = half * half
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if abs(term) <= 1e-17 * abs(total) or k > 500:
            break
    return total * math.exp(-z)


@jit
def _iv_asym_scaled(nu, z):
    mu4 = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    k = 0
    prev = 1e300
    while k < 200:
        k += 1
        term *= -(mu4 - (2.0 * k - 1.0) ** 2) / (k * 8.0 * z)
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if prev <= 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * z)


@jit
def iv_scaled(nu, z):
    """exp(-z) * I_nu(z) for z > 0, nu > -1."""
    if z >= ASYMPTOTIC_MIN:
        return _iv_asym_scaled(nu, z)
    return _iv_series_scaled(nu, z)


@jit
def _kv_series_scaled(nu, z):
    # reflection formula; nu must not be an integer
    half = 0.5 * z
    ip = 0.0
    im = 0.0
    tp = half ** nu / math.gamma(1.0 + nu)
    tm = half ** (-nu) / math.gamma(1.0 - nu)
    q = half * half
    ip = tp
    im = tm
    k = 0
    while k < 500:
        k += 1
        tp *= q / (k * (k + nu))
        tm *= q / (k * (k - nu))
        ip += tp
        im += tm
        if abs(tp) <= 1e-18 * abs(ip) and abs(tm) <= 1e-18 * abs(im):
            break
    return math.pi * (im - ip) / (2.0 * math.sin(nu * math.pi)) * math.exp(z)


@jit
def _kv_integral_scaled(nu, z):
    # trapezoidal rule on exp(-z (cosh t - 1)) cosh(nu t); spectrally accurate
    h = 0.05
    total = 0.5
    t = 0.0
    while True:
        t += h
        term = math.exp(-z * (math.cosh(t) - 1.0)) * math.cosh(nu * t)
        total += term
        if term <= 1e-18 * total and z * math.sinh(t) > abs(nu):
            break
    return h * total


@jit
def _kv_asym_scaled(nu, z):
    mu4 = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    k = 0
    prev = 1e300
    while k < 200:
        k += 1
        term *= (mu4 - (2.0 * k - 1.0) ** 2) / (k * 8.0 * z)
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if prev <= 1e-17 * abs(total):
            break
    return total * math.sqrt(math.pi / (2.0 * z))


@jit
def kv_scaled(nu, z):
    """exp(z) * K_nu(z) for z > 0, 0 < nu < 1 (any real nu off the series branch)."""
    if z <= K_SERIES_MAX:
        return _kv_series_scaled(nu, z)
    if z >= ASYMPTOTIC_MIN:
        return _kv_asym_scaled(nu, z)
    return _kv_integral_scaled(nu, z)


@jit
def gen_airy_arrays(mu, xs):
    """Scaled generalized Airy data on an array of x > 0.

    Returns (zeta, fs, fps, gs, gps) with f = fs*exp(-zeta), g = gs*exp(zeta)
    and likewise for the derivatives.
    """
    m = xs.shape[0]
    alpha = (mu + 2) / 2.0
    nu = 1.0 / (2.0 * alpha)
    zeta = np.empty(m)
    fs = np.empty(m)
    fps = np.empty(m)
    gs = np.empty(m)
    gps = np.empty(m)
    cf = math.sqrt(2.0 / (math.pi * alpha))
    cg = math.sqrt(2.0 * math.pi / alpha)
    for j in range(m):
        x = xs[j]
        z = x ** alpha / alpha
        dz = x ** (alpha - 1.0)
        k0 = kv_scaled(nu, z)
        k1 = kv_scaled(1.0 - nu, z)
        i0 = iv_scaled(nu, z)
        i1 = iv_scaled(nu + 1.0, z)
        kp = -k1 - nu / z * k0
        ip = i1 + nu / z * i0
        sx = math.sqrt(x)
        zeta[j] = z
        fs[j] = cf * sx * k0
        fps[j] = cf * (0.5 / sx * k0 + sx * dz * kp)
        gs[j] = cg * sx * i0
        gps[j] = cg * (0.5 / sx * i0 + sx * dz * ip)
    return zeta, fs, fps, gs, gps


def _check_order(nu):
    if not (0.0 < nu < 1.0):
        raise DomainError(f"Bessel order must lie in (0, 1), got {nu}")


def modified_bessel_scaled(kind, nu, z):
    """exp(-z) I_nu(z) for kind 'I', exp(z) K_nu(z) for kind 'K'."""
    nu = float(nu)
    z = float(z)
    _check_order(nu)
    if not z > 0.0:
        raise DomainError(f"Bessel argument must be positive, got {z}")
    kind = kind.upper()
    if kind == "I":
        return iv_scaled(nu, z)
    if kind == "K":
        return kv_scaled(nu, z)
    raise DomainError(f"kind must be 'I' or 'K', got {kind!r}")


def modified_bessel(kind, nu, z):
    """I_nu(z) or K_nu(z) for 0 < nu < 1 and z > 0."""
    s = modified_bessel_scaled(kind, nu, z)
    z = float(z)
    with np.errstate(over="ignore", under="ignore"):
        if kind.upper() == "I":
            return float(s * np.exp(z))
        return float(s * np.exp(-z))


@dataclass(frozen=True)
class GenAiryValue:
    x: float
    zeta: float
    fs: float
    fps: float
    gs: float
    gps: float
    mu: int

    @property
    def f(self):
        return _unscale(self.fs, -self.zeta)

    @property
    def fp(self):
        return _unscale(self.fps, -self.zeta)

    @property
    def g(self):
        return _unscale(self.gs, self.zeta)

    @property
    def gp(self):
        return _unscale(self.gps, self.zeta)

    @property
    def fpp(self):
        """f'' from the Bessel equation and the chain rule."""
        return _unscale(self._second(self.fs, self.fps), -self.zeta)

    @property
    def gpp(self):
        return _unscale(self._second(self.gs, self.gps), self.zeta)

    def _second(self, phi, dphi):
        # phi(x) = c sqrt(x) Z(zeta).  With the Bessel equation
        # Z'' = (1 + nu^2/zeta^2) Z - Z'/zeta one gets phi'' in terms of phi, phi'.
        x = self.x
        mu = self.mu
        alpha = (mu + 2) / 2.0
        nu = 1.0 / (2.0 * alpha)
        z = self.zeta
        dz = x ** (alpha - 1.0)
        d2z = (alpha - 1.0) * x ** (alpha - 2.0)
        zs = phi / np.sqrt(x)                      # c * Z (scaled)
        zps = (dphi - 0.5 / x * phi) / (np.sqrt(x) * dz)   # c * Z' (scaled)
        zpps = (1.0 + nu * nu / (z * z)) * zs - zps / z
        return (-0.25 * x ** -1.5 * zs + x ** -0.5 * dz * zps
                + np.sqrt(x) * (d2z * zps + dz * dz * zpps))

    @property
    def wronskian(self):
        """f g' - f' g, computed from scaled values (exactly 2 in theory)."""
        return self.fs * self.gps - self.fps * self.gs


def _unscale(v, e):
    with np.errstate(over="ignore", under="ignore"):
        return float(v * np.exp(e))


def gen_airy(spec, x):
    """Generalized Airy pair f, g and derivatives at x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(
            f"gen_airy needs x > 0 (got {x}); negative-axis behaviour is fitted, "
            "not evaluated directly")
    zeta, fs, fps, gs, gps = gen_airy_arrays(spec.mu, np.array([x]))
    return GenAiryValue(x, float(zeta[0]), float(fs[0]), float(fps[0]),
                        float(gs[0]), float(gps[0]), spec.mu)
