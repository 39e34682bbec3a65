"""Formal power-series solution in Boutroux variables.

With y = x**(mu/2) u(z) and z = 2/(mu+2) x**((mu+2)/2) the equation for u has
the formal solution u_f = sum a_n z**(-2n).  Every coefficient is
a_n = i q_n / sqrt(2) with q_n rational, which is how they are stored.
"""
import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .errors import DomainError, RealityError
from .specfun import ProblemSpec

OPTIMAL = "optimal"
EXACT_MAX_N = 30
DEFAULT_TABLE = 60
SQRT_HALF = 1.0 / math.sqrt(2.0)


def sigma(mu, n):
    """Multiplier of a_{n-1} in the coefficient recurrence (exact rational)."""
    mu = Fraction(mu)
    n = Fraction(n)
    return (-(2 * n - 1) * (n - 1) + 3 * mu * (n - 1) / (mu + 2)
            - mu * (mu - 2) / (2 * (mu + 2) ** 2))


def _recurrence(mu, N, one, sig):
    q = [one]
    for n in range(1, N + 1):
        quad = sum((q[k] * q[n - k] for k in range(1, n)), one * 0)
        cubic = one * 0
        for j in range(1, n):
            for k in range(0, n - j + 1):
                cubic += q[j] * q[k] * q[n - j - k]
        # a0^2 = -1/2 turns every cubic product of a's into -q q q / 2
        q.append(sig(n) * q[n - 1] - (q[0] * quad + cubic) / 2)
    return q


@lru_cache(maxsize=64)
def _exact_q(mu, N):
    return tuple(_recurrence(mu, N, Fraction(1), lambda n: sigma(mu, n)))


@lru_cache(maxsize=64)
def _float_q(mu, N):
    s = {n: float(sigma(mu, n)) for n in range(1, N + 1)}
    return tuple(_recurrence(mu, N, 1.0, lambda n: s[n]))


@dataclass(frozen=True)
class SeriesCoefficients:
    mu: int
    q: tuple          # a_n = i * q[n] / sqrt(2)
    exact: bool

    @property
    def N(self):
        return len(self.q) - 1

    @property
    def a(self):
        """Complex coefficients a_0..a_N (real parts are exactly zero)."""
        return np.array([complex(0.0, float(v) * SQRT_HALF) for v in self.q])

    @property
    def imag(self):
        return np.array([float(v) * SQRT_HALF for v in self.q])

    def to_records(self):
        out = []
        for n, v in enumerate(self.q):
            rec = {"n": n, "imag": float(v) * SQRT_HALF}
            if self.exact:
                rec["q_num"] = v.numerator
                rec["q_den"] = v.denominator
            else:
                rec["q"] = float(v)
            out.append(rec)
        return out


def compute_coefficients(mu, N, exact=None):
    """Coefficients a_0..a_N of u_f for the given mu.

    Exact rational arithmetic is used for N <= 30 unless ``exact`` says
    otherwise.
    """
    spec = ProblemSpec(mu)
    if int(N) != N or N < 0:
        raise DomainError(f"N must be a non-negative integer, got {N}")
    N = int(N)
    if exact is None:
        exact = N <= EXACT_MAX_N
    q = _exact_q(spec.mu, N) if exact else _float_q(spec.mu, N)
    if N >= 1:
        closed = -Fraction(spec.mu * (spec.mu - 2), 2 * (spec.mu + 2) ** 2)
        if exact:
            assert q[1] == closed == sigma(spec.mu, 1)
        else:
            assert abs(q[1] - float(closed)) <= 1e-15 * max(1.0, abs(float(closed)))
    return SeriesCoefficients(spec.mu, q, exact)


@lru_cache(maxsize=32)
def default_table(mu):
    return compute_coefficients(mu, DEFAULT_TABLE, exact=False)


# -- Boutroux variables ------------------------------------------------------

def _power(x, p, arg=None):
    """x**p using arg(x) = ``arg`` (principal branch when None)."""
    if x == 0:
        raise DomainError("Boutroux transform is singular at x = 0")
    r = abs(x)
    th = cmath.phase(x) if arg is None else arg
    return cmath.exp(p * complex(math.log(r), th))


@dataclass(frozen=True)
class BoutrouxPoint:
    z: complex
    u: complex
    du: complex


def boutroux_forward(spec, x, y, yp, arg=None):
    """(x, y, y') -> (z, u, du/dz); ``arg`` selects the branch of x."""
    x = complex(x)
    mu = spec.mu
    alpha = spec.alpha
    xa = _power(x, alpha, arg)
    xh = _power(x, mu / 2.0, arg)
    z = xa / alpha
    u = y / xh
    # du/dx = y'/x^(mu/2) - (mu/2) y / x^(mu/2+1);  dz/dx = x^(mu/2)
    du = (yp / xh - 0.5 * mu * y / (xh * x)) / xh
    return BoutrouxPoint(z, complex(u), complex(du))


def boutroux_inverse(spec, z, u, du, arg=None):
    """Inverse map; ``arg`` is the argument of the returned x (principal if None)."""
    z = complex(z)
    if z == 0:
        raise DomainError("Boutroux transform is singular at z = 0")
    alpha = spec.alpha
    w = alpha * z
    base = cmath.phase(w)
    if arg is not None:
        base += 2.0 * math.pi * round((alpha * arg - base) / (2.0 * math.pi))
    th = base / alpha
    x = _power(w, 1.0 / alpha, base)
    xh = _power(x, spec.mu / 2.0, th)
    y = xh * u
    yp = xh * (du * xh) + 0.5 * spec.mu * y / x
    return complex(x), complex(y), complex(yp)


# -- evaluation ----------------------------------------------------------------

@dataclass(frozen=True)
class SeriesValue:
    y: complex
    yp: complex
    ypp: complex
    n_terms: int
    error_estimate: float
    reliable: bool


def negative_axis_sign(mu):
    """Sign turning the principal-branch series into the positive real one on x < 0."""
    return -1 if mu % 4 == 1 else 1


def formal_series(spec, coeffs, x, N=OPTIMAL, real=False, sign=1, arg=None):
    """Truncated series y_f with term-wise first and second derivatives.

    ``N=OPTIMAL`` stops before the smallest term (or once terms drop below
    rounding); otherwise terms 0..N are summed.  ``real=True`` evaluates the
    real form on x < 0, available for odd mu only.
    """
    mu = spec.mu
    if coeffs.mu != mu:
        raise DomainError("coefficient table belongs to a different mu")
    if real:
        if mu % 2 == 0:
            raise RealityError(
                "the formal series is not real on the negative axis for even mu")
        x = float(x)
        if not x < 0.0:
            raise DomainError("real mode needs x < 0")
    else:
        x = complex(x)
        if x == 0:
            raise DomainError("formal series is singular at x = 0")
    q = [float(v) for v in coeffs.q]
    a2 = spec.alpha ** 2
    if real:
        t = -x
        lead = math.sqrt(t ** mu / 2.0)
        ratio = -a2 / t ** (mu + 2)
        dx = -1.0
        xx = t
    else:
        lead = sign * _power(x, mu / 2.0, arg) * 1j * SQRT_HALF
        ratio = a2 / x ** (mu + 2)
        dx = 1.0
        xx = x
    reliable = len(q) < 2 or abs(q[1] * ratio) < 1.0
    if not reliable:
        warnings.warn("formal series evaluated where |a1/z^2| >= 1", RuntimeWarning)

    if N == OPTIMAL:
        limit = len(q) - 1
    else:
        if int(N) != N or N < 0:
            raise DomainError(f"N must be a non-negative integer or OPTIMAL, got {N}")
        limit = int(N)
        if limit > len(q) - 1:
            raise DomainError(f"coefficient table too short for N = {limit}")

    y = yp = ypp = 0.0
    w = 1.0
    err = 0.0
    used = 0
    prev = math.inf
    for n in range(limit + 1):
        term = lead * q[n] * w
        if N == OPTIMAL:
            mag = abs(term)
            if mag > prev or (n > 0 and mag <= 1e-17 * abs(y)):
                err = mag
                break
            prev = mag
        e = mu / 2.0 - (mu + 2) * n
        y += term
        yp += dx * term * e / xx
        ypp += term * e * (e - 1.0) / (xx * xx)
        used = n + 1
        w *= ratio
    else:
        if limit + 1 < len(q):
            err = abs(lead * q[limit + 1] * w)
        else:
            err = abs(lead * q[limit] * w / ratio) * abs(ratio)
    return SeriesValue(y, yp, ypp, used, float(err), reliable)


def eval_formal_series(spec, coeffs, x, N=OPTIMAL, real=False, sign=1, arg=None):
    """Value of the truncated formal series (see :func:`formal_series`)."""
    return formal_series(spec, coeffs, x, N, real, sign, arg).y


def truncation_residual(mu, N, x, dps=60, normalized=False):
    """|y_N'' - 2 y_N^3 - x^mu y_N| of the N-term series, in high precision.

    Real negative x uses the real form (odd mu); other x use the principal
    branch.  With ``normalized`` the residual is divided by |x|^mu, i.e. it
    is the residual of the equation written as y''/x^mu = 2 y^3/x^mu + y.
    """
    q = _exact_q(mu, N)
    with mpmath.workdps(dps):
        a2 = mpmath.mpf(mu + 2) ** 2 / 4
        if isinstance(x, (int, float)) and x < 0:
            if mu % 2 == 0:
                raise RealityError("real mode requires odd mu")
            t = mpmath.mpf(-x)
            X = -t
            y = ypp = mpmath.mpf(0)
            for n in range(N + 1):
                e = mpmath.mpf(mu) / 2 - (mu + 2) * n
                b = mpmath.sqrt(mpmath.mpf(1) / 2) * a2 ** n * mpmath.mpf(q[n].numerator) \
                    / q[n].denominator * (-1) ** n
                y += b * t ** e
                ypp += b * e * (e - 1) * t ** (e - 2)
        else:
            X = mpmath.mpc(x)
            y = ypp = mpmath.mpc(0)
            for n in range(N + 1):
                e = mpmath.mpf(mu) / 2 - (mu + 2) * n
                b = 1j * mpmath.sqrt(mpmath.mpf(1) / 2) * a2 ** n \
                    * mpmath.mpf(q[n].numerator) / q[n].denominator
                y += b * X ** e
                ypp += b * e * (e - 1) * X ** (e - 2)
        res = abs(ypp - 2 * y ** 3 - X ** mu * y)
        if normalized:
            res /= abs(X) ** mu
        return float(res)
