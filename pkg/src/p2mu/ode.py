"""Adaptive integration of y'' = 2y^3 + x^mu y along straight segments in C,
with movable-pole detection and localisation."""
import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _dopri
from .errors import DomainError
from .output import fmt

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_BLOWUP = 1e6
POLE_QUALITY_MAX = 1e-3

_STATUS = {
    _dopri.REACHED: "reached",
    _dopri.POLE: "pole",
    _dopri.TOLERANCE_FAILURE: "tolerance_failure",
    _dopri.SIGN_CHANGE: "sign_change",
    _dopri.MAX_STEPS: "max_steps",
}


@dataclass(frozen=True)
class State:
    x: complex
    y: complex
    yp: complex


@dataclass(frozen=True)
class PoleEvent:
    x0: complex
    sign: int
    quality: float

    @property
    def determined(self):
        return self.quality <= POLE_QUALITY_MAX


def dense_output(ts, cont, t, derivative=False):
    """Evaluate the DOPRI5 continuous extension at ``t``.

    Returns the interpolated states, or (states, d/dt states) when
    ``derivative`` is set.
    """
    n = len(ts)
    idx = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, n - 2)
    h = ts[idx + 1] - ts[idx]
    th = ((t - ts[idx]) / h)[:, None]
    c = cont[idx]
    r1, r2, r3, r4, r5 = (c[:, i, :] for i in range(5))
    t1 = 1.0 - th
    val = r1 + th * (r2 + t1 * (r3 + th * (r4 + t1 * r5)))
    if not derivative:
        return val
    inner = r4 + t1 * r5
    mid = r3 + th * inner
    d_mid = inner - th * r5
    outer = r2 + t1 * mid
    dval = outer + th * (-mid + t1 * d_mid)
    return val, dval / h[:, None]


@dataclass
class Trajectory:
    """Accepted steps of one straight-segment integration.

    ``s`` is the path parameter in [0, 1] with x = x_start + s (x_end - x_start).
    """
    mu: int
    x_start: complex
    x_end: complex
    s: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    status: str
    n_rejected: int
    rtol: float
    atol: float
    pole: PoleEvent = None
    event_s: float = None
    _cont: np.ndarray = field(default=None, repr=False)

    @property
    def x(self):
        return self.x_start + self.s * (self.x_end - self.x_start)

    @property
    def n_steps(self):
        return len(self.s) - 1

    @property
    def final(self):
        return State(complex(self.x[-1]), complex(self.y[-1]), complex(self.yp[-1]))

    @property
    def reached(self):
        return self.status == "reached"

    @property
    def event_x(self):
        if self.event_s is None:
            return None
        return self.x_start + self.event_s * (self.x_end - self.x_start)

    def evaluate(self, s, derivative=False):
        """Dense output (y, y') at path parameters ``s``; with ``derivative``
        also returns (y', y'') obtained by differentiating the interpolant."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if len(self.s) < 2:
            vals = np.tile(np.array([self.y[0], self.yp[0]]), (len(s), 1))
            return vals[:, 0], vals[:, 1]
        out = dense_output(self.s, self._cont, s, derivative)
        if not derivative:
            return out[:, 0], out[:, 1]
        val, dval = out
        dval = dval / (self.x_end - self.x_start)
        return val[:, 0], val[:, 1], dval[:, 0], dval[:, 1]

    def evaluate_x(self, x, derivative=False):
        """Dense output at abscissae on the segment."""
        L = self.x_end - self.x_start
        s = np.real((np.asarray(x) - self.x_start) / L)
        return self.evaluate(s, derivative)

    def to_rows(self):
        x = self.x
        return [(float(si), xi.real, xi.imag, yi.real, yi.imag, pi.real, pi.imag)
                for si, xi, yi, pi in zip(self.s, x, self.y.astype(complex),
                                          self.yp.astype(complex))]

    def write_csv(self, path):
        write_trajectory_csv(path, self.to_rows())


TRAJECTORY_COLUMNS = ("s", "x_re", "x_im", "y_re", "y_im", "yp_re", "yp_im")


def write_trajectory_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def rhs(spec, x, y):
    """Right-hand side 2 y^3 + x^mu y."""
    return 2.0 * y ** 3 + x ** spec.mu * y


def integrate(spec, start, target_x, rel_tol=DEFAULT_RTOL, abs_tol=DEFAULT_ATOL,
              max_step=None, blowup_threshold=DEFAULT_BLOWUP, max_steps=2_000_000,
              stop_on_sign_change=False):
    """Integrate from ``start`` to ``target_x`` along the straight segment.

    Terminates early with status ``pole`` (PoleEvent attached), ``sign_change``
    (only when requested; real problems), ``tolerance_failure`` or
    ``max_steps``.
    """
    x0 = complex(start.x)
    L = complex(target_x) - x0
    if not all(np.isfinite([x0.real, x0.imag, complex(start.y).real, complex(start.y).imag,
                            complex(start.yp).real, complex(start.yp).imag])):
        raise DomainError("start state must be finite")
    params = np.array([x0, L, complex(spec.mu)])
    y0 = np.array([complex(start.y), complex(start.yp)])
    hmax = 0.0 if max_step is None or L == 0 else max_step / abs(L)
    n, ts, ys, cont, status, nrej = _dopri.dopri5(
        _dopri.p2mu_path_rhs, params, 0.0, 1.0, y0, float(rel_tol), float(abs_tol),
        0.0, hmax, int(max_steps), float(blowup_threshold), bool(stop_on_sign_change))
    traj = Trajectory(spec.mu, x0, complex(target_x), ts[:n].copy(), ys[:n, 0].copy(),
                      ys[:n, 1].copy(), _STATUS[status], int(nrej), rel_tol, abs_tol,
                      _cont=cont[:max(n - 1, 0)].copy())
    if traj.status == "pole":
        traj.pole = locate_pole(traj.x, traj.y)
        traj.event_s = float(traj.s[-1])
    elif traj.status == "sign_change":
        traj.event_s = _sign_change_s(traj)
    return traj


def _sign_change_s(traj):
    a, b = traj.s[-2], traj.s[-1]
    fa = traj.y[-2].real
    if fa == 0.0:
        return float(a)
    return float(brentq(lambda s: traj.evaluate(s)[0][0].real, a, b, xtol=1e-15))


def locate_pole(x, y, threshold=None):
    """Fit the local model y = sign/(x - x0) to the tail samples via 1/y."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    big = np.abs(y)
    cut = np.sqrt(big[-1]) if threshold is None else threshold
    sel = np.nonzero(big >= cut)[0]
    if len(sel) < 4:
        sel = np.arange(max(0, len(y) - 8), len(y))
    xs = x[sel]
    w = 1.0 / y[sel]
    A = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(A, w, rcond=None)
    c1, c0 = coef
    if c1 == 0:
        return PoleEvent(complex(xs[-1]), 1, np.inf)
    inv = 1.0 / c1
    sign = 1 if inv.real >= 0 else -1
    x0 = -c0 / c1
    fit = A @ coef
    resid = np.max(np.abs(fit - w)) / max(np.max(np.abs(w)), 1e-300)
    quality = float(resid + abs(inv - sign))
    return PoleEvent(complex(x0), sign, quality)


def integrate_polyline(spec, start, waypoints, **opts):
    """Chain straight-segment integrations through ``waypoints``.

    Stops at the first leg that does not reach its end point.
    """
    legs = []
    state = start
    for w in waypoints:
        t = integrate(spec, state, w, **opts)
        legs.append(t)
        if not t.reached:
            break
        state = t.final
    return legs


def residual_check(spec, traj):
    """Max of |y'' - 2y^3 - x^mu y| / (|2y^3| + |x^mu y| + atol) at step midpoints.

    y'' comes from differentiating the dense interpolant of y', whose local
    accuracy is O(rtol**0.8) rather than O(rtol).
    """
    if len(traj.s) < 2:
        return 0.0
    mids = 0.5 * (traj.s[1:] + traj.s[:-1])
    y, _, _, ypp = traj.evaluate(mids, derivative=True)
    x = traj.x_start + mids * (traj.x_end - traj.x_start)
    scale = np.abs(2 * y ** 3) + np.abs(x ** spec.mu * y) + traj.atol
    return float(np.max(np.abs(ypp - rhs(spec, x, y)) / scale))
