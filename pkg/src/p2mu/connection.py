"""Decaying solutions y_k ~ k f(x), their fate as x decreases, and the
bisection for the Hastings-McLeod-type connection constant k*."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import brentq

from . import ode
from .errors import (AnchorTooSmallError, BracketError, DomainError, FitRejected,
                     NoSolutionError)
from .series import default_table, formal_series
from .specfun import gen_airy_arrays

PICARD_POINTS = 4001
X_MIN_CLASSIFY = -40.0
SERIES_MATCH_TOL = 0.02
CLASSIFY_RTOL = 1e-12


def fallback_anchor(spec):
    return max(6.0, (4.0 * (spec.mu + 2)) ** (2.0 / (spec.mu + 2)))


def default_x_left(spec):
    """Left end where |x|^((mu+2)/2) >= 15, rounded out to a multiple of 0.5."""
    r = 15.0 ** (2.0 / (spec.mu + 2))
    return -math.ceil(2.0 * r) / 2.0


@dataclass(frozen=True)
class DecayingSeed:
    k: float
    x_start: float
    y: float
    yp: float
    picard_iterations: int
    picard_residual: float
    contraction: float
    x_inf: float
    picard_diffs: tuple = ()

    @property
    def state(self):
        return ode.State(complex(self.x_start), complex(self.y), complex(self.yp))


def _grid(spec, x_start):
    # extend until f^3 g has dropped by 1e-20 relative to its value at x_start
    zeta0 = spec_zeta(spec, x_start)
    x_inf = x_start
    while True:
        x_inf = max(x_inf + 0.25, x_inf * 1.05)
        zeta, fs, fps, gs, gps = gen_airy_arrays(spec.mu, np.array([x_start, x_inf]))
        ratio = (fs[1] ** 3 * gs[1]) / (fs[0] ** 3 * gs[0]) * math.exp(-2.0 * (zeta[1] - zeta0))
        if ratio < 1e-20:
            break
    xs = np.linspace(x_start, x_inf, PICARD_POINTS)
    return xs, gen_airy_arrays(spec.mu, xs)


def spec_zeta(spec, x):
    return x ** spec.alpha / spec.alpha


def _tail_integral(xs, vals):
    """int_x^X vals dt for every grid point x."""
    rev = cumulative_simpson(vals[::-1], x=-xs[::-1], initial=0.0)
    return rev[::-1]


def _contraction(k, xs, zeta, fs, gs, stride=40):
    # 3 R^2 sup_x int_x^X |K(x,t)| (f(t)/f(x_start))^2 dt with R = 2 k f(x_start)
    if k == 0.0:
        return 0.0
    z0 = zeta[0]
    worst = 0.0
    fw = fs * np.exp(-(zeta - z0))          # f(t)/exp(-zeta0)
    for i in range(0, len(xs) - 1, stride):
        t = slice(i, None)
        K = (fs[i] * gs[t] * np.exp(zeta[t] - zeta[i] - 2.0 * (zeta[t] - z0))
             - fs[t] * gs[i] * np.exp(zeta[i] - zeta[t] - 2.0 * (zeta[t] - z0)))
        integrand = np.abs(K) * fw[t] ** 2
        worst = max(worst, float(np.trapezoid(integrand, xs[t])))
    R2 = (2.0 * k) ** 2 * math.exp(-2.0 * z0)
    return 3.0 * R2 * worst


def choose_anchor(spec, k):
    """Smallest x >= fallback with k f(x) <= 0.05 min(1, x^(mu/2)) and contraction < 1/2."""
    x = fallback_anchor(spec)
    for _ in range(400):
        zeta, fs, *_ = gen_airy_arrays(spec.mu, np.array([x]))
        kf = k * fs[0] * math.exp(-zeta[0])
        if kf <= 0.05 * min(1.0, x ** (spec.mu / 2.0)):
            xs, (zeta_g, fs_g, _, gs_g, _) = _grid(spec, x)
            if _contraction(k, xs, zeta_g, fs_g, gs_g) < 0.5:
                return x
        x += 0.5
    raise AnchorTooSmallError(f"no admissible anchor found for k = {k}", x)


def init_decaying_solution(spec, k, x_start=None, tol=1e-15, max_iter=50):
    """Picard iteration of the integral equation on [x_start, X_inf].

    Works with eta = y * exp(zeta) so that neither f nor g over/underflows.
    """
    k = float(k)
    if k < 0.0:
        raise DomainError("k must be non-negative")
    if x_start is None:
        x_start = choose_anchor(spec, k)
    x_start = float(x_start)
    xs, (zeta, fs, fps, gs, gps) = _grid(spec, x_start)
    contraction = _contraction(k, xs, zeta, fs, gs)
    if contraction >= 0.5:
        raise AnchorTooSmallError(
            f"contraction estimate {contraction:.3g} >= 1/2 at x_start = {x_start}",
            choose_anchor(spec, k))
    z0 = zeta[0]
    dz = zeta - z0
    damp = math.exp(-2.0 * z0)
    w1 = np.exp(-2.0 * dz)
    w2 = np.exp(-4.0 * dz)
    grow = np.exp(2.0 * dz)
    y_weight = np.exp(-zeta)              # eta -> y

    eta = k * fs
    diffs = []
    it = 0
    F1 = np.zeros_like(xs)
    F2 = np.zeros_like(xs)
    for it in range(1, max_iter + 1):
        e3 = eta ** 3
        F1 = _tail_integral(xs, gs * e3 * w1)
        F2 = _tail_integral(xs, fs * e3 * w2)
        new = k * fs + damp * (fs * F1 - gs * grow * F2)
        d = float(np.max(np.abs(new - eta) * y_weight))
        diffs.append(d)
        eta = new
        scale = float(np.max(np.abs(eta) * y_weight))
        if d <= tol * max(scale, 1e-300) or d == 0.0:
            break
    y = eta[0] * y_weight[0]
    yp = (k * fps[0] + damp * (fps[0] * F1[0] - gps[0] * F2[0])) * y_weight[0]
    return DecayingSeed(k, x_start, float(y), float(yp), it, diffs[-1] if diffs else 0.0,
                        contraction, float(xs[-1]), tuple(diffs))


# -- shooting ----------------------------------------------------------------

@dataclass(frozen=True)
class ShootingOutcome:
    kind: str            # "blowup" | "sign_cross" | "bounded" | "undetermined"
    x: float             # pole, zero, or reached abscissa
    trajectory: object = field(default=None, compare=False, repr=False)

    @property
    def label(self):
        return self.kind


def _abs_tol(seed, rtol):
    mag = min(abs(seed.y), abs(seed.yp))
    return max(rtol * mag * 1e-3, 1e-300)


def classify_k(spec, k, x_min_classify=X_MIN_CLASSIFY, x_start=None, rtol=CLASSIFY_RTOL,
               keep_trajectory=False):
    """Fate of y_k as x decreases from its anchor."""
    if k < 0:
        raise DomainError("k must be non-negative")
    if k == 0:
        return ShootingOutcome("bounded", float(x_min_classify))
    seed = init_decaying_solution(spec, k, x_start)
    for tol in (rtol, rtol / 10.0):
        traj = ode.integrate(spec, seed.state, x_min_classify, rel_tol=tol,
                             abs_tol=_abs_tol(seed, tol), stop_on_sign_change=True)
        keep = traj if keep_trajectory else None
        if traj.status == "pole":
            return ShootingOutcome("blowup", float(traj.pole.x0.real), keep)
        if traj.status == "sign_change":
            return ShootingOutcome("sign_cross", float(traj.event_x.real), keep)
        if traj.status == "reached":
            return ShootingOutcome("bounded", float(x_min_classify), keep)
    return ShootingOutcome("undetermined", float(traj.x[-1].real), keep)


def solve_decaying(spec, k, x_end, x_start=None, rtol=CLASSIFY_RTOL, stop_on_sign_change=False):
    """Trajectory of y_k from its anchor down to ``x_end``."""
    seed = init_decaying_solution(spec, k, x_start)
    if k == 0:
        return ode.integrate(spec, seed.state, x_end, rel_tol=rtol, abs_tol=1e-300)
    return ode.integrate(spec, seed.state, x_end, rel_tol=rtol, abs_tol=_abs_tol(seed, rtol),
                         stop_on_sign_change=stop_on_sign_change)


def hm_candidate(spec, k, x_left, x_start=None, rtol=CLASSIFY_RTOL):
    """Pure shooting: y_k on [x_left, x_start] and its relative mismatch to the real series."""
    traj = solve_decaying(spec, k, x_left, x_start, rtol, stop_on_sign_change=True)
    if not traj.reached or np.min(traj.y.real) <= 0.0:
        return traj, math.inf
    sv = formal_series(spec, default_table(spec.mu), x_left, real=True)
    mismatch = abs(traj.y[-1].real - sv.y) / abs(sv.y)
    return traj, float(mismatch)


def _growth_phase(spec, x):
    """Exponent c |x|^((mu+2)/2), c = 2 sqrt(2)/(mu+2), of the unstable mode on x < 0."""
    return 2.0 * math.sqrt(2.0) / (spec.mu + 2) * abs(x) ** ((spec.mu + 2) / 2.0)


def _phase_to_x(spec, phase):
    c = 2.0 * math.sqrt(2.0) / (spec.mu + 2)
    return -(phase / c) ** (2.0 / (spec.mu + 2))


class PiecewiseTrajectory:
    """Real trajectory assembled from legs covering [x_left, x_start].

    Exposes the parts of the :class:`ode.Trajectory` interface used downstream.
    """

    def __init__(self, mu, legs):
        self.mu = mu
        self.legs = legs
        bounds = []
        for t in legs:
            a, b = float(t.x_start.real), float(t.x_end.real)
            bounds.append((min(a, b), max(a, b)))
        self._bounds = bounds
        xs = np.concatenate([t.x.real for t in legs])
        ys = np.concatenate([t.y.real for t in legs])
        yps = np.concatenate([t.yp.real for t in legs])
        order = np.argsort(-xs, kind="stable")
        xs, ys, yps = xs[order], ys[order], yps[order]
        keep = np.concatenate([[True], np.diff(xs) != 0.0])
        self._x, self._y, self._yp = xs[keep], ys[keep], yps[keep]
        self.x_start = complex(self._x[0])
        self.x_end = complex(self._x[-1])
        self.status = "reached"
        self.reached = True

    @property
    def x(self):
        return self._x.astype(complex)

    @property
    def y(self):
        return self._y.astype(complex)

    @property
    def yp(self):
        return self._yp.astype(complex)

    @property
    def n_steps(self):
        return sum(t.n_steps for t in self.legs)

    def evaluate_x(self, x, derivative=False):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n_out = 4 if derivative else 2
        out = [np.empty(len(x), dtype=complex) for _ in range(n_out)]
        done = np.zeros(len(x), dtype=bool)
        for t, (lo, hi) in zip(self.legs, self._bounds):
            sel = (~done) & (x >= lo) & (x <= hi)
            if np.any(sel):
                vals = t.evaluate_x(x[sel], derivative)
                for o, v in zip(out, vals):
                    o[sel] = v
                done |= sel
        if not np.all(done):
            raise DomainError("evaluation outside the trajectory")
        return tuple(out)

    def to_rows(self):
        span = self._x[0] - self._x[-1]
        return [(float((self._x[0] - x) / span), x, 0.0, y, 0.0, p, 0.0)
                for x, y, p in zip(self._x, self._y, self._yp)]

    def write_csv(self, path):
        ode.write_trajectory_csv(path, self.to_rows())


def _series_state(spec, x):
    sv = formal_series(spec, default_table(spec.mu), x, real=True)
    return sv.y, sv.yp


def _match_left(spec, x_left, x_m, y_target, rtol, leg_phase=12.0, max_newton=12):
    """Multiple shooting on [x_left, x_m], integrating rightward.

    Conditions: no component along the mode growing as x -> -inf at x_left
    (relative to the real formal series) and y(x_m) = y_target.  Returns
    the legs and the final state at x_m.
    """
    ph_l, ph_m = _growth_phase(spec, x_left), _growth_phase(spec, x_m)
    n_legs = max(1, math.ceil((ph_l - ph_m) / leg_phase))
    nodes = [_phase_to_x(spec, p) for p in np.linspace(ph_l, ph_m, n_legs + 1)]
    nodes[0], nodes[-1] = x_left, x_m
    yf, yfp = _series_state(spec, x_left)
    t = -x_left
    kappa = spec.mu / (4.0 * t) + math.sqrt(2.0) * t ** (spec.mu / 2.0)

    u = np.empty(2 * n_legs)
    for i in range(n_legs):
        u[2 * i], u[2 * i + 1] = _series_state(spec, nodes[i])

    def shoot(i, y0, yp0):
        st = ode.State(complex(nodes[i]), complex(y0), complex(yp0))
        tr = ode.integrate(spec, st, nodes[i + 1], rel_tol=rtol, abs_tol=rtol * 1e-3)
        if not tr.reached:
            raise BracketError(f"left leg {i} failed with status {tr.status}", [])
        return tr

    def residual(u):
        legs = [shoot(i, u[2 * i], u[2 * i + 1]) for i in range(n_legs)]
        r = np.empty(2 * n_legs)
        r[0] = ((u[1] - yfp) - kappa * (u[0] - yf)) / kappa
        for i in range(n_legs - 1):
            end = legs[i].final
            r[1 + 2 * i] = end.y.real - u[2 * i + 2]
            r[2 + 2 * i] = (end.yp.real - u[2 * i + 3]) / kappa
        r[-1] = legs[-1].final.y.real - y_target
        return r, legs

    r, legs = residual(u)
    for _ in range(max_newton):
        if np.max(np.abs(r)) <= 1e-14 * abs(y_target):
            break
        J = np.empty((len(u), len(u)))
        for j in range(len(u)):
            du = 1e-7 * max(1.0, abs(u[j]))
            up = u.copy()
            up[j] += du
            J[:, j] = (residual(up)[0] - r) / du
        step = np.linalg.solve(J, -r)
        u = u + step
        r_new, legs = residual(u)
        if np.max(np.abs(r_new)) >= np.max(np.abs(r)) and np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(u))):
            r = r_new
            break
        r = r_new
    return legs, float(np.max(np.abs(r)))


def hm_trajectory(spec, k, x_left, rtol=CLASSIFY_RTOL, junction_phase=6.0):
    """Hastings-McLeod candidate on [x_left, x_start] for the shooting constant k.

    Shooting from the anchor is trusted down to the junction where the
    unstable mode has grown by exp(junction_phase); to the left the solution
    is completed by multiple shooting from the real formal series.  Returns
    (trajectory, series_mismatch_at_x_left, derivative_jump_at_junction).
    """
    x_m = _phase_to_x(spec, junction_phase)
    if x_left >= x_m:
        traj, mismatch = hm_candidate(spec, k, x_left, rtol=rtol)
        return traj, mismatch, 0.0
    right = solve_decaying(spec, k, x_m, rtol=rtol, stop_on_sign_change=True)
    if not right.reached:
        return right, math.inf, math.inf
    end = right.final
    left, _ = _match_left(spec, x_left, x_m, end.y.real, rtol)
    jump = abs(left[-1].final.yp.real - end.yp.real) / abs(end.y.real)
    traj = PiecewiseTrajectory(spec.mu, [right] + left[::-1])
    yf, _ = _series_state(spec, x_left)
    y_left = traj.evaluate_x(x_left)[0][0].real
    return traj, float(abs(y_left - yf) / abs(yf)), float(jump)


JUNCTION_JUMP_TOL = 1e-5


@dataclass
class ConnectionResult:
    mu: int
    k_star: float
    bracket: tuple
    k_tol: float
    history: list
    hm_trajectory: object
    x_left: float
    x_start: float
    series_mismatch: float
    junction_jump: float
    validated: bool

    def to_dict(self, trajectory_file=None):
        return {
            "mu": self.mu,
            "k_star": self.k_star,
            "bracket": list(self.bracket),
            "tolerance": self.k_tol,
            "x_left": self.x_left,
            "x_start": self.x_start,
            "series_mismatch": self.series_mismatch,
            "junction_jump": self.junction_jump,
            "validated": self.validated,
            "history": [[k, o.kind, o.x] for k, o in self.history],
            "trajectory_file": trajectory_file,
        }


def _side(outcome):
    if outcome.kind == "blowup":
        return "hi"
    if outcome.kind == "sign_cross":
        return "lo"
    return None


TRAJECTORY_K_RTOL = 1e-12


def find_kstar(spec, k_init_bracket=(0.1, 1.0), k_tol=1e-8, x_left=None,
               x_min_classify=X_MIN_CLASSIFY, rtol=CLASSIFY_RTOL, max_expand=40):
    """Bisection between the sign-crossing and blow-up sets, then the
    Hastings-McLeod trajectory at the bracket midpoint.

    The bracket is always narrowed to at least TRAJECTORY_K_RTOL relative
    width (or rounding), since the shooting leg of the trajectory needs k to
    that accuracy; ``k_tol`` only tightens this further.
    """
    if not spec.odd:
        raise NoSolutionError(
            f"no Hastings-McLeod-type solution exists for even mu (mu = {spec.mu})")
    if x_left is None:
        x_left = default_x_left(spec)
    lo, hi = map(float, k_init_bracket)
    if not 0 < lo < hi:
        raise DomainError("initial bracket must satisfy 0 < k_lo < k_hi")
    history = []

    def classify(k):
        out = classify_k(spec, k, x_min_classify, rtol=rtol)
        history.append((k, out))
        return out

    for _ in range(max_expand):
        if _side(classify(lo)) == "lo":
            break
        lo /= 2.0
    else:
        raise BracketError("could not find a sign-crossing k", history)
    for _ in range(max_expand):
        if _side(classify(hi)) == "hi":
            break
        hi *= 2.0
    else:
        raise BracketError("could not find a blow-up k", history)

    while hi - lo > min(k_tol, TRAJECTORY_K_RTOL * hi):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        side = _side(classify(mid))
        if side is None:
            probe = lo + 0.4 * (hi - lo)
            side = _side(classify(probe))
            mid = probe
            if side is None:
                raise BracketError("repeated undetermined outcomes", history)
        if side == "hi":
            hi = mid
        else:
            lo = mid
    k_star = 0.5 * (lo + hi)
    traj, mismatch, jump = hm_trajectory(spec, k_star, float(x_left), rtol)
    ok = (traj.reached and float(np.min(traj.y.real)) > 0.0
          and mismatch <= SERIES_MATCH_TOL and jump <= JUNCTION_JUMP_TOL)
    return ConnectionResult(spec.mu, k_star, (lo, hi), k_tol, history, traj, float(x_left),
                            float(traj.x_start.real), mismatch, jump, bool(ok))


# -- energy ------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyRecord:
    x: float
    V: float
    dV: float
    Vp_expected: float


def energy(spec, x, y, yp):
    return yp ** 2 - x ** spec.mu * y ** 2 - y ** 4


def energy_series(spec, traj, h=1e-2, n_points=400):
    """V along a real trajectory; dV/dx by 4th-order central differences of
    the dense output, next to the exact -mu x^(mu-1) y^2."""
    xa = float(traj.x_start.real)
    xb = float(traj.x[-1].real)
    lo, hi = min(xa, xb) + 2 * h, max(xa, xb) - 2 * h
    xs = np.linspace(lo, hi, n_points)

    def V(x):
        y, yp = traj.evaluate_x(x)
        return energy(spec, x, y.real, yp.real)

    dV = (-V(xs + 2 * h) + 8 * V(xs + h) - 8 * V(xs - h) + V(xs - 2 * h)) / (12 * h)
    y, _ = traj.evaluate_x(xs)
    Vx = V(xs)
    expected = -spec.mu * xs ** (spec.mu - 1) * y.real ** 2
    return [EnergyRecord(float(a), float(b), float(c), float(d))
            for a, b, c, d in zip(xs, Vx, dV, expected)]


def energy_defect(records):
    """max |dV/dx - V'_expected| / max |V'_expected|."""
    dV = np.array([r.dV for r in records])
    ex = np.array([r.Vp_expected for r in records])
    scale = np.max(np.abs(ex))
    if scale == 0.0:
        return float(np.max(np.abs(dV)))
    return float(np.max(np.abs(dV - ex)) / scale)


# -- oscillatory regime ------------------------------------------------------

@dataclass(frozen=True)
class OscillatoryFit:
    c1: float
    c2: float
    fit_residual: float
    envelope_exponent: float
    zeros: np.ndarray
    phase_spacing: np.ndarray      # consecutive-zero phase increments / pi
    peaks_x: np.ndarray
    peaks_y: np.ndarray


def phase_variable(spec, x):
    return (2.0 / (spec.mu + 2)) * np.abs(x) ** ((spec.mu + 2) / 2.0)


def _roots(traj, grid, component):
    vals = traj.evaluate_x(grid)[component].real
    out = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        out.append(brentq(lambda x: traj.evaluate_x(x)[component][0].real,
                          grid[i], grid[i + 1], xtol=1e-14))
    return np.array(sorted(out))


def oscillatory_window(spec, phase_min=10.0):
    return -(phase_min * (spec.mu + 2) / 2.0) ** (2.0 / (spec.mu + 2))


def fit_oscillatory(spec, traj, x_hi=None, samples_per_period=40):
    """Least-squares fit y = c1 |x|^(-mu/4) sin(phase - c2) on x <= x_hi."""
    if not spec.odd:
        raise DomainError("the oscillatory regime on x < 0 needs odd mu")
    if x_hi is None:
        x_hi = oscillatory_window(spec)
    x_lo = float(min(traj.x_start.real, traj.x[-1].real))
    if x_lo >= x_hi:
        raise FitRejected("trajectory does not reach the oscillatory window")
    n_periods = (phase_variable(spec, x_lo) - phase_variable(spec, x_hi)) / (2 * math.pi)
    n = max(200, int(samples_per_period * n_periods))
    xs = np.linspace(x_lo, x_hi, n)
    y = traj.evaluate_x(xs)[0].real
    ph = phase_variable(spec, xs)
    env = np.abs(xs) ** (-spec.mu / 4.0)
    A = np.column_stack([env * np.sin(ph), -env * np.cos(ph)])
    (p, q), *_ = np.linalg.lstsq(A, y, rcond=None)
    c1 = math.hypot(p, q)
    c2 = math.atan2(q, p)
    resid = float(np.sqrt(np.mean((A @ np.array([p, q]) - y) ** 2)) / max(c1 * np.mean(env), 1e-300))

    fine = np.linspace(x_lo, x_hi, 4 * n)
    zeros = _roots(traj, fine, 0)
    if len(zeros) < 3:
        raise FitRejected("trajectory is not oscillatory on the fit window")
    spacing = np.diff(phase_variable(spec, zeros)[::-1]) / math.pi
    peaks = _roots(traj, fine, 1)
    peak_vals = np.abs(traj.evaluate_x(peaks)[0].real) if len(peaks) else np.array([])
    if len(peaks) >= 3:
        slope = float(np.polyfit(np.log(np.abs(peaks)), np.log(peak_vals), 1)[0])
    else:
        slope = math.nan
    return OscillatoryFit(c1, c2, resid, slope, zeros, np.abs(spacing), peaks, peak_vals)
