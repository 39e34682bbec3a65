"""The tritronquee solution Y(x) ~ y_f(x) in |arg x| < 2 pi/(mu+2).

Linearising about y_f gives the modes exp(+-i sqrt(2) z) with
z = (2/(mu+2)) x^((mu+2)/2), so both are neutral along horizontal lines in
the z-plane.  Every sample point is therefore reached by its own path that
starts on |x| = r_far, runs at constant Im z, and only leaves that height
where it must stay outside |x| < r_in.  Integrating inward along the ray
itself would amplify seed and step errors by exp(sqrt(2) |d Im z|).
"""
import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import ode
from .errors import MeasurementImpossible, SectorViolation, SeedError
from .series import default_table, formal_series
from .specfun import ProblemSpec

DEFAULT_MARGIN = 0.1
DEFAULT_R_IN = 3.0
DEFAULT_R_FAR = 40.0
DEFAULT_RAYS = 9
SEED_REL_TOL = 1e-10
FAN_RTOL = 1e-13
GAP_RTOL = 1e-14
CROSS_CHECK_TOL = 1e-7
#: arcs whose worst-case amplification times the step tolerance exceeds this
#: are not conditioned well enough to serve as a 1e-7 check
CROSS_CHECK_BUDGET = 1e-8
PATH_DEVIATION = 0.25


def _alpha(spec):
    return (spec.mu + 2) / 2.0


def to_z(spec, x):
    """Boutroux variable on the principal branch."""
    a = _alpha(spec)
    return cmath.exp(a * cmath.log(x)) / a


def from_z(spec, z):
    """Inverse of :func:`to_z` for |arg z| < pi."""
    a = _alpha(spec)
    return cmath.exp(cmath.log(a * z) / a)


@dataclass(frozen=True)
class SectorSpec:
    mu: int
    center_angle: float = 0.0
    half_width: float = None
    margin: float = DEFAULT_MARGIN
    r_in: float = DEFAULT_R_IN
    r_far: float = DEFAULT_R_FAR

    def __post_init__(self):
        if self.half_width is None:
            object.__setattr__(self, "half_width", 2 * math.pi / (self.mu + 2) - self.margin)
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if not 0 < self.r_in < self.r_far:
            raise ValueError("need 0 < r_in < r_far")

    @property
    def theorem_half_width(self):
        return 2 * math.pi / (self.mu + 2)

    def angles(self, n_rays):
        if n_rays == 1:
            return np.array([self.center_angle])
        return self.center_angle + np.linspace(-self.half_width, self.half_width, n_rays)

    def to_dict(self):
        return {"mu": self.mu, "center_angle": self.center_angle, "half_width": self.half_width,
                "margin": self.margin, "r_in": self.r_in, "r_far": self.r_far}


@dataclass
class RaySolution:
    """Samples of Y along one ray, ordered from r_far inward."""

    angle: float
    radii: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    seed_terms: int
    seed_error: float
    n_steps: int

    def to_rows(self):
        span = self.radii[0] - self.radii[-1]
        return [(float((self.radii[0] - r) / span), x.real, x.imag, y.real, y.imag, p.real, p.imag)
                for r, x, y, p in zip(self.radii, self.x, self.y, self.yp)]

    def write_csv(self, path):
        ode.write_trajectory_csv(path, self.to_rows())

    def sample(self, r):
        i = int(np.argmin(np.abs(self.radii - r)))
        if abs(self.radii[i] - r) > 1e-9:
            raise KeyError(f"radius {r} is not sampled on this ray")
        return self.x[i], self.y[i], self.yp[i]


@dataclass
class SolutionFan:
    mu: int
    sector: SectorSpec
    rays: list
    pole_events: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def manifest(self, files=None):
        return {
            "mu": self.mu,
            "sector": self.sector.to_dict(),
            "rays": [{"angle": r.angle, "seed_terms": r.seed_terms, "seed_error": r.seed_error,
                      "n_steps": r.n_steps, "file": None if files is None else files[i]}
                     for i, r in enumerate(self.rays)],
            "pole_events": [{"angle": a, "radius": rr, "x0": [e.x0.real, e.x0.imag],
                             "sign": e.sign, "quality": e.quality}
                            for a, rr, e in self.pole_events],
            "checks": self.checks,
        }


def seed_from_series(spec, x_far, rel_tol=SEED_REL_TOL, arg=None):
    """Series state at ``x_far`` with OPTIMAL truncation.

    Raises :class:`SeedError` when the truncation error is not below
    ``rel_tol``; the error carries the smallest radius (on the same ray,
    doubling from |x_far|) where it would be.
    """
    coeffs = default_table(spec.mu)
    sv = formal_series(spec, coeffs, x_far, arg=arg)
    if sv.reliable and sv.error_estimate < rel_tol * abs(sv.y):
        return ode.State(complex(x_far), sv.y, sv.yp), sv
    r = abs(x_far)
    direction = x_far / r
    for _ in range(20):
        r *= 2.0
        trial = formal_series(spec, coeffs, r * direction, arg=arg)
        if trial.reliable and trial.error_estimate < rel_tol * abs(trial.y):
            break
    raise SeedError(f"series seed at |x| = {abs(x_far):.6g} is not accurate to {rel_tol:g}", r)


def _refine(spec, za, zb, x_out, dev, t0=0.0, t1=1.0):
    """Append x-plane vertices so each chord stays within ``dev`` of za->zb in z."""
    xa = from_z(spec, za + (zb - za) * t0)
    xb = from_z(spec, za + (zb - za) * t1)
    for f in (0.25, 0.5, 0.75):
        zm = to_z(spec, xa + (xb - xa) * f)
        zl = za + (zb - za) * (t0 + (t1 - t0) * f)
        if abs(zm - zl) > dev:
            tm = 0.5 * (t0 + t1)
            _refine(spec, za, zb, x_out, dev, t0, tm)
            _refine(spec, za, zb, x_out, dev, tm, t1)
            return
    x_out.append(xb)


def neutral_path(spec, x_target, r_far, r_in, dev=PATH_DEVIATION):
    """x-plane polyline from |x| = r_far to ``x_target`` at (nearly) fixed Im z."""
    a = _alpha(spec)
    z_t = to_z(spec, x_target)
    z_far, z_in = r_far ** a / a, r_in ** a / a
    h = z_t.imag
    if z_t.real < 0 and abs(h) < z_in:
        h = math.copysign(z_in, h) if h != 0 else z_in
    if abs(h) >= z_far:
        raise ValueError("target lies too close to the sector edge for this r_far")
    z_s = complex(math.sqrt(z_far * z_far - h * h), h)
    corners = [z_s, complex(z_t.real, h), z_t]
    pts = [from_z(spec, z_s)]
    for za, zb in zip(corners[:-1], corners[1:]):
        if abs(zb - za) > 1e-14 * max(1.0, abs(za)):
            _refine(spec, za, zb, pts, dev)
    pts[-1] = complex(x_target)
    return pts


def _solve_at(spec, x_target, r_far, r_in, rtol):
    """(state or None, pole event or None, steps, seed series value)."""
    pts = neutral_path(spec, x_target, r_far, r_in)
    start, sv = seed_from_series(spec, pts[0])
    if abs(pts[0] - x_target) <= 1e-12 * abs(x_target):
        return ode.State(complex(x_target), start.y, start.yp), None, 0, sv
    legs = ode.integrate_polyline(spec, start, pts[1:], rel_tol=rtol, abs_tol=rtol * 1e-2)
    last = legs[-1]
    steps = sum(t.n_steps for t in legs)
    if not last.reached:
        return None, last.pole, steps, sv
    return last.final, None, steps, sv


def solve_point(spec, x_target, r_far=DEFAULT_R_FAR, r_in=DEFAULT_R_IN, rtol=FAN_RTOL):
    """State of Y at ``x_target`` (inside the principal sector), or the pole event met."""
    st, pole, _, _ = _solve_at(spec, x_target, r_far, r_in, rtol)
    return st, pole


def arc_points(x_from, x_to, per_radian=48):
    r = abs(x_from)
    t0, t1 = cmath.phase(x_from), cmath.phase(x_to)
    n = max(2, int(math.ceil(abs(t1 - t0) * per_radian)))
    return [r * cmath.exp(1j * t) for t in np.linspace(t0, t1, n + 1)[1:]]


def _arc_log_amplification(spec, r, t0, t1):
    """log of the worst-case growth exp(sqrt(2) d Im z) of a perturbation along the arc."""
    ts = np.linspace(t0, t1, 64)
    im = np.array([to_z(spec, r * cmath.exp(1j * t)).imag for t in ts])
    return math.sqrt(2.0) * (im.max() - im.min())


def _continue_arc(spec, state, x_to, rtol):
    legs = ode.integrate_polyline(spec, state, arc_points(state.x, x_to),
                                  rel_tol=rtol, abs_tol=rtol * 1e-2)
    last = legs[-1]
    return (last.final if last.reached else None), last.pole


def _neutral_ray(spec, sector, theta, radii, rtol, events):
    xs, ys, yps = [], [], []
    n_steps, seed = 0, None
    for r in radii:
        x_t = r * cmath.exp(1j * theta)
        st, pole, steps, sv = _solve_at(spec, x_t, sector.r_far, sector.r_in, rtol)
        n_steps += steps
        seed = seed or sv
        if st is None:
            if pole is not None:
                events.append((theta, float(r), pole))
            break
        xs.append(complex(x_t))
        ys.append(st.y)
        yps.append(st.yp)
    return RaySolution(theta, radii[:len(xs)], np.array(xs), np.array(ys), np.array(yps),
                       seed.n_terms, float(seed.error_estimate), n_steps)


POLE_PROXIMITY = 30.0


def near_pole(traj, scale, factor=POLE_PROXIMITY):
    """PoleEvent for a segment passing close to a pole (|y| > factor*scale), else None.

    The dense output is resampled within a few pole distances of the peak
    and the local model y = sign/(x - x0) fitted there.
    """
    mag = np.abs(traj.y)
    i = int(np.argmax(mag))
    if mag[i] <= factor * scale:
        return None
    L = abs(traj.x_end - traj.x_start)
    d = 1.0 / mag[i]
    s = np.clip(traj.s[i] + np.linspace(-3 * d, 3 * d, 41) / L, 0.0, traj.s[-1])
    y, _ = traj.evaluate(s)
    x = traj.x_start + s * (traj.x_end - traj.x_start)
    event = ode.locate_pole(x, y, threshold=mag[i] / 4)
    return event if event.determined else None


def _inward_ray(spec, theta, radii, rtol, events):
    direction = cmath.exp(1j * theta)
    state, sv = seed_from_series(spec, radii[0] * direction)
    xs, ys, yps = [state.x], [state.y], [state.yp]
    n_steps = 0
    for r in radii[1:]:
        t = ode.integrate(spec, state, r * direction, rel_tol=rtol, abs_tol=rtol * 1e-2)
        n_steps += t.n_steps
        pole = t.pole if not t.reached else near_pole(t, max(1.0, r ** (spec.mu / 2.0)))
        if pole is not None:
            events.append((theta, float(abs(pole.x0)), pole))
        if not t.reached:
            break
        state = t.final
        xs.append(state.x)
        ys.append(state.y)
        yps.append(state.yp)
    return RaySolution(theta, radii[:len(xs)], np.array(xs), np.array(ys), np.array(yps),
                       sv.n_terms, float(sv.error_estimate), n_steps)


def build_tritronquee(spec, sector=None, n_rays=DEFAULT_RAYS, dr=1.0, rtol=FAN_RTOL,
                      cross_check=True, raise_on_poles=True):
    """Fan of ray samples of Y from r_far inward to r_in.

    Rays outside the theorem's sector admit no neutral path; there the
    series is seeded on the ray at r_far and integrated inward along it,
    which is where poles show up.
    Any pole met is collected; with ``raise_on_poles`` a
    :class:`SectorViolation` carrying the events (and the fan) is raised.
    """
    if isinstance(spec, int):
        spec = ProblemSpec(spec)
    if sector is None:
        sector = SectorSpec(spec.mu)
    a = _alpha(spec)
    radii = np.arange(sector.r_far, sector.r_in - 1e-9, -dr)
    if radii[-1] > sector.r_in + 1e-9:
        radii = np.append(radii, sector.r_in)
    rays, events = [], []
    for theta in sector.angles(n_rays):
        theta = float(theta)
        if abs(theta) * a < math.pi - 1e-9:
            rays.append(_neutral_ray(spec, sector, theta, radii, rtol, events))
        else:
            rays.append(_inward_ray(spec, theta, radii, rtol, events))
    fan = SolutionFan(spec.mu, sector, rays, events)
    if events and raise_on_poles:
        err = SectorViolation(f"{len(events)} pole event(s) in the declared sector", events)
        err.fan = fan
        raise err
    if cross_check:
        fan.checks["cross_ray"] = cross_ray_checks(spec, fan, rtol)
    return fan


def cross_ray_checks(spec, fan, rtol=FAN_RTOL, budget=CROSS_CHECK_BUDGET):
    """Continue each sample along the arc to the neighbouring ray and compare.

    Only arcs whose worst-case mode amplification keeps the expected error
    below ``budget`` are integrated; the others are listed as skipped.
    """
    done, skipped = [], []
    worst = 0.0
    for ra, rb in zip(fan.rays[:-1], fan.rays[1:]):
        common = sorted(set(np.round(ra.radii, 9)) & set(np.round(rb.radii, 9)))
        for r in common:
            log_amp = _arc_log_amplification(spec, r, ra.angle, rb.angle)
            if log_amp + math.log(rtol * 10) > math.log(budget):
                skipped.append([ra.angle, rb.angle, r])
                continue
            x_a, y_a, yp_a = ra.sample(r)
            x_b, y_b, _ = rb.sample(r)
            st, _ = _continue_arc(spec, ode.State(x_a, y_a, yp_a), x_b, rtol)
            err = math.inf if st is None else abs(st.y - y_b) / max(1.0, abs(y_b))
            worst = max(worst, err)
            done.append([ra.angle, rb.angle, r, err])
    return {"tolerance": CROSS_CHECK_TOL, "max_error": worst, "passed": worst <= CROSS_CHECK_TOL,
            "compared": done, "skipped": len(skipped)}


def robustness_check(spec, sector=None, n_rays=DEFAULT_RAYS, r_check=10.0, r_far_alt=60.0,
                     rtol=FAN_RTOL):
    """Max relative difference at |x| = r_check between seeds on r_far and r_far_alt."""
    if sector is None:
        sector = SectorSpec(spec.mu)
    worst = 0.0
    for theta in sector.angles(n_rays):
        x_t = r_check * cmath.exp(1j * float(theta))
        s1, _ = solve_point(spec, x_t, sector.r_far, sector.r_in, rtol)
        s2, _ = solve_point(spec, x_t, r_far_alt, sector.r_in, rtol)
        if s1 is None or s2 is None:
            return math.inf
        worst = max(worst, abs(s1.y - s2.y) / max(1.0, abs(s1.y)))
    return worst


def rotate_solution(spec, fan, n):
    """Image of the fan under Y_n(x) = w^n Y(w^n x), w = exp(-2 pi i/(mu+2)).

    A sample (x, Y, Y') maps to (w^-n x, w^n Y, w^2n Y').
    """
    m = spec.mu + 2
    n_red = n % m
    w = cmath.exp(-2j * math.pi * n_red / m)
    shift = 2 * math.pi * n_red / m
    rays = []
    for r in fan.rays:
        rays.append(RaySolution(r.angle + shift, r.radii.copy(), r.x / w, r.y * w, r.yp * w * w,
                                r.seed_terms, r.seed_error, r.n_steps))
    sector = SectorSpec(fan.sector.mu, fan.sector.center_angle + shift, fan.sector.half_width,
                        fan.sector.margin, fan.sector.r_in, fan.sector.r_far)
    return SolutionFan(fan.mu, sector, rays, list(fan.pole_events), dict(fan.checks))


def rotated_series(spec, x_image, n, source_arg):
    """Series value for the rotated solution Y_n at ``x_image``.

    ``source_arg`` is arg of the pre-image w^n x_image; continuing the
    branch of x^(mu/2) by the rotation gives w^n y_f(w^n x) = (-1)^n y_f(x).
    """
    arg = source_arg + 2 * math.pi * n / (spec.mu + 2)
    sv = formal_series(spec, default_table(spec.mu), x_image, arg=arg)
    return (-1) ** n * sv.y


# -- Stokes gap --------------------------------------------------------------

@dataclass
class StokesFit:
    slope: float
    prefactor_exponent: float
    fit_residual: float
    intercept: float
    radii: np.ndarray
    gaps: np.ndarray
    noise: np.ndarray
    dropped: list = field(default_factory=list)

    def to_dict(self):
        return {"slope": self.slope, "prefactor_exponent": self.prefactor_exponent,
                "fit_residual": self.fit_residual, "intercept": self.intercept,
                "radii": self.radii.tolist(), "gaps": self.gaps.tolist(),
                "noise": self.noise.tolist(), "dropped": self.dropped}


def default_gap_range(spec):
    """Radii where the predicted gap exp(-c r^a) runs from about e^-7.5 to e^-25.5."""
    c = 2 * math.sqrt(2.0) / (spec.mu + 2)
    a = _alpha(spec)
    return ((7.54 / c) ** (1 / a), (25.46 / c) ** (1 / a))


def _gap_pair(spec, r, r_seed, rtol):
    """Two tronquee values at r e^{i pi/(mu+2)} seeded at the two ends of the
    horizontal z line through that point."""
    a = _alpha(spec)
    x_p = r * cmath.exp(1j * math.pi / (spec.mu + 2))
    z_p = to_z(spec, x_p)
    h = z_p.imag
    z_far = r_seed ** a / a
    if z_far <= 2 * h:
        raise ValueError("seed radius too small for the requested gap radius")
    span = math.sqrt(z_far * z_far - h * h)
    out = []
    for side in (1.0, -1.0):
        pts = [from_z(spec, complex(side * span, h))]
        _refine(spec, complex(side * span, h), z_p, pts, PATH_DEVIATION)
        pts[-1] = x_p
        start, _ = seed_from_series(spec, pts[0])
        legs = ode.integrate_polyline(spec, start, pts[1:], rel_tol=rtol, abs_tol=rtol * 1e-2)
        if not legs[-1].reached:
            raise MeasurementImpossible(f"integration to r = {r} failed: {legs[-1].status}")
        out.append(legs[-1].final.y)
    return out


def stokes_gap(spec, r_range=None, n_points=12, r_seed=None, rtol=GAP_RTOL, min_points=6):
    """Fit log|y_A - y_B| = C + slope r^a + p log r on the ray arg x = pi/(mu+2).

    With an explicit ``r_range`` every radius must resolve the gap to 100x
    the noise floor.  With the default range, radii at the top of the range
    whose gap has sunk into rounding noise are dropped (listed in
    ``dropped``), provided ``min_points`` remain.
    """
    strict = r_range is not None
    if r_range is None:
        r_range = default_gap_range(spec)
    r_lo, r_hi = map(float, r_range)
    a = _alpha(spec)
    if r_seed is None:
        # seeds at |z| = max(60, 3 h_max): accurate series, short paths
        h_max = r_hi ** a / a
        r_seed = (a * max(60.0, 3.0 * h_max)) ** (1.0 / a)
    radii = np.linspace(r_lo, r_hi, n_points)
    gaps, noise, dropped = [], [], []
    for r in radii:
        ya, yb = _gap_pair(spec, r, r_seed, rtol)
        ya2, yb2 = _gap_pair(spec, r, r_seed, rtol * 10)
        g = abs(ya - yb)
        nz = max(abs(ya - ya2), abs(yb - yb2))
        if g < 100 * nz:
            if strict or len(gaps) < min_points:
                raise MeasurementImpossible(
                    f"gap {g:.3g} at r = {r:.6g} is within 100x the noise floor {nz:.3g}")
            dropped = [float(v) for v in radii[len(gaps):]]
            break
        gaps.append(g)
        noise.append(nz)
    radii = radii[:len(gaps)]
    gaps, noise = np.array(gaps), np.array(noise)
    A = np.column_stack([np.ones_like(radii), radii ** a, np.log(radii)])
    coef, *_ = np.linalg.lstsq(A, np.log(gaps), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(gaps)) ** 2)))
    return StokesFit(float(coef[1]), float(coef[2]), resid, float(coef[0]), radii, gaps, noise,
                     dropped)
