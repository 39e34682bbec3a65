"""Two-ion electro-diffusion with linearly perturbed flux A(x) = A0 + eps x.

    c+' =  E c+ + A(x)
    c-' = -E c- + A(x)
    E'  = (c+ - c-) / lambda^2

Adding the first two equations and using the third gives the first integral
Q = c+ + c- - (lambda^2/2) E^2 - eps x^2 - 2 A0 x.  Differentiating the third
then gives the scalar field equation

    lambda^2 E'' = (lambda^2/2) E^3 + (eps x^2 + 2 A0 x + C) E,    C = Q,

which for A0 = C = 0, eps > 0 is y'' = 2y^3 + x^2 y after E(x) = a y(x/b).
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _dopri
from .errors import DomainError, NotReducibleError
from .ode import dense_output
from .output import fmt

DEFAULT_TOL = 1e-12
ED_COLUMNS = ("x", "c_plus", "c_minus", "E", "Q")


@dataclass(frozen=True)
class EDParams:
    lam: float
    A0: float = 0.0
    eps: float = 0.0
    C: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("lambda must be positive")

    def flux(self, x):
        return self.A0 + self.eps * x

    def to_dict(self):
        return {"lambda": self.lam, "A0": self.A0, "eps": self.eps, "C": self.C}


@dataclass(frozen=True)
class EDState:
    x: float
    c_plus: float
    c_minus: float
    E: float

    def as_array(self):
        return np.array([self.c_plus, self.c_minus, self.E], dtype=float)


def ed_rhs(params, state):
    """Derivatives (c+', c-', E') at ``state``."""
    a = params.flux(state.x)
    return (state.E * state.c_plus + a,
            -state.E * state.c_minus + a,
            (state.c_plus - state.c_minus) / params.lam ** 2)


def first_integral(params, x, c_plus, c_minus, E):
    """Q = c+ + c- - (lambda^2/2) E^2 - eps x^2 - 2 A0 x."""
    return (c_plus + c_minus - 0.5 * params.lam ** 2 * E ** 2
            - params.eps * x ** 2 - 2.0 * params.A0 * x)


def initial_state_for(params, x0, E0, charge=0.0):
    """State at x0 with field E0, c+ - c- = ``charge`` and Q(x0) = C."""
    total = params.C + 0.5 * params.lam ** 2 * E0 ** 2 + params.eps * x0 ** 2 + 2.0 * params.A0 * x0
    return EDState(x0, 0.5 * (total + charge), 0.5 * (total - charge), E0)


@dataclass
class EDTrajectory:
    params: EDParams
    x: np.ndarray
    states: np.ndarray
    status: str
    n_rejected: int
    _cont: np.ndarray = field(default=None, repr=False)

    @property
    def c_plus(self):
        return self.states[:, 0]

    @property
    def c_minus(self):
        return self.states[:, 1]

    @property
    def E(self):
        return self.states[:, 2]

    @property
    def Q(self):
        return first_integral(self.params, self.x, self.c_plus, self.c_minus, self.E)

    @property
    def reached(self):
        return self.status == "reached"

    @property
    def terminal_x(self):
        return float(self.x[-1])

    @property
    def positivity_violation(self):
        """First abscissa where a concentration is negative, else None."""
        bad = np.nonzero((self.c_plus < 0) | (self.c_minus < 0))[0]
        return None if len(bad) == 0 else float(self.x[bad[0]])

    def evaluate(self, x, derivative=False):
        """Dense states at ``x`` (rows c+, c-, E); optionally their x-derivatives."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return dense_output(self.x, self._cont, x, derivative)

    def drift(self):
        q = self.Q
        return float(np.max(np.abs(q - q[0])) / max(1.0, abs(q[0])))

    def to_rows(self):
        return list(zip(self.x, self.c_plus, self.c_minus, self.E, self.Q))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ED_COLUMNS)
            for row in self.to_rows():
                w.writerow([fmt(v) for v in row])


def integrate_ed(params, start, x_end, tol=DEFAULT_TOL, blowup_threshold=1e8,
                 max_steps=1_000_000):
    """DOPRI5 integration from ``start`` to ``x_end``; a blow-up ends the run
    with status ``pole`` at the terminal abscissa."""
    y0 = start.as_array()
    if not np.all(np.isfinite(y0)) or not math.isfinite(start.x):
        raise DomainError("initial state must be finite")
    p = np.array([params.lam, params.A0, params.eps], dtype=float)
    n, ts, ys, cont, status, nrej = _dopri.dopri5(
        _dopri.ed_rhs_kernel, p, float(start.x), float(x_end), y0, float(tol), float(tol),
        0.0, 0.0, int(max_steps), float(blowup_threshold), False)
    names = {_dopri.REACHED: "reached", _dopri.POLE: "pole",
             _dopri.TOLERANCE_FAILURE: "tolerance_failure", _dopri.MAX_STEPS: "max_steps"}
    return EDTrajectory(params, ts[:n].copy(), ys[:n].copy(), names[status], int(nrej),
                        cont[:max(n - 1, 0)].copy())


def _probe_points(traj, per_step=3):
    x = traj.x
    if len(x) < 2:
        return x.copy()
    fr = (np.arange(per_step) + 0.5) / per_step
    return (x[:-1, None] + np.diff(x)[:, None] * fr[None, :]).ravel()


def field_terms(traj, x=None):
    """(x, E, E'') along the trajectory; E'' differentiates the dense (c+ - c-)/lambda^2."""
    if x is None:
        x = _probe_points(traj)
    val, dval = traj.evaluate(x, derivative=True)
    E = val[:, 2]
    Epp = (dval[:, 0] - dval[:, 1]) / traj.params.lam ** 2
    return x, E, Epp, val


def field_equation_residual(params, traj):
    """max |lambda^2 E'' - (lambda^2/2) E^3 - (eps x^2 + 2 A0 x + C) E|."""
    x, E, Epp, _ = field_terms(traj)
    lam2 = params.lam ** 2
    res = lam2 * Epp - 0.5 * lam2 * E ** 3 - (params.eps * x ** 2 + 2 * params.A0 * x + params.C) * E
    return float(np.max(np.abs(res)))


def second_order_residual(params, traj):
    """max |lambda^2 E'' - E (c+ + c-)|."""
    x, E, Epp, val = field_terms(traj)
    return float(np.max(np.abs(params.lam ** 2 * Epp - E * (val[:, 0] + val[:, 1]))))


def scaling(params):
    """(a, b) with b = (lambda^2/eps)^(1/4), a = 2/b."""
    if params.A0 != 0 or params.C != 0:
        raise NotReducibleError(
            "the field coefficient eps x^2 + 2 A0 x + C is a pure power only for A0 = C = 0")
    if not params.eps > 0:
        raise NotReducibleError("reduction needs eps > 0")
    b = (params.lam ** 2 / params.eps) ** 0.25
    return 2.0 / b, b


@dataclass
class MappedTrajectory:
    x_hat: np.ndarray
    y: np.ndarray
    ypp: np.ndarray

    def residual(self):
        """max |y'' - 2 y^3 - x^2 y| of the mapped samples."""
        return float(np.max(np.abs(self.ypp - 2 * self.y ** 3 - self.x_hat ** 2 * self.y)))


def scale_to_p2mu(params, traj=None):
    """Scaling (a, b) and, given a trajectory, its image y(x/b) = E(x)/a."""
    a, b = scaling(params)
    if traj is None:
        return a, b, None
    x, E, Epp, _ = field_terms(traj)
    return a, b, MappedTrajectory(x / b, E / a, Epp * b * b / a)


def field_from_p2mu(params, x_hat, y, ypp):
    """Inverse map: (x, E, E'') from samples of a y'' = 2y^3 + x^2 y solution."""
    a, b = scaling(params)
    return x_hat * b, a * y, a * ypp / (b * b)


def field_residual_values(params, x, E, Epp):
    lam2 = params.lam ** 2
    return lam2 * Epp - 0.5 * lam2 * E ** 3 - (params.eps * x ** 2 + 2 * params.A0 * x + params.C) * E
