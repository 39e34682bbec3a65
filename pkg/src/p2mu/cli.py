"""Command-line front end.

Every command prints a JSON summary on stdout and, where it produces data,
writes CSV/JSON files plus a ``*_manifest.json`` into ``--out``.  Exit codes:
0 success, 2 domain error, 3 nonexistence (even mu), 4 numerical failure.
The environment variable P2MU_DEFAULT_TOL overrides the default integration
tolerances.
"""
import argparse
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, connection, electrodiffusion, output, series, tritronquee
from ._jit import NUMBA_ENABLED
from .errors import DomainError, NoSolutionError, NumericalFailure, SectorViolation
from .specfun import ProblemSpec, gen_airy

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NONEXISTENCE = 3
EXIT_NUMERICAL = 4
TOL_ENV = "P2MU_DEFAULT_TOL"


def default_tol(fallback):
    """``fallback`` unless P2MU_DEFAULT_TOL is set."""
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw.strip() == "":
        return fallback
    try:
        tol = float(raw)
    except ValueError:
        raise DomainError(f"{TOL_ENV} must be a number, got {raw!r}") from None
    if not 0 < tol < 1:
        raise DomainError(f"{TOL_ENV} must lie in (0, 1), got {raw!r}")
    return tol


@dataclass
class RunManifest:
    command: str
    parameters: dict
    version: str = __version__
    numba: bool = NUMBA_ENABLED
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    duration_s: float = 0.0

    def add(self, path):
        self.outputs.append({"path": os.path.basename(path), "sha256": output.sha256(path)})

    def write(self, out_dir, stem, started):
        self.duration_s = time.perf_counter() - started
        path = os.path.join(out_dir, f"{stem}_manifest.json")
        output.write_json(path, asdict(self))
        return path


class Run:
    """Bookkeeping shared by the commands that write files."""

    def __init__(self, args, command, stem):
        self.args = args
        self.out = args.out
        self.stem = stem
        self.started = time.perf_counter()
        params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
        self.manifest = RunManifest(command, params)
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out, name)

    def json(self, name, obj):
        p = self.path(name)
        output.write_json(p, obj)
        self.manifest.add(p)
        return p

    def added(self, p):
        self.manifest.add(p)
        return p

    def finish(self, summary):
        self.manifest.summary = summary
        self.manifest.write(self.out, self.stem, self.started)
        sys.stdout.write(output.dumps(summary))


# -- plotting ----------------------------------------------------------------

def _svg(path, draw):
    """Render with matplotlib into a deterministic SVG (fixed hash salt, no date)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "p2mu"
    fig, ax = plt.subplots(figsize=(6, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# -- commands ----------------------------------------------------------------

def cmd_coeffs(args):
    coeffs = series.compute_coefficients(args.mu, args.n)
    records = coeffs.to_records()
    if args.format == "json":
        text = output.dumps({"mu": args.mu, "exact": coeffs.exact, "coefficients": records})
    else:
        cols = list(records[0].keys())
        lines = [",".join(cols)]
        for r in records:
            lines.append(",".join(output.fmt(r[c]) if isinstance(r[c], float) else str(r[c])
                                  for c in cols))
        text = "\n".join(lines) + "\n"
    if args.out:
        run = Run(args, "coeffs", f"coeffs_mu{args.mu}")
        p = run.path(f"coeffs_mu{args.mu}.{args.format}")
        with open(p, "w") as fh:
            fh.write(text)
        run.added(p)
        run.manifest.summary = {"mu": args.mu, "n": args.n}
        run.manifest.write(run.out, run.stem, run.started)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_hm(args):
    spec = ProblemSpec(args.mu)
    run = Run(args, "hm", f"hm_mu{args.mu}")
    rtol = default_tol(connection.CLASSIFY_RTOL)
    res = connection.find_kstar(spec, tuple(args.kbracket), args.ktol, x_left=args.xleft,
                                rtol=rtol)
    traj_name = f"hm_mu{args.mu}_trajectory.csv"
    res.hm_trajectory.write_csv(run.path(traj_name))
    run.added(run.path(traj_name))
    run.json(f"hm_mu{args.mu}.json", res.to_dict(traj_name))
    if args.plot:
        x = res.hm_trajectory.x.real
        y = res.hm_trajectory.y.real

        def draw(ax):
            ax.plot(x, y, lw=1)
            ax.set_xlabel("x")
            ax.set_ylabel("y")
            ax.set_title(f"mu = {args.mu}, k* = {res.k_star:.10f}")

        run.added(_svg(run.path(f"hm_mu{args.mu}.svg"), draw))
    summary = {"mu": args.mu, "k_star": res.k_star, "bracket": list(res.bracket),
               "x_left": res.x_left, "x_start": res.x_start,
               "series_mismatch": res.series_mismatch, "junction_jump": res.junction_jump,
               "min_y": float(np.min(res.hm_trajectory.y.real)), "validated": res.validated}
    run.finish(summary)
    return EXIT_OK if res.validated else EXIT_NUMERICAL


def cmd_classify(args):
    spec = ProblemSpec(args.mu)
    out = connection.classify_k(spec, args.k, args.xmin, rtol=default_tol(connection.CLASSIFY_RTOL))
    sys.stdout.write(output.dumps({"mu": args.mu, "k": args.k, "outcome": out.kind,
                                   "event_x": out.x}))
    return EXIT_OK


def cmd_tritronquee(args):
    spec = ProblemSpec(args.mu)
    run = Run(args, "tritronquee", f"tritronquee_mu{args.mu}")
    sector = tritronquee.SectorSpec(args.mu, margin=args.sector_margin, r_in=args.rin,
                                    r_far=args.rfar)
    rtol = default_tol(tritronquee.FAN_RTOL)
    code = EXIT_OK
    try:
        fan = tritronquee.build_tritronquee(spec, sector, args.rays, dr=args.dr, rtol=rtol,
                                            cross_check=not args.no_checks)
        if not args.no_checks and sector.r_in <= 10.0 <= sector.r_far:
            diff = tritronquee.robustness_check(spec, sector, args.rays, 10.0,
                                                1.5 * sector.r_far, rtol)
            fan.checks["r_far_robustness"] = {"r": 10.0, "r_far_alt": 1.5 * sector.r_far,
                                              "max_difference": diff,
                                              "passed": diff <= tritronquee.CROSS_CHECK_TOL}
    except SectorViolation as err:
        fan = err.fan
        code = EXIT_NUMERICAL
        sys.stderr.write(f"sector violation: {err}\n")
    files = []
    for j, ray in enumerate(fan.rays):
        name = f"tritronquee_mu{args.mu}_ray{j:02d}.csv"
        ray.write_csv(run.path(name))
        run.added(run.path(name))
        files.append(name)
    run.json(f"tritronquee_mu{args.mu}.json", fan.manifest(files))
    if args.plot:
        def draw(ax):
            for ray in fan.rays:
                ax.semilogy(ray.radii, np.abs(ray.y), lw=1, label=f"{ray.angle:+.3f}")
            ax.set_xlabel("|x|")
            ax.set_ylabel("|Y|")
            ax.legend(fontsize=6, title="arg x")

        run.added(_svg(run.path(f"tritronquee_mu{args.mu}.svg"), draw))
    checks = {k: {kk: vv for kk, vv in v.items() if kk in ("max_error", "max_difference", "passed")}
              for k, v in fan.checks.items()}
    run.finish({"mu": args.mu, "rays": len(fan.rays), "pole_events": len(fan.pole_events),
                "checks": checks})
    return code


def cmd_stokes(args):
    spec = ProblemSpec(args.mu)
    run = Run(args, "stokes", f"stokes_mu{args.mu}")
    fit = tritronquee.stokes_gap(spec, args.rrange, args.points,
                                 rtol=default_tol(tritronquee.GAP_RTOL))
    expected = -2 * math.sqrt(2) / (args.mu + 2)
    payload = dict(fit.to_dict(), mu=args.mu, expected_slope=expected,
                   relative_slope_error=abs(fit.slope / expected - 1))
    run.json(f"stokes_mu{args.mu}.json", payload)
    if args.plot:
        a = (args.mu + 2) / 2

        def draw(ax):
            ax.plot(fit.radii ** a, np.log(fit.gaps), "o")
            ax.set_xlabel("r^((mu+2)/2)")
            ax.set_ylabel("log gap")

        run.added(_svg(run.path(f"stokes_mu{args.mu}.svg"), draw))
    run.finish({"mu": args.mu, "slope": fit.slope, "expected_slope": expected,
                "prefactor_exponent": fit.prefactor_exponent, "fit_residual": fit.fit_residual})
    return EXIT_OK


def _ed_params(args):
    return electrodiffusion.EDParams(args.lam, args.a0, args.eps, args.c)


def cmd_ed(args):
    params = _ed_params(args)
    run = Run(args, "ed", "ed")
    if (args.cp is None) != (args.cm is None):
        raise DomainError("give both --cp and --cm, or neither")
    if args.cp is None:
        start = electrodiffusion.initial_state_for(params, args.x0, args.E, args.charge)
    else:
        start = electrodiffusion.EDState(args.x0, args.cp, args.cm, args.E)
    traj = electrodiffusion.integrate_ed(params, start, args.x1,
                                         tol=default_tol(electrodiffusion.DEFAULT_TOL))
    traj.write_csv(run.path("ed_trajectory.csv"))
    run.added(run.path("ed_trajectory.csv"))
    q0 = float(traj.Q[0])
    summary = {"params": params.to_dict(), "status": traj.status, "terminal_x": traj.terminal_x,
               "Q0": q0, "q_drift": traj.drift(),
               "field_residual": electrodiffusion.field_equation_residual(params, traj),
               "field_residual_with_Q0": electrodiffusion.field_equation_residual(
                   electrodiffusion.EDParams(params.lam, params.A0, params.eps, q0), traj),
               "positivity_violation_x": traj.positivity_violation}
    if args.plot:
        def draw(ax):
            ax.plot(traj.x, traj.E, lw=1, label="E")
            ax.plot(traj.x, traj.c_plus, lw=1, label="c+")
            ax.plot(traj.x, traj.c_minus, lw=1, label="c-")
            ax.set_xlabel("x")
            ax.legend()

        run.added(_svg(run.path("ed.svg"), draw))
    run.finish(summary)
    if not traj.reached:
        sys.stderr.write(f"integration stopped ({traj.status}) at x = {traj.terminal_x!r}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_ed_reduce(args):
    params = _ed_params(args)
    a, b = electrodiffusion.scaling(params)
    sys.stdout.write(output.dumps({"params": params.to_dict(), "a": a, "b": b,
                                   "mapped_equation": "y'' = 2 y^3 + x^2 y"}))
    return EXIT_OK


def cmd_specfun_table(args):
    spec = ProblemSpec(args.mu)
    run = Run(args, "specfun-table", f"specfun_mu{args.mu}")
    xs = np.geomspace(args.x0, args.x1, args.n) if args.log else np.linspace(args.x0, args.x1, args.n)
    rows = []
    worst = 0.0
    for x in xs:
        v = gen_airy(spec, float(x))
        err = abs(v.wronskian - 2.0) / 2.0
        worst = max(worst, err)
        rows.append((x, v.f, v.fp, v.g, v.gp, err))
    p = run.path(f"specfun_mu{args.mu}.csv")
    output.write_csv(p, ("x", "f", "fp", "g", "gp", "wronskian_error"), rows)
    run.added(p)
    run.finish({"mu": args.mu, "n": args.n, "max_wronskian_error": worst})
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="p2mu", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    def out_opts(sp, required_dir=True):
        sp.add_argument("--out", default="p2mu_out" if required_dir else None,
                        help="output directory")
        sp.add_argument("--plot", action="store_true", help="also write an SVG plot")

    sp = add("coeffs", cmd_coeffs, "series coefficients a_0..a_N")
    sp.add_argument("--mu", type=int, required=True)
    sp.add_argument("--n", type=int, required=True, help="highest index N")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default=None, help="also write the table into this directory")

    sp = add("hm", cmd_hm, "Hastings-McLeod-type connection constant and trajectory")
    sp.add_argument("--mu", type=int, required=True)
    sp.add_argument("--ktol", type=float, default=1e-8)
    sp.add_argument("--xleft", type=float, default=None)
    sp.add_argument("--kbracket", type=float, nargs=2, default=(0.1, 1.0))
    out_opts(sp)

    sp = add("classify", cmd_classify, "fate of the decaying solution y_k")
    sp.add_argument("--mu", type=int, required=True)
    sp.add_argument("--k", type=float, required=True)
    sp.add_argument("--xmin", type=float, default=connection.X_MIN_CLASSIFY)

    sp = add("tritronquee", cmd_tritronquee, "tritronquee fan in the sector")
    sp.add_argument("--mu", type=int, required=True)
    sp.add_argument("--rays", type=int, default=tritronquee.DEFAULT_RAYS)
    sp.add_argument("--rfar", type=float, default=tritronquee.DEFAULT_R_FAR)
    sp.add_argument("--rin", type=float, default=tritronquee.DEFAULT_R_IN)
    sp.add_argument("--sector-margin", type=float, default=tritronquee.DEFAULT_MARGIN)
    sp.add_argument("--dr", type=float, default=1.0, help="radial sample spacing")
    sp.add_argument("--no-checks", action="store_true", help="skip cross-ray and r_far checks")
    out_opts(sp)

    sp = add("stokes", cmd_stokes, "exponentially small gap between two tronquee solutions")
    sp.add_argument("--mu", type=int, required=True)
    sp.add_argument("--rrange", type=float, nargs=2, default=None)
    sp.add_argument("--points", type=int, default=12)
    out_opts(sp)

    for name, func, help_ in (("ed", cmd_ed, "integrate the electro-diffusion system"),
                              ("ed-reduce", cmd_ed_reduce, "scaling onto y'' = 2y^3 + x^2 y")):
        sp = add(name, func, help_)
        sp.add_argument("--lambda", dest="lam", type=float, required=True)
        sp.add_argument("--a0", type=float, default=0.0)
        sp.add_argument("--eps", type=float, required=name == "ed-reduce", default=0.0)
        sp.add_argument("--c", type=float, default=0.0, help="integration constant C")
        if name == "ed":
            sp.add_argument("--x0", type=float, default=0.0)
            sp.add_argument("--x1", type=float, default=5.0)
            sp.add_argument("--E", type=float, default=0.0, help="initial field")
            sp.add_argument("--cp", type=float, default=None, help="initial c+")
            sp.add_argument("--cm", type=float, default=None, help="initial c-")
            sp.add_argument("--charge", type=float, default=0.0,
                            help="initial c+ - c- when --cp/--cm are omitted (then Q(x0) = C)")
            out_opts(sp)

    sp = add("specfun-table", cmd_specfun_table, "table of the generalized Airy pair")
    sp.add_argument("--mu", type=int, required=True)
    sp.add_argument("--x0", type=float, default=0.1)
    sp.add_argument("--x1", type=float, default=20.0)
    sp.add_argument("--n", type=int, default=50)
    sp.add_argument("--log", action="store_true", help="log-spaced abscissae")
    sp.add_argument("--out", default="p2mu_out")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoSolutionError as err:
        sys.stderr.write(f"{err}\n")
        return EXIT_NONEXISTENCE
    except (DomainError, ValueError) as err:
        sys.stderr.write(f"domain error: {err}\n")
        return EXIT_DOMAIN
    except NumericalFailure as err:
        sys.stderr.write(f"numerical failure: {err}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
