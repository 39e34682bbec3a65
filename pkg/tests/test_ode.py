import math

import numpy as np
import pytest

from p2mu import ode
from p2mu.errors import DomainError
from p2mu.specfun import ProblemSpec, gen_airy


def _linear_seed(spec, k, x0):
    v = gen_airy(spec, x0)
    return ode.State(complex(x0), complex(k * v.f), complex(k * v.fp))


def test_small_amplitude_follows_linear_solution():
    # for tiny k the cubic term is negligible and y tracks k f
    spec = ProblemSpec(1)
    k = 1e-8
    traj = ode.integrate(spec, _linear_seed(spec, k, 4.0), 0.5, rel_tol=1e-12, abs_tol=1e-30)
    assert traj.reached
    v = gen_airy(spec, 0.5)
    assert traj.final.y.real == pytest.approx(k * v.f, rel=1e-9)
    assert traj.final.yp.real == pytest.approx(k * v.fp, rel=1e-9)


def test_path_independence():
    spec = ProblemSpec(2)
    start = ode.State(1.0 + 0j, 0.2 + 0.1j, -0.3 + 0j)
    target = 2.0 + 1.0j
    direct = ode.integrate(spec, start, target, rel_tol=1e-13, abs_tol=1e-15)
    legs = ode.integrate_polyline(spec, start, [1.0 + 1.0j, target], rel_tol=1e-13, abs_tol=1e-15)
    assert direct.reached and legs[-1].reached
    assert legs[-1].final.y == pytest.approx(direct.final.y, rel=1e-10)
    assert legs[-1].final.yp == pytest.approx(direct.final.yp, rel=1e-10)


def test_zero_solution_stays_zero():
    traj = ode.integrate(ProblemSpec(3), ode.State(0j, 0j, 0j), 3.0 + 2.0j)
    assert traj.reached and np.all(traj.y == 0)


def test_non_finite_start_rejected():
    with pytest.raises(DomainError):
        ode.integrate(ProblemSpec(1), ode.State(0j, complex(math.nan), 0j), 1.0)


def test_locate_pole_synthetic():
    x0 = 1.3 - 0.2j
    x = np.linspace(0.0, 1.29, 200) - 0.2j
    for sign in (1, -1):
        y = sign / (x - x0) + 0.01 * (x - x0)
        ev = ode.locate_pole(x, y)
        assert abs(ev.x0 - x0) < 1e-4
        assert ev.sign == sign and ev.determined


def test_integration_detects_pole():
    # y = 1/(x0 - x) is close to a solution for large y; start on it
    spec = ProblemSpec(1)
    x0 = 2.0
    start = ode.State(1.0 + 0j, 1.0 / (x0 - 1.0) + 0j, 1.0 / (x0 - 1.0) ** 2 + 0j)
    traj = ode.integrate(spec, start, 4.0)
    assert traj.status == "pole"
    assert traj.pole.determined
    assert abs(traj.pole.x0 - x0) < 0.1
    assert traj.pole.sign == -1


def test_sign_change_event():
    spec = ProblemSpec(1)
    start = ode.State(0.0 + 0j, 0.5 + 0j, -1.0 + 0j)
    traj = ode.integrate(spec, start, 5.0, stop_on_sign_change=True)
    assert traj.status == "sign_change"
    y, _ = traj.evaluate(traj.event_s)
    assert abs(y[0]) < 1e-10


def test_residual_check_small():
    spec = ProblemSpec(3)
    start = ode.State(0.5 + 0j, 0.3 + 0.2j, -0.1j)
    traj = ode.integrate(spec, start, 2.0 + 0.5j, rel_tol=1e-12, abs_tol=1e-14)
    assert ode.residual_check(spec, traj) < 1e-7


def test_dense_output_matches_steps():
    spec = ProblemSpec(1)
    traj = ode.integrate(spec, ode.State(0j, 0.1 + 0j, 0.2 + 0j), 3.0)
    y, yp = traj.evaluate(traj.s)
    np.testing.assert_allclose(y, traj.y, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(yp, traj.yp, rtol=1e-12, atol=1e-14)


def test_csv_rows(tmp_path):
    traj = ode.integrate(ProblemSpec(1), ode.State(0j, 0.1 + 0j, 0j), 1.0)
    p = tmp_path / "t.csv"
    traj.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(ode.TRAJECTORY_COLUMNS)
    assert len(lines) == len(traj.s) + 1
