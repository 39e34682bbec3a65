import math

import numpy as np
import pytest

from p2mu import ode
from p2mu.electrodiffusion import (EDParams, EDState, ed_rhs, field_equation_residual,
                                   field_from_p2mu, field_residual_values, first_integral,
                                   initial_state_for, integrate_ed, scale_to_p2mu, scaling,
                                   second_order_residual)
from p2mu.errors import DomainError, NotReducibleError
from p2mu.specfun import ProblemSpec


def random_cases(n, seed=20240601):
    """Parameter sets in the moderate range where runs on [0, 5] stay bounded."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        p = EDParams(lam=rng.uniform(1, 2), A0=rng.uniform(-0.1, 0.1), eps=rng.uniform(-0.05, 0.05))
        s = EDState(0.0, rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3), rng.uniform(-0.05, 0.05))
        out.append((p, s))
    return out


def test_rhs_examples():
    assert ed_rhs(EDParams(1.0, A0=0.3), EDState(0.0, 0.7, 0.7, 0.0)) == (0.3, 0.3, 0.0)
    assert ed_rhs(EDParams(1.0), EDState(2.0, 0.0, 0.0, 1.5)) == (0.0, 0.0, 0.0)
    d = ed_rhs(EDParams(1.0, A0=0.5, eps=0.1), EDState(1.0, 2.0, 1.0, 1.0))
    assert d == pytest.approx((2.6, -0.4, 1.0), abs=1e-15)


def test_lambda_must_be_positive():
    with pytest.raises(DomainError):
        EDParams(0.0)
    with pytest.raises(DomainError):
        EDParams(-1.0)


def test_non_finite_start():
    with pytest.raises(DomainError):
        integrate_ed(EDParams(1.0), EDState(0.0, math.nan, 0.1, 0.0), 1.0)


@pytest.mark.parametrize("case", range(5))
def test_first_integral_drift(case):
    p, s = random_cases(5)[case]
    traj = integrate_ed(p, s, 5.0)
    assert traj.reached
    assert traj.drift() <= 1e-8


def test_derivation_chain_pointwise():
    # c+' + c-' = lambda^2 E E' + 2 A(x) at arbitrary states
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = EDParams(rng.uniform(0.5, 3), rng.uniform(-1, 1), rng.uniform(-1, 1))
        s = EDState(*rng.uniform(-2, 2, size=4))
        dp, dm, dE = ed_rhs(p, s)
        assert dp + dm == pytest.approx(p.lam ** 2 * s.E * dE + 2 * p.flux(s.x), abs=1e-12)


def test_symmetric_state_keeps_zero_field():
    p = EDParams(1.3, A0=0.2)
    traj = integrate_ed(p, EDState(0.0, 0.4, 0.4, 0.0), 5.0)
    assert traj.reached and np.all(traj.E == 0.0)
    np.testing.assert_allclose(traj.c_plus, traj.c_minus, rtol=0, atol=0)


def test_second_order_field_relation():
    p, s = random_cases(1, seed=3)[0]
    traj = integrate_ed(p, s, 5.0)
    assert second_order_residual(p, traj) <= 1e-7


def test_field_equation_with_zero_constant():
    p = EDParams(1.2, A0=0.05, eps=0.03)
    traj = integrate_ed(p, initial_state_for(p, 0.0, 0.04, charge=0.02), 5.0)
    assert abs(traj.Q[0]) < 1e-15
    assert field_equation_residual(p, traj) <= 1e-7


def test_field_equation_needs_the_right_constant():
    p = EDParams(1.2, A0=0.05, eps=0.03, C=0.3)
    traj = integrate_ed(p, initial_state_for(p, 0.0, 0.04, charge=0.02), 5.0)
    assert field_equation_residual(p, traj) <= 1e-7
    wrong = EDParams(1.2, A0=0.05, eps=0.03, C=0.0)
    assert field_equation_residual(wrong, traj) > 1e-3


def test_eps_zero_gives_linear_coefficient():
    p = EDParams(1.0, A0=0.1, eps=0.0, C=0.2)
    x, E, Epp = np.array([0.5, 1.0]), np.array([0.1, 0.2]), np.array([0.0, 0.0])
    res = field_residual_values(p, x, E, Epp)
    np.testing.assert_allclose(res, -0.5 * E ** 3 - (2 * 0.1 * x + 0.2) * E)


@pytest.mark.parametrize("lam,eps,a,b", [(1.0, 1.0, 2.0, 1.0), (2.0, 1.0, math.sqrt(2), math.sqrt(2))])
def test_scaling_examples(lam, eps, a, b):
    a_, b_ = scaling(EDParams(lam, eps=eps))
    assert a_ == pytest.approx(a, rel=1e-15) and b_ == pytest.approx(b, rel=1e-15)
    assert a_ * b_ == pytest.approx(2.0) and eps * b_ ** 4 == pytest.approx(lam ** 2)


def test_unit_scaling_is_exact():
    assert scaling(EDParams(1.0, eps=1.0)) == (2.0, 1.0)


@pytest.mark.parametrize("kw", [{"A0": 0.1, "eps": 1.0}, {"C": 0.1, "eps": 1.0}, {"eps": 0.0},
                                {"eps": -1.0}])
def test_not_reducible(kw):
    with pytest.raises(NotReducibleError):
        scaling(EDParams(1.0, **kw))


@pytest.mark.parametrize("lam,eps", [(1.0, 1.0), (2.0, 1.0), (1.5, 0.3)])
def test_mapped_trajectory_solves_p2(lam, eps):
    p = EDParams(lam, eps=eps)
    traj = integrate_ed(p, initial_state_for(p, 0.0, 0.05, charge=0.01), 3.0)
    a, b, mapped = scale_to_p2mu(p, traj)
    assert mapped.residual() <= 1e-7


def test_round_trip_from_p2_trajectory():
    spec = ProblemSpec(2)
    traj = ode.integrate(spec, ode.State(0j, 0.1 + 0j, -0.05 + 0j), 1.5, rel_tol=1e-12, abs_tol=1e-14)
    s = np.linspace(0.0, 1.0, 50)
    y, yp, _, ypp = traj.evaluate(s, derivative=True)
    x_hat = traj.x_start.real + s * (traj.x_end - traj.x_start).real
    for lam, eps in ((1.0, 1.0), (2.0, 1.0), (0.7, 2.5)):
        p = EDParams(lam, eps=eps)
        x, E, Epp = field_from_p2mu(p, x_hat, y.real, ypp.real)
        assert np.max(np.abs(field_residual_values(p, x, E, Epp))) <= 1e-7


def test_positivity_is_reported_not_enforced():
    p = EDParams(1.0, A0=-0.5)
    traj = integrate_ed(p, EDState(0.0, 0.1, 0.1, 0.0), 2.0)
    assert traj.reached
    assert traj.positivity_violation is not None and 0 < traj.positivity_violation < 2.0


def test_blowup_reports_terminal_abscissa():
    p = EDParams(1.0)
    traj = integrate_ed(p, initial_state_for(p, 0.0, 3.0), 10.0)
    assert traj.status == "pole"
    assert 0 < traj.terminal_x < 10.0


def test_csv_columns(tmp_path):
    p = EDParams(1.0, eps=0.01)
    traj = integrate_ed(p, EDState(0.0, 0.2, 0.2, 0.01), 1.0)
    path = tmp_path / "ed.csv"
    traj.write_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "x,c_plus,c_minus,E,Q"
    assert len(rows) == len(traj.x) + 1


def test_first_integral_formula():
    p = EDParams(2.0, A0=0.5, eps=0.25)
    assert first_integral(p, 1.0, 1.0, 2.0, 0.5) == pytest.approx(3.0 - 0.5 - 0.25 - 1.0)
