import cmath
import math

import numpy as np
import pytest

from p2mu import ode, tritronquee
from p2mu.errors import MeasurementImpossible, SectorViolation, SeedError
from p2mu.specfun import ProblemSpec


def stokes_rate(mu):
    return -2.0 * math.sqrt(2.0) / (mu + 2)


def test_z_map_round_trip(spec3):
    for x in (2.0 + 1.0j, 5.0 * cmath.exp(0.7j), 3.0 * cmath.exp(-1.1j)):
        assert tritronquee.from_z(spec3, tritronquee.to_z(spec3, x)) == pytest.approx(x, rel=1e-13)


def test_seed_refuses_small_radius(spec1):
    with pytest.raises(SeedError) as info:
        tritronquee.seed_from_series(spec1, 1.5 + 0j)
    r = info.value.min_radius
    assert r > 1.5
    state, sv = tritronquee.seed_from_series(spec1, complex(r))
    assert sv.error_estimate < tritronquee.SEED_REL_TOL * abs(sv.y)


def test_sector_defaults():
    s = tritronquee.SectorSpec(3)
    assert s.half_width == pytest.approx(2 * math.pi / 5 - tritronquee.DEFAULT_MARGIN)
    a = s.angles(5)
    assert a[0] == pytest.approx(-s.half_width) and a[-1] == pytest.approx(s.half_width)
    with pytest.raises(ValueError):
        tritronquee.SectorSpec(1, r_in=5.0, r_far=4.0)


@pytest.mark.parametrize("name", ["fan1", "fan3"])
def test_fan_is_pole_free_and_consistent(name, request):
    fan = request.getfixturevalue(name)
    assert fan.pole_events == []
    cr = fan.checks["cross_ray"]
    assert cr["passed"] and len(cr["compared"]) > 10
    for ray in fan.rays:
        assert np.all(np.isfinite(ray.y))
        assert ray.radii[0] == fan.sector.r_far and ray.radii[-1] == fan.sector.r_in


@pytest.mark.parametrize("name", ["fan1", "fan3"])
def test_fan_approaches_leading_term(name, request):
    # Y ~ (i/sqrt 2) x^(mu/2): relative deviation shrinks with |x|
    fan = request.getfixturevalue(name)
    mu = fan.mu
    for ray in fan.rays:
        lead = 1j / math.sqrt(2) * ray.x ** (mu / 2.0)
        dev = np.abs(ray.y / lead - 1.0)
        far = dev[ray.radii >= 20]
        near = dev[ray.radii <= 5]
        assert np.max(far) < 0.01
        assert np.max(far) < np.min(near)


def test_fan_matches_series_far_out(fan1, spec1):
    for ray in fan1.rays:
        x, y, _ = ray.sample(30.0)
        sv = tritronquee.formal_series(spec1, tritronquee.default_table(1), x)
        assert y == pytest.approx(sv.y, rel=1e-9)


def test_solutions_are_samples_of_one_function(fan1, spec1):
    x, y, _ = fan1.rays[4].sample(7.0)
    st, _ = tritronquee.solve_point(spec1, x, r_far=50.0)
    assert st.y == pytest.approx(y, rel=1e-10)


def test_robustness(spec1):
    assert tritronquee.robustness_check(spec1, n_rays=3) < 1e-10


@pytest.mark.parametrize("n", [0, 3])
def test_rotation_trivial_cases(fan1, spec1, n):
    rot = tritronquee.rotate_solution(spec1, fan1, n)
    for a, b in zip(fan1.rays, rot.rays):
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.x, b.x)


def test_rotation_composed_full_turn(fan1, spec1):
    rot = fan1
    for _ in range(spec1.mu + 2):
        rot = tritronquee.rotate_solution(spec1, rot, 1)
    for a, b in zip(fan1.rays, rot.rays):
        np.testing.assert_allclose(b.x, a.x, rtol=1e-14)
        np.testing.assert_allclose(b.y, a.y, rtol=1e-14)
        np.testing.assert_allclose(b.yp, a.yp, rtol=1e-14)


@pytest.mark.parametrize("name,n", [("fan1", 1), ("fan1", 2), ("fan3", 1)])
def test_rotated_fan_matches_rotated_series(name, n, request):
    fan = request.getfixturevalue(name)
    spec = ProblemSpec(fan.mu)
    rot = tritronquee.rotate_solution(spec, fan, n)
    for src, ray in zip(fan.rays, rot.rays):
        x, y, _ = ray.sample(fan.sector.r_far)
        expected = tritronquee.rotated_series(spec, x, n, src.angle)
        assert y == pytest.approx(expected, rel=1e-9)


def test_rotated_samples_solve_the_equation(fan1, spec1):
    rot = tritronquee.rotate_solution(spec1, fan1, 1)
    ray = rot.rays[4]
    i, j = 10, 11
    start = ode.State(ray.x[i], ray.y[i], ray.yp[i])
    traj = ode.integrate(spec1, start, ray.x[j], rel_tol=1e-13, abs_tol=1e-15)
    assert traj.final.y == pytest.approx(ray.y[j], rel=1e-9)
    assert traj.final.yp == pytest.approx(ray.yp[j], rel=1e-9)


def test_oversized_sector_meets_poles(spec1):
    sector = tritronquee.SectorSpec(1, half_width=math.pi)
    with pytest.raises(SectorViolation) as info:
        tritronquee.build_tritronquee(spec1, sector, n_rays=9)
    events = info.value.pole_events
    assert len(events) >= 1
    for _, _, ev in events:
        assert abs(ev.x0.imag) < 1e-6 and ev.x0.real < 0
    assert info.value.fan is not None


@pytest.mark.parametrize("mu,name", [(1, "stokes1"), (3, "stokes3")])
def test_stokes_gap_rate(mu, name, request):
    fit = request.getfixturevalue(name)
    assert fit.slope == pytest.approx(stokes_rate(mu), rel=0.01)
    assert len(fit.radii) >= 6
    assert np.all(fit.gaps > 100 * fit.noise)


def test_stokes_gap_strict_range_rejects_noise(spec1):
    lo, hi = tritronquee.default_gap_range(spec1)
    with pytest.raises(MeasurementImpossible):
        tritronquee.stokes_gap(spec1, r_range=(lo, 3 * hi), n_points=3)
