"""flow layer: integration examples, annulus extension, dynamic checks."""

import cmath
import math

import numpy as np
import pytest

from conftest import WINDOW
from qcflow import (
    QCParams,
    backward_distance_check,
    degenerate,
    eval_field,
    example1,
    example2,
    extend_to_annulus,
    integrate,
    linear,
    lipschitz_dependence,
    radial_identity_check,
    rescaled,
    speed_monotone_check,
)
from qcflow.errors import NotInAnnulus, NotNormalizable, WindowExit

EX1_BRANCH = 24 + 7j  # z+(t) = (24+7i) t^2 solves dz/dt = 10 z / sqrt|z|


def test_integrate_exponential():
    traj = integrate(linear(1.0, 0.0), 1.0, (0.0, 1.0))
    assert abs(complex(traj.points[-1]) - math.e) < 1e-8


def test_integrate_degenerate_closed_orbit():
    traj = integrate(degenerate(1.0), 1.0, (0.0, 2.0 * math.pi))
    assert abs(complex(traj.points[-1]) - 1.0) < 1e-6
    assert np.max(np.abs(traj.radii() - 1.0)) < 1e-8


def test_example1_branch_satisfies_ode():
    """Closed-form branches (24 +/- 7i) t^2 satisfy dz/dt = f(z) exactly."""
    ts = np.linspace(0.01, 1.0, 200)
    for sign in (1.0, -1.0):
        c = complex(24.0, sign * 7.0)
        z = c * ts**2
        dz = 2.0 * c * ts
        residual = max(abs(dz[i] - eval_field(example1(), z[i])) for i in range(len(ts)))
        assert residual < 1e-8


def test_integrate_backward_times_increasing():
    traj = integrate(linear(1.0, 0.0), 1.0, (0.0, -0.5))
    assert np.all(np.diff(traj.times) > 0)
    assert traj.t0 == -0.5 and traj.t1 == 0.0
    assert abs(complex(traj.points[0]) - math.exp(-0.5)) < 1e-9


def test_extend_to_annulus_log_hit_times():
    traj = extend_to_annulus(linear(1.0, 0.0), 1.0, WINDOW)
    assert traj.meta["t_r"] == pytest.approx(math.log(0.5), abs=1e-8)
    assert traj.meta["t_R"] == pytest.approx(math.log(2.0), abs=1e-8)
    assert abs(abs(traj.points[0]) - 0.5) < 1e-9
    assert abs(abs(traj.points[-1]) - 2.0) < 1e-9


def test_extend_to_annulus_spiral_same_times():
    # Radial speed d|x|/dt = |x| does not depend on omega.
    traj = extend_to_annulus(linear(1.0, 2.0), 1.0, WINDOW)
    assert traj.meta["t_r"] == pytest.approx(math.log(0.5), abs=1e-8)
    assert traj.meta["t_R"] == pytest.approx(math.log(2.0), abs=1e-8)


def test_extend_to_annulus_rescaled_example2_imaginary_axis():
    # On the upper imaginary axis the rescaled field acts as f(z) = z.
    traj = extend_to_annulus(rescaled(example2(), 0.5), 1j, WINDOW)
    assert traj.meta["t_r"] == pytest.approx(math.log(0.5), abs=1e-8)
    assert traj.meta["t_R"] == pytest.approx(math.log(2.0), abs=1e-8)
    hit = complex(traj.points[-1])
    assert hit == pytest.approx(2j, abs=1e-8)


def test_extend_rejects_outside_start():
    with pytest.raises(NotInAnnulus):
        extend_to_annulus(linear(1.0, 0.0), 3.0, WINDOW)


def test_extend_rejects_unnormalized():
    with pytest.raises(NotNormalizable):
        extend_to_annulus(example2(), 1.0, WINDOW)
    with pytest.raises(NotNormalizable):
        extend_to_annulus(degenerate(1.0), 1.0, WINDOW)


def test_extend_event_determinism():
    a = extend_to_annulus(linear(1.0, 2.0), 1.0 + 0.2j, WINDOW)
    b = extend_to_annulus(linear(1.0, 2.0), 1.0 + 0.2j, WINDOW)
    assert a.meta["t_r"] == b.meta["t_r"]
    assert a.meta["t_R"] == b.meta["t_R"]
    assert np.array_equal(a.points, b.points)


def test_radial_identity_linear_spiral():
    fd = linear(1.0, 2.0)
    traj = integrate(fd, 0.6 + 0.2j, (0.0, 1.0), max_step=0.005)
    rep = radial_identity_check(fd, traj)
    assert rep.max_rel_error < 1e-5


def test_radial_identity_degenerate_both_sides_zero():
    fd = degenerate(1.0)
    traj = integrate(fd, 1.0, (0.0, 1.0), max_step=0.01)
    rep = radial_identity_check(fd, traj)
    assert rep.max_abs_error < 1e-7


def test_radial_identity_example1_branch():
    # Along z+(t): |x| = 25 t^2, d|x|/dt = 50 t = 10 sqrt(|x|) = Delta_f(x,0).
    t0 = 0.2
    fd = example1()
    traj = integrate(fd, EX1_BRANCH * t0**2, (0.0, 0.8), max_step=0.01)
    rep = radial_identity_check(fd, traj)
    assert rep.max_rel_error < 1e-6
    z = complex(traj.points[-1])
    from qcflow import monotonicity

    assert monotonicity(fd, z, 0.0).Delta == pytest.approx(10.0 * math.sqrt(abs(z)), rel=1e-9)


def test_radial_monotonicity_for_family_fields(family_fields):
    rng = np.random.default_rng(21)
    for bf in family_fields:
        for _ in range(20):
            z = rng.uniform(0.5, 2.0) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
            traj = integrate(bf.field, z, (0.0, 0.4))
            assert np.all(np.diff(traj.radii()) > 0)


def test_lipschitz_linear_exponential_ratio():
    rep = lipschitz_dependence(linear(1.0, 0.0), 1.0, 1.0 + 1e-4j, WINDOW)
    # Separation grows like e^t; the sup over the in-window overlap is ~2.
    assert rep.B_est == pytest.approx(2.0, rel=1e-3)
    other = lipschitz_dependence(linear(1.0, 0.0), 1.0, 1.0 + 1e-3j, WINDOW)
    assert other.B_est == pytest.approx(rep.B_est, rel=1e-4)


def test_lipschitz_degenerate_isometric():
    rep = lipschitz_dependence(degenerate(1.0), 1.0, 1.0 + 1e-3j, WINDOW)
    assert rep.B_est == pytest.approx(1.0, rel=1e-6)


def test_lipschitz_rescaled_example2_scale_stable():
    fd = rescaled(example2(), 0.5)
    ests = []
    for d in (1e-3, 1e-4, 1e-5):
        rep = lipschitz_dependence(fd, 1.0 - 0.5j * d, 1.0 + 0.5j * d, WINDOW)
        ests.append(rep.B_est)
    spread = (max(ests) - min(ests)) / min(ests)
    assert spread < 0.10


def test_lipschitz_window_exit_when_no_overlap():
    with pytest.raises(WindowExit):
        lipschitz_dependence(linear(1.0, 0.0), 0.5, 2.0, WINDOW)


def test_backward_distance_example2_lower_half():
    fd = example2()
    grid = np.linspace(0.0, 0.4, 101)
    a = integrate(fd, 0.8 - 0.2j, (0.0, 0.4), 1e-12).resample(grid)
    b = integrate(fd, 0.9 - 0.6j, (0.0, 0.4), 1e-12).resample(grid)
    rep = backward_distance_check(fd, a, b)
    assert rep.min_slope >= -1e-9


def test_backward_distance_degenerate_constant():
    fd = degenerate(1.0)
    grid = np.linspace(0.0, 1.0, 101)
    a = integrate(fd, 1.0, (0.0, 1.0), 1e-12, max_step=0.005).resample(grid)
    b = integrate(fd, 0.5j, (0.0, 1.0), 1e-12, max_step=0.005).resample(grid)
    rep = backward_distance_check(fd, a, b)
    d = np.abs(a.points - b.points)
    assert np.max(np.abs(d - d[0])) < 1e-9
    assert rep.min_slope >= -1e-9


def test_backward_distance_example1():
    fd = example1()
    grid = np.linspace(0.0, 0.3, 101)
    a = integrate(fd, 1.0 + 0.1j, (0.0, 0.3), 1e-12).resample(grid)
    b = integrate(fd, -0.5 + 0.8j, (0.0, 0.3), 1e-12).resample(grid)
    assert backward_distance_check(fd, a, b).min_slope >= -1e-9


def test_speed_monotone_examples():
    assert speed_monotone_check(linear(1.0, 0.0), integrate(linear(1.0, 0.0), 1.0, (0.0, 1.0))).passed
    traj = integrate(degenerate(1.0), 1.0, (0.0, 1.0))
    rep = speed_monotone_check(degenerate(1.0), traj)
    assert rep.passed
    assert np.max(np.abs(np.abs(traj.velocities) - 1.0)) < 1e-9
    fd = example1()
    branch = integrate(fd, EX1_BRANCH * 0.04, (0.0, 0.5))
    assert speed_monotone_check(fd, branch).passed


def test_reverse_triangle_ratio_bounded_and_refinement_stable(family_fields):
    for bf in family_fields[1:3]:
        traj = extend_to_annulus(bf.field, 1.0 + 0.3j, WINDOW)
        maxima = []
        for n in (200, 400):
            grid = np.linspace(traj.meta["t_r"], traj.meta["t_R"], n)
            pts = np.asarray(traj.position(grid))
            radii = np.abs(pts)
            iu, ju = np.triu_indices(n, k=1)
            num = np.abs(pts[iu] - pts[ju])
            den = np.abs(radii[iu] - radii[ju])
            maxima.append(float(np.max(num / den)))
        assert math.isfinite(maxima[1])
        assert abs(maxima[1] - maxima[0]) / maxima[0] < 0.05


def test_transit_time_bound_for_linear_fields():
    for fd in (linear(1.0, 0.0), linear(1.0, 2.0)):
        traj = extend_to_annulus(fd, 1.0, WINDOW, params=QCParams(K=1.0, d=math.sqrt(5)))
        assert traj.meta["transit_bound_ratio"] <= 1.0 + 1e-12


def test_resample_matches_dense_output():
    fd = linear(1.0, 2.0)
    traj = integrate(fd, 1.0, (0.0, 1.0))
    grid = np.linspace(0.1, 0.9, 17)
    res = traj.resample(grid)
    exact = np.exp((1 + 2j) * grid)
    assert np.max(np.abs(res.points - exact)) < 1e-7
