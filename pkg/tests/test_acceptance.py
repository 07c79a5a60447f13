"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Every tolerance is pinned here exactly as stated; the oracles are closed
forms, brute-force enumerations, or independent finite differences.
"""

import cmath
import math

import numpy as np

from conftest import WINDOW, annulus_points
from qcflow import (
    SampledArc,
    arc_from_points,
    curvature_check,
    backward_distance_check,
    degenerate,
    eval_field,
    example1,
    example2,
    extend_to_annulus,
    integrate,
    integrate_polar,
    integrating_factor,
    linear,
    lipschitz_dependence,
    orthogonal_trajectory,
    p_variation,
    partition_sequence,
    phi_map,
    radial_identity_check,
    realized_block_distances,
    rectify_image,
    rescaled,
    sampled_min_delta,
    theta_value,
    trajectory_angle_at_radius,
    uniqueness_certificate,
    wirtinger,
)
from qcflow.flow import TimedCurve
from qcflow.variation import p_variation_exhaustive

EX1 = example1()
EX1N = rescaled(example1(), 0.1)
EX2N = rescaled(example2(), 0.5)
IDENTITY = linear(1.0, 0.0)
SPIRAL = linear(1.0, 2.0)
BRANCH = 24 + 7j


def report(num, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:02d} {name}: {status} ({detail})")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_01_example1_branch_validation():
    ts = np.linspace(0.01, 1.0, 500)
    worst = 0.0
    for sign in (1.0, -1.0):
        c = complex(24.0, 7.0 * sign)
        for t in ts:
            z = c * t * t
            worst = max(worst, abs(2.0 * c * t - eval_field(EX1, z)))
    report(1, "example1 branch residual", worst < 1e-8, f"max residual {worst:.3e}")


def test_criterion_02_example1_distortion():
    pts = annulus_points(101, 100)
    worst = 0.0
    for z in pts:
        w = wirtinger(EX1, z, 1e-5)
        mu = w.f_zbar / w.f_z.real
        worst = max(worst, abs(mu - (-(z / z.conjugate()) / 3.0)))
    report(2, "Beltrami ratio -(1/3) z/zbar", worst < 1e-3, f"max |mu err| {worst:.3e}")


def test_criterion_03_degenerate_orbit_closure():
    traj = integrate(degenerate(1.0), 1.0, (0.0, 2.0 * math.pi))
    closure = abs(complex(traj.points[-1]) - 1.0)
    drift = float(np.max(np.abs(traj.radii() - 1.0)))
    report(
        3,
        "degenerate orbit closure",
        closure < 1e-6 and drift < 1e-8,
        f"closure {closure:.3e}, radius drift {drift:.3e}",
    )


def test_criterion_04_radial_identity():
    cases = [
        (SPIRAL, 0.6 + 0.2j, 0.7),
        (EX1, BRANCH * 0.04, 0.8),  # on branch z+ at t0 = 0.2
        (EX2N, 0.8 - 0.3j, 0.7),
    ]
    worst = 0.0
    ok = True
    for fd, x0, span in cases:
        traj = integrate(fd, x0, (0.0, span), max_step=0.01)
        rep = radial_identity_check(fd, traj)
        ok = ok and rep.n_samples >= 50 and rep.max_rel_error < 1e-4
        worst = max(worst, rep.max_rel_error)
    report(4, "radial identity d|x|/dt = Delta_f(x,0)", ok, f"max rel err {worst:.3e}")


def test_criterion_05_spiral_quasipolar_closed_form():
    worst = 0.0
    for z in annulus_points(105, 20):
        got = theta_value(SPIRAL, z)
        want = math.atan2(z.imag, z.real) - 2.0 * math.log(abs(z))
        worst = max(worst, abs(got - want))
    report(5, "spiral theta = arg z - 2 ln|z|", worst < 1e-6, f"max err {worst:.3e}")


def test_criterion_06_phi_properties(family_fields):
    worst_id = 0.0
    for z in annulus_points(106, 50):
        worst_id = max(worst_id, abs(phi_map(IDENTITY, z) - z))
    worst_mod = 0.0
    for bf in family_fields:
        for z in annulus_points(107, 50, avoid_seam=0.01):
            worst_mod = max(worst_mod, abs(abs(phi_map(bf.field, z)) - abs(z)))
    report(
        6,
        "Phi identity / modulus preservation",
        worst_id < 1e-8 and worst_mod < 1e-6,
        f"identity err {worst_id:.3e}, modulus err {worst_mod:.3e}",
    )


def test_criterion_07_integrating_factor():
    worst_rel = 0.0
    for z in annulus_points(108, 20):
        fs = integrating_factor(IDENTITY, z)
        worst_rel = max(worst_rel, abs(fs.lambda_factor - abs(z) ** 2) / abs(z) ** 2)
    worst_res = 0.0
    for z in annulus_points(109, 50, avoid_seam=0.05):
        worst_res = max(worst_res, integrating_factor(EX2N, z).orthogonality_residual)
    report(
        7,
        "integrating factor |z|^2 / orthogonality",
        worst_rel < 1e-4 and worst_res < 1e-3,
        f"lambda rel err {worst_rel:.3e}, residual {worst_res:.3e} rad",
    )


def test_criterion_08_polar_time_agreement():
    worst = 0.0
    for fd, theta0 in ((SPIRAL, 0.3), (EX2N, -0.5)):
        start = cmath.exp(1j * theta0)
        traj = extend_to_annulus(fd, start, WINDOW)
        curve = integrate_polar(fd, theta0, (0.5, 2.0))
        for rho in np.linspace(0.55, 1.95, 10):
            ang = trajectory_angle_at_radius(traj, float(rho))
            worst = max(worst, abs(ang - float(curve.phi_at(float(rho)))))
    report(8, "polar ODE vs time flow angles", worst < 1e-6, f"max angle err {worst:.3e}")


def test_criterion_09_partition_construction_oracle():
    x = TimedCurve(pos=lambda t: t + 0.0j, t_min=-10.0, t_max=0.0)
    y = TimedCurve(pos=lambda t: t + 0.1j, t_min=-10.0, t_max=0.0)
    seq = partition_sequence(x, y, budget=15)
    gaps = -np.diff(seq.times)
    step_err = float(np.max(np.abs(gaps - 0.1)))
    realized = realized_block_distances(x, y, seq)
    dist_err = float(np.max(np.abs(realized - gaps)))
    report(
        9,
        "partition construction on parallel lines",
        step_err < 1e-9 and dist_err < 1e-8,
        f"step err {step_err:.3e}, realized-dist err {dist_err:.3e}",
    )


def test_criterion_10_variation_dp():
    seg = arc_from_points(np.linspace(0.0, 1.0, 60) + 0j)
    est = p_variation(IDENTITY, seg, 2.0)
    exact = est.value == 1.0 and est.optimal_partition == (0, 59)

    rng = np.random.default_rng(110)
    dp_ok = True
    for n in (6, 9, 12):
        for fd in (IDENTITY, EX1, EX2N):
            pts = np.cumsum(rng.normal(size=n) + 1j * rng.normal(size=n)) + 4.0
            arc = SampledArc(points=pts)
            dp_ok = dp_ok and (
                p_variation(fd, arc, 2.0).value == p_variation_exhaustive(fd, arc, 2.0)
            )

    order_ok = True
    for i in range(10):
        pts = np.cumsum(rng.normal(size=25) * 0.1 + 1j * rng.normal(size=25) * 0.1) + 2.0
        arc = SampledArc(points=pts)
        fd = (IDENTITY, EX1, EX2N)[i % 3]
        order_ok = order_ok and (
            p_variation(fd, arc, 2.0).value <= p_variation(fd, arc, 1.0).value + 1e-12
        )
    report(
        10,
        "variation DP exact / ordering",
        exact and dp_ok and order_ok,
        f"single-piece {exact}, dp==brute {dp_ok}, p-ordering {order_ok}",
    )


def test_criterion_11_lipschitz_stability():
    ests = []
    for d in (1e-3, 1e-4, 1e-5):
        rep = lipschitz_dependence(EX2N, 1.0 - 0.5j * d, 1.0 + 0.5j * d, WINDOW)
        ests.append(rep.B_est)
    spread = (max(ests) - min(ests)) / min(ests)
    report(11, "Lipschitz ratio scale stability", spread < 0.10,
           f"B_est {ests}, spread {spread:.3%}")


def test_criterion_12_backward_uniqueness_and_curvature(family_fields):
    monotone = [bf.field for bf in family_fields] + [example1(), example2()]
    worst_slope = math.inf
    grid = np.linspace(0.0, 0.4, 81)
    for fd in monotone:
        a = integrate(fd, 0.8 * cmath.exp(0.3j), (0.0, 0.4), 1e-12, max_step=0.005)
        b = integrate(fd, 0.9 * cmath.exp(1.1j), (0.0, 0.4), 1e-12, max_step=0.005)
        rep = backward_distance_check(fd, a.resample(grid), b.resample(grid))
        worst_slope = min(worst_slope, rep.min_slope)

    worst_arg = math.inf
    for fd in monotone:
        for w0 in (1.0 + 0.0j, 0.8 + 0.3j, -1j):
            traj = orthogonal_trajectory(fd, w0, (0.0, 0.4), 1e-12)
            worst_arg = min(worst_arg, curvature_check(traj).min_arg_slope)
    report(
        12,
        "backward distance / orthogonal curvature",
        worst_slope >= -1e-9 and worst_arg >= -1e-8,
        f"min distance slope {worst_slope:.3e}, min arg slope {worst_arg:.3e}",
    )


def test_criterion_13_rectification_bound():
    ok = True
    details = []
    for fd, arc in (
        (EX1, arc_from_points(np.linspace(1.0, 1.2, 40) + 0j)),
        (SPIRAL, arc_from_points(np.linspace(1.0, 1.1, 40) + 0j)),
    ):
        delta_est = sampled_min_delta(fd, arc)
        rep = rectify_image(fd, arc, delta_est)
        bound = 2.0 / delta_est * 1.05
        ok = ok and rep.lipschitz_ratio <= bound
        details.append(f"ratio {rep.lipschitz_ratio:.4g} <= {bound:.4g}")
    report(13, "rectification Lipschitz bound", ok, "; ".join(details))


def test_criterion_14_certificate_stability():
    ok = True
    details = []
    for fd, anchor, direction in (
        (IDENTITY, 1.0 + 0.0j, 1.0 + 0.0j),
        (EX2N, 1.0 + 0.0j, 1j),
    ):
        consts = []
        for eps in (1e-3, 1e-4, 1e-5):
            x = integrate(fd, anchor - 0.5 * eps * direction, (0.0, -0.5), 1e-12)
            y = integrate(fd, anchor + 0.5 * eps * direction, (0.0, -0.5), 1e-12)
            rep = uniqueness_certificate(fd, x, y, WINDOW, budget=10)
            consts.append(rep.implied_constant)
        drift = (max(consts) - min(consts)) / abs(consts[0])
        ok = ok and drift < 0.25
        details.append(f"constants {[f'{c:.5g}' for c in consts]} drift {drift:.3%}")
    report(14, "uniqueness certificate stability", ok, "; ".join(details))
