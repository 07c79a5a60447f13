"""Quasipolar coordinates, the rectifying map, and the integrating factor.

The quasipolar angle of z is the angle at which the trajectory through z
meets the unit circle; together with rho = |z| it determines z uniquely for
normalized fields.  The map Phi(z) = |z| e^{i Theta(z)} straightens every
trajectory into a ray, fixes the unit circle pointwise and preserves |z|.
Theta is multivalued (branches differ by 2*pi); every operation here works
with the branch that is continuous along the connecting trajectory.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .errors import (
    BranchAmbiguity,
    NoConvergence,
    OriginTooClose,
    ZeroGradient,
    ZeroRadialComponent,
    ZeroVelocity,
)
from .fields import FieldDescriptor, compile_program, eval_field, inner, require_family
from .flow import DEFAULT_TOLERANCE, Trajectory, _run_to_radius, integrate

MIN_RADIUS = 1e-6
MAX_RADIUS = 1e6


@dataclass(frozen=True)
class QuasipolarPoint:
    """Polar distance and quasipolar angle (continuous branch, radians)."""

    rho: float
    theta: float


def _unwrapped_angles(points: np.ndarray) -> np.ndarray:
    """Continuous argument along a sample sequence, seeded at Arg(points[0])."""
    args = np.angle(points)
    deltas = np.angle(points[1:] * np.conj(points[:-1]))
    out = np.empty(len(points))
    out[0] = args[0]
    out[1:] = args[0] + np.cumsum(deltas)
    return out


def _trajectory_to_unit_circle(
    fd: FieldDescriptor, z: complex, tolerance: float
) -> Trajectory:
    z = complex(z)
    rho = abs(z)
    if rho < MIN_RADIUS:
        raise OriginTooClose(f"|z| = {rho} < {MIN_RADIUS}")
    require_family(fd)
    if rho == 1.0:
        return None
    return _run_to_radius(fd, z, 1.0, backward=rho > 1.0, tolerance=tolerance)


def theta(fd: FieldDescriptor, z: complex, tolerance: float = DEFAULT_TOLERANCE) -> QuasipolarPoint:
    """Quasipolar angle of z: integrate to |x| = 1 and unwrap the argument.

    The branch is continuous along the trajectory, seeded at the principal
    argument of z, so there are no 2*pi jumps between consecutive samples.
    """
    z = complex(z)
    traj = _trajectory_to_unit_circle(fd, z, tolerance)
    if traj is None:
        return QuasipolarPoint(rho=abs(z), theta=math.atan2(z.imag, z.real))
    # The trajectory is stored with increasing time; walk it from z to the
    # circle hit (backward runs start at the hit, so seed from the far end).
    pts = traj.points if abs(z) < 1.0 else traj.points[::-1]
    angles = _unwrapped_angles(pts)
    return QuasipolarPoint(rho=abs(z), theta=float(angles[-1]))


def theta_value(fd: FieldDescriptor, z: complex, tolerance: float = DEFAULT_TOLERANCE) -> float:
    return theta(fd, z, tolerance).theta


def phi_map(fd: FieldDescriptor, z: complex, tolerance: float = DEFAULT_TOLERANCE) -> complex:
    """Phi(z) = |z| e^{i Theta(z)}; preserves |z| and rectifies trajectories."""
    q = theta(fd, z, tolerance)
    return q.rho * cmath.exp(1j * q.theta)


def psi_map(fd: FieldDescriptor, q: QuasipolarPoint, tolerance: float = DEFAULT_TOLERANCE) -> complex:
    """Inverse of Phi: the point of the trajectory through e^{i theta} at |x| = rho."""
    if not (MIN_RADIUS <= q.rho <= MAX_RADIUS):
        raise OriginTooClose(f"rho = {q.rho} outside [{MIN_RADIUS}, {MAX_RADIUS}]")
    require_family(fd)
    start = cmath.exp(1j * q.theta)
    if q.rho == 1.0:
        return start
    traj = _run_to_radius(fd, start, q.rho, backward=q.rho < 1.0, tolerance=tolerance)
    hit = traj.points[0] if q.rho < 1.0 else traj.points[-1]
    return complex(hit)


@dataclass(frozen=True)
class BiLipschitzReport:
    min_ratio: float
    max_ratio: float
    n_pairs: int

    def to_dict(self) -> dict:
        return {"min_ratio": self.min_ratio, "max_ratio": self.max_ratio, "n_pairs": self.n_pairs}


def bilipschitz_sample(
    fd: FieldDescriptor,
    window,
    n_pairs: int,
    seed: int,
    tolerance: float = DEFAULT_TOLERANCE,
) -> BiLipschitzReport:
    """Sampled distortion ratios |Phi(z1)-Phi(z2)| / |z1-z2| in the annulus."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    require_family(fd)
    rng = np.random.default_rng(seed)
    lo, hi = math.inf, 0.0
    done = 0
    while done < n_pairs:
        rho = rng.uniform(window.r, window.R, size=2)
        ang = rng.uniform(0.0, 2.0 * math.pi, size=2)
        z1 = rho[0] * cmath.exp(1j * ang[0])
        z2 = rho[1] * cmath.exp(1j * ang[1])
        if abs(z1 - z2) < 1e-9 * window.R:
            continue
        ratio = abs(phi_map(fd, z1, tolerance) - phi_map(fd, z2, tolerance)) / abs(z1 - z2)
        lo = min(lo, ratio)
        hi = max(hi, ratio)
        done += 1
    return BiLipschitzReport(min_ratio=lo, max_ratio=hi, n_pairs=n_pairs)


def polar_rhs(fd: FieldDescriptor, rho: float, phi: float) -> float:
    """Right-hand side of the polar angle equation d(phi)/d(rho)."""
    u = cmath.exp(1j * phi)
    w = eval_field(fd, rho * u) * u.conjugate()
    if w.real <= 1e-12:
        raise ZeroRadialComponent(
            f"radial speed {w.real} at rho={rho}, phi={phi}; polar equation singular"
        )
    return w.imag / (rho * w.real)


@dataclass(frozen=True)
class PolarCurve:
    """Solution phi(rho) of the polar angle equation with phi(1) = theta0."""

    rhos: np.ndarray
    phis: np.ndarray
    derivs: np.ndarray
    theta0: float
    field: FieldDescriptor

    def phi_at(self, rho):
        """Cubic Hermite interpolation of phi at the given radii."""
        r = np.asarray(rho, dtype=float)
        j = np.clip(np.searchsorted(self.rhos, r, side="right") - 1, 0, len(self.rhos) - 2)
        ra, rb = self.rhos[j], self.rhos[j + 1]
        h = rb - ra
        s = (r - ra) / h
        s2, s3 = s * s, s * s * s
        out = (
            (2 * s3 - 3 * s2 + 1) * self.phis[j]
            + (s3 - 2 * s2 + s) * h * self.derivs[j]
            + (-2 * s3 + 3 * s2) * self.phis[j + 1]
            + (s3 - s2) * h * self.derivs[j + 1]
        )
        return out if np.ndim(rho) else float(out)


def integrate_polar(
    fd: FieldDescriptor,
    theta0: float,
    rho_span: tuple[float, float],
    tolerance: float = DEFAULT_TOLERANCE,
) -> PolarCurve:
    """Integrate d(phi)/d(rho) = F(rho, phi) from phi(1) = theta0 over rho_span."""
    lo, hi = float(rho_span[0]), float(rho_span[1])
    if not (MIN_RADIUS <= lo <= MAX_RADIUS and MIN_RADIUS <= hi <= MAX_RADIUS):
        raise ValueError(f"rho_span {rho_span} outside [{MIN_RADIUS}, {MAX_RADIUS}]")
    if lo > hi:
        lo, hi = hi, lo
    prog = compile_program(fd)
    legs = []
    for target in (lo, hi):
        if target == 1.0:
            continue
        max_step = 0.1 * abs(target - 1.0)
        rhos, phis, ders, status = _kernel.integrate_polar(
            prog, theta0, 1.0, target, tolerance, tolerance, max_step
        )
        if status == _kernel.STATUS_ZERO_RADIAL:
            raise ZeroRadialComponent(f"radial speed vanished near rho={rhos[-1]}")
        if status != _kernel.STATUS_EVENT and status != _kernel.STATUS_COMPLETED:
            raise NoConvergence(f"polar integration stopped with status {status}")
        legs.append((rhos, phis, ders))
    if not legs:
        rhos = np.asarray([1.0])
        phis = np.asarray([theta0])
        ders = np.asarray([polar_rhs(fd, 1.0, theta0)])
    elif len(legs) == 1:
        rhos, phis, ders = legs[0]
    else:
        (r1, p1, d1), (r2, p2, d2) = legs
        # Down-leg is integrated 1 -> lo; flip and append the up-leg.
        rhos = np.concatenate([r1[::-1], r2[1:]])
        phis = np.concatenate([p1[::-1], p2[1:]])
        ders = np.concatenate([d1[::-1], d2[1:]])
    order = np.argsort(rhos)
    return PolarCurve(
        rhos=rhos[order], phis=phis[order], derivs=ders[order], theta0=theta0, field=fd
    )


def trajectory_angle_at_radius(traj: Trajectory, rho: float) -> float:
    """Unwrapped argument of the trajectory point at |x| = rho (by bisection)."""
    radii = traj.radii()
    if not (radii.min() - 1e-12 <= rho <= radii.max() + 1e-12):
        raise ValueError(f"rho={rho} outside trajectory radius range")
    angles = _unwrapped_angles(traj.points)
    j = int(np.searchsorted(radii, rho, side="right") - 1)
    j = min(max(j, 0), len(radii) - 2)
    lo, hi = traj.times[j], traj.times[j + 1]
    for _ in range(200):
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if abs(traj.position(mid)) < rho:
            lo = mid
        else:
            hi = mid
    t_hit = 0.5 * (lo + hi)
    z_hit = traj.position(t_hit)
    # Select the branch continuous with the sample right below the hit.
    base = angles[j]
    raw = math.atan2(z_hit.imag, z_hit.real)
    return raw + 2.0 * math.pi * round((base - raw) / (2.0 * math.pi))


def grad_theta(
    fd: FieldDescriptor, z: complex, step: float = 1e-3, tolerance: float = DEFAULT_TOLERANCE
) -> complex:
    """Central-difference gradient of Theta with pairwise branch unwrapping.

    Returns the plane vector (dTheta/dx, dTheta/dy) encoded as a complex
    number.  Raises BranchAmbiguity when the stencil thetas cannot be placed
    on a common branch at this step (use a smaller step).
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    z = complex(z)
    th_c = theta_value(fd, z, tolerance)

    def branch(w):
        t = theta_value(fd, w, tolerance)
        t += 2.0 * math.pi * round((th_c - t) / (2.0 * math.pi))
        if abs(t - th_c) > math.pi / 2.0:
            raise BranchAmbiguity(
                f"theta difference {t - th_c:.3f} rad at step {step}; decrease step"
            )
        return t

    th_r = branch(z + step)
    th_l = branch(z - step)
    th_u = branch(z + 1j * step)
    th_d = branch(z - 1j * step)
    return complex((th_r - th_l) / (2.0 * step), (th_u - th_d) / (2.0 * step))


@dataclass(frozen=True)
class FactorSample:
    """Integrating factor lambda = |f| / |grad Theta| at a point.

    ``orthogonality_residual`` is the angle in [0, pi] between the rotated
    field i*f and grad Theta; the factorization claims it vanishes.
    """

    at: complex
    lambda_factor: float
    grad_theta: complex
    orthogonality_residual: float


def integrating_factor(
    fd: FieldDescriptor, z: complex, step: float = 1e-3, tolerance: float = DEFAULT_TOLERANCE
) -> FactorSample:
    """Sample the factorization i*f = lambda * grad Theta at z."""
    g = grad_theta(fd, z, step, tolerance)
    mg = abs(g)
    if mg < 1e-12:
        raise ZeroGradient(f"|grad Theta| = {mg} at {z}")
    fz = eval_field(fd, z)
    V = 1j * fz
    dot = inner(V, g)
    cross = V.real * g.imag - V.imag * g.real
    residual = math.atan2(abs(cross), dot)
    return FactorSample(
        at=complex(z),
        lambda_factor=abs(fz) / mg,
        grad_theta=g,
        orthogonality_residual=residual,
    )


def orthogonal_trajectory(
    fd: FieldDescriptor,
    w0: complex,
    t_span: tuple[float, float],
    tolerance: float = DEFAULT_TOLERANCE,
) -> Trajectory:
    """Integrate the orthogonal system dw/dt = i f(w)."""
    if complex(w0) == 0:
        raise ValueError("w0 must be nonzero")
    return integrate(fd, w0, t_span, tolerance, rotate=True)


@dataclass(frozen=True)
class CurvatureReport:
    """Turning of the orthogonal trajectory: slopes of unwrapped arg w'(t).

    ``curvatures`` holds k = (d/dt arg w') / |w'| at segment midpoints.
    """

    min_arg_slope: float
    curvatures: np.ndarray
    passed: bool


def curvature_check(orth_traj: Trajectory, slack: float = 1e-8) -> CurvatureReport:
    """Check that arg w'(t) is nondecreasing along an orthogonal trajectory."""
    v = orth_traj.velocities
    if len(v) < 2:
        raise ValueError("need at least 2 samples")
    speeds = np.abs(v)
    if speeds.min() < 1e-12:
        raise ZeroVelocity("velocity vanishes along the trajectory")
    args = _unwrapped_angles(v)
    dt = np.diff(orth_traj.times)
    slopes = np.diff(args) / dt
    mid_speed = 0.5 * (speeds[:-1] + speeds[1:])
    min_slope = float(slopes.min())
    return CurvatureReport(
        min_arg_slope=min_slope,
        curvatures=slopes / mid_speed,
        passed=min_slope >= -slack,
    )
