"""Trajectory integration and runtime checks of the flow estimates.

The integrator is an embedded Dormand-Prince 5(4) pair (in the kernel) with
cubic Hermite dense output; circle crossings are located by bisection on the
dense output, which is valid because |x(t)| is strictly increasing along
trajectories of normalized fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from . import _kernel
from .errors import (
    MonotonicityViolation,
    NoConvergence,
    NotInAnnulus,
    StepUnderflow,
    WindowExit,
)
from .fields import (
    FieldDescriptor,
    compile_program,
    eval_field,
    monotonicity,
    require_family,
)

DEFAULT_TOLERANCE = 1e-10
ORIGIN_LIMIT_RADIUS = 1e-6


@dataclass(frozen=True)
class Event:
    name: str
    t: float
    z: complex


@dataclass(frozen=True)
class AnnulusWindow:
    """The annulus r <= |z| <= R on which uniform constants live."""

    r: float
    R: float

    def __post_init__(self):
        if not (0.0 < self.r < self.R < math.inf):
            raise ValueError(f"annulus needs 0 < r < R < inf, got ({self.r}, {self.R})")

    def contains(self, z: complex, tol: float = 1e-9) -> bool:
        return self.r * (1.0 - tol) <= abs(z) <= self.R * (1.0 + tol)


@dataclass(frozen=True)
class TimedCurve:
    """A time-parametrized plane curve on [t_min, t_max].

    ``pos`` (and ``vel`` when present) must accept scalars and numpy arrays.
    """

    pos: Callable
    t_min: float
    t_max: float
    vel: Callable | None = None


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped solution samples of dx/dt = f(x) with solver metadata.

    Samples are ordered by strictly increasing time regardless of the
    integration direction.  ``velocities`` holds dx/dt at the samples (this
    is i*f(x) for orthogonal trajectories).
    """

    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    field: FieldDescriptor
    tolerance: float
    max_step: float
    events: tuple = ()
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times.setflags(write=False)
        self.points.setflags(write=False)
        self.velocities.setflags(write=False)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.times)

    def radii(self) -> np.ndarray:
        return np.abs(self.points)

    def _segment(self, t):
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        return idx

    def position(self, t):
        """Dense output by cubic Hermite interpolation between samples."""
        if len(self.times) == 1:
            return self.points[0] * np.ones_like(np.asarray(t, dtype=float), dtype=complex) \
                if np.ndim(t) else self.points[0]
        t_arr = np.asarray(t, dtype=float)
        j = self._segment(t_arr)
        ta, tb = self.times[j], self.times[j + 1]
        h = tb - ta
        s = (t_arr - ta) / h
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        out = (
            h00 * self.points[j]
            + h10 * h * self.velocities[j]
            + h01 * self.points[j + 1]
            + h11 * h * self.velocities[j + 1]
        )
        return out if np.ndim(t) else complex(out)

    def velocity(self, t):
        """Derivative of the dense output."""
        if len(self.times) == 1:
            return self.velocities[0] * np.ones_like(np.asarray(t, dtype=float), dtype=complex) \
                if np.ndim(t) else self.velocities[0]
        t_arr = np.asarray(t, dtype=float)
        j = self._segment(t_arr)
        ta, tb = self.times[j], self.times[j + 1]
        h = tb - ta
        s = (t_arr - ta) / h
        s2 = s * s
        out = (
            (6 * s2 - 6 * s) * self.points[j]
            + (3 * s2 - 4 * s + 1) * h * self.velocities[j]
            + (-6 * s2 + 6 * s) * self.points[j + 1]
            + (3 * s2 - 2 * s) * h * self.velocities[j + 1]
        ) / h
        return out if np.ndim(t) else complex(out)

    def resample(self, ts) -> "Trajectory":
        """New trajectory with samples at the given times (dense evaluation)."""
        ts = np.asarray(ts, dtype=float)
        pts = self.position(ts)
        vel = np.asarray([eval_field(self.field, z) for z in pts], dtype=complex)
        return Trajectory(
            times=ts.copy(),
            points=np.asarray(pts, dtype=complex),
            velocities=vel,
            field=self.field,
            tolerance=self.tolerance,
            max_step=self.max_step,
            events=self.events,
            meta=dict(self.meta),
        )

    def restrict(self, t_lo: float, t_hi: float, n: int = 129) -> "Trajectory":
        """Uniformly resampled restriction to [t_lo, t_hi]."""
        if not (self.t0 <= t_lo < t_hi <= self.t1):
            raise ValueError(f"[{t_lo}, {t_hi}] not inside [{self.t0}, {self.t1}]")
        return self.resample(np.linspace(t_lo, t_hi, n))

    def as_curve(self) -> TimedCurve:
        return TimedCurve(pos=self.position, t_min=self.t0, t_max=self.t1, vel=self.velocity)

    def event_time(self, name: str) -> float | None:
        for ev in self.events:
            if ev.name == name:
                return ev.t
        return None


def _default_max_step(span: float) -> float:
    return 0.1 * abs(span)


def integrate(
    fd: FieldDescriptor,
    x0: complex,
    t_span: tuple[float, float],
    tolerance: float = DEFAULT_TOLERANCE,
    max_step: float | None = None,
    rotate: bool = False,
    r_low: float = 0.0,
    r_high: float = math.inf,
    origin_limit: float = ORIGIN_LIMIT_RADIUS,
) -> Trajectory:
    """Integrate dx/dt = f(x) over t_span (backward when t1 < t0).

    Terminates early with events "critical_point" (|f| < 1e-12), "escape"
    (|x| > 1e9), "origin_limit" (|x| dropped below 1e-6), or "r_low"/"r_high"
    radius crossings when requested.  Raises StepUnderflow (with the partial
    trajectory attached) if the controller drives the step below 1e-14.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1:
        raise ValueError("t_span must be nondegenerate")
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    if max_step is None:
        max_step = _default_max_step(t1 - t0)
    prog = compile_program(fd)
    ts, xs, fs, raw_events, status = _kernel.integrate_time(
        prog,
        complex(x0),
        t0,
        t1,
        tolerance,
        tolerance,
        max_step,
        rotate=rotate,
        r_low=r_low,
        r_high=r_high,
        r_min=origin_limit,
    )
    events = tuple(Event(name, t, z) for name, t, z in raw_events)
    if t1 < t0:
        ts = ts[::-1].copy()
        xs = xs[::-1].copy()
        fs = fs[::-1].copy()
    traj = Trajectory(
        times=ts,
        points=xs,
        velocities=fs,
        field=fd,
        tolerance=tolerance,
        max_step=max_step,
        events=events,
        meta={"status": status, "rotate": rotate},
    )
    if status == _kernel.STATUS_UNDERFLOW:
        raise StepUnderflow(f"step below 1e-14 at t={ts[-1]}", trajectory=traj)
    return traj


def _refine_radius_hit(prog, t_prev, x_prev, tau, target, tolerance):
    """Newton-polish a radius crossing by re-integrating the final step.

    Bisection on the dense output is limited by the Hermite interpolation
    error; integrating from the previous sample to the candidate time and
    correcting with d|x|/dt recovers the crossing to solver accuracy.
    """
    x_end, f_end = None, None
    for _ in range(3):
        ts, xs, fs, _ev, status = _kernel.integrate_time(
            prog,
            x_prev,
            t_prev,
            tau,
            tolerance,
            tolerance,
            max(abs(tau - t_prev) / 4.0, 1e-13),
        )
        if status != _kernel.STATUS_COMPLETED:
            return None
        x_end, f_end = complex(xs[-1]), complex(fs[-1])
        g = abs(x_end) - target
        if abs(g) <= 1e-12 * max(1.0, target):
            break
        dgdt = (f_end * x_end.conjugate()).real / abs(x_end)
        if dgdt == 0.0:
            break
        tau = tau - g / dgdt
    return tau, x_end, f_end


def _run_to_radius(
    fd: FieldDescriptor,
    x0: complex,
    target: float,
    backward: bool,
    tolerance: float,
    max_step: float = 0.25,
    max_chunks: int = 48,
) -> Trajectory:
    """Integrate forward/backward until |x| = target, growing the horizon.

    The transit time is not known a priori, so the run proceeds in doubling
    time chunks until the radius event fires.
    """
    prog = compile_program(fd)
    sign = -1.0 if backward else 1.0
    r0 = abs(complex(x0))
    chunk = max(1.0, 2.0 * abs(math.log(max(target, 1e-12) / max(r0, 1e-12))))
    r_low = target if backward else 0.0
    r_high = target if not backward else math.inf
    all_ts = [np.asarray([0.0])]
    all_xs = [np.asarray([complex(x0)], dtype=complex)]
    all_fs = [np.asarray([eval_field(fd, x0)], dtype=complex)]
    t_cur = 0.0
    x_cur = complex(x0)
    events = []
    status = None
    for _ in range(max_chunks):
        ts, xs, fs, raw_events, status = _kernel.integrate_time(
            prog,
            x_cur,
            t_cur,
            t_cur + sign * chunk,
            tolerance,
            tolerance,
            max_step,
            r_low=r_low,
            r_high=r_high,
            r_min=min(ORIGIN_LIMIT_RADIUS, target / 2.0),
        )
        all_ts.append(ts[1:])
        all_xs.append(xs[1:])
        all_fs.append(fs[1:])
        events.extend(Event(name, t, z) for name, t, z in raw_events)
        if status == _kernel.STATUS_UNDERFLOW:
            raise StepUnderflow(f"step underflow at t={ts[-1]}")
        if status == _kernel.STATUS_EVENT:
            break
        t_cur = float(ts[-1])
        x_cur = complex(xs[-1])
        chunk *= 2.0
    if status != _kernel.STATUS_EVENT:
        raise NoConvergence(f"radius {target} not reached from {x0} within the step budget")
    ev_names = {ev.name for ev in events}
    if "r_low" not in ev_names and "r_high" not in ev_names:
        raise NoConvergence(
            f"run from {x0} stopped on {sorted(ev_names)} before reaching radius {target}"
        )
    ts = np.concatenate(all_ts)
    xs = np.concatenate(all_xs)
    fs = np.concatenate(all_fs)
    if len(ts) >= 2:
        refined = _refine_radius_hit(
            prog, float(ts[-2]), complex(xs[-2]), float(ts[-1]), target, tolerance
        )
        if refined is not None:
            ts[-1], xs[-1], fs[-1] = refined
            ev = events[-1]
            events[-1] = Event(ev.name, float(ts[-1]), complex(xs[-1]))
    if backward:
        ts = ts[::-1].copy()
        xs = xs[::-1].copy()
        fs = fs[::-1].copy()
    return Trajectory(
        times=ts,
        points=xs,
        velocities=fs,
        field=fd,
        tolerance=tolerance,
        max_step=max_step,
        events=tuple(events),
    )


def extend_to_annulus(
    fd: FieldDescriptor,
    x0: complex,
    window: AnnulusWindow,
    tolerance: float = DEFAULT_TOLERANCE,
    params=None,
) -> Trajectory:
    """Extend the trajectory through x0 across the annulus window.

    Integrates backward until |x| = r and forward until |x| = R; the hit
    times are recorded as events "hit_inner" (t_r <= 0) and "hit_outer"
    (t_R >= 0), each located by bisection on the dense output.  The transit
    diagnostic (t_R - t_r) * m_K(r) / (R - r) is stored in ``meta`` (it is
    <= 1 for K = 1, C_K = 1 conformal fields, a report otherwise).
    """
    x0 = complex(x0)
    r0 = abs(x0)
    if not (window.r * (1 - 1e-12) <= r0 <= window.R * (1 + 1e-12)):
        raise NotInAnnulus(f"|x0| = {r0} outside [{window.r}, {window.R}]")
    require_family(fd)

    legs = []
    events = []
    if r0 > window.r * (1 + 1e-12):
        back = _run_to_radius(fd, x0, window.r, backward=True, tolerance=tolerance)
        legs.append(back)
        t_r = back.event_time("r_low")
        events.append(Event("hit_inner", t_r, complex(back.points[0])))
    else:
        t_r = 0.0
        events.append(Event("hit_inner", 0.0, x0))
    if r0 < window.R * (1 - 1e-12):
        fwd = _run_to_radius(fd, x0, window.R, backward=False, tolerance=tolerance)
        legs.append(fwd)
        t_R = fwd.event_time("r_high")
        events.append(Event("hit_outer", t_R, complex(fwd.points[-1])))
    else:
        t_R = 0.0
        events.append(Event("hit_outer", 0.0, x0))

    if len(legs) == 2:
        ts = np.concatenate([legs[0].times, legs[1].times[1:]])
        xs = np.concatenate([legs[0].points, legs[1].points[1:]])
        fs = np.concatenate([legs[0].velocities, legs[1].velocities[1:]])
    elif len(legs) == 1:
        ts, xs, fs = legs[0].times, legs[0].points, legs[0].velocities
    else:
        ts = np.asarray([0.0])
        xs = np.asarray([x0], dtype=complex)
        fs = np.asarray([eval_field(fd, x0)], dtype=complex)

    radii = np.abs(xs)
    drops = np.diff(radii)
    slack = max(10.0 * tolerance * window.R, 1e-12)
    if len(drops) and drops.min() < -slack:
        j = int(np.argmin(drops))
        raise MonotonicityViolation(
            f"|x| decreased by {-drops.min():.3e} near t={ts[j]:.6g}; "
            "field is outside the theory's hypotheses"
        )

    from .fields import QCParams, quasisymmetry_m

    mk = quasisymmetry_m(params if params is not None else QCParams(), window.r)
    meta = {
        "t_r": t_r,
        "t_R": t_R,
        "transit_time": t_R - t_r,
        "transit_bound_ratio": (t_R - t_r) * mk / (window.R - window.r),
    }
    return Trajectory(
        times=np.asarray(ts, dtype=float).copy(),
        points=np.asarray(xs, dtype=complex).copy(),
        velocities=np.asarray(fs, dtype=complex).copy(),
        field=fd,
        tolerance=tolerance,
        max_step=0.25,
        events=tuple(events),
        meta=meta,
    )


def _nonuniform_derivative(ts: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Second-order three-point derivative of ys(ts) at interior samples."""
    h1 = ts[1:-1] - ts[:-2]
    h2 = ts[2:] - ts[1:-1]
    return (
        -h2 / (h1 * (h1 + h2)) * ys[:-2]
        + (h2 - h1) / (h1 * h2) * ys[1:-1]
        + h1 / (h2 * (h1 + h2)) * ys[2:]
    )


@dataclass(frozen=True)
class RadialIdentityReport:
    """Comparison of finite-difference d|x|/dt against Delta_f(x, 0)."""

    max_rel_error: float
    max_abs_error: float
    n_samples: int


def radial_identity_check(
    fd: FieldDescriptor, traj: Trajectory, abs_floor: float = 1e-9
) -> RadialIdentityReport:
    """Check the radial growth identity d|x|/dt = Delta_f(x(t), 0).

    The left side uses only the sampled positions (three-point differences on
    the possibly nonuniform grid); the right side is the monotonicity modulus
    at the same samples.  This identity is constant-free.
    """
    if len(traj) < 3:
        raise ValueError("need at least 3 samples")
    radii = traj.radii()
    if radii.min() <= 0:
        raise ValueError("trajectory touches the origin")
    fd_deriv = _nonuniform_derivative(traj.times, radii)
    deltas = np.asarray(
        [monotonicity(fd, z, 0.0).Delta for z in traj.points[1:-1]], dtype=float
    )
    abs_err = np.abs(fd_deriv - deltas)
    rel_err = abs_err / np.maximum(np.abs(deltas), abs_floor)
    return RadialIdentityReport(
        max_rel_error=float(rel_err.max()),
        max_abs_error=float(abs_err.max()),
        n_samples=len(deltas),
    )


def _window_interval(
    fd: FieldDescriptor,
    x0: complex,
    window: AnnulusWindow,
    tolerance: float,
    horizon: float = 20.0,
) -> tuple[float, float]:
    """Time interval around t=0 during which the trajectory stays in window.

    Bounded by the horizon for fields whose orbits never exit (circles).
    """
    prog = compile_program(fd)
    bounds = []
    for sign, kw in ((-1.0, {"r_low": window.r}), (1.0, {"r_high": window.R})):
        ts, _xs, _fs, events, status = _kernel.integrate_time(
            prog, complex(x0), 0.0, sign * horizon, tolerance, tolerance, 0.25, **kw
        )
        if status == _kernel.STATUS_EVENT and events:
            bounds.append(float(events[-1][1]))
        else:
            bounds.append(sign * horizon)
    return bounds[0], bounds[1]


def _two_sided(fd, x0, lo, hi, tolerance) -> Trajectory:
    """Trajectory through (0, x0) covering [lo, 0] and [0, hi]."""
    legs = []
    if lo < 0:
        legs.append(integrate(fd, x0, (0.0, lo), tolerance))
    if hi > 0:
        legs.append(integrate(fd, x0, (0.0, hi), tolerance))
    if len(legs) == 2:
        return Trajectory(
            times=np.concatenate([legs[0].times, legs[1].times[1:]]),
            points=np.concatenate([legs[0].points, legs[1].points[1:]]),
            velocities=np.concatenate([legs[0].velocities, legs[1].velocities[1:]]),
            field=fd,
            tolerance=tolerance,
            max_step=legs[0].max_step,
            events=legs[0].events + legs[1].events,
        )
    return legs[0]


@dataclass(frozen=True)
class LipschitzReport:
    """Empirical constants of |x(t)-y(s)| <= A|t-s| + B|x0-y0|."""

    A_est: float
    B_est: float
    span: tuple

    def to_dict(self) -> dict:
        return {"A_est": self.A_est, "B_est": self.B_est, "span": list(self.span)}


def lipschitz_dependence(
    fd: FieldDescriptor,
    x0: complex,
    y0: complex,
    window: AnnulusWindow,
    tolerance: float = DEFAULT_TOLERANCE,
    n_grid: int = 201,
) -> LipschitzReport:
    """Estimate the Lipschitz-dependence constants on a sampled grid.

    B_est is the sup over matched times of |x(t)-y(t)| / |x0-y0|; A_est is
    the sup over offset pairs of (|x(t)-y(s)| - B_est|x0-y0|) / |t-s|.  The
    comparison span is the overlap of the two in-annulus time intervals.
    """
    x0, y0 = complex(x0), complex(y0)
    if x0 == y0:
        raise ValueError("x0 and y0 must be distinct")
    lo_x, hi_x = _window_interval(fd, x0, window, tolerance)
    lo_y, hi_y = _window_interval(fd, y0, window, tolerance)
    lo, hi = max(lo_x, lo_y), min(hi_x, hi_y)
    if hi - lo < 100.0 * tolerance:
        raise WindowExit(f"in-annulus spans barely overlap: [{lo}, {hi}]")
    x_traj = _two_sided(fd, x0, lo, hi, tolerance)
    y_traj = _two_sided(fd, y0, lo, hi, tolerance)
    grid = np.linspace(lo, hi, n_grid)
    xs = x_traj.position(grid)
    ys = y_traj.position(grid)
    d0 = abs(x0 - y0)
    B_est = float(np.max(np.abs(xs - ys)) / d0)
    cross = np.abs(xs[:, None] - ys[None, :])
    dt = np.abs(grid[:, None] - grid[None, :])
    off = ~np.eye(n_grid, dtype=bool)
    A_est = float(np.max((cross[off] - B_est * d0) / dt[off]))
    return LipschitzReport(A_est=A_est, B_est=B_est, span=(float(lo), float(hi)))


@dataclass(frozen=True)
class BackwardDistanceReport:
    min_slope: float
    passed: bool


def backward_distance_check(
    fd: FieldDescriptor, x_traj: Trajectory, y_traj: Trajectory, slack: float = 1e-9
) -> BackwardDistanceReport:
    """Check that t -> |x(t)-y(t)| is nondecreasing for a monotone field.

    The trajectories must share the time grid (resample them first).
    """
    if not np.array_equal(x_traj.times, y_traj.times):
        raise ValueError("trajectories must share the time grid; use resample()")
    d = np.abs(x_traj.points - y_traj.points)
    slopes = np.diff(d) / np.diff(x_traj.times)
    min_slope = float(slopes.min())
    return BackwardDistanceReport(min_slope=min_slope, passed=min_slope >= -slack)


@dataclass(frozen=True)
class SpeedMonotoneReport:
    min_increment: float
    passed: bool


def speed_monotone_check(
    fd: FieldDescriptor, traj: Trajectory, slack: float = 1e-9
) -> SpeedMonotoneReport:
    """Check that the tangent length |f(x(t))| is nondecreasing along samples."""
    speeds = np.abs(traj.velocities)
    if len(speeds) < 2:
        raise ValueError("need at least 2 samples")
    min_inc = float(np.diff(speeds).min())
    return SpeedMonotoneReport(min_increment=min_inc, passed=min_inc >= -slack)
