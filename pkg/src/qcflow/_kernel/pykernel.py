"""Pure-Python stepping kernel.

Mirrors qcflow._kernel._core operation for operation.  Any change here must
be replicated in _core.pyx in the same arithmetic order, otherwise the two
backends drift apart.

A field "program" is the flattened post-order encoding of a descriptor tree:
five parallel sequences (codes, p0, p1, child_a, child_b) with the root last.
"""

import math

import numpy as np

BACKEND_NAME = "python"

# Opcodes (must match _core.pyx).
OP_DEGENERATE = 0  # p0=omega           f(z) = i*omega*z
OP_LINEAR = 1      # p0=lam, p1=omega   f(z) = (lam + i*omega)*z
OP_RADIAL = 2      # p0=c, p1=p         f(z) = c*z*|z|^p, f(0)=0
OP_EXAMPLE2 = 3    #                    f(z) = 2z above the real axis, 3z - conj(z) below
OP_RESCALED = 4    # p0=scale, a=child  f(z) = scale*child(z)
OP_CONVEX = 5      # p0=t, a,b=children f(z) = (1-t)*a(z) + t*b(z)

STATUS_COMPLETED = "completed"
STATUS_EVENT = "event"
STATUS_UNDERFLOW = "step_underflow"
STATUS_MAXSTEPS = "max_steps"
STATUS_ZERO_RADIAL = "zero_radial"

# Dormand-Prince 5(4) coefficients.
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_MIN_STEP = 1e-14
_BISECT_TOL = 1e-10


def eval_field(prog, z):
    """Evaluate the field program at a single complex point."""
    codes, p0, p1, ca, cb = prog
    vals = [0j] * len(codes)
    for i in range(len(codes)):
        c = codes[i]
        if c == OP_DEGENERATE:
            vals[i] = 1j * p0[i] * z
        elif c == OP_LINEAR:
            vals[i] = complex(p0[i], p1[i]) * z
        elif c == OP_RADIAL:
            m = abs(z)
            vals[i] = 0j if m == 0.0 else p0[i] * z * m ** p1[i]
        elif c == OP_EXAMPLE2:
            vals[i] = 2.0 * z if z.imag >= 0.0 else 3.0 * z - z.conjugate()
        elif c == OP_RESCALED:
            vals[i] = p0[i] * vals[ca[i]]
        else:  # OP_CONVEX
            vals[i] = (1.0 - p0[i]) * vals[ca[i]] + p0[i] * vals[cb[i]]
    return vals[-1]


def eval_many(prog, zs):
    """Field evaluation over an array of points.

    Element-by-element through the scalar path, so the result is bit-equal
    to eval_field at every sample (numpy's SIMD complex kernels can differ
    from the scalar libm in the last ulp).
    """
    arr = np.asarray(zs, dtype=complex)
    out = np.empty(arr.shape, dtype=complex)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.shape[0]):
        flat_out[i] = eval_field(prog, complex(flat_in[i]))
    return out


def _rhs(prog, z, rotate):
    f = eval_field(prog, z)
    return 1j * f if rotate else f


def _err_norm(e, x0, x1, rtol, atol):
    sc_re = atol + rtol * max(abs(x0.real), abs(x1.real))
    sc_im = atol + rtol * max(abs(x0.imag), abs(x1.imag))
    a = e.real / sc_re
    b = e.imag / sc_im
    return math.sqrt(0.5 * (a * a + b * b))


def _initial_step(prog, x0, f0, sign, rtol, atol, max_step, span, rotate):
    # Hairer-style starting step guess; purely deterministic.
    sc_re = atol + rtol * abs(x0.real)
    sc_im = atol + rtol * abs(x0.imag)
    d0 = math.sqrt(0.5 * ((x0.real / sc_re) ** 2 + (x0.imag / sc_im) ** 2))
    d1 = math.sqrt(0.5 * ((f0.real / sc_re) ** 2 + (f0.imag / sc_im) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    x1 = x0 + h0 * sign * f0
    f1 = _rhs(prog, x1, rotate)
    d2 = (
        math.sqrt(0.5 * (((f1.real - f0.real) / sc_re) ** 2 + ((f1.imag - f0.imag) / sc_im) ** 2))
        / h0
    )
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, max_step, span)


def _hermite(ta, xa, fa, tb, xb, fb, tau):
    h = tb - ta
    s = (tau - ta) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return h00 * xa + h10 * h * fa + h01 * xb + h11 * h * fb


def _bisect_radius(ta, xa, fa, tb, xb, fb, target):
    # |x(tau)| - target changes sign on [ta, tb]; tolerance is absolute in time.
    lo, hi = ta, tb
    glo = abs(xa) - target
    for _ in range(200):
        if abs(hi - lo) <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        gm = abs(_hermite(ta, xa, fa, tb, xb, fb, mid)) - target
        if (gm > 0.0) == (glo > 0.0):
            lo = mid
            glo = gm
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    return tau, _hermite(ta, xa, fa, tb, xb, fb, tau)


def integrate_time(
    prog,
    x0,
    t0,
    t1,
    rtol,
    atol,
    max_step,
    rotate=False,
    r_low=0.0,
    r_high=math.inf,
    r_min=0.0,
    escape_radius=1e9,
    critical_speed=1e-12,
    max_steps=1_000_000,
):
    """Adaptive RK5(4) integration of dx/dt = f(x) (or i*f(x) when rotate).

    Stops early on: critical point (|f| < critical_speed), escape
    (|x| > escape_radius), origin_limit (|x| drops below r_min), or radius
    targets r_low / r_high, located by bisection on the cubic Hermite dense
    output.  Returns (ts, xs, fs, events, status).
    """
    x0 = complex(x0)
    sign = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    f0 = _rhs(prog, x0, rotate)
    ts = [t0]
    xs = [x0]
    fs = [f0]
    events = []
    status = STATUS_COMPLETED

    def _finish(st):
        return (
            np.asarray(ts, dtype=float),
            np.asarray(xs, dtype=complex),
            np.asarray(fs, dtype=complex),
            events,
            st,
        )

    if abs(f0) < critical_speed:
        events.append(("critical_point", t0, x0))
        return _finish(STATUS_EVENT)
    if abs(x0) > escape_radius:
        events.append(("escape", t0, x0))
        return _finish(STATUS_EVENT)
    if r_low > 0.0 and abs(x0) <= r_low:
        events.append(("r_low", t0, x0))
        return _finish(STATUS_EVENT)
    if math.isfinite(r_high) and abs(x0) >= r_high:
        events.append(("r_high", t0, x0))
        return _finish(STATUS_EVENT)

    h = _initial_step(prog, x0, f0, sign, rtol, atol, max_step, span, rotate)
    t, x, f = t0, x0, f0
    nsteps = 0
    while sign * (t1 - t) > 0.0:
        remaining = abs(t1 - t)
        last = h >= remaining
        if last:
            h = remaining
        if h < _MIN_STEP:
            status = STATUS_UNDERFLOW
            break

        hs = h * sign
        k1 = f
        k2 = _rhs(prog, x + hs * (_A21 * k1), rotate)
        k3 = _rhs(prog, x + hs * (_A31 * k1 + _A32 * k2), rotate)
        k4 = _rhs(prog, x + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3), rotate)
        k5 = _rhs(prog, x + hs * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), rotate)
        k6 = _rhs(
            prog, x + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), rotate
        )
        x_new = x + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = _rhs(prog, x_new, rotate)
        e = hs * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        err = _err_norm(e, x, x_new, rtol, atol)

        if err <= 1.0:
            t_new = t1 if last else t + hs
            f_new = k7

            # Radius-target events, located on [t, t_new].
            ev_name = None
            ev_tau = None
            ev_x = None
            rx = abs(x)
            rn = abs(x_new)
            if r_low > 0.0 and rx > r_low >= rn:
                ev_name = "r_low"
                ev_tau, ev_x = _bisect_radius(t, x, f, t_new, x_new, f_new, r_low)
            if math.isfinite(r_high) and rx < r_high <= rn:
                tau_b, x_b = _bisect_radius(t, x, f, t_new, x_new, f_new, r_high)
                if ev_name is None or sign * (tau_b - ev_tau) < 0.0:
                    ev_name, ev_tau, ev_x = "r_high", tau_b, x_b
            if ev_name is not None:
                fv = _rhs(prog, ev_x, rotate)
                ts.append(ev_tau)
                xs.append(ev_x)
                fs.append(fv)
                events.append((ev_name, ev_tau, ev_x))
                status = STATUS_EVENT
                break

            ts.append(t_new)
            xs.append(x_new)
            fs.append(f_new)
            if r_min > 0.0 and rx >= r_min > rn:
                events.append(("origin_limit", t_new, x_new))
                status = STATUS_EVENT
                break
            if rn > escape_radius:
                events.append(("escape", t_new, x_new))
                status = STATUS_EVENT
                break
            if abs(f_new) < critical_speed:
                events.append(("critical_point", t_new, x_new))
                status = STATUS_EVENT
                break

            t, x, f = t_new, x_new, f_new
            nsteps += 1
            if nsteps >= max_steps:
                status = STATUS_MAXSTEPS
                break
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * factor, max_step)
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)

    return _finish(status)


def _polar_rhs(prog, rho, phi):
    # d(phi)/d(rho) along the trajectory, or None when the radial speed vanishes.
    u = complex(math.cos(phi), math.sin(phi))
    w = eval_field(prog, rho * u) * u.conjugate()
    if w.real <= 1e-12:
        return None
    return w.imag / (rho * w.real)


def integrate_polar(prog, phi0, rho0, rho1, rtol, atol, max_step, max_steps=1_000_000):
    """Adaptive RK5(4) for the scalar polar angle equation d(phi)/d(rho) = F.

    Returns (rhos, phis, derivs, status).
    """
    sign = 1.0 if rho1 >= rho0 else -1.0
    span = abs(rho1 - rho0)
    F0 = _polar_rhs(prog, rho0, phi0)
    rhos = [rho0]
    phis = [phi0]
    ders = [0.0 if F0 is None else F0]
    if F0 is None:
        return np.asarray(rhos), np.asarray(phis), np.asarray(ders), STATUS_ZERO_RADIAL
    status = STATUS_COMPLETED

    # Starting step guess (scalar analogue of the time integrator's).
    sc = atol + rtol * abs(phi0)
    d0 = abs(phi0) / sc
    d1 = abs(F0) / sc
    h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h = min(h, max_step, span) if h > 0 else min(1e-6, max_step, span)

    rho, phi, F = rho0, phi0, F0
    nsteps = 0
    while sign * (rho1 - rho) > 0.0:
        remaining = abs(rho1 - rho)
        last = h >= remaining
        if last:
            h = remaining
        if h < _MIN_STEP:
            status = STATUS_UNDERFLOW
            break
        hs = h * sign

        bad = False
        k1 = F
        ks = [0.0] * 7
        ks[0] = k1
        stages = (
            (_C2, (_A21,)),
            (_C3, (_A31, _A32)),
            (_C4, (_A41, _A42, _A43)),
            (_C5, (_A51, _A52, _A53, _A54)),
            (1.0, (_A61, _A62, _A63, _A64, _A65)),
        )
        for idx, (c, coeffs) in enumerate(stages, start=1):
            acc = 0.0
            for j, a in enumerate(coeffs):
                acc += a * ks[j]
            Fi = _polar_rhs(prog, rho + c * hs, phi + hs * acc)
            if Fi is None:
                bad = True
                break
            ks[idx] = Fi
        if bad:
            status = STATUS_ZERO_RADIAL
            break
        phi_new = phi + hs * (
            _B1 * ks[0] + _B3 * ks[2] + _B4 * ks[3] + _B5 * ks[4] + _B6 * ks[5]
        )
        rho_new = rho1 if last else rho + hs
        F_new = _polar_rhs(prog, rho_new, phi_new)
        if F_new is None:
            status = STATUS_ZERO_RADIAL
            break
        ks[6] = F_new
        e = hs * (
            _E1 * ks[0] + _E3 * ks[2] + _E4 * ks[3] + _E5 * ks[4] + _E6 * ks[5] + _E7 * ks[6]
        )
        sc = atol + rtol * max(abs(phi), abs(phi_new))
        err = abs(e) / sc

        if err <= 1.0:
            rhos.append(rho_new)
            phis.append(phi_new)
            ders.append(F_new)
            rho, phi, F = rho_new, phi_new, F_new
            nsteps += 1
            if nsteps >= max_steps:
                status = STATUS_MAXSTEPS
                break
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * factor, max_step)
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)

    return np.asarray(rhos), np.asarray(phis), np.asarray(ders), status
