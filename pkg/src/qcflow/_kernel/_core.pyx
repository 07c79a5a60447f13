# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernel.

Twin of pykernel.py: identical opcodes, identical Dormand-Prince tableau,
identical controller and event logic, in the same arithmetic order.  Keep the
two files in lockstep.
"""

import math

import numpy as np

from libc.math cimport INFINITY, cos, fabs, hypot, isfinite, pow, sin, sqrt

BACKEND_NAME = "compiled"

DEF MAX_NODES = 64

cdef int OP_DEGENERATE = 0
cdef int OP_LINEAR = 1
cdef int OP_RADIAL = 2
cdef int OP_EXAMPLE2 = 3
cdef int OP_RESCALED = 4
cdef int OP_CONVEX = 5

STATUS_COMPLETED = "completed"
STATUS_EVENT = "event"
STATUS_UNDERFLOW = "step_underflow"
STATUS_MAXSTEPS = "max_steps"
STATUS_ZERO_RADIAL = "zero_radial"

cdef double _C2 = 1.0 / 5.0
cdef double _C3 = 3.0 / 10.0
cdef double _C4 = 4.0 / 5.0
cdef double _C5 = 8.0 / 9.0
cdef double _A21 = 1.0 / 5.0
cdef double _A31 = 3.0 / 40.0
cdef double _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0
cdef double _A42 = -56.0 / 15.0
cdef double _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0
cdef double _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0
cdef double _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0
cdef double _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0
cdef double _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0
cdef double _B3 = 500.0 / 1113.0
cdef double _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0
cdef double _B6 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0
cdef double _E3 = -71.0 / 16695.0
cdef double _E4 = 71.0 / 1920.0
cdef double _E5 = -17253.0 / 339200.0
cdef double _E6 = 22.0 / 525.0
cdef double _E7 = -1.0 / 40.0

cdef double _MIN_STEP = 1e-14
cdef double _BISECT_TOL = 1e-10


cdef struct Prog:
    int n
    int codes[MAX_NODES]
    double p0[MAX_NODES]
    double p1[MAX_NODES]
    int ca[MAX_NODES]
    int cb[MAX_NODES]


cdef int _load_prog(object prog, Prog* out) except -1:
    codes, p0, p1, ca, cb = prog
    cdef int n = len(codes)
    if n > MAX_NODES:
        raise ValueError("field program too deep for compiled kernel")
    out.n = n
    cdef int i
    for i in range(n):
        out.codes[i] = codes[i]
        out.p0[i] = p0[i]
        out.p1[i] = p1[i]
        out.ca[i] = ca[i]
        out.cb[i] = cb[i]
    return 0


cdef inline double complex _eval(Prog* pr, double complex z) noexcept:
    cdef double complex vals[MAX_NODES]
    cdef double m
    cdef int i, c
    for i in range(pr.n):
        c = pr.codes[i]
        if c == OP_DEGENERATE:
            vals[i] = 1j * pr.p0[i] * z
        elif c == OP_LINEAR:
            vals[i] = (pr.p0[i] + 1j * pr.p1[i]) * z
        elif c == OP_RADIAL:
            m = hypot(z.real, z.imag)
            vals[i] = 0 if m == 0.0 else pr.p0[i] * z * pow(m, pr.p1[i])
        elif c == OP_EXAMPLE2:
            vals[i] = 2.0 * z if z.imag >= 0.0 else 3.0 * z - z.conjugate()
        elif c == OP_RESCALED:
            vals[i] = pr.p0[i] * vals[pr.ca[i]]
        else:
            vals[i] = (1.0 - pr.p0[i]) * vals[pr.ca[i]] + pr.p0[i] * vals[pr.cb[i]]
    return vals[pr.n - 1]


cdef inline double complex _rhs_c(Prog* pr, double complex z, bint rotate) noexcept:
    cdef double complex f = _eval(pr, z)
    return 1j * f if rotate else f


def eval_field(prog, z):
    """Evaluate the field program at a single complex point."""
    cdef Prog pr
    _load_prog(prog, &pr)
    cdef double complex zz = z
    cdef double complex w = _eval(&pr, zz)
    return complex(w.real, w.imag)


def eval_many(prog, zs):
    """Vectorized field evaluation over an array of points."""
    cdef Prog pr
    _load_prog(prog, &pr)
    arr = np.ascontiguousarray(np.asarray(zs, dtype=complex).ravel())
    out = np.empty(arr.shape[0], dtype=complex)
    cdef const double complex[::1] av = arr
    cdef double complex[::1] ov = out
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        ov[i] = _eval(&pr, av[i])
    return out.reshape(np.asarray(zs, dtype=complex).shape)


cdef inline double _err_norm_c(double complex e, double complex x0, double complex x1,
                               double rtol, double atol) noexcept:
    cdef double sc_re = atol + rtol * max(fabs(x0.real), fabs(x1.real))
    cdef double sc_im = atol + rtol * max(fabs(x0.imag), fabs(x1.imag))
    cdef double a = e.real / sc_re
    cdef double b = e.imag / sc_im
    return sqrt(0.5 * (a * a + b * b))


cdef double _initial_step_c(Prog* pr, double complex x0, double complex f0, double sign,
                            double rtol, double atol, double max_step, double span,
                            bint rotate) noexcept:
    cdef double sc_re = atol + rtol * fabs(x0.real)
    cdef double sc_im = atol + rtol * fabs(x0.imag)
    cdef double d0 = sqrt(0.5 * ((x0.real / sc_re) ** 2 + (x0.imag / sc_im) ** 2))
    cdef double d1 = sqrt(0.5 * ((f0.real / sc_re) ** 2 + (f0.imag / sc_im) ** 2))
    cdef double h0
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    cdef double complex x1 = x0 + h0 * sign * f0
    cdef double complex f1 = _rhs_c(pr, x1, rotate)
    cdef double d2 = sqrt(0.5 * (((f1.real - f0.real) / sc_re) ** 2 +
                                 ((f1.imag - f0.imag) / sc_im) ** 2)) / h0
    cdef double h1
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / max(d1, d2), 0.2)
    return min(min(100.0 * h0, h1), min(max_step, span))


cdef inline double complex _hermite_c(double ta, double complex xa, double complex fa,
                                      double tb, double complex xb, double complex fb,
                                      double tau) noexcept:
    cdef double h = tb - ta
    cdef double s = (tau - ta) / h
    cdef double s2 = s * s
    cdef double s3 = s2 * s
    cdef double h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    cdef double h10 = s3 - 2.0 * s2 + s
    cdef double h01 = -2.0 * s3 + 3.0 * s2
    cdef double h11 = s3 - s2
    return h00 * xa + h10 * h * fa + h01 * xb + h11 * h * fb


cdef void _bisect_radius_c(double ta, double complex xa, double complex fa,
                           double tb, double complex xb, double complex fb,
                           double target, double* tau_out, double complex* x_out) noexcept:
    cdef double lo = ta
    cdef double hi = tb
    cdef double glo = hypot(xa.real, xa.imag) - target
    cdef double mid, gm
    cdef double complex pm
    cdef int it
    for it in range(200):
        if fabs(hi - lo) <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        pm = _hermite_c(ta, xa, fa, tb, xb, fb, mid)
        gm = hypot(pm.real, pm.imag) - target
        if (gm > 0.0) == (glo > 0.0):
            lo = mid
            glo = gm
        else:
            hi = mid
    tau_out[0] = 0.5 * (lo + hi)
    x_out[0] = _hermite_c(ta, xa, fa, tb, xb, fb, tau_out[0])


def integrate_time(prog, x0, double t0, double t1, double rtol, double atol,
                   double max_step, bint rotate=False, double r_low=0.0,
                   double r_high=INFINITY, double r_min=0.0,
                   double escape_radius=1e9, double critical_speed=1e-12,
                   long max_steps=1000000):
    """Adaptive RK5(4) integration of dx/dt = f(x) (or i*f(x) when rotate).

    Same contract as pykernel.integrate_time.
    """
    cdef Prog pr
    _load_prog(prog, &pr)
    cdef double complex x = x0
    cdef double sign = 1.0 if t1 >= t0 else -1.0
    cdef double span = fabs(t1 - t0)
    cdef double complex f = _rhs_c(&pr, x, rotate)

    ts = [t0]
    xs = [complex(x.real, x.imag)]
    fs = [complex(f.real, f.imag)]
    events = []
    status = STATUS_COMPLETED

    cdef double ax = hypot(x.real, x.imag)
    if hypot(f.real, f.imag) < critical_speed:
        events.append(("critical_point", t0, complex(x.real, x.imag)))
        status = STATUS_EVENT
    elif ax > escape_radius:
        events.append(("escape", t0, complex(x.real, x.imag)))
        status = STATUS_EVENT
    elif r_low > 0.0 and ax <= r_low:
        events.append(("r_low", t0, complex(x.real, x.imag)))
        status = STATUS_EVENT
    elif isfinite(r_high) and ax >= r_high:
        events.append(("r_high", t0, complex(x.real, x.imag)))
        status = STATUS_EVENT
    if status == STATUS_EVENT:
        return (np.asarray(ts, dtype=float), np.asarray(xs, dtype=complex),
                np.asarray(fs, dtype=complex), events, status)

    cdef double h = _initial_step_c(&pr, x, f, sign, rtol, atol, max_step, span, rotate)
    cdef double t = t0
    cdef long nsteps = 0
    cdef double remaining, hs, err, rx, rn, t_new, factor
    cdef bint last
    cdef double complex k1, k2, k3, k4, k5, k6, k7, x_new, f_new, e
    cdef double ev_tau, tau_b
    cdef double complex ev_x, x_b, fv
    cdef int ev_kind  # 0 none, 1 r_low, 2 r_high

    while sign * (t1 - t) > 0.0:
        remaining = fabs(t1 - t)
        last = h >= remaining
        if last:
            h = remaining
        if h < _MIN_STEP:
            status = STATUS_UNDERFLOW
            break

        hs = h * sign
        k1 = f
        k2 = _rhs_c(&pr, x + hs * (_A21 * k1), rotate)
        k3 = _rhs_c(&pr, x + hs * (_A31 * k1 + _A32 * k2), rotate)
        k4 = _rhs_c(&pr, x + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3), rotate)
        k5 = _rhs_c(&pr, x + hs * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), rotate)
        k6 = _rhs_c(&pr, x + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
                    rotate)
        x_new = x + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = _rhs_c(&pr, x_new, rotate)
        e = hs * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        err = _err_norm_c(e, x, x_new, rtol, atol)

        if err <= 1.0:
            t_new = t1 if last else t + hs
            f_new = k7

            ev_kind = 0
            rx = hypot(x.real, x.imag)
            rn = hypot(x_new.real, x_new.imag)
            if r_low > 0.0 and rx > r_low >= rn:
                ev_kind = 1
                _bisect_radius_c(t, x, f, t_new, x_new, f_new, r_low, &ev_tau, &ev_x)
            if isfinite(r_high) and rx < r_high <= rn:
                _bisect_radius_c(t, x, f, t_new, x_new, f_new, r_high, &tau_b, &x_b)
                if ev_kind == 0 or sign * (tau_b - ev_tau) < 0.0:
                    ev_kind = 2
                    ev_tau = tau_b
                    ev_x = x_b
            if ev_kind != 0:
                fv = _rhs_c(&pr, ev_x, rotate)
                ts.append(ev_tau)
                xs.append(complex(ev_x.real, ev_x.imag))
                fs.append(complex(fv.real, fv.imag))
                events.append(("r_low" if ev_kind == 1 else "r_high", ev_tau,
                               complex(ev_x.real, ev_x.imag)))
                status = STATUS_EVENT
                break

            ts.append(t_new)
            xs.append(complex(x_new.real, x_new.imag))
            fs.append(complex(f_new.real, f_new.imag))
            if r_min > 0.0 and rx >= r_min > rn:
                events.append(("origin_limit", t_new, complex(x_new.real, x_new.imag)))
                status = STATUS_EVENT
                break
            if rn > escape_radius:
                events.append(("escape", t_new, complex(x_new.real, x_new.imag)))
                status = STATUS_EVENT
                break
            if hypot(f_new.real, f_new.imag) < critical_speed:
                events.append(("critical_point", t_new, complex(x_new.real, x_new.imag)))
                status = STATUS_EVENT
                break

            t = t_new
            x = x_new
            f = f_new
            nsteps += 1
            if nsteps >= max_steps:
                status = STATUS_MAXSTEPS
                break
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
            h = min(h * factor, max_step)
        else:
            h = h * max(0.2, 0.9 * pow(err, -0.2))

    return (np.asarray(ts, dtype=float), np.asarray(xs, dtype=complex),
            np.asarray(fs, dtype=complex), events, status)


cdef bint _polar_rhs_c(Prog* pr, double rho, double phi, double* out) noexcept:
    cdef double complex u = cos(phi) + 1j * sin(phi)
    cdef double complex w = _eval(pr, rho * u) * u.conjugate()
    if w.real <= 1e-12:
        return False
    out[0] = w.imag / (rho * w.real)
    return True


def integrate_polar(prog, double phi0, double rho0, double rho1, double rtol,
                    double atol, double max_step, long max_steps=1000000):
    """Adaptive RK5(4) for the scalar polar angle equation; twin of pykernel's."""
    cdef Prog pr
    _load_prog(prog, &pr)
    cdef double sign = 1.0 if rho1 >= rho0 else -1.0
    cdef double span = fabs(rho1 - rho0)
    cdef double F0
    rhos = [rho0]
    phis = [phi0]
    ders = []
    if not _polar_rhs_c(&pr, rho0, phi0, &F0):
        ders.append(0.0)
        return (np.asarray(rhos), np.asarray(phis), np.asarray(ders), STATUS_ZERO_RADIAL)
    ders.append(F0)
    status = STATUS_COMPLETED

    cdef double sc = atol + rtol * fabs(phi0)
    cdef double d0 = fabs(phi0) / sc
    cdef double d1 = fabs(F0) / sc
    cdef double h
    h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    if h > 0:
        h = min(h, min(max_step, span))
    else:
        h = min(1e-6, min(max_step, span))

    cdef double rho = rho0
    cdef double phi = phi0
    cdef double F = F0
    cdef long nsteps = 0
    cdef double remaining, hs, err, phi_new, rho_new, F_new, e, factor
    cdef double k1, k2, k3, k4, k5, k6
    cdef bint last, ok

    while sign * (rho1 - rho) > 0.0:
        remaining = fabs(rho1 - rho)
        last = h >= remaining
        if last:
            h = remaining
        if h < _MIN_STEP:
            status = STATUS_UNDERFLOW
            break
        hs = h * sign

        ok = True
        k1 = F
        ok = _polar_rhs_c(&pr, rho + _C2 * hs, phi + hs * (_A21 * k1), &k2)
        if ok:
            ok = _polar_rhs_c(&pr, rho + _C3 * hs, phi + hs * (_A31 * k1 + _A32 * k2), &k3)
        if ok:
            ok = _polar_rhs_c(&pr, rho + _C4 * hs,
                              phi + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3), &k4)
        if ok:
            ok = _polar_rhs_c(&pr, rho + _C5 * hs,
                              phi + hs * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), &k5)
        if ok:
            ok = _polar_rhs_c(&pr, rho + hs,
                              phi + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 +
                                          _A65 * k5), &k6)
        if not ok:
            status = STATUS_ZERO_RADIAL
            break
        phi_new = phi + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        rho_new = rho1 if last else rho + hs
        if not _polar_rhs_c(&pr, rho_new, phi_new, &F_new):
            status = STATUS_ZERO_RADIAL
            break
        e = hs * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * F_new)
        sc = atol + rtol * max(fabs(phi), fabs(phi_new))
        err = fabs(e) / sc

        if err <= 1.0:
            rhos.append(rho_new)
            phis.append(phi_new)
            ders.append(F_new)
            rho = rho_new
            phi = phi_new
            F = F_new
            nsteps += 1
            if nsteps >= max_steps:
                status = STATUS_MAXSTEPS
                break
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
            h = min(h * factor, max_step)
        else:
            h = h * max(0.2, 0.9 * pow(err, -0.2))

    return (np.asarray(rhos), np.asarray(phis), np.asarray(ders), status)
