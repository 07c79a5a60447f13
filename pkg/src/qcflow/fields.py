"""Planar vector fields and their pointwise diagnostics.

A field is described declaratively by a :class:`FieldDescriptor` (kind plus
parameters, possibly nested) and evaluated through the stepping kernel.  On
top of evaluation this module provides numeric Wirtinger derivatives, the
monotonicity modulus, the quasisymmetry moduli M/m, membership checks for the
normalized field family, and sampled growth-bound reports.

Points in the plane are plain Python ``complex`` values throughout; the real
inner product of u and v is ``(u * v.conjugate()).real``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from . import _kernel
from .errors import CoincidentPoints, NotNormalizable, SingularPoint

ComplexPoint = complex

_KINDS = (
    "degenerate",
    "linear",
    "radial_power",
    "example1",
    "example2",
    "rescaled",
    "convex_combo",
)


def inner(u: complex, v: complex) -> float:
    """Real inner product of two plane vectors."""
    return u.real * v.real + u.imag * v.imag


@dataclass(frozen=True)
class FieldDescriptor:
    """Declarative description of a planar vector field.

    Use the factory functions (:func:`degenerate`, :func:`linear`, ...)
    rather than the constructor; they validate parameters.
    """

    kind: str
    params: tuple = ()
    children: tuple = ()

    def __call__(self, z: complex) -> complex:
        return eval_field(self, z)

    def contains_kind(self, kind: str) -> bool:
        if self.kind == kind:
            return True
        return any(c.contains_kind(kind) for c in self.children)


def degenerate(omega: float) -> FieldDescriptor:
    """f(z) = i*omega*z; purely rotational, circles about the origin."""
    return FieldDescriptor("degenerate", (float(omega),))


def linear(lam: float, omega: float = 0.0) -> FieldDescriptor:
    """f(z) = (lam + i*omega)*z; spirals (rays when omega = 0)."""
    return FieldDescriptor("linear", (float(lam), float(omega)))


def radial_power(c: float, p: float) -> FieldDescriptor:
    """f(z) = c*z*|z|^p with f(0) = 0."""
    return FieldDescriptor("radial_power", (float(c), float(p)))


def example1() -> FieldDescriptor:
    """f(z) = 10*z/sqrt(|z|); Hoelder-1/2 field with two curves through 0."""
    return FieldDescriptor("example1")


def example2() -> FieldDescriptor:
    """f(z) = 2z above the real axis, 3z - conj(z) below; both give 2x on it."""
    return FieldDescriptor("example2")


def rescaled(inner_field: FieldDescriptor, time_scale: float) -> FieldDescriptor:
    """time_scale * inner_field; rescales the time parameter of the flow."""
    return FieldDescriptor("rescaled", (float(time_scale),), (inner_field,))


def convex_combo(f: FieldDescriptor, g: FieldDescriptor, t: float) -> FieldDescriptor:
    """(1-t)*f + t*g for t in [0, 1]."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"convex weight t={t} outside [0, 1]")
    return FieldDescriptor("convex_combo", (t,), (f, g))


@functools.lru_cache(maxsize=None)
def compile_program(fd: FieldDescriptor):
    """Flatten a descriptor tree into the kernel's post-order program form."""
    codes: list[int] = []
    p0: list[float] = []
    p1: list[float] = []
    ca: list[int] = []
    cb: list[int] = []

    def emit(node: FieldDescriptor) -> int:
        if node.kind == "degenerate":
            args = (_kernel.OP_DEGENERATE, node.params[0], 0.0, -1, -1)
        elif node.kind == "linear":
            args = (_kernel.OP_LINEAR, node.params[0], node.params[1], -1, -1)
        elif node.kind == "radial_power":
            args = (_kernel.OP_RADIAL, node.params[0], node.params[1], -1, -1)
        elif node.kind == "example1":
            args = (_kernel.OP_RADIAL, 10.0, -0.5, -1, -1)
        elif node.kind == "example2":
            args = (_kernel.OP_EXAMPLE2, 0.0, 0.0, -1, -1)
        elif node.kind == "rescaled":
            a = emit(node.children[0])
            args = (_kernel.OP_RESCALED, node.params[0], 0.0, a, -1)
        elif node.kind == "convex_combo":
            a = emit(node.children[0])
            b = emit(node.children[1])
            args = (_kernel.OP_CONVEX, node.params[0], 0.0, a, b)
        else:
            raise ValueError(f"unknown field kind {node.kind!r}")
        codes.append(args[0])
        p0.append(float(args[1]))
        p1.append(float(args[2]))
        ca.append(args[3])
        cb.append(args[4])
        return len(codes) - 1

    emit(fd)
    return (tuple(codes), tuple(p0), tuple(p1), tuple(ca), tuple(cb))


def eval_field(fd: FieldDescriptor, z: complex) -> complex:
    """Evaluate f(z)."""
    return _kernel.eval_field(compile_program(fd), complex(z))


def eval_field_many(fd: FieldDescriptor, zs):
    """Evaluate f over an array of points; returns a complex ndarray."""
    return _kernel.eval_many(compile_program(fd), zs)


@dataclass(frozen=True)
class QCParams:
    """Distortion and normalization parameters governing the moduli.

    K >= 1 is the distortion, d >= 1 bounds |f(1)|, C_K > 0 is the
    quasisymmetry constant (the literature leaves it unspecified; default 1,
    so C_K-dependent bounds are diagnostics unless K = 1).
    """

    K: float = 1.0
    d: float = 1.0
    C_K: float = 1.0

    def __post_init__(self):
        if self.K < 1.0:
            raise ValueError(f"K={self.K} must be >= 1")
        if self.d < 1.0:
            raise ValueError(f"d={self.d} must be >= 1")
        if self.C_K <= 0.0:
            raise ValueError(f"C_K={self.C_K} must be > 0")

    @property
    def k(self) -> float:
        """Beltrami bound (K-1)/(K+1) in [0, 1)."""
        return (self.K - 1.0) / (self.K + 1.0)


def quasisymmetry_M(params: QCParams, t: float) -> float:
    """Upper three-point modulus C_K * max(t^K, t^(1/K))."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    return params.C_K * max(t ** params.K, t ** (1.0 / params.K))


def quasisymmetry_m(params: QCParams, t: float) -> float:
    """Lower modulus 1/M(1/t) = min(t^K, t^(1/K))/C_K; 0 at t = 0 (limit)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    return min(t ** params.K, t ** (1.0 / params.K)) / params.C_K


@dataclass(frozen=True)
class WirtingerSample:
    """Central-difference estimate of f_z and f_zbar at a point."""

    f_z: complex
    f_zbar: complex
    at: complex
    step: float
    seam_flag: bool = False


def wirtinger(fd: FieldDescriptor, z: complex, step: float = 1e-5) -> WirtingerSample:
    """Estimate the Wirtinger derivatives by a 4-point O(step^2) stencil.

    Raises SingularPoint when a radial-power kind is sampled within ``step``
    of the origin.  Sets ``seam_flag`` (no error) when the stencil straddles
    the real axis for a field containing example2.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    z = complex(z)
    if (fd.contains_kind("radial_power") or fd.contains_kind("example1")) and abs(z) <= step:
        raise SingularPoint(f"stencil at {z} touches the radial-power singularity at 0")
    seam = fd.contains_kind("example2") and abs(z.imag) < step
    h = step
    dre = eval_field(fd, z + h) - eval_field(fd, z - h)
    dim = eval_field(fd, z + 1j * h) - eval_field(fd, z - 1j * h)
    f_z = (dre - 1j * dim) / (4.0 * h)
    f_zbar = (dre + 1j * dim) / (4.0 * h)
    return WirtingerSample(f_z=f_z, f_zbar=f_zbar, at=z, step=step, seam_flag=seam)


@dataclass(frozen=True)
class ReducedQCEntry:
    at: complex
    ratio: float
    re_f_z: float


@dataclass(frozen=True)
class ReducedQCReport:
    """Sampled check of the reduced distortion inequality |f_zbar| <= k re f_z."""

    max_ratio: float
    violations: tuple
    degenerate_denominators: tuple
    entries: tuple

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "violations": [
                {"at": [e.at.real, e.at.imag], "ratio": e.ratio, "re_f_z": e.re_f_z}
                for e in self.violations
            ],
        }


def reduced_qc_report(
    fd: FieldDescriptor,
    sample_points,
    params: QCParams,
    step: float = 1e-5,
    slack: float = 1e-7,
) -> ReducedQCReport:
    """Evaluate |f_zbar| / re f_z over samples against the Beltrami bound k.

    Points with |re f_z| < 1e-12 are reported as degenerate denominators, not
    errors.  A violation is recorded where the ratio exceeds k + slack or
    re f_z <= 0.
    """
    entries = []
    violations = []
    degenerate_den = []
    max_ratio = 0.0
    for z in sample_points:
        w = wirtinger(fd, z, step)
        re_fz = w.f_z.real
        if abs(re_fz) < 1e-12:
            degenerate_den.append(complex(z))
            continue
        ratio = abs(w.f_zbar) / re_fz
        entry = ReducedQCEntry(at=complex(z), ratio=ratio, re_f_z=re_fz)
        entries.append(entry)
        if re_fz <= 0.0 or ratio > params.k + slack:
            violations.append(entry)
        if ratio > max_ratio:
            max_ratio = ratio
    return ReducedQCReport(
        max_ratio=max_ratio,
        violations=tuple(violations),
        degenerate_denominators=tuple(degenerate_den),
        entries=tuple(entries),
    )


@dataclass(frozen=True)
class MonotonicityReport:
    """Modulus of monotonicity at a point pair.

    ``delta`` is None when f(a) = f(b) (the normalization is undefined there).
    """

    Delta: float
    delta: float | None
    pair: tuple


def monotonicity(fd: FieldDescriptor, a: complex, b: complex) -> MonotonicityReport:
    """Delta_f(a,b) = <f(a)-f(b), (a-b)/|a-b|> and its normalization delta_f."""
    a = complex(a)
    b = complex(b)
    if a == b:
        raise CoincidentPoints(f"monotonicity needs distinct points, got {a} twice")
    fa = eval_field(fd, a)
    fb = eval_field(fd, b)
    d = a - b
    Delta = inner(fa - fb, d) / abs(d)
    df = abs(fa - fb)
    delta = None if df == 0.0 else Delta / df
    return MonotonicityReport(Delta=Delta, delta=delta, pair=(a, b))


@dataclass(frozen=True)
class FamilyReport:
    """Normalization check f(0)=0, re f(1)=1, 1 <= |f(1)| <= d."""

    f0: complex
    re_f1: float
    abs_f1: float
    passed: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "f0": [self.f0.real, self.f0.imag],
            "re_f1": self.re_f1,
            "abs_f1": self.abs_f1,
            "pass": self.passed,
            "reason": self.reason,
        }


def family_membership(fd: FieldDescriptor, params: QCParams, tol: float = 1e-9) -> FamilyReport:
    """Check membership in the normalized family for the given d.

    Raises NotNormalizable when re f(1) <= 0 (no time rescaling can fix the
    strict-monotonicity baseline Delta_f(1,0) > 0).
    """
    f0 = eval_field(fd, 0.0)
    f1 = eval_field(fd, 1.0)
    re_f1 = f1.real
    if re_f1 <= 0.0:
        raise NotNormalizable(f"re f(1) = {re_f1} <= 0; field is degenerate or reversed")
    abs_f1 = abs(f1)
    reason = ""
    if abs(f0) > tol:
        reason = f"f(0) = {f0} != 0"
    elif abs(re_f1 - 1.0) > tol:
        reason = f"re f(1) = {re_f1} != 1 (rescale by {1.0 / re_f1})"
    elif abs_f1 > params.d + tol:
        reason = f"|f(1)| = {abs_f1} > d = {params.d}"
    return FamilyReport(f0=f0, re_f1=re_f1, abs_f1=abs_f1, passed=reason == "", reason=reason)


def normalized(fd: FieldDescriptor) -> FieldDescriptor:
    """Wrap fd so that re f(1) = 1, rescaling the time parameter."""
    re_f1 = eval_field(fd, 1.0).real
    if re_f1 <= 0.0:
        raise NotNormalizable(f"re f(1) = {re_f1} <= 0")
    if re_f1 == 1.0:
        return fd
    return rescaled(fd, 1.0 / re_f1)


def require_family(fd: FieldDescriptor, tol: float = 1e-9) -> None:
    """Raise unless fd is normalized (f(0)=0 and re f(1)=1 within tol)."""
    f0 = eval_field(fd, 0.0)
    f1 = eval_field(fd, 1.0)
    if f1.real <= 0.0:
        raise NotNormalizable(f"re f(1) = {f1.real} <= 0; field is degenerate or reversed")
    if abs(f0) > tol or abs(f1.real - 1.0) > tol:
        raise NotNormalizable(
            f"field is not normalized: f(0) = {f0}, re f(1) = {f1.real}; "
            "wrap it with normalized()"
        )


@dataclass(frozen=True)
class GrowthBoundEntry:
    at: complex
    m_lower: float
    Delta: float
    M_upper: float
    abs_f: float
    d_M_upper: float
    delta0: float
    delta0_lower: float
    holds: bool


@dataclass(frozen=True)
class GrowthBoundsReport:
    """Sampled growth estimates m(|x|) <= Delta_f(x,0), |f(x)| <= d M(|x|).

    With the default C_K = 1 these are diagnostics; assert ``all_hold`` only
    for fields whose exact moduli are known (K = 1 conformal cases).
    """

    entries: tuple
    all_hold: bool


def growth_bounds_check(
    fd: FieldDescriptor, params: QCParams, sample_points, tol: float = 1e-9
) -> GrowthBoundsReport:
    entries = []
    all_hold = True
    for z in sample_points:
        z = complex(z)
        if z == 0:
            raise ValueError("growth bounds are undefined at the origin")
        r = abs(z)
        mk = quasisymmetry_m(params, r)
        Mk = quasisymmetry_M(params, r)
        rep = monotonicity(fd, z, 0.0)
        absf = abs(eval_field(fd, z))
        delta0 = rep.Delta / absf if absf > 0 else 0.0
        lower = mk / (params.d * Mk) if Mk > 0 else 0.0
        holds = (
            mk - tol <= rep.Delta <= Mk + tol
            and mk - tol <= absf <= params.d * Mk + tol
            and delta0 >= lower - tol
        )
        all_hold = all_hold and holds
        entries.append(
            GrowthBoundEntry(
                at=z,
                m_lower=mk,
                Delta=rep.Delta,
                M_upper=Mk,
                abs_f=absf,
                d_M_upper=params.d * Mk,
                delta0=delta0,
                delta0_lower=lower,
                holds=holds,
            )
        )
    return GrowthBoundsReport(entries=tuple(entries), all_hold=all_hold)


@dataclass(frozen=True)
class BuiltinFamilyField:
    """A normalized built-in field with its known distortion data."""

    name: str
    field: FieldDescriptor
    k: float
    d: float

    @property
    def params(self) -> QCParams:
        K = (1.0 + self.k) / (1.0 - self.k)
        return QCParams(K=K, d=self.d)


def builtin_family_fields() -> tuple[BuiltinFamilyField, ...]:
    """The built-in fields that pass family membership, with exact k and d."""
    return (
        BuiltinFamilyField("linear:1,0", linear(1.0, 0.0), k=0.0, d=1.0),
        BuiltinFamilyField("linear:1,2", linear(1.0, 2.0), k=0.0, d=math.sqrt(5.0)),
        BuiltinFamilyField("example1-normalized", rescaled(example1(), 0.1), k=1.0 / 3.0, d=1.0),
        BuiltinFamilyField("example2-normalized", rescaled(example2(), 0.5), k=1.0 / 3.0, d=1.0),
    )
