"""Variation estimates along arcs and the uniqueness certificate machinery.

p-variation of the image of a sampled arc is computed exactly over the
sampled index set by dynamic programming on interval diameters (the honest
discretized analogue of the supremum over all partitions).  The partition
construction solves phi_k(tau) = tau + inf |x(t) - y(s)| = t_k by bisection,
with the infimum over the time rectangle evaluated on a dense grid and
refined locally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArcTooLong,
    CurvesCoincideAtEnd,
    DistanceMismatch,
    MissingParametrization,
    NonUnitZ,
    NotDeltaMonotoneOnArc,
    NotInAnnulus,
    TooFewSamples,
)
from .fields import FieldDescriptor, eval_field, eval_field_many, inner, quasisymmetry_m
from .flow import TimedCurve, Trajectory


@dataclass(frozen=True)
class SampledArc:
    """Dense polyline samples of a C^1 arc, optionally with arclength params."""

    points: np.ndarray
    arclength_params: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        if len(pts) >= 2 and np.any(pts[1:] == pts[:-1]):
            raise ValueError("consecutive arc points must be distinct")
        if self.arclength_params is not None:
            s = np.asarray(self.arclength_params, dtype=float)
            if len(s) != len(pts):
                raise ValueError("arclength_params length mismatch")
            if np.any(np.diff(s) <= 0):
                raise ValueError("arclength_params must be strictly increasing")
            object.__setattr__(self, "arclength_params", s)

    def __len__(self) -> int:
        return len(self.points)

    def decimate(self, stride: int = 2) -> "SampledArc":
        """Coarser arc keeping every stride-th sample (endpoints included)."""
        idx = list(range(0, len(self.points), stride))
        if idx[-1] != len(self.points) - 1:
            idx.append(len(self.points) - 1)
        s = None if self.arclength_params is None else self.arclength_params[idx]
        return SampledArc(points=self.points[idx], arclength_params=s)


def arc_from_points(points) -> SampledArc:
    """Arc with chord-length parametrization computed from the samples."""
    pts = np.asarray(points, dtype=complex)
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
    return SampledArc(points=pts, arclength_params=s)


def arc_from_trajectory(traj: Trajectory) -> SampledArc:
    return arc_from_points(traj.points)


def _interval_diameters(y: np.ndarray) -> np.ndarray:
    """diam[i, j] = max pairwise |y_a - y_b| over samples a, b in [i, j].

    Built incrementally in O(N^2): all samples in a piece count, endpoints
    alone would undercount curved images.
    """
    n = len(y)
    diam = np.zeros((n, n))
    for j in range(1, n):
        d_to_j = np.abs(y[:j] - y[j])
        running = np.maximum.accumulate(d_to_j[::-1])[::-1]
        diam[: j, j] = np.maximum(diam[: j, j - 1], running)
    return diam


@dataclass(frozen=True)
class VariationEstimate:
    """p-variation of the image samples with the optimizing partition.

    ``optimal_partition`` lists the sample indices of the piece boundaries
    (endpoints included).
    """

    p: float
    value: float
    optimal_partition: tuple

    def to_dict(self) -> dict:
        return {"p": self.p, "value": self.value, "optimal_partition": list(self.optimal_partition)}


def p_variation(fd: FieldDescriptor, arc: SampledArc, p: float) -> VariationEstimate:
    """Exact p-variation of f over the sampled index set.

    For p = 1 the fine-partition limit equals the full polyline sum.  For
    p > 1 the optimum over all partitions is computed by dynamic programming
    on interval diameters of the image samples.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if len(arc) < 2:
        raise TooFewSamples(f"arc has {len(arc)} samples, need >= 2")
    y = eval_field_many(fd, arc.points)
    n = len(y)
    if p == 1.0:
        # Sequential accumulation so re-evaluation at the partition is exact.
        total = 0.0
        for d in np.abs(np.diff(y)):
            total += float(d)
        return VariationEstimate(p=1.0, value=total, optimal_partition=tuple(range(n)))
    diam = _interval_diameters(y)
    best = np.full(n, -math.inf)
    best[0] = 0.0
    prev = np.zeros(n, dtype=int)
    for j in range(1, n):
        cand = best[:j] + diam[:j, j] ** p
        m = int(np.argmax(cand))
        best[j] = cand[m]
        prev[j] = m
    cut = [n - 1]
    while cut[-1] != 0:
        cut.append(int(prev[cut[-1]]))
    cut.reverse()
    return VariationEstimate(p=p, value=float(best[n - 1] ** (1.0 / p)), optimal_partition=tuple(cut))


def p_variation_exhaustive(fd: FieldDescriptor, arc: SampledArc, p: float) -> float:
    """Brute-force optimum over all 2^(N-2) partitions; oracle for small arcs."""
    if len(arc) > 14:
        raise ValueError("exhaustive enumeration limited to 14 samples")
    y = eval_field_many(fd, arc.points)
    n = len(y)
    diam = _interval_diameters(y)
    best = -math.inf
    interior = n - 2
    for mask in range(1 << interior):
        bounds = [0] + [i + 1 for i in range(interior) if mask >> i & 1] + [n - 1]
        total = 0.0
        for a, b in zip(bounds[:-1], bounds[1:]):
            total += diam[a, b] ** p
        best = max(best, total)
    return best ** (1.0 / p)


@dataclass(frozen=True)
class QuadraticBoundReport:
    """Quadratic variation against image diameter on an in-annulus arc."""

    variation2: float
    diam_image: float
    ratio: float
    refinement_drift: float

    def to_dict(self) -> dict:
        return {
            "variation2": self.variation2,
            "diam_image": self.diam_image,
            "ratio": self.ratio,
            "refinement_drift": self.refinement_drift,
        }


def image_diameter(fd: FieldDescriptor, arc: SampledArc) -> float:
    y = eval_field_many(fd, arc.points)
    return float(np.max(np.abs(y[:, None] - y[None, :])))


def quadratic_bound_report(fd: FieldDescriptor, arc: SampledArc, window) -> QuadraticBoundReport:
    """ratio = |f(Gamma)|_2 / diam f(Gamma), with its drift under 2x decimation."""
    radii = np.abs(arc.points)
    if radii.min() < window.r * (1 - 1e-9) or radii.max() > window.R * (1 + 1e-9):
        raise NotInAnnulus("arc leaves the annulus window")
    est = p_variation(fd, arc, 2.0)
    diam = image_diameter(fd, arc)
    ratio = est.value / diam
    coarse = p_variation(fd, arc.decimate(2), 2.0)
    coarse_ratio = coarse.value / image_diameter(fd, arc.decimate(2))
    drift = abs(ratio - coarse_ratio) / ratio if ratio > 0 else 0.0
    return QuadraticBoundReport(
        variation2=est.value, diam_image=diam, ratio=ratio, refinement_drift=drift
    )


def c1_modulus(arc: SampledArc, tau: float) -> float:
    """C^1-modulus of regularity: max unit-tangent difference over gaps <= tau.

    Tangents are central differences with respect to the arclength
    parametrization (one-sided at the endpoints).
    """
    if arc.arclength_params is None:
        raise MissingParametrization("c1_modulus needs arclength_params")
    s = arc.arclength_params
    total = s[-1] - s[0]
    if not 0 < tau <= total:
        raise ValueError(f"tau must lie in (0, {total}]")
    pts = arc.points
    tang = np.empty(len(pts), dtype=complex)
    tang[1:-1] = (pts[2:] - pts[:-2]) / (s[2:] - s[:-2])
    tang[0] = (pts[1] - pts[0]) / (s[1] - s[0])
    tang[-1] = (pts[-1] - pts[-2]) / (s[-1] - s[-2])
    tang /= np.abs(tang)
    gap = np.abs(s[:, None] - s[None, :])
    diff = np.abs(tang[:, None] - tang[None, :])
    return float(diff[gap <= tau].max())


def _rect_inf(x_curve: TimedCurve, y_curve: TimedCurve, lo: float, hi: float,
              tol_abs: float | None = None, n: int = 33) -> float:
    """inf |x(t) - y(s)| over t, s in [lo, hi], by nested grid refinement.

    The grid minimum overestimates the infimum by at most (curve speed) x
    (cell size); zooming stops once that bound falls below tol_abs.
    """
    if hi <= lo:
        return float(abs(complex(x_curve.pos(lo)) - complex(y_curve.pos(lo))))
    span0 = hi - lo
    if tol_abs is None:
        tol_abs = 1e-12 * max(1.0, span0)
    tlo, thi = lo, hi
    slo, shi = lo, hi
    best = math.inf
    lip = None
    first = True
    while True:
        m = 65 if first else n
        ts = np.linspace(tlo, thi, m)
        ss = np.linspace(slo, shi, m)
        X = np.asarray(x_curve.pos(ts))
        Y = np.asarray(y_curve.pos(ss))
        D = np.abs(X[:, None] - Y[None, :])
        i, j = np.unravel_index(np.argmin(D), D.shape)
        best = min(best, float(D[i, j]))
        wt = ts[1] - ts[0]
        ws = ss[1] - ss[0]
        if lip is None:
            gx = float(np.max(np.abs(np.diff(X)))) / wt
            gy = float(np.max(np.abs(np.diff(Y)))) / ws
            lip = max(gx, gy, 1e-12)
        window = max(thi - tlo, shi - slo)
        if lip * (wt + ws) <= tol_abs or window < 1e-15 * span0:
            break
        tlo, thi = max(lo, ts[i] - 2 * wt), min(hi, ts[i] + 2 * wt)
        slo, shi = max(lo, ss[j] - 2 * ws), min(hi, ss[j] + 2 * ws)
        first = False
    return best


@dataclass(frozen=True)
class PartitionSequence:
    """Decreasing times whose gaps equal the inter-curve distance per block."""

    times: np.ndarray
    terminal: str  # "converged_to_meet" or "budget_exhausted"

    def to_dict(self) -> dict:
        return {"times": list(map(float, self.times)), "terminal": self.terminal}


def partition_sequence(
    x_curve: TimedCurve,
    y_curve: TimedCurve,
    budget: int,
    meet_tol: float = 1e-9,
    root_tol: float = 1e-10,
) -> PartitionSequence:
    """Construct t_0 > t_1 > ... with inf |x(t)-y(s)| over each block = gap.

    Each t_{k+1} solves phi_k(tau) = tau + inf{|x(t)-y(s)| : tau <= t, s <= t_k}
    = t_k; phi_k is continuous and strictly increasing, so bisection applies.
    Stops when the inter-curve distance falls below 1e-9, when the budget is
    spent, or when the shared domain cannot host another step.
    """
    t0 = min(x_curve.t_max, y_curve.t_max)
    t_min = max(x_curve.t_min, y_curve.t_min)
    d0 = abs(complex(x_curve.pos(t0)) - complex(y_curve.pos(t0)))
    if d0 == 0.0:
        raise CurvesCoincideAtEnd(f"x(t0) = y(t0) at t0 = {t0}")
    times = [t0]
    terminal = "budget_exhausted"
    t_k = t0
    for _ in range(budget):
        def g(tau, tol_abs=None):
            return tau + _rect_inf(x_curve, y_curve, tau, t_k, tol_abs=tol_abs) - t_k

        if g(t_min) > 0.0:
            break
        lo, hi = t_min, t_k
        while hi - lo > root_tol:
            mid = 0.5 * (lo + hi)
            # Early iterations only need the sign of g to bracket accuracy.
            tol_inf = max(root_tol / 4.0, 0.01 * (hi - lo))
            if g(mid, tol_inf) > 0.0:
                hi = mid
            else:
                lo = mid
        t_next = 0.5 * (lo + hi)
        times.append(t_next)
        gap = t_k - t_next
        t_k = t_next
        if gap < meet_tol:
            terminal = "converged_to_meet"
            break
    return PartitionSequence(times=np.asarray(times), terminal=terminal)


def realized_block_distances(
    x_curve: TimedCurve, y_curve: TimedCurve, seq: PartitionSequence
) -> np.ndarray:
    """Recompute inf |x(t)-y(s)| over each partition block (validity check)."""
    out = []
    for a, b in zip(seq.times[1:], seq.times[:-1]):
        out.append(_rect_inf(x_curve, y_curve, a, b))
    return np.asarray(out)


@dataclass(frozen=True)
class ComparisonBound:
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs}


def partition_comparison_bound(
    x_curve: TimedCurve,
    y_curve: TimedCurve,
    seq: PartitionSequence,
    tau: float,
    n_grid: int = 257,
) -> ComparisonBound:
    """Check |x(t_k)-y(t_k)| <= (1 + sup |x'|+|y'|) |x(tau)-y(tau)|.

    The supremum runs over [tau, t_k] only (that is what makes the bound
    useful), sampled on a dense grid; both curves must carry velocities.
    """
    if x_curve.vel is None or y_curve.vel is None:
        raise ValueError("curves must provide velocities")
    times = seq.times
    k = int(np.searchsorted(-times, -tau, side="right")) - 1
    k = min(max(k, 0), len(times) - 2)
    t_k = times[k]
    if not times[k + 1] - 1e-12 <= tau <= t_k + 1e-12:
        raise ValueError(f"tau={tau} not inside block [{times[k + 1]}, {t_k}]")
    grid = np.linspace(tau, t_k, n_grid)
    C = float(np.max(np.abs(np.asarray(x_curve.vel(grid))) + np.abs(np.asarray(y_curve.vel(grid)))))
    lhs = abs(complex(x_curve.pos(t_k)) - complex(y_curve.pos(t_k)))
    rhs = (1.0 + C) * abs(complex(x_curve.pos(tau)) - complex(y_curve.pos(tau)))
    return ComparisonBound(lhs=lhs, rhs=rhs, passed=lhs <= rhs + 1e-9)


@dataclass(frozen=True)
class CertificateReport:
    """Telescoped uniqueness certificate along a partition sequence.

    ``total_lhs`` is log |x_0-y_0| / |x_m-y_m|; ``total_rhs_shape`` is the
    constant-free shape |f(x_0)| - |f(x_m)| + sum of squared image diameters.
    The implied constant is their ratio.
    """

    times: np.ndarray
    log_ratios: np.ndarray
    bound_terms: np.ndarray
    total_lhs: float
    total_rhs_shape: float
    implied_constant: float

    def to_dict(self) -> dict:
        return {
            "log_ratios": list(map(float, self.log_ratios)),
            "bound_terms": list(map(float, self.bound_terms)),
            "total_lhs": self.total_lhs,
            "total_rhs_shape": self.total_rhs_shape,
            "implied_constant": self.implied_constant,
        }


def uniqueness_certificate(
    fd: FieldDescriptor,
    x_traj: Trajectory,
    y_traj: Trajectory,
    window,
    budget: int = 12,
    samples_per_block: int = 65,
) -> CertificateReport:
    """Build the telescoping log-ratio certificate for two trajectories.

    Per partition block: log |x_k-y_k| / |x_{k+1}-y_{k+1}| on the left, and
    |f(x_k)| - |f(x_{k+1})| + diam^2 f(gamma_k) on the right, where gamma_k
    is the x-arc over the block.
    """
    from .fields import require_family

    require_family(fd)
    for traj in (x_traj, y_traj):
        radii = traj.radii()
        if radii.min() < window.r * (1 - 1e-9) or radii.max() > window.R * (1 + 1e-9):
            raise NotInAnnulus("trajectory leaves the annulus window")
    seq = partition_sequence(x_traj.as_curve(), y_traj.as_curve(), budget)
    times = seq.times
    if len(times) < 2:
        raise ValueError("partition produced no blocks; increase budget or separation")
    xk = np.asarray(x_traj.position(times))
    yk = np.asarray(y_traj.position(times))
    gaps = np.abs(xk - yk)
    log_ratios = np.log(gaps[:-1] / gaps[1:])
    speeds = np.abs(eval_field_many(fd, xk))
    bound_terms = np.empty(len(times) - 1)
    diam_sq_sum = 0.0
    for k in range(len(times) - 1):
        grid = np.linspace(times[k + 1], times[k], samples_per_block)
        img = eval_field_many(fd, np.asarray(x_traj.position(grid)))
        diam = float(np.max(np.abs(img[:, None] - img[None, :])))
        bound_terms[k] = speeds[k] - speeds[k + 1] + diam * diam
        diam_sq_sum += diam * diam
    total_lhs = float(np.sum(log_ratios))
    total_rhs_shape = float(speeds[0] - speeds[-1] + diam_sq_sum)
    return CertificateReport(
        times=times,
        log_ratios=log_ratios,
        bound_terms=bound_terms,
        total_lhs=total_lhs,
        total_rhs_shape=total_rhs_shape,
        implied_constant=total_lhs / total_rhs_shape,
    )


@dataclass(frozen=True)
class InnerProductBound:
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs}


def inner_product_bound(A: complex, B: complex, Z: complex, lam: float) -> InnerProductBound:
    """<A-B, Z> <= |A| - |B| + |B - lam Z|^2 / (2 lam) for unit Z, lam > 0."""
    if abs(abs(Z) - 1.0) > 1e-12:
        raise NonUnitZ(f"|Z| = {abs(Z)} != 1")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    lhs = inner(A - B, Z)
    rhs = abs(A) - abs(B) + abs(B - lam * Z) ** 2 / (2.0 * lam)
    return InnerProductBound(lhs=lhs, rhs=rhs, passed=lhs <= rhs + 1e-12)


@dataclass(frozen=True)
class ArcPairReport:
    """Sampled endpoint-modulus estimates for two equal-time integral arcs."""

    max_ratio: float
    coarse_ratio: float
    delta_end: float
    endpoint_bound_exact: float
    mk_rhs: float
    mk_slack: float

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "coarse_ratio": self.coarse_ratio,
            "delta_end": self.delta_end,
            "endpoint_bound_exact": self.endpoint_bound_exact,
            "mk_rhs": self.mk_rhs,
            "mk_slack": self.mk_slack,
        }


def arc_pair_estimates(
    fd: FieldDescriptor,
    arcX: Trajectory,
    arcY: Trajectory,
    window,
    params=None,
    n_samples: int = 33,
) -> ArcPairReport:
    """Estimates over integral arcs of the same time-length with dist = length.

    Reports the max of Delta_f(x, y) / Delta_f(x_end, x_start) over sampled
    cross pairs (plus a half-density value for refinement stability), and the
    endpoint modulus bound in both its exact inner-product form and its
    m_K(r) form (C_K = 1), with the slack of the latter.
    """
    from .fields import QCParams, monotonicity

    alpha = max(arcX.t0, arcY.t0)
    beta = min(arcX.t1, arcY.t1)
    if abs((arcX.t1 - arcX.t0) - (arcY.t1 - arcY.t0)) > 1e-12 or beta <= alpha:
        raise DistanceMismatch("arcs must share the same time interval")
    span = beta - alpha
    realized = _rect_inf(arcX.as_curve(), arcY.as_curve(), alpha, beta)
    if abs(realized - span) > 1e-6:
        raise DistanceMismatch(
            f"dist(X, Y) = {realized:.9g} differs from time-length {span:.9g}"
        )
    x_a = complex(arcX.position(alpha))
    x_b = complex(arcX.position(beta))
    delta_end = monotonicity(fd, x_b, x_a).Delta

    def max_ratio(n):
        txs = np.linspace(alpha, beta, n)
        xs = np.asarray(arcX.position(txs))
        ys = np.asarray(arcY.position(txs))
        worst = 0.0
        for x in xs:
            for y in ys:
                if x != y:
                    worst = max(worst, monotonicity(fd, x, y).Delta / delta_end)
        return worst

    fine = max_ratio(n_samples)
    coarse = max_ratio((n_samples + 1) // 2)

    f_b = eval_field(fd, x_b)
    f_a = eval_field(fd, x_a)
    lam = abs(x_b - x_a) / span
    Zu = (x_b - x_a) / abs(x_b - x_a)
    exact = abs(f_b) - abs(f_a) + abs(f_b - lam * Zu) ** 2 / (2.0 * lam)
    grid = np.linspace(alpha, beta, 129)
    img = eval_field_many(fd, np.asarray(arcX.position(grid)))
    diam = float(np.max(np.abs(img[:, None] - img[None, :])))
    mk = quasisymmetry_m(params if params is not None else QCParams(), window.r)
    mk_rhs = abs(f_b) - abs(f_a) + diam * diam / (2.0 * mk)
    return ArcPairReport(
        max_ratio=fine,
        coarse_ratio=coarse,
        delta_end=delta_end,
        endpoint_bound_exact=exact,
        mk_rhs=mk_rhs,
        mk_slack=mk_rhs - delta_end,
    )


@dataclass(frozen=True)
class RectificationReport:
    """Monotone reparametrization of the image of a delta-monotone arc.

    ``params_s`` are the projections <f(x_j), u> shifted to start at 0; the
    Lipschitz ratio of the image samples against them is bounded by
    2/delta (checked with 5% numerical headroom).
    """

    params_s: np.ndarray
    lipschitz_ratio: float
    delta_est: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "params_s": list(map(float, self.params_s)),
            "lipschitz_ratio": self.lipschitz_ratio,
            "delta_est": self.delta_est,
        }


def rectify_image(fd: FieldDescriptor, arc: SampledArc, delta_est: float) -> RectificationReport:
    """Rectify the image of a short arc of a delta-monotone field.

    Requires sampled delta_f > 0 over arc pairs and chord directions within
    delta_est/2 of the initial tangent; rejects the arc otherwise (the caller
    subdivides, this routine never does).
    """
    from .fields import monotonicity

    if len(arc) < 2:
        raise TooFewSamples("need >= 2 samples")
    if delta_est <= 0:
        raise NotDeltaMonotoneOnArc(f"delta_est = {delta_est} must be > 0")
    pts = arc.points
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            rep = monotonicity(fd, pts[i], pts[j])
            if rep.delta is not None and rep.delta <= 0:
                raise NotDeltaMonotoneOnArc(
                    f"delta_f({pts[i]}, {pts[j]}) = {rep.delta} <= 0"
                )
    u = (pts[1] - pts[0]) / abs(pts[1] - pts[0])
    chords = pts[None, :] - pts[:, None]
    iu, ju = np.triu_indices(n, k=1)
    dirs = chords[iu, ju]
    dirs = dirs / np.abs(dirs)
    spread = float(np.max(np.abs(dirs - u)))
    if spread > delta_est / 2.0:
        raise ArcTooLong(
            f"chord-direction spread {spread:.3g} exceeds delta/2 = {delta_est / 2:.3g}"
        )
    y = eval_field_many(fd, pts)
    phi = (y * np.conj(u)).real
    if np.any(np.diff(phi) <= 0):
        raise NotDeltaMonotoneOnArc("projection <f(x(t)), u> is not strictly increasing")
    s = phi - phi[0]
    num = np.abs(y[ju] - y[iu])
    den = s[ju] - s[iu]
    ratio = float(np.max(num / den))
    return RectificationReport(
        params_s=s,
        lipschitz_ratio=ratio,
        delta_est=delta_est,
        passed=ratio <= (2.0 / delta_est) * 1.05,
    )


def sampled_min_delta(fd: FieldDescriptor, arc: SampledArc) -> float:
    """Minimum sampled delta_f over all distinct arc point pairs."""
    from .fields import monotonicity

    best = math.inf
    pts = arc.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            rep = monotonicity(fd, pts[i], pts[j])
            if rep.delta is not None:
                best = min(best, rep.delta)
    return best
