"""The thermostat index form on piecewise-C^2 test functions.

I(f) = int (f'^2 - kappa~ f^2) dt, evaluated segment-by-segment with composite
Simpson quadrature whose subgrid doubles until two successive values agree to
1e-9.  Test functions are stored as sampled segments; segments built from
solutions or closed forms keep their generating callables so refinement
resamples exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConjugatePointError, DomainError, PreconditionError, ThermoflowError
from .jacobi import DampedSolution, damped_solve, scan_zeros

QUAD_TOL = 1e-9


class _Segment:
    """One C^2 piece on [a, b]: callables if available, else splines of samples."""

    def __init__(self, a, b, f=None, fd=None, t_samples=None, f_samples=None, fd_samples=None, n_default=64):
        self.a = float(a)
        self.b = float(b)
        if self.a >= self.b:
            raise DomainError("segment endpoints must be increasing")
        self._f = f
        self._fd = fd
        if f is None:
            if t_samples is None or f_samples is None:
                raise DomainError("segment needs callables or samples")
            t_samples = np.asarray(t_samples, dtype=float)
            f_samples = np.asarray(f_samples, dtype=float)
            t_samples, keep = np.unique(t_samples, return_index=True)
            f_samples = f_samples[keep]
            if fd_samples is not None:
                fd_samples = np.asarray(fd_samples, dtype=float)[keep]
            spline = CubicSpline(t_samples, f_samples)
            self._f = spline
            self._fd = spline.derivative() if fd_samples is None else CubicSpline(t_samples, fd_samples)
        self.t_samples = (
            np.asarray(t_samples, dtype=float)
            if t_samples is not None
            else np.linspace(self.a, self.b, n_default)
        )
        self.f_samples = np.asarray(self._f(self.t_samples), dtype=float)
        self.fd_samples = np.asarray(self._fd(self.t_samples), dtype=float)

    def value(self, t):
        return np.asarray(self._f(t), dtype=float)

    def derivative(self, t):
        return np.asarray(self._fd(t), dtype=float)

    def resample(self, n):
        ts = np.linspace(self.a, self.b, n)
        return ts, self.value(ts), self.derivative(ts)


class PiecewiseC2Fn:
    """A piecewise-C^2 function on [t_a, t_b]; derivative may jump at breakpoints.

    Continuity across breakpoints is enforced to 1e-12 unless ``allow_jumps``
    (needed only for the raw perturbation of the negative-index scan, whose
    published form is discontinuous).
    """

    def __init__(self, segments, allow_jumps=False, continuity_tol=1e-12):
        if not segments:
            raise DomainError("need at least one segment")
        segs = sorted(segments, key=lambda s: s.a)
        for s0, s1 in zip(segs, segs[1:]):
            if abs(s0.b - s1.a) > 1e-12:
                raise DomainError("segments must be contiguous")
            if not allow_jumps and abs(s0.value(s0.b) - s1.value(s1.a)) > continuity_tol:
                raise DomainError("function is discontinuous across a breakpoint")
        self.segments = segs
        self.allow_jumps = allow_jumps

    @property
    def domain(self):
        return (self.segments[0].a, self.segments[-1].b)

    @property
    def breakpoints(self):
        return [self.segments[0].a] + [s.b for s in self.segments]

    def _locate(self, t):
        edges = np.array([s.a for s in self.segments[1:]])
        return np.clip(np.searchsorted(edges, t, side="right"), 0, len(self.segments) - 1)

    def value(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._locate(t_arr)
        out = np.empty_like(t_arr)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = self.segments[i].value(t_arr[sel])
        return out if np.ndim(t) else float(out[0])

    def derivative(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._locate(t_arr)
        out = np.empty_like(t_arr)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = self.segments[i].derivative(t_arr[sel])
        return out if np.ndim(t) else float(out[0])

    def sample_arrays(self, n_per_segment=64):
        """(t, f, f') arrays over all segments (for export and inspection)."""
        ts, fs, fds = [], [], []
        for s in self.segments:
            t, f, fd = s.resample(n_per_segment)
            ts.append(t)
            fs.append(f)
            fds.append(fd)
        return np.concatenate(ts), np.concatenate(fs), np.concatenate(fds)

    def _segment_containing(self, t_mid):
        for s in self.segments:
            if s.a - 1e-14 <= t_mid <= s.b + 1e-14:
                return s
        raise DomainError(f"time {t_mid} outside the function's domain")

    def plus(self, other, coeff=1.0):
        """self + coeff * other on the merged breakpoint grid.

        Each merged interval lies inside exactly one segment of each operand,
        whose own callables are used; this keeps one-sided limits at shared
        breakpoints correct (a jump in the operand must not leak across).
        """
        if np.max(np.abs(np.array(self.domain) - np.array(other.domain))) > 1e-12:
            raise DomainError("domains must match")
        edges = np.unique(np.concatenate([self.breakpoints, other.breakpoints]))
        segs = []
        for a, b in zip(edges[:-1], edges[1:]):
            sa = self._segment_containing(0.5 * (a + b))
            sb = other._segment_containing(0.5 * (a + b))
            segs.append(
                _Segment(
                    a,
                    b,
                    f=lambda t, sa_=sa, sb_=sb: sa_.value(t) + coeff * sb_.value(t),
                    fd=lambda t, sa_=sa, sb_=sb: sa_.derivative(t) + coeff * sb_.derivative(t),
                )
            )
        return PiecewiseC2Fn(segs, allow_jumps=self.allow_jumps or other.allow_jumps)

    def scaled(self, c):
        segs = [
            _Segment(s.a, s.b, f=lambda t, s_=s: c * s_.value(t), fd=lambda t, s_=s: c * s_.derivative(t))
            for s in self.segments
        ]
        return PiecewiseC2Fn(segs, allow_jumps=self.allow_jumps)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_callable(cls, breakpoints, f, fd):
        """One function with known derivative, broken at the given points."""
        bps = list(map(float, breakpoints))
        segs = [_Segment(a, b, f=f, fd=fd) for a, b in zip(bps[:-1], bps[1:])]
        return cls(segs)

    @classmethod
    def from_samples(cls, t, f, fd=None, breakpoints=None):
        """Sampled data (CSV contract); cubic interpolation per segment."""
        t = np.asarray(t, dtype=float)
        f = np.asarray(f, dtype=float)
        bps = [t[0], t[-1]] if breakpoints is None else list(map(float, breakpoints))
        segs = []
        for a, b in zip(bps[:-1], bps[1:]):
            sel = (t >= a - 1e-14) & (t <= b + 1e-14)
            segs.append(
                _Segment(a, b, t_samples=t[sel], f_samples=f[sel], fd_samples=None if fd is None else fd[sel])
            )
        return cls(segs)

    @classmethod
    def tent(cls, T):
        """The tent 1 - |t|/T on [-T, T]."""
        T = float(T)
        return cls(
            [
                _Segment(-T, 0.0, f=lambda t: 1.0 + np.asarray(t) / T, fd=lambda t: np.full(np.shape(t), 1.0 / T)),
                _Segment(0.0, T, f=lambda t: 1.0 - np.asarray(t) / T, fd=lambda t: np.full(np.shape(t), -1.0 / T)),
            ]
        )

    def endpoint_values(self):
        a, b = self.domain
        return float(self.value(a)), float(self.value(b))


# -- quadrature -----------------------------------------------------------------


def _simpson(vals, h):
    n = len(vals) - 1
    return h / 3.0 * (vals[0] + vals[-1] + 4.0 * np.sum(vals[1:-1:2]) + 2.0 * np.sum(vals[2:-2:2]))


def _segment_index(trace, seg: _Segment, tol):
    n = 16
    prev = None
    for _ in range(14):
        ts = np.linspace(seg.a, seg.b, n + 1)
        fd = seg.derivative(ts)
        f = seg.value(ts)
        kap = np.asarray(trace.kappa_tilde(ts), dtype=float)
        vals = fd**2 - kap * f**2
        cur = _simpson(vals, (seg.b - seg.a) / n)
        if prev is not None and abs(cur - prev) < tol:
            return cur
        prev = cur
        n *= 2
    return prev


def index_form(trace, f: PiecewiseC2Fn, tol=QUAD_TOL):
    """I(f) = int over the trace span of (f'^2 - kappa~ f^2)."""
    a, b = f.domain
    ta, tb = trace.span
    if a < ta - 1e-9 or b > tb + 1e-9:
        raise DomainError(f"test function domain [{a}, {b}] exceeds trace span [{ta}, {tb}]")
    seg_tol = tol / max(len(f.segments), 1)
    return float(sum(_segment_index(trace, s, seg_tol) for s in f.segments))


def _assert_no_conjugate_points(trace, a, b):
    """Both-direction scan: the solutions vanishing at a and at b stay nonzero inside."""
    fwd = damped_solve(trace, 0.0, 1.0, t0=a, span=(a, b))
    if scan_zeros(fwd, a + 1e-9 * (b - a), b):
        raise PreconditionError(f"conjugate point along [{a}, {b}] (forward scan)")
    bwd = damped_solve(trace, 0.0, 1.0, t0=b, span=(a, b))
    if scan_zeros(bwd, a, b - 1e-9 * (b - a)):
        raise PreconditionError(f"conjugate point along [{a}, {b}] (backward scan)")


def solution_as_piecewise(sol: DampedSolution, a, b):
    return PiecewiseC2Fn([_Segment(a, b, f=sol.value, fd=sol.derivative)])


def minimizer_check(trace, z: DampedSolution, f: PiecewiseC2Fn, tol=QUAD_TOL):
    """Verify I(z) <= I(f) for admissible competitors (minimization property).

    Preconditions (violations raise, never silently fixed): matching endpoint
    data z(a) = f(a) = 0 and z(b) = f(b) to 1e-10, and no conjugate points on
    [a, b] in either direction.
    """
    a, b = f.domain
    za, zb = float(z.value(a)), float(z.value(b))
    fa, fb = f.endpoint_values()
    if abs(za) > 1e-10 or abs(fa) > 1e-10:
        raise PreconditionError(f"left endpoint data not zero: z({a}) = {za}, f({a}) = {fa}")
    if abs(zb - fb) > 1e-10:
        raise PreconditionError(f"right endpoint mismatch: z({b}) = {zb}, f({b}) = {fb}")
    _assert_no_conjugate_points(trace, a, b)
    I_z = index_form(trace, solution_as_piecewise(z, a, b), tol)
    I_f = index_form(trace, f, tol)
    return I_z, I_f, bool(I_z <= I_f + 1e-9)


@dataclass
class TentReport:
    """The glued two-sided boundary solution and its index value."""

    f: PiecewiseC2Fn
    index_value: float
    index_identity: float
    identity_defect: float
    dz_minus: float
    dz_plus: float


def tent_fT(trace, T, tol=QUAD_TOL):
    """Glue the boundary solutions z_{-T}, z_T at 0 and evaluate the index form.

    The boundary-value identity I(f_T) = z'_{-T}(0) - z'_T(0) is cross-checked
    against direct quadrature.
    """
    T = float(T)
    ta, tb = trace.span
    if ta > -T + 1e-12 or tb < T - 1e-12:
        raise DomainError("trace span does not cover [-T, T]")
    _assert_no_conjugate_points(trace, -T, T)
    u1 = damped_solve(trace, 1.0, 0.0, t0=0.0, span=(-T, T))
    u2 = damped_solve(trace, 0.0, 1.0, t0=0.0, span=(-T, T))
    den_f, den_b = float(u2.value(T)), float(u2.value(-T))
    scale = max(float(np.max(np.abs(u2.value(np.linspace(-T, T, 65))))), 1e-30)
    if abs(den_f) < 1e-10 * scale or abs(den_b) < 1e-10 * scale:
        raise ConjugatePointError("boundary solve is singular (conjugate point at a horizon)", horizon=T)
    c_f = -float(u1.value(T)) / den_f   # z_T  = u1 + c_f u2, z_T'(0)  = c_f
    c_b = -float(u1.value(-T)) / den_b  # z_-T = u1 + c_b u2, z_-T'(0) = c_b
    left = _Segment(
        -T, 0.0,
        f=lambda t: u1.value(t) + c_b * u2.value(t),
        fd=lambda t: u1.derivative(t) + c_b * u2.derivative(t),
    )
    right = _Segment(
        0.0, T,
        f=lambda t: u1.value(t) + c_f * u2.value(t),
        fd=lambda t: u1.derivative(t) + c_f * u2.derivative(t),
    )
    f = PiecewiseC2Fn([left, right])
    identity = c_b - c_f
    quad = index_form(trace, f, tol)
    defect = abs(quad - identity)
    if defect > 1e-6:
        raise ThermoflowError(f"tent index identity defect {defect:.3e} is implausibly large")
    return TentReport(f=f, index_value=quad, index_identity=identity,
                      identity_defect=defect, dz_minus=c_b, dz_plus=c_f)


@dataclass
class WitnessReport:
    """Outcome of the negative-index scan after a detected conjugate pair."""

    found: bool
    f: PiecewiseC2Fn | None
    eps: float | None
    sign: int | None
    index_value: float | None
    mode: str | None          # "paper" (f +- eps f'(t-)) or "corner" (corner-smoothing bump)
    corner: str | None
    index_extension: float    # index of the extension-by-zero itself (should be ~0)
    trials: int


def export_witness(path, report: "WitnessReport", n_per_segment=64):
    """Write the witness as CSV rows (t, f, fdot) plus a summary line."""
    if not report.found:
        raise DomainError("cannot export a failed witness scan")
    t, f, fd = report.f.sample_arrays(n_per_segment)
    lines = ["t,f,fdot"]
    lines += [f"{ti:.17g},{fi:.17g},{di:.17g}" for ti, fi, di in zip(t, f, fd)]
    lines.append(
        f"# eps={report.eps:.17g},sign={report.sign},I={report.index_value:.17g},mode={report.mode}"
    )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _extension_by_zero(zsol: DampedSolution, a, b, span):
    segs = []
    zero_f = lambda t: np.zeros(np.shape(t))  # noqa: E731
    if span[0] < a - 1e-14:
        segs.append(_Segment(span[0], a, f=zero_f, fd=zero_f))
    segs.append(_Segment(a, b, f=zsol.value, fd=zsol.derivative))
    if b < span[1] - 1e-14:
        segs.append(_Segment(b, span[1], f=zero_f, fd=zero_f))
    return PiecewiseC2Fn(segs)


def negative_index_witness(trace, a, b, tol=QUAD_TOL, max_j=40, threshold=-1e-10):
    """Search for a test function with strictly negative index on [a, b] zeros.

    First scans the published construction f +- eps q with q = f'(t-); on
    constant-curvature systems that family has exactly zero index at every
    order (the first-order coefficient int kappa~ z z' and the quadratic term
    both vanish when |z'| is equal at consecutive zeros), so a second scan
    perturbs by a C^1 corner bump at one zero, for which the cross term is
    +- 2 eps z'(b) eta(b) != 0.
    """
    a, b = float(a), float(b)
    span = trace.span
    if not (span[0] <= a < b <= span[1]):
        raise DomainError("zeros must lie inside the trace span")
    zsol = damped_solve(trace, 0.0, 1.0, t0=a, span=(min(a, span[0]), max(b, span[1])))
    zb = float(zsol.value(b))
    zmax = float(np.max(np.abs(zsol.value(np.linspace(a, b, 129)))))
    if abs(zb) > 1e-6 * zmax:
        raise PreconditionError(f"no solution vanishing at both {a} and {b}: z(b) = {zb:.3e}")
    f = _extension_by_zero(zsol, a, b, span)
    I_f = index_form(trace, f, tol)

    trials = 0
    # paper construction: q(t) = f'(t-), supported on (a, b]
    zero_f = lambda t: np.zeros(np.shape(t))  # noqa: E731
    q_segs = []
    if span[0] < a - 1e-14:
        q_segs.append(_Segment(span[0], a, f=zero_f, fd=zero_f))
    dz2 = lambda t: -np.asarray(trace.kappa_tilde(t)) * zsol.value(t)  # noqa: E731  (z'' = -kappa z)
    q_segs.append(_Segment(a, b, f=zsol.derivative, fd=dz2))
    if b < span[1] - 1e-14:
        q_segs.append(_Segment(b, span[1], f=zero_f, fd=zero_f))
    q = PiecewiseC2Fn(q_segs, allow_jumps=True)
    for j in range(max_j + 1):
        eps = 2.0**-j
        for sign in (1, -1):
            trials += 1
            g = f.plus(q, sign * eps)
            I_g = index_form(trace, g, tol)
            if I_g < threshold:
                return WitnessReport(True, g, eps, sign, I_g, "paper", None, I_f, trials)

    # corner-smoothing fallback: eta(t) = (1 - ((t-c)/w)^2)^2 near one zero
    for corner, c in (("b", b), ("a", a)):
        w = min(0.5, (b - a) / 4.0, c - span[0], span[1] - c)
        if w <= 1e-9:
            continue
        lo, hi = c - w, c + w

        def eta(t, c_=c, w_=w, lo_=lo, hi_=hi):
            t = np.asarray(t, dtype=float)
            s = np.clip((t - c_) / w_, -1.0, 1.0)
            out = (1.0 - s**2) ** 2
            return np.where((t >= lo_) & (t <= hi_), out, 0.0)

        def deta(t, c_=c, w_=w, lo_=lo, hi_=hi):
            t = np.asarray(t, dtype=float)
            s = np.clip((t - c_) / w_, -1.0, 1.0)
            out = -4.0 * s * (1.0 - s**2) / w_
            return np.where((t >= lo_) & (t <= hi_), out, 0.0)

        edges = sorted({span[0], span[1], a, b, lo, hi})
        eta_fn = PiecewiseC2Fn([_Segment(x0, x1, f=eta, fd=deta) for x0, x1 in zip(edges[:-1], edges[1:])])
        for j in range(max_j + 1):
            eps = 2.0**-j
            for sign in (1, -1):
                trials += 1
                g = f.plus(eta_fn, sign * eps)
                I_g = index_form(trace, g, tol)
                if I_g < threshold:
                    return WitnessReport(True, g, eps, sign, I_g, "corner", corner, I_f, trials)

    return WitnessReport(False, None, None, None, None, None, None, I_f, trials)
