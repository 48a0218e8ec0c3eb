"""Jacobi and damped Jacobi equations along orbits; conjugate points; exp map.

The damped equation z'' + kappa~ z = 0 has no first-order term, so two-point
problems are well conditioned; the undamped field is recovered via y = m z.
Conjugate times are zeros of the solution with (z, z')(0) = (0, 1), refined by
bisection on the dense output followed by one Newton polish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationError
from .flow import integrate_flow
from .geometry import ChartPoint

JAC_RTOL = 1e-11
JAC_ATOL = 1e-14


def damping_factor(trace, t):
    """m(t) = exp(-1/2 int_0^t V(lambda)) along the trace; m(0) = 1."""
    return trace.m(t)


class _SecondOrderDense:
    """Dense (z, z') of a scalar second-order ODE integrated from an anchor."""

    def __init__(self, rhs, t0, span, y0, rtol, atol):
        self.t0 = float(t0)
        self.span = (float(span[0]), float(span[1]))
        if not self.span[0] <= self.t0 <= self.span[1]:
            raise DomainError("anchor time must lie inside the span")
        self._sols = {}
        ts = []
        if self.span[1] > self.t0:
            self._sols["fwd"] = self._run(rhs, self.t0, self.span[1], y0, rtol, atol)
            ts.append(self._sols["fwd"].t)
        if self.span[0] < self.t0:
            self._sols["bwd"] = self._run(rhs, self.t0, self.span[0], y0, rtol, atol)
            ts.append(self._sols["bwd"].t)
        if not ts:
            raise DomainError("empty integration span")
        self.t_grid = np.unique(np.concatenate(ts))

    @staticmethod
    def _run(rhs, t0, t1, y0, rtol, atol):
        sol = solve_ivp(rhs, (t0, t1), y0, method="RK45", rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise IntegrationError(
                f"jacobi integration stalled at t = {sol.t[-1]:.6g}: {sol.message}",
                last_time=float(sol.t[-1]),
            )
        return sol

    def eval(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t_arr.size, 2))
        fwd = self._sols.get("fwd")
        bwd = self._sols.get("bwd")
        use_fwd = (t_arr >= self.t0) if (fwd is not None and bwd is not None) else (
            np.ones(t_arr.shape, dtype=bool) if fwd is not None else np.zeros(t_arr.shape, dtype=bool)
        )
        if np.any(use_fwd):
            out[use_fwd] = np.asarray(fwd.sol(t_arr[use_fwd])).T.reshape(-1, 2)
        if np.any(~use_fwd):
            out[~use_fwd] = np.asarray(bwd.sol(t_arr[~use_fwd])).T.reshape(-1, 2)
        return out if np.ndim(t) else out[0]


@dataclass
class DampedSolution:
    """Solution samples of z'' + kappa~ z = 0 along a trace.

    ``jacobi_solve`` reuses the container for the undamped field equation and
    tags it accordingly, which only affects the residual re-evaluation.
    """

    trace: object
    t0: float
    z0: float
    dz0: float
    t: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    dz: np.ndarray = field(repr=False)
    _dense: _SecondOrderDense = field(repr=False, default=None)
    interpolation_order: int = 4
    equation: str = "damped"

    def value(self, t):
        return self._dense.eval(t)[..., 0]

    def derivative(self, t):
        return self._dense.eval(t)[..., 1]

    def to_undamped(self, t):
        """(y, y') = (m z, m' z + m z') at times t."""
        zz = self._dense.eval(t)
        m = self.trace.m(t)
        vlam = self.trace.vlam(t)
        y = m * zz[..., 0]
        dy = m * (zz[..., 1] - 0.5 * vlam * zz[..., 0])
        return y, dy

    def residual(self, n=64, h=1e-4):
        """Max equation defect at span midpoints via dense re-evaluation."""
        a, b = self._dense.span
        ts = np.linspace(a, b, n + 1)
        mid = 0.5 * (ts[:-1] + ts[1:])
        worst = 0.0
        for t in mid:
            if t - h < a or t + h > b:
                continue
            zpp = (self.value(t + h) - 2.0 * self.value(t) + self.value(t - h)) / h**2
            if self.equation == "damped":
                defect = zpp + self.trace.kappa_tilde(t) * self.value(t)
            else:
                defect = zpp + self.trace.vlam(t) * self.derivative(t) + self.trace.big_k(t) * self.value(t)
            worst = max(worst, abs(defect))
        return worst


def damped_solve(trace, z0, dz0, t0=0.0, span=None, rtol=JAC_RTOL, atol=JAC_ATOL):
    """Integrate z'' + kappa~(t) z = 0 along the trace from (z, z')(t0)."""
    span = trace.span if span is None else (float(span[0]), float(span[1]))

    def rhs(t, y):
        return [y[1], -trace.kappa_tilde(t) * y[0]]

    dense = _SecondOrderDense(rhs, t0, span, [float(z0), float(dz0)], rtol, atol)
    vals = dense.eval(dense.t_grid)
    return DampedSolution(
        trace=trace, t0=float(t0), z0=float(z0), dz0=float(dz0),
        t=dense.t_grid, z=vals[:, 0], dz=vals[:, 1], _dense=dense,
    )


def jacobi_solve(trace, y0, dy0, t0=0.0, span=None, rtol=JAC_RTOL, atol=JAC_ATOL):
    """Integrate the undamped field equation y'' + V(lambda) y' + KK y = 0."""
    span = trace.span if span is None else (float(span[0]), float(span[1]))

    def rhs(t, y):
        return [y[1], -trace.vlam(t) * y[1] - trace.big_k(t) * y[0]]

    dense = _SecondOrderDense(rhs, t0, span, [float(y0), float(dy0)], rtol, atol)
    vals = dense.eval(dense.t_grid)
    return DampedSolution(
        trace=trace, t0=float(t0), z0=float(y0), dz0=float(dy0),
        t=dense.t_grid, z=vals[:, 0], dz=vals[:, 1], _dense=dense,
        equation="undamped",
    )


def wronskian_drift(sol1, sol2, n=64):
    """Relative drift of z1 z2' - z2 z1' over the common span."""
    a = max(sol1.trace.span[0], sol2.trace.span[0])
    b = min(sol1.trace.span[1], sol2.trace.span[1])
    ts = np.linspace(a, b, n)
    w = sol1.value(ts) * sol2.derivative(ts) - sol2.value(ts) * sol1.derivative(ts)
    scale = max(np.max(np.abs(w)), 1e-30)
    return float((np.max(w) - np.min(w)) / scale)


@dataclass
class ConjugateReport:
    """First conjugate time and all zero crossings found on the scan window."""

    first_conjugate_time: float | None
    zeros: list
    refine_tol: float = 1e-10
    partial: bool = False
    scanned_until: float = 0.0


def _refine_zero(fun, dfun, lo, hi, tol=1e-10):
    """Bisection on a sign change, then one Newton polish with the derivative."""
    flo = fun(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if hi - lo < tol:
            break
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    d = dfun(t)
    if d != 0.0:
        t_new = t - fun(t) / d
        if lo - tol <= t_new <= hi + tol:
            t = t_new
    return t


def scan_zeros(sol: DampedSolution, t_start, t_end, refine_tol=1e-10, min_points=800):
    """Sign-change zeros of a damped solution on [t_start, t_end]."""
    a, b = float(t_start), float(t_end)
    kap_probe = np.abs(sol.trace.kappa_tilde(np.linspace(a, b, 65)))
    freq = np.sqrt(max(np.max(kap_probe), 0.0))
    n = int(max(min_points, 40 * freq * (b - a) / (2 * np.pi) * 8))
    grid = np.unique(np.concatenate([np.linspace(a, b, n + 1), sol.t[(sol.t >= a) & (sol.t <= b)]]))
    vals = sol.value(grid)
    zeros = []
    for i in range(len(grid) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0.0:
            if grid[i] > a + 1e-12:
                zeros.append(float(grid[i]))
            continue
        if v0 * v1 < 0.0:
            zeros.append(float(_refine_zero(sol.value, sol.derivative, grid[i], grid[i + 1], refine_tol)))
    return zeros


def conjugate_scan_trace(trace, T=None, t0=0.0, refine_tol=1e-10, rtol=JAC_RTOL, atol=JAC_ATOL):
    """Scan for conjugate times along an existing trace from anchor t0."""
    t_end = trace.span[1] if T is None else t0 + float(T)
    try:
        sol = damped_solve(trace, 0.0, 1.0, t0=t0, span=(t0, t_end), rtol=rtol, atol=atol)
    except IntegrationError as exc:
        partial_end = exc.last_time if exc.last_time is not None else t0
        return ConjugateReport(None, [], refine_tol, partial=True, scanned_until=partial_end)
    eps = max(1e-9, 1e-9 * abs(t_end - t0))
    zeros = scan_zeros(sol, t0 + eps, t_end, refine_tol)
    first = zeros[0] if zeros else None
    return ConjugateReport(first, zeros, refine_tol, partial=False, scanned_until=t_end)


def conjugate_scan(metric, lam, v, T, refine_tol=1e-10, flow_rtol=1e-10, flow_atol=1e-13,
                   rtol=JAC_RTOL, atol=JAC_ATOL):
    """First conjugate time along the orbit of v on [0, T], if any."""
    if T <= 0:
        raise DomainError("scan horizon T must be positive")
    try:
        traj = integrate_flow(metric, lam, v, (0.0, float(T)), rtol=flow_rtol, atol=flow_atol)
    except IntegrationError as exc:
        return ConjugateReport(None, [], refine_tol, partial=True,
                               scanned_until=exc.last_time or 0.0)
    return conjugate_scan_trace(traj, T=float(T), t0=0.0, refine_tol=refine_tol, rtol=rtol, atol=atol)


# -- exponential map -------------------------------------------------------------


def _direction_state(metric, x: ChartPoint, w):
    """Initial unit-tangent state for exp: base x, direction w/|w|_g; returns (state, t)."""
    w = np.asarray(w, dtype=float)
    if metric.state_dim == 3:
        wnorm_flat = np.hypot(w[0], w[1])
        if wnorm_flat == 0.0:
            raise DomainError("exp map needs a nonzero tangent vector")
        eu = float(metric.conformal_factor(x.array()))
        t = eu * wnorm_flat
        theta = float(np.arctan2(w[1], w[0]))
        return np.array([x.q1, x.q2, theta]), t
    p = x.array()
    t = float(np.linalg.norm(w))
    if t == 0.0:
        raise DomainError("exp map needs a nonzero tangent vector")
    return np.concatenate([p, w / t]), t


def exp_map(metric, lam, x: ChartPoint, w, rtol=1e-10, atol=1e-13):
    """exp_x(w) = footpoint of the flow at time |w|_g starting in direction w."""
    state0, t = _direction_state(metric, x, w)
    traj = integrate_flow(metric, lam, metric.unpack(state0), (0.0, t), rtol=rtol, atol=atol)
    s = traj.state(t)
    if metric.state_dim == 3:
        return metric.chart_point(s[0], s[1])
    return metric.chart_point(s[:3])


class _ExpScanner:
    """Dense polar-stencil Jacobian of exp along one direction.

    Three trajectories (center direction and two angle-perturbed ones) give
    the determinant at any radius from dense output, with central differences
    in the radius along the center trajectory.
    """

    def __init__(self, metric, lam, x: ChartPoint, theta_or_dir, t_max, h=1e-5, rtol=1e-10, atol=1e-13):
        if not 0.0 < h <= 1e-3:
            raise DomainError("exp-map finite-difference step must lie in (0, 1e-3]")
        self.metric = metric
        self.h = h
        self.t_max = float(t_max)
        k_scale = float(np.sqrt(max(abs(float(np.max(np.atleast_1d(metric.gaussian_curvature(x.array()))))), 1.0)))
        if h * k_scale > 1e-3:
            import warnings

            warnings.warn(
                "exp-map finite-difference step is large relative to the curvature "
                "scale; the determinant bracket may lose accuracy",
                stacklevel=3,
            )
        if metric.state_dim == 3:
            th = float(theta_or_dir)
            starts = [np.array([x.q1, x.q2, a]) for a in (th, th - h, th + h)]
        else:
            p = x.array()
            d = np.asarray(theta_or_dir, dtype=float)
            d = d / np.linalg.norm(d)
            jd = np.cross(p / metric.R, d)
            dirs = [d, d * np.cos(h) - jd * np.sin(h), d * np.cos(h) + jd * np.sin(h)]
            starts = [np.concatenate([p, di]) for di in dirs]
        self.trajs = [
            integrate_flow(metric, lam, metric.unpack(s), (0.0, self.t_max + 2 * h), rtol=rtol, atol=atol)
            for s in starts
        ]

    def _base(self, traj, t):
        s = traj._aug_state(t)[:-1]
        return s[:2] if self.metric.state_dim == 3 else s[:3]

    def det(self, t):
        h = self.h
        c_mid = self._base(self.trajs[0], t)
        col_r = (self._base(self.trajs[0], t + h) - self._base(self.trajs[0], t - h)) / (2 * h)
        col_a = (self._base(self.trajs[2], t) - self._base(self.trajs[1], t)) / (2 * h)
        if self.metric.state_dim == 3:
            return float(col_r[0] * col_a[1] - col_r[1] * col_a[0])
        n = c_mid / np.linalg.norm(c_mid)
        col_r = col_r - np.dot(col_r, n) * n
        col_a = col_a - np.dot(col_a, n) * n
        e1 = col_r / max(np.linalg.norm(col_r), 1e-300)
        e2 = np.cross(n, e1)
        return float(np.dot(col_r, e1) * np.dot(col_a, e2) - np.dot(col_r, e2) * np.dot(col_a, e1))

    def first_sign_change(self, t_min=1e-3, n_grid=400):
        ts = np.linspace(max(t_min, self.h * 10), self.t_max, n_grid)
        dets = np.array([self.det(t) for t in ts])
        for i in range(len(ts) - 1):
            if dets[i] * dets[i + 1] < 0.0:
                lo, hi = ts[i], ts[i + 1]
                flo = dets[i]
                while hi - lo > 1e-6:
                    mid = 0.5 * (lo + hi)
                    fm = self.det(mid)
                    if (fm < 0) == (flo < 0):
                        lo, flo = mid, fm
                    else:
                        hi = mid
                return 0.5 * (lo + hi)
        return None


def exp_jacobian_det(metric, lam, x: ChartPoint, w, h=1e-5, rtol=1e-10, atol=1e-13):
    """Polar-stencil determinant of d(exp_x) at w (sign is what matters)."""
    state0, t = _direction_state(metric, x, w)
    if metric.state_dim == 3:
        direction = state0[2]
    else:
        direction = state0[3:]
    scanner = _ExpScanner(metric, lam, x, direction, t, h=h, rtol=rtol, atol=atol)
    return scanner.det(t)


def exp_conjugate_bracket(metric, lam, x: ChartPoint, direction, t_max, h=1e-5,
                          rtol=1e-10, atol=1e-13, n_grid=400):
    """First sign change of the exp Jacobian determinant along t * direction.

    Returns the bracketing time (None if no sign change on [1e-3, t_max]).
    Must agree with conjugate_scan within the FD-limited 1e-4 tolerance.
    """
    scanner = _ExpScanner(metric, lam, x, direction, t_max, h=h, rtol=rtol, atol=atol)
    return scanner.first_sign_change(n_grid=n_grid)
