"""Line fields along curves, the circle map, winding degrees, Maslov counting.

Slopes r represent the line R(r beta + psi_lambda) inside the characteristic
set, with r = inf encoding the cohorizontal direction.  The circle map
m(r) = (1 + i r)/(1 - i r), m(inf) = -1 turns slope curves into circle curves
whose degree is the Maslov index.  Slope convention: r = -y'/y - V(lambda),
equivalently r = -z'/z - V(lambda)/2 in damped coordinates (the damping factor
cancels); this is the identification consistent with the constant-curvature
magnetic oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError, RefinementError
from .flow import integrate_flow
from .jacobi import jacobi_solve


def slope_from_damped(z, dz, vlam):
    """Slope of the transported line from damped data: -z'/z - vlam/2; inf at z = 0."""
    z = float(z)
    dz = float(dz)
    if z == 0.0 and dz == 0.0:
        raise DomainError("the zero vector spans no line")
    if z == 0.0:
        return np.inf
    with np.errstate(over="ignore", divide="ignore"):
        return -dz / z - 0.5 * float(vlam)


def m_map(r):
    """The circle map (1 + i r)/(1 - i r), with the cohorizontal line at -1.

    Computed as a normalized ratio so |m| = 1 to machine precision; continuous
    across r = inf along the circle.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(r_arr.shape, dtype=complex)
    inf_mask = ~np.isfinite(r_arr)
    out[inf_mask] = -1.0
    rr = r_arr[~inf_mask]
    w = 1.0 + 1j * rr
    m = w / np.conj(w)
    m /= np.abs(m)
    out[~inf_mask] = m
    return out if np.ndim(r) else complex(out[0])


@dataclass
class LineField:
    """Slope samples of a line field along a sampled curve in SM.

    ``r_sampler``/``state_sampler`` (t -> value) make density refinement
    possible; without them an unmet density contract is an error.
    """

    t: np.ndarray
    states: np.ndarray | None
    r: np.ndarray
    r_sampler: object = None
    state_sampler: object = None
    closed_tol: float = 1e-9

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.states is not None:
            self.states = np.asarray(self.states, dtype=float)
        if self.t.ndim != 1 or np.any(np.diff(self.t) <= 0):
            raise DomainError("line field needs a strictly increasing time grid")
        if self.t.size != self.r.size:
            raise DomainError("time grid and slope samples disagree in length")

    def is_closed(self, metric=None):
        if self.states is None:
            return True  # caller vouches (abstract slope loop)
        if metric is not None:
            return float(metric.state_distance(self.states[0], self.states[-1])) < self.closed_tol
        return float(np.max(np.abs(self.states[0] - self.states[-1]))) < self.closed_tol


def _winding_sum(t, m_vals, r_sampler, max_depth=24):
    """Accumulated argument of m along the samples, refining dense enough."""
    total = 0.0
    stack = [(t[i], t[i + 1], m_vals[i], m_vals[i + 1], 0) for i in range(len(t) - 1)]
    while stack:
        a, b, ma, mb, depth = stack.pop()
        d = float(np.angle(mb * np.conj(ma)))
        if abs(d) < 0.5 * np.pi:
            total += d
            continue
        if r_sampler is None or depth >= max_depth:
            raise RefinementError(
                "consecutive circle-map values more than pi/2 apart and no sampler to refine"
            )
        mid = 0.5 * (a + b)
        mm = m_map(float(r_sampler(mid)))
        stack.append((a, mid, ma, mm, depth + 1))
        stack.append((mid, b, mm, mb, depth + 1))
    return total


def winding_degree(field: LineField, metric=None):
    """deg(m o field) along a closed curve: accumulated argument / 2 pi, rounded.

    The rounding residual must stay below 0.05; worse means the sampling was
    inadequate even after refinement.
    """
    if not field.is_closed(metric):
        raise PreconditionError("degree needs a closed curve (endpoints differ)")
    m_vals = m_map(field.r)
    total = _winding_sum(field.t, m_vals, field.r_sampler)
    deg = int(np.round(total / (2.0 * np.pi)))
    resid = abs(total / (2.0 * np.pi) - deg)
    if resid > 0.05:
        raise RefinementError(f"winding rounding residual {resid:.3f} exceeds 0.05")
    return deg


def curve_inverse(field: LineField):
    """The time-reversed curve with the same section (for deg(c^-1) = -deg(c))."""
    t = field.t
    return LineField(
        t=t.copy(),
        states=None if field.states is None else field.states[::-1].copy(),
        r=field.r[::-1].copy(),
        r_sampler=None if field.r_sampler is None else (lambda s: field.r_sampler(t[0] + t[-1] - s)),
    )


# -- counting along closed orbits ------------------------------------------------


@dataclass
class CountingReport:
    nu: int
    card_P: int
    ok: bool
    invariance_residual: float
    crossings: list


def _transported_section(trace, r0, rtol=1e-11, atol=1e-14):
    """Transport the line with slope r0 at t = 0 by the linearized dynamics.

    Returns callables y(t), y'(t) of a representative; the slope along the
    orbit is -y'/y - vlam.
    """
    if np.isfinite(r0):
        scale = 1.0 / np.hypot(r0, 1.0)
        x0, y0 = r0 * scale, scale
    else:
        x0, y0 = 1.0, 0.0
    dy0 = -x0 - float(trace.vlam(0.0)) * y0
    sol = jacobi_solve(trace, y0, dy0, t0=0.0, span=trace.span, rtol=rtol, atol=atol)
    return sol


def _circle_distance(r1, r2):
    return np.abs(m_map(r1) - m_map(r2))


def maslov_counting_check(metric, lam, orbit, section, n_grid=512, invariance_tol=1e-6,
                          rtol=1e-11, atol=1e-14):
    """Verify the counting identity nu = #(cohorizontal crossings) on a closed orbit.

    ``orbit`` is a Trajectory over one period [0, P] with closed endpoints;
    ``section`` maps (t, state) -> slope r and must be flow-invariant along the
    orbit (residual below ``invariance_tol`` in the circle metric), else the
    precondition is rejected.
    """
    P = orbit.span[1] - orbit.span[0]
    if orbit.span[0] != 0.0:
        raise DomainError("closed orbit should be parametrized over [0, P]")
    s0 = orbit.state(0.0)
    if float(metric.state_distance(s0, orbit.state(P))) > 1e-8:
        raise PreconditionError("curve is not a closed orbit (endpoint mismatch)")
    ts = np.linspace(0.0, P, n_grid + 1)
    r_sec = np.array([float(section(t, orbit.state(t))) for t in ts])

    r0 = float(r_sec[0])
    sol = _transported_section(orbit, r0, rtol, atol)

    def r_dyn(t):
        y = float(sol.value(t))
        dy = float(sol.derivative(t))
        if y == 0.0:
            return np.inf
        return -dy / y - float(orbit.vlam(t))

    resid = float(np.max(_circle_distance(r_sec, np.array([r_dyn(t) for t in ts]))))
    if resid > invariance_tol:
        raise PreconditionError(
            f"section is not flow-invariant along the orbit (residual {resid:.3e})"
        )

    # crossings of the cohorizontal direction: transversal zeros of y
    ys = sol.value(ts)
    crossings = []
    for i in range(len(ts) - 1):
        if ys[i] == 0.0 or ys[i] * ys[i + 1] < 0.0:
            lo, hi = ts[i], ts[i + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if float(sol.value(lo)) * float(sol.value(mid)) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            tc = 0.5 * (lo + hi)
            dy = float(sol.derivative(tc))
            yscale = float(np.max(np.abs(ys)))
            if abs(dy) < 1e-8 * yscale:
                raise DomainError(f"tangential cohorizontal crossing at t = {tc:.6g}")
            crossings.append(float(tc))
    card_P = len(crossings)

    lf = LineField(t=ts, states=np.stack([orbit.state(t) for t in ts]), r=r_sec,
                   r_sampler=lambda t: float(section(t, orbit.state(t))))
    nu = winding_degree(lf, metric)
    return CountingReport(nu=nu, card_P=card_P, ok=bool(nu == card_P and nu >= 0),
                          invariance_residual=resid, crossings=crossings)


# -- mirrored curves ---------------------------------------------------------------


def mirrored_curve(metric, t, states):
    """The mirrored curve (x(-t), -v(-t)) of a closed sampled curve over [0, P]."""
    t = np.asarray(t, dtype=float)
    states = np.asarray(states, dtype=float)
    rev = states[::-1].copy()
    flipped = np.stack([metric.flip_state(s) for s in rev])
    return t.copy(), flipped


def orbit_residual(metric, lam, t, states, rtol=1e-11, atol=1e-14):
    """Sup distance between the sampled curve and the orbit through its start."""
    traj = integrate_flow(metric, lam, metric.unpack(states[0]), (float(t[0]), float(t[-1])),
                          rtol=rtol, atol=atol)
    worst = 0.0
    for ti, s in zip(t, states):
        worst = max(worst, float(metric.state_distance(traj.state(ti), s)))
    return worst


@dataclass
class ClosedOrbitNearH:
    """A closed curve certified to be a flow orbit on marked sub-intervals.

    The defining property: every time where the section slope hits infinity
    must lie inside a marked interval, and on each marked interval the curve
    is a flow orbit to residual below 1e-8.
    """

    t: np.ndarray
    states: np.ndarray
    r: np.ndarray
    marked: list = field(default_factory=list)

    def infinity_crossings(self):
        """Times where 1/r changes sign through 0 (linear refinement on samples)."""
        u = np.where(np.isfinite(self.r), 1.0 / np.where(self.r == 0.0, np.inf, self.r), 0.0)
        u = np.where(self.r == 0.0, np.inf, u)  # r = 0 is far from the crossing
        out = []
        for i in range(len(self.t) - 1):
            u0, u1 = u[i], u[i + 1]
            if not (np.isfinite(u0) and np.isfinite(u1)):
                if u0 == 0.0:
                    out.append(float(self.t[i]))
                continue
            if u0 == 0.0:
                out.append(float(self.t[i]))
            elif u0 * u1 < 0.0 and (abs(self.r[i]) > 1.0 or abs(self.r[i + 1]) > 1.0):
                out.append(float(self.t[i] - u0 * (self.t[i + 1] - self.t[i]) / (u1 - u0)))
        return out

    def validate(self, metric, lam, orbit_tol=1e-8):
        """Check the marked-interval property; raises PreconditionError on failure."""
        if float(metric.state_distance(self.states[0], self.states[-1])) > 1e-9:
            raise PreconditionError("curve is not closed")
        for a, b in self.marked:
            sel = (self.t >= a - 1e-12) & (self.t <= b + 1e-12)
            if np.count_nonzero(sel) < 2:
                raise PreconditionError(f"marked interval [{a}, {b}] has too few samples")
            res = orbit_residual(metric, lam, self.t[sel], self.states[sel])
            if res > orbit_tol:
                raise PreconditionError(
                    f"marked interval [{a}, {b}] is not a flow orbit (residual {res:.3e})"
                )
        for tc in self.infinity_crossings():
            if not any(a - 1e-9 <= tc <= b + 1e-9 for a, b in self.marked):
                raise PreconditionError(
                    f"cohorizontal crossing at t = {tc:.6g} outside every marked interval"
                )
        return True
