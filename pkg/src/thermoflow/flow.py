"""The thermostat flow: generator F = X + lambda V, curvatures, trajectories.

A trajectory integrates the chart ODE for F together with the running integral
of V(lambda) along the orbit, so the damping factor m(t) is available from the
same dense output.  The coefficient trace (V lambda, the curvature KK entering
the Jacobi equation, its damped version kappa~, and m) is sampled on the
solver grid and re-evaluable anywhere via the dense interpolant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, IntegrationError
from .generators import GeneratorField, LambdaJet, flip
from .geometry import UnitTangent

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


def eval_lambda(metric, lam: GeneratorField, v):
    """lambda at v plus the derivatives (V, H, FV, V^2) lambda.

    Returns a dict with keys  value, V, H, FV, V2.  V-derivatives come
    algebraically from the fiber modes; H and FV go through the chart frame
    with F = X + lambda V.
    """
    state = metric.pack(v) if isinstance(v, UnitTangent) else np.asarray(v, dtype=float)
    jet = lam.jet(metric, state)
    X, H, V = metric.frame(state)
    return {
        "value": jet.f,
        "V": jet.dth,
        "H": _h_lambda(jet, H),
        "FV": _fv_lambda(jet, X),
        "V2": jet.dthth,
    }


def _h_lambda(jet: LambdaJet, H):
    return H[..., 0] * jet.d1 + H[..., 1] * jet.d2 + H[..., 2] * jet.dth


def _fv_lambda(jet: LambdaJet, X):
    # FV lambda = X(V lambda) + lambda V^2 lambda
    xv = X[..., 0] * jet.dth1 + X[..., 1] * jet.dth2 + X[..., 2] * jet.dthth
    return xv + jet.f * jet.dthth


def curvature_pair(metric, lam, state):
    """(KK, kappa~) at a state or batch of states."""
    state = np.asarray(state, dtype=float)
    jet = lam.jet(metric, state)
    X, H, _ = metric.frame(state)
    if metric.state_dim == 3:
        kg = metric.gaussian_curvature(state[..., :2])
    else:
        kg = metric.gaussian_curvature(state[..., :3])
    fv = _fv_lambda(jet, X)
    kk = kg - _h_lambda(jet, H) + jet.f**2 + fv
    kt = kk - 0.5 * fv - 0.25 * jet.dth**2
    return kk, kt


def thermostat_curvature(metric, lam, v):
    """KK = K_g - H lambda + lambda^2 + FV lambda at a unit tangent vector."""
    state = metric.pack(v) if isinstance(v, UnitTangent) else np.asarray(v, dtype=float)
    return curvature_pair(metric, lam, state)[0]


def damped_curvature(metric, lam, v):
    """kappa~ = KK - FV lambda / 2 - (V lambda)^2 / 4."""
    state = metric.pack(v) if isinstance(v, UnitTangent) else np.asarray(v, dtype=float)
    return curvature_pair(metric, lam, state)[1]


# -- trajectories --------------------------------------------------------------


@dataclass
class CoefficientTrace:
    """Samples of the Jacobi-equation coefficients along an orbit."""

    t: np.ndarray
    states: np.ndarray
    vlam: np.ndarray
    kk: np.ndarray
    kt: np.ndarray
    m: np.ndarray

    def verify_identity(self):
        """Max defect of kt = kk - FV/2 - vlam^2/4 under re-evaluation (filled by owner)."""
        return float(np.max(np.abs(self.kt - (self.kk - self._fv / 2.0 - self.vlam**2 / 4.0))))

    _fv: np.ndarray = field(default=None, repr=False)


class Trajectory:
    """Flow solution with dense output and the coefficient trace along it.

    The augmented ODE state is (chart state, integral of V lambda); the
    damping factor is m(t) = exp(-I(t)/2).
    """

    def __init__(self, metric, lam, v0, span, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, method="rk45", max_step=np.inf):
        self.metric = metric
        self.lam = lam
        self.initial = v0 if isinstance(v0, UnitTangent) else metric.unpack(np.asarray(v0, float))
        self.span = (float(span[0]), float(span[1]))
        if self.span[0] >= self.span[1]:
            raise DomainError("span must be increasing")
        self.rtol = rtol
        self.atol = atol
        s0 = metric.pack(self.initial)
        y0 = np.concatenate([s0, [0.0]])
        t_anchor = 0.0 if self.span[0] <= 0.0 <= self.span[1] else self.span[0]
        self._anchor = t_anchor
        self._sols = {}
        self.stats = {"rtol": rtol, "atol": atol, "method": method, "nfev": 0, "n_steps": 0, "n_rejected_est": 0}
        if method == "rk45":
            if self.span[1] > t_anchor:
                self._sols["fwd"] = self._integrate(y0, t_anchor, self.span[1], max_step)
            if self.span[0] < t_anchor:
                self._sols["bwd"] = self._integrate(y0, t_anchor, self.span[0], max_step)
        elif method == "rk4":
            n = max(64, int(np.ceil(64 * (self.span[1] - self.span[0]))))
            if self.span[1] > t_anchor:
                self._sols["fwd"] = self._integrate_rk4(y0, t_anchor, self.span[1], n)
            if self.span[0] < t_anchor:
                self._sols["bwd"] = self._integrate_rk4(y0, t_anchor, self.span[0], n)
        else:
            raise DomainError(f"unknown integrator method {method!r}")
        self.trace = self._build_trace()

    # The chart ODE: d(state)/dt = X + lambda V, plus the V(lambda) integral.
    def _rhs(self, t, y):
        state = y[:-1]
        X, _, V = self.metric.frame(state)
        val, vth = self.lam.value_and_vtheta(self.metric, state)
        return np.concatenate([X + val * V, [vth]])

    def _integrate(self, y0, t0, t1, max_step):
        sol = solve_ivp(
            self._rhs,
            (t0, t1),
            y0,
            method="RK45",
            rtol=self.rtol,
            atol=self.atol,
            dense_output=True,
            max_step=max_step,
        )
        if not sol.success:
            raise IntegrationError(
                f"flow integration stalled at t = {sol.t[-1]:.6g}: {sol.message}",
                last_time=float(sol.t[-1]),
            )
        self.stats["nfev"] += int(sol.nfev)
        steps = len(sol.t) - 1
        self.stats["n_steps"] += steps
        self.stats["n_rejected_est"] += max(0, round((sol.nfev - 1 - 6 * steps) / 6))
        return sol

    def _integrate_rk4(self, y0, t0, t1, n):
        """Fixed-step classical RK4 with cubic-Hermite dense output."""
        ts = np.linspace(t0, t1, n + 1)
        h = (t1 - t0) / n
        ys = np.empty((n + 1, y0.size))
        ds = np.empty_like(ys)
        y = y0.copy()
        ys[0] = y
        ds[0] = self._rhs(ts[0], y)
        for i in range(n):
            t = ts[i]
            k1 = self._rhs(t, y)
            k2 = self._rhs(t + h / 2, y + h / 2 * k1)
            k3 = self._rhs(t + h / 2, y + h / 2 * k2)
            k4 = self._rhs(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            ys[i + 1] = y
            ds[i + 1] = self._rhs(ts[i + 1], y)
        self.stats["nfev"] += 4 * n
        self.stats["n_steps"] += n
        order = np.argsort(ts)
        spline = CubicHermiteSpline(ts[order], ys[order], ds[order])

        class _Sol:
            pass

        sol = _Sol()
        sol.t = ts
        sol.sol = spline
        return sol

    def _aug_state(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t_arr.size, self.metric.state_dim + 1))
        fwd = self._sols.get("fwd")
        bwd = self._sols.get("bwd")
        use_fwd = (t_arr >= self._anchor) if (fwd is not None and bwd is not None) else (
            np.ones(t_arr.shape, dtype=bool) if fwd is not None else np.zeros(t_arr.shape, dtype=bool)
        )
        if np.any(use_fwd):
            out[use_fwd] = np.asarray(fwd.sol(t_arr[use_fwd])).T.reshape(-1, out.shape[1])
        if np.any(~use_fwd):
            out[~use_fwd] = np.asarray(bwd.sol(t_arr[~use_fwd])).T.reshape(-1, out.shape[1])
        return out if np.ndim(t) else out[0]

    def state(self, t):
        """Dense chart state at time t (sphere states re-projected)."""
        aug = self._aug_state(t)
        s = aug[..., :-1]
        if self.metric.state_dim == 6:
            if s.ndim == 1:
                return self.metric.normalize_state(s)
            return np.stack([self.metric.normalize_state(si) for si in s])
        return s

    def point(self, t):
        return self.metric.unpack(self.state(t))

    def m(self, t):
        """Damping factor m(t) = exp(-1/2 int_0^t V(lambda))."""
        aug = self._aug_state(t)
        return np.exp(-0.5 * aug[..., -1])

    def vlam(self, t):
        s = self.state(t)
        return self.lam.value_and_vtheta(self.metric, s)[1]

    def kappa_tilde(self, t):
        return curvature_pair(self.metric, self.lam, self.state(t))[1]

    def big_k(self, t):
        return curvature_pair(self.metric, self.lam, self.state(t))[0]

    @property
    def geometric(self):
        return True

    def _build_trace(self):
        ts = [s.t for s in self._sols.values()]
        t = np.unique(np.concatenate(ts))
        states = self.state(t)
        jet = self.lam.jet(self.metric, states)
        X, H, _ = self.metric.frame(states)
        if self.metric.state_dim == 3:
            kg = self.metric.gaussian_curvature(states[..., :2])
        else:
            kg = self.metric.gaussian_curvature(states[..., :3])
        fv = _fv_lambda(jet, X)
        kk = kg - _h_lambda(jet, H) + jet.f**2 + fv
        kt = kk - 0.5 * fv - 0.25 * jet.dth**2
        tr = CoefficientTrace(t=t, states=states, vlam=jet.dth, kk=kk, kt=kt, m=self.m(t))
        tr._fv = fv
        return tr

    def trace_identity_defect(self):
        """Max defect of kt = kk - FV/2 - vlam^2/4 under fresh re-evaluation."""
        tr = self.trace
        jet = self.lam.jet(self.metric, tr.states)
        X, _, _ = self.metric.frame(tr.states)
        fv = _fv_lambda(jet, X)
        return float(np.max(np.abs(tr.kt - (tr.kk - 0.5 * fv - 0.25 * jet.dth**2))))

    def unit_speed_residual(self):
        """Max deviation of the base speed from 1 on the trace grid (torus only)."""
        if self.metric.state_dim != 3:
            rhs = np.stack([self._rhs(ti, np.concatenate([s, [0.0]]))[:-1] for ti, s in zip(self.trace.t, self.trace.states)])
            speeds = np.array([self.metric.base_speed(s, d) for s, d in zip(self.trace.states, rhs)])
            return float(np.max(np.abs(speeds - 1.0)))
        rhs = np.stack(
            [self._rhs(ti, np.concatenate([s, [0.0]]))[:-1] for ti, s in zip(self.trace.t, self.trace.states)]
        )
        speeds = self.metric.base_speed(self.trace.states, rhs)
        return float(np.max(np.abs(speeds - 1.0)))


def integrate_flow(metric, lam, v0, span, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, method="rk45", max_step=np.inf):
    """Integrate the thermostat flow over a time span; returns a Trajectory."""
    return Trajectory(metric, lam, v0, span, rtol=rtol, atol=atol, method=method, max_step=max_step)


class SyntheticTrace:
    """A user-supplied damped-curvature path with no geometry attached.

    Decouples the Jacobi/index/Green machinery from the flow integrator.  With
    no damping data, V lambda = 0, m = 1, and KK = kappa~.
    """

    geometric = False

    def __init__(self, kappa, span, vlam=None):
        self.span = (float(span[0]), float(span[1]))
        self._kappa = kappa if callable(kappa) else (lambda t, c=float(kappa): np.broadcast_to(c, np.shape(t)).astype(float) if np.ndim(t) else float(c))
        self._vlam = vlam

    @classmethod
    def from_samples(cls, t, kappa, vlam=None):
        """Cubic interpolation through (t, kappa) samples (two-column CSV contract)."""
        from scipy.interpolate import CubicSpline

        t = np.asarray(t, dtype=float)
        kappa = np.asarray(kappa, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise DomainError("synthetic path needs a strictly increasing time grid")
        cs = CubicSpline(t, kappa)
        return cls(cs, (t[0], t[-1]), vlam=vlam)

    def kappa_tilde(self, t):
        return self._kappa(t)

    def big_k(self, t):
        if self._vlam is None:
            return self._kappa(t)
        raise DomainError("synthetic trace with damping has no independent KK")

    def vlam(self, t):
        if self._vlam is None:
            return np.zeros(np.shape(t)) if np.ndim(t) else 0.0
        return self._vlam(t)

    def m(self, t):
        if self._vlam is None:
            return np.ones(np.shape(t)) if np.ndim(t) else 1.0
        from scipy.integrate import quad

        def one(ti):
            val, _ = quad(self._vlam, 0.0, ti, epsabs=1e-13, epsrel=1e-12, limit=200)
            return np.exp(-0.5 * val)

        if np.ndim(t):
            return np.array([one(ti) for ti in np.asarray(t, dtype=float)])
        return one(float(t))


# -- mirror / reversibility diagnostics ----------------------------------------


def mirror_conjugacy_residual(metric, lam, v, T, n_grid=64, rtol=1e-10, atol=1e-13):
    """Max over a time grid of dist(phi^{mirror}_t(flip v), flip(phi^lambda_{-t} v)).

    Lemma-level identity: the mirror generator's flow is F o phi_{-t} o F.
    This holds for every generator; it vanishes up to integration error.
    """
    return _flip_reverse_residual(metric, lam.mirror(), lam, v, T, n_grid, rtol, atol)


def reversibility_flow_residual(metric, lam, v, T, n_grid=64, rtol=1e-10, atol=1e-13):
    """Max over a time grid of dist(phi^lambda_t(flip v), flip(phi^lambda_{-t} v)).

    Small exactly when the flip conjugates the flow with its reverse, i.e. when
    the system is reversible; large otherwise.
    """
    return _flip_reverse_residual(metric, lam, lam, v, T, n_grid, rtol, atol)


def _flip_reverse_residual(metric, lam_fwd, lam_bwd, v, T, n_grid, rtol, atol):
    v_state = metric.pack(v) if isinstance(v, UnitTangent) else np.asarray(v, dtype=float)
    traj = integrate_flow(metric, lam_bwd, metric.unpack(v_state), (-T, 0.0), rtol=rtol, atol=atol)
    traj_f = integrate_flow(metric, lam_fwd, metric.unpack(metric.flip_state(v_state)), (0.0, T),
                            rtol=rtol, atol=atol)
    ts = np.linspace(0.0, T, n_grid)
    res = 0.0
    for t in ts:
        a = traj_f.state(t)
        b = metric.flip_state(traj.state(-t))
        res = max(res, float(metric.state_distance(a, b)))
    return res
