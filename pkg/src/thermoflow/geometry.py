"""Metric backends and the moving frame on the unit tangent bundle.

Three backends: flat torus, conformal torus (metric exp(2u) |dq|^2), and the
round sphere kept in embedded coordinates.  Torus states are (q1, q2, theta)
with theta the fiber angle from d/dq1, counterclockwise; sphere states are
(p, w) in R^6 with |p| = R, w orthogonal to p, |w| = 1.

Orientation convention: J rotates tangent vectors by +pi/2 counterclockwise in
the chart.  The frame fields (X, H, V) returned by :meth:`frame` satisfy the
structure equations [V, X] = H, [X, H] = K V, [V, H] = -X, which
``structure_residuals`` verifies by finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ChartPoint:
    """A surface point: (q1, q2) on torus charts, an embedded 3-vector on the sphere."""

    coords: tuple

    @property
    def q1(self):
        return self.coords[0]

    @property
    def q2(self):
        return self.coords[1]

    def array(self):
        return np.array(self.coords, dtype=float)


@dataclass(frozen=True)
class UnitTangent:
    """A unit tangent vector: base point plus fiber angle (torus) or 3-vector (sphere)."""

    base: ChartPoint
    theta: float | None = None
    vector: tuple | None = None


def _wrap(x, period):
    return x - period * np.floor(x / period)


def _wrap_centered(x, period):
    return x - period * np.round(x / period)


class _TorusBase:
    """Shared torus chart machinery; subclasses provide the conformal factor."""

    state_dim = 3

    def __init__(self, L1=1.0, L2=1.0):
        if L1 <= 0 or L2 <= 0:
            raise DomainError("torus periods must be strictly positive")
        self.L1 = float(L1)
        self.L2 = float(L2)

    # -- chart plumbing ------------------------------------------------------

    def chart_point(self, q1, q2):
        return ChartPoint((float(_wrap(q1, self.L1)), float(_wrap(q2, self.L2))))

    def unit_tangent(self, q1, q2, theta):
        return UnitTangent(self.chart_point(q1, q2), theta=float(_wrap(theta, TWO_PI)))

    def pack(self, v: UnitTangent):
        return np.array([v.base.q1, v.base.q2, v.theta], dtype=float)

    def unpack(self, state):
        return self.unit_tangent(state[0], state[1], state[2])

    def normalize_state(self, state):
        s = np.asarray(state, dtype=float).copy()
        s[..., 0] = _wrap(s[..., 0], self.L1)
        s[..., 1] = _wrap(s[..., 1], self.L2)
        s[..., 2] = _wrap(s[..., 2], TWO_PI)
        return s

    def flip_state(self, state):
        s = np.asarray(state, dtype=float).copy()
        s[..., 2] = s[..., 2] + np.pi
        return s

    def state_distance(self, s1, s2):
        """Chart-level distance, wrap-aware in all three coordinates."""
        s1 = np.asarray(s1, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        d1 = _wrap_centered(s1[..., 0] - s2[..., 0], self.L1)
        d2 = _wrap_centered(s1[..., 1] - s2[..., 1], self.L2)
        dth = _wrap_centered(s1[..., 2] - s2[..., 2], TWO_PI)
        scale = np.exp(self._ujet(0.5 * (s1[..., :2] + s2[..., :2]), order=0))
        return np.sqrt((scale * d1) ** 2 + (scale * d2) ** 2 + dth**2)

    # -- metric data ---------------------------------------------------------

    def _ujet(self, q, order):
        raise NotImplementedError

    def conformal_factor(self, q):
        """exp(u) at chart points q (..., 2)."""
        return np.exp(self._ujet(np.asarray(q, dtype=float), order=0))

    def area_form_density(self, q):
        return np.exp(2.0 * self._ujet(np.asarray(q, dtype=float), order=0))

    def gaussian_curvature(self, p):
        """K = -exp(-2u) (u_11 + u_22); vectorized over chart points."""
        q = p.array() if isinstance(p, ChartPoint) else np.asarray(p, dtype=float)
        try:
            jet = self._u_jet2(q)
        except DomainError:
            raise
        except Exception as exc:  # user-supplied evaluators propagate as domain errors
            raise DomainError(f"conformal factor evaluation failed: {exc}") from exc
        return -np.exp(-2.0 * jet.f) * (jet.f11 + jet.f22)

    def _u_jet2(self, q):
        raise NotImplementedError

    # -- frame ---------------------------------------------------------------

    def frame(self, state):
        """Components of (X, H, V) in (d/dq1, d/dq2, d/dtheta); broadcasts."""
        state = np.asarray(state, dtype=float)
        q = state[..., :2]
        th = state[..., 2]
        c, s = np.cos(th), np.sin(th)
        jet = self._u_jet1(q)
        eu = np.exp(-jet.f)
        u1, u2 = jet.f1, jet.f2
        X = np.stack([eu * c, eu * s, eu * (-u1 * s + u2 * c)], axis=-1)
        H = np.stack([-eu * s, eu * c, -eu * (u1 * c + u2 * s)], axis=-1)
        V = np.zeros_like(X)
        V[..., 2] = 1.0
        return X, H, V

    def _u_jet1(self, q):
        raise NotImplementedError

    def sasaki_inner(self, state, xi, eta):
        """Sasaki inner product of chart vectors at a state."""
        state = np.asarray(state, dtype=float)
        q = state[..., :2]
        jet = self._u_jet1(q)
        e2u = np.exp(2.0 * jet.f)
        # Levi-Civita connection form in the chart: omega = -u_2 dq1 + u_1 dq2.
        kxi = xi[..., 2] - jet.f2 * xi[..., 0] + jet.f1 * xi[..., 1]
        keta = eta[..., 2] - jet.f2 * eta[..., 0] + jet.f1 * eta[..., 1]
        base = e2u * (xi[..., 0] * eta[..., 0] + xi[..., 1] * eta[..., 1])
        return base + kxi * keta

    def base_speed(self, state, dstate):
        """g-norm of the base velocity of a chart tangent vector."""
        state = np.asarray(state, dtype=float)
        eu = self.conformal_factor(state[..., :2])
        return eu * np.hypot(dstate[..., 0], dstate[..., 1])


class FlatTorus(_TorusBase):
    kind = "flat_torus"

    def _ujet(self, q, order=0):
        return np.zeros(np.asarray(q, dtype=float).shape[:-1])

    def _u_jet1(self, q):
        from .fields import Jet2

        z = np.zeros(np.asarray(q, dtype=float).shape[:-1])
        return Jet2(z, z.copy(), z.copy())

    def _u_jet2(self, q):
        from .fields import Jet2

        z = np.zeros(np.asarray(q, dtype=float).shape[:-1])
        return Jet2(z, z.copy(), z.copy(), z.copy(), z.copy(), z.copy())

    def __repr__(self):
        return f"FlatTorus(L1={self.L1}, L2={self.L2})"


class ConformalTorus(_TorusBase):
    """Torus with metric exp(2 u(q)) (dq1^2 + dq2^2); u real and doubly periodic."""

    kind = "conformal_torus"

    def __init__(self, L1, L2, u):
        super().__init__(L1, L2)
        self.u = u
        probe = np.array([[0.1 * L1, 0.2 * L2], [0.7 * L1, 0.4 * L2]])
        try:
            vals = np.asarray(u.value(probe))
        except Exception as exc:  # user-supplied evaluator failures surface here
            raise DomainError(f"conformal factor evaluation failed: {exc}") from exc
        if np.max(np.abs(np.imag(vals))) > 1e-12:
            raise DomainError("conformal exponent u must be real-valued")

    def _ujet(self, q, order=0):
        return np.real(self.u.value(q))

    def _u_jet1(self, q):
        jet = self.u.jet(q, order=1)
        from .fields import Jet2

        return Jet2(np.real(jet.f), np.real(jet.f1), np.real(jet.f2))

    def _u_jet2(self, q):
        jet = self.u.jet(q, order=2)
        from .fields import Jet2

        return Jet2(
            np.real(jet.f),
            np.real(jet.f1),
            np.real(jet.f2),
            np.real(jet.f11),
            np.real(jet.f12),
            np.real(jet.f22),
        )

    def __repr__(self):
        return f"ConformalTorus(L1={self.L1}, L2={self.L2}, u={type(self.u).__name__})"


class RoundSphere:
    """Round sphere of radius R in embedded coordinates (p, w) in R^6."""

    kind = "round_sphere"
    state_dim = 6

    def __init__(self, R=1.0):
        if R <= 0:
            raise DomainError("sphere radius must be strictly positive")
        self.R = float(R)

    def chart_point(self, p):
        p = np.asarray(p, dtype=float)
        r = np.linalg.norm(p)
        if abs(r - self.R) > 1e-12 * self.R:
            raise DomainError(f"|p| = {r} is not R = {self.R} within 1e-12 relative")
        return ChartPoint(tuple(p))

    def unit_tangent(self, p, w):
        p = np.asarray(p, dtype=float)
        w = np.asarray(w, dtype=float)
        pt = self.chart_point(p)
        if abs(np.dot(p, w)) > 1e-12 * self.R:
            raise DomainError("tangent vector is not orthogonal to the base point")
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise DomainError("tangent vector is not unit length")
        return UnitTangent(pt, vector=tuple(w))

    def pack(self, v: UnitTangent):
        return np.concatenate([v.base.array(), np.asarray(v.vector, dtype=float)])

    def unpack(self, state):
        s = self.normalize_state(state)
        return UnitTangent(ChartPoint(tuple(s[:3])), vector=tuple(s[3:]))

    def normalize_state(self, state):
        """Project back onto |p| = R, w orthogonal to p, |w| = 1."""
        s = np.asarray(state, dtype=float).copy()
        p, w = s[:3], s[3:]
        p *= self.R / np.linalg.norm(p)
        w -= (np.dot(w, p) / self.R**2) * p
        w /= np.linalg.norm(w)
        return np.concatenate([p, w])

    def flip_state(self, state):
        s = np.asarray(state, dtype=float).copy()
        s[3:] = -s[3:]
        return s

    def state_distance(self, s1, s2):
        return float(np.linalg.norm(np.asarray(s1) - np.asarray(s2)))

    def gaussian_curvature(self, p):
        if isinstance(p, ChartPoint):
            return 1.0 / self.R**2
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(1.0 / self.R**2, p.shape[:-1]).copy()

    def frame(self, state):
        """(X, H, V) as R^6 vectors (dp, dw); formulas extend off the constraint set."""
        s = np.asarray(state, dtype=float)
        p, w = s[..., :3], s[..., 3:]
        n = p / self.R
        jw = np.cross(n, w)
        X = np.concatenate([w, -p / self.R**2], axis=-1)
        H = np.concatenate([jw, np.zeros_like(jw)], axis=-1)
        V = np.concatenate([np.zeros_like(jw), jw], axis=-1)
        return X, H, V

    def sasaki_inner(self, state, xi, eta):
        s = np.asarray(state, dtype=float)
        p = s[..., :3]
        dp1, dw1 = xi[..., :3], xi[..., 3:]
        dp2, dw2 = eta[..., :3], eta[..., 3:]
        k1 = dw1 - (np.sum(dw1 * p, axis=-1, keepdims=True) / self.R**2) * p
        k2 = dw2 - (np.sum(dw2 * p, axis=-1, keepdims=True) / self.R**2) * p
        return np.sum(dp1 * dp2, axis=-1) + np.sum(k1 * k2, axis=-1)

    def base_speed(self, state, dstate):
        return float(np.linalg.norm(np.asarray(dstate)[..., :3], axis=-1))

    def __repr__(self):
        return f"RoundSphere(R={self.R})"


# -- public operations --------------------------------------------------------


def gaussian_curvature(metric, p):
    """Gaussian curvature of the metric at a chart point."""
    return metric.gaussian_curvature(p)


def frame_vectors(metric, v):
    """Components of the frame (X, H, V) at a unit tangent vector or raw state."""
    state = metric.pack(v) if isinstance(v, UnitTangent) else np.asarray(v, dtype=float)
    return metric.frame(state)


def _fd_jacobian(metric, field_index, state, h):
    """Central-difference Jacobian of a frame field's components at a state."""
    n = state.size
    J = np.zeros((n, n))
    for j in range(n):
        sp = state.copy()
        sm = state.copy()
        sp[j] += h
        sm[j] -= h
        fp = metric.frame(sp)[field_index]
        fm = metric.frame(sm)[field_index]
        J[:, j] = (fp - fm) / (2.0 * h)
    return J


def structure_residuals(metric, v, h=1e-4):
    """Finite-difference residuals of [V,X]-H, [X,H]-K V, [V,H]+X.

    Each residual is measured in the Sasaki norm at the state.  h must lie in
    (0, 1e-2].
    """
    if not 0.0 < h <= 1e-2:
        raise DomainError("finite-difference step h must lie in (0, 1e-2]")
    state = metric.pack(v) if isinstance(v, UnitTangent) else np.asarray(v, dtype=float)
    X, H, V = metric.frame(state)
    JX = _fd_jacobian(metric, 0, state, h)
    JH = _fd_jacobian(metric, 1, state, h)
    JV = _fd_jacobian(metric, 2, state, h)
    if isinstance(metric, RoundSphere):
        K = metric.gaussian_curvature(state[:3])
    else:
        K = metric.gaussian_curvature(state[:2])

    vx = JX @ V - JV @ X  # [V, X]
    xh = JH @ X - JX @ H  # [X, H]
    vh = JH @ V - JV @ H  # [V, H]
    res = (vx - H, xh - K * V, vh + X)
    return tuple(float(np.sqrt(metric.sasaki_inner(state, r, r))) for r in res)
