"""Named constructions: the curvature-flattening Gaussian thermostat, the
flat magnetic oracle system, the flow-box bump perturbation, and the
closed-orbit perturbation experiment.

The Gaussian constructor solves the Poisson problem for a primitive of the
curvature excess spectrally and emits a generator with only the k = +-1 fiber
modes, so the output is reversible by parity; its acceptance diagnostic is
that the assembled curvature KK vanishes on the torus (the Euler
characteristic target).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fields import GridField2D
from .flow import SyntheticTrace, curvature_pair, integrate_flow
from .generators import GeneratorField, LambdaJet
from .geometry import ConformalTorus, FlatTorus, _wrap_centered
from .green import green_limits
from .index_form import index_form, tent_fT
from .jacobi import conjugate_scan_trace

TWO_PI = 2.0 * np.pi


# -- Gaussian thermostat with constant curvature ----------------------------------


@dataclass
class GaussianDiagnostics:
    grid_n: int
    target_kk: float            # 2 pi chi / Area (zero on the torus)
    kk_max_abs: float
    hodge_residual: float
    is_reversible: bool
    even_mode_mass: float


def gaussian_from_curvature(metric, n=64, n_theta=8):
    """Build lambda with thermostat curvature == 2 pi chi / Area on a torus.

    Solves Laplacian G = (K_g - 2 pi chi / Area) * e^{2u} on the flat chart
    (zero-mean right-hand side and solution), takes theta = *dG so that
    d theta = f (area form), and sets lambda(x, v) = <E, Jv> with E the field
    of divergence f.  Only the k = +-1 fiber modes appear, so the output is
    reversible.
    """
    if not isinstance(metric, (FlatTorus, ConformalTorus)):
        raise DomainError("curvature-flattening constructor is torus-only (chi = 0 path)")
    L1, L2 = metric.L1, metric.L2
    g1 = np.linspace(0.0, L1, n, endpoint=False)
    g2 = np.linspace(0.0, L2, n, endpoint=False)
    q = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1)
    K = np.asarray(metric.gaussian_curvature(q), dtype=float)
    e2u = np.asarray(metric.area_form_density(q), dtype=float)
    area = float(np.mean(e2u)) * L1 * L2
    target = TWO_PI * 0.0 / area  # chi(T^2) = 0
    f_excess = K - target
    rhs = f_excess * e2u
    rhs = rhs - np.mean(rhs)  # Gauss-Bonnet makes this a spectral-accuracy no-op

    k1 = TWO_PI * np.fft.fftfreq(n, d=1.0 / n) / L1
    k2 = TWO_PI * np.fft.fftfreq(n, d=1.0 / n) / L2
    kk1, kk2 = np.meshgrid(k1, k2, indexing="ij")
    lap = -(kk1**2 + kk2**2)
    rhshat = np.fft.fft2(rhs)
    Ghat = np.zeros_like(rhshat)
    nonzero = lap != 0.0
    Ghat[nonzero] = rhshat[nonzero] / lap[nonzero]
    G1 = np.real(np.fft.ifft2(1j * kk1 * Ghat))
    G2 = np.real(np.fft.ifft2(1j * kk2 * Ghat))
    theta1, theta2 = -G2, G1  # theta = *dG
    emu = np.exp(-0.5 * np.log(e2u))  # e^{-u}
    a = -emu * theta1  # lambda = a cos(theta_f) + b sin(theta_f)
    b = -emu * theta2
    c1 = GridField2D(0.5 * (a - 1j * b), L1, L2)
    lam = GeneratorField({1: c1, -1: c1.conj()}, check_real=False)

    # Hodge identity d theta = f mu_a, mode by mode
    curl = np.real(np.fft.ifft2(1j * kk1 * np.fft.fft2(theta2) - 1j * kk2 * np.fft.fft2(theta1)))
    hodge = float(np.max(np.abs(np.fft.fft2(curl - rhs))) / (n * n))

    th = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    states = np.concatenate(
        [
            np.repeat(q.reshape(-1, 2), n_theta, axis=0),
            np.tile(th, n * n)[:, None],
        ],
        axis=1,
    )
    kk_vals, _ = curvature_pair(metric, lam, states)
    kk_max = float(np.max(np.abs(kk_vals - target)))
    is_rev, mass = lam.reversibility_report()
    diag = GaussianDiagnostics(
        grid_n=n, target_kk=target, kk_max_abs=kk_max, hodge_residual=hodge,
        is_reversible=is_rev, even_mode_mass=mass,
    )
    return lam, diag


# -- flat magnetic oracle system ---------------------------------------------------


@dataclass
class MagneticOracle:
    """The flat-torus constant-lambda system with its closed-form oracle pack."""

    lambda0: float
    metric: FlatTorus
    lam: GeneratorField
    conjugate_time: float
    period: float

    def orbit_state(self, t, v0=(0.0, 0.0, 0.0)):
        """Closed-form orbit: a circle of radius 1/lambda0, theta' = lambda0."""
        q1, q2, th0 = v0
        l0 = self.lambda0
        t = np.asarray(t, dtype=float)
        th = th0 + l0 * t
        return np.stack(
            [
                q1 + (np.sin(th) - np.sin(th0)) / l0,
                q2 + (np.cos(th0) - np.cos(th)) / l0,
                th,
            ],
            axis=-1,
        )

    def jacobi_xy(self, t, x0, y0):
        """The lifted-coefficient solutions (x, y) with x = -y'."""
        l0 = self.lambda0
        t = np.asarray(t, dtype=float)
        x = x0 * np.cos(l0 * t) + y0 * l0 * np.sin(l0 * t)
        y = y0 * np.cos(l0 * t) - x0 / l0 * np.sin(l0 * t)
        return x, y

    def invariant_section(self, c1, c2):
        """Flow-invariant line field from the invariant one-forms; returns (t, state) -> r."""
        l0 = self.lambda0

        def r(t, state):
            th = state[..., 2]
            num = l0 * (c1 * np.cos(th) + c2 * np.sin(th))
            den = c2 * np.cos(th) - c1 * np.sin(th)
            if np.ndim(den) == 0:
                return np.inf if den == 0.0 else float(num / den)
            with np.errstate(divide="ignore"):
                return np.where(den == 0.0, np.inf, num / den)

        return r

    def section_slope(self, t, theta0=0.0):
        """r(t) = lambda0 tan(theta0 + lambda0 t) for the (0, 1) section."""
        th = theta0 + self.lambda0 * np.asarray(t, dtype=float)
        c = np.cos(th)
        with np.errstate(divide="ignore"):
            out = np.where(c == 0.0, np.inf, self.lambda0 * np.tan(th))
        return out


def magnetic_counterexample(lambda0, L1=1.0, L2=1.0):
    """The flat magnetic system (T^2, flat, lambda0 != 0) plus oracles."""
    if lambda0 == 0.0:
        raise DomainError("lambda0 = 0 is the geodesic flow, not a magnetic system")
    metric = FlatTorus(L1, L2)
    return MagneticOracle(
        lambda0=float(lambda0),
        metric=metric,
        lam=GeneratorField.constant(float(lambda0)),
        conjugate_time=np.pi / abs(lambda0),
        period=TWO_PI / abs(lambda0),
    )


# -- smooth bump machinery ---------------------------------------------------------


def _expstep(u):
    """f(u) = exp(-1/u) for u > 0 else 0, with f', f''."""
    u = np.asarray(u, dtype=float)
    pos = u > 1e-12
    f = np.zeros_like(u)
    f1 = np.zeros_like(u)
    f2 = np.zeros_like(u)
    uu = np.where(pos, u, 1.0)
    e = np.where(pos, np.exp(-1.0 / uu), 0.0)
    f[...] = e
    f1[...] = np.where(pos, e / uu**2, 0.0)
    f2[...] = np.where(pos, e * (1.0 / uu**4 - 2.0 / uu**3), 0.0)
    return f, f1, f2


def smoothstep_down(u):
    """C-infinity step S with S = 1 on u <= 0, S = 0 on u >= 1, plus S', S''."""
    u = np.asarray(u, dtype=float)
    a, a1, a2 = _expstep(u)
    b, b1m, b2m = _expstep(1.0 - u)
    b1 = -b1m  # d/du f(1-u)
    b2 = b2m
    den = a + b
    den = np.where(den == 0.0, 1.0, den)
    S = b / den
    N = b1 * a - a1 * b
    S1 = N / den**2
    S2 = (b2 * a - a2 * b) / den**2 - 2.0 * N * (a1 + b1) / den**3
    inside = (u > 0.0) & (u < 1.0)
    S = np.where(u <= 0.0, 1.0, np.where(u >= 1.0, 0.0, S))
    S1 = np.where(inside, S1, 0.0)
    S2 = np.where(inside, S2, 0.0)
    return S, S1, S2


def bump_chi(s):
    """chi = 1 on [-1/2, 1/2], support [-1, 1], C-infinity; returns (chi, chi', chi'')."""
    s = np.asarray(s, dtype=float)
    x = np.abs(s)
    S, S1, S2 = smoothstep_down(2.0 * x - 1.0)
    chi = np.where(x <= 0.5, 1.0, np.where(x >= 1.0, 0.0, S))
    band = (x > 0.5) & (x < 1.0)
    d1 = np.where(band, 2.0 * np.sign(s) * S1, 0.0)
    d2 = np.where(band, 4.0 * S2, 0.0)
    return chi, d1, d2


class FlowBoxBump:
    """The compactly supported perturbation sqrt(eps) chi(x1/C) chi(rho/delta).

    Tubular coordinates around a straight flat-torus orbit through (q0, theta0):
    x1 = along-orbit displacement (wrapped by the orbit period when closed),
    x2 = transverse chart displacement, x3 = fiber angle offset.  On the core
    orbit the chart directions agree with (F, H, V); the three frame fields do
    not commute, so no exact global straightening exists and none is claimed.
    """

    def __init__(self, metric: FlatTorus, q0, theta0, C, delta, eps, closed=None):
        if not isinstance(metric, FlatTorus):
            raise DomainError("flow-box perturbation supports the flat geodesic base")
        self.metric = metric
        self.q0 = np.asarray(q0, dtype=float)
        self.theta0 = float(theta0)
        self.C = float(C)
        self.delta = float(delta)
        self.eps = float(eps)
        if self.C <= 0 or self.delta <= 0 or self.eps < 0:
            raise DomainError("C, delta must be positive and eps nonnegative")
        c, s = np.cos(self.theta0), np.sin(self.theta0)
        axis_aligned = min(abs(c), abs(s)) < 1e-12
        if closed is None:
            closed = False
            if axis_aligned:
                period = metric.L1 if abs(c) > 0.5 else metric.L2
                closed = abs(2.0 * self.C - period) < 1e-9
        if closed and not axis_aligned:
            raise DomainError("closed tubes are supported for axis-aligned orbits only")
        self.closed = bool(closed)
        trans_period = metric.L2 if abs(c) > 0.5 else metric.L1
        self.injectivity_bound = min(trans_period / 2.0, np.pi)
        if self.delta >= self.injectivity_bound:
            raise DomainError(
                f"delta = {self.delta} exceeds the tube injectivity bound {self.injectivity_bound:.6g}"
            )
        self._rot = np.array([[c, s], [-s, c]])

    def tube_coordinates(self, state):
        """(x1, x2, x3) of chart states; broadcasts over leading axes."""
        state = np.asarray(state, dtype=float)
        dq = state[..., :2] - self.q0
        dq1 = _wrap_centered(dq[..., 0], self.metric.L1)
        dq2 = _wrap_centered(dq[..., 1], self.metric.L2)
        x1 = self._rot[0, 0] * dq1 + self._rot[0, 1] * dq2
        x2 = self._rot[1, 0] * dq1 + self._rot[1, 1] * dq2
        if self.closed:
            x1 = _wrap_centered(x1, 2.0 * self.C)
        x3 = _wrap_centered(state[..., 2] - self.theta0, TWO_PI)
        return x1, x2, x3

    def _pieces(self, state):
        x1, x2, x3 = self.tube_coordinates(state)
        rho = np.hypot(x2, x3)
        A, A1, A2 = bump_chi(x1 / self.C)
        B, Bp, Bpp = bump_chi(rho / self.delta)
        return x1, x2, x3, rho, A, A1, A2, B, Bp, Bpp

    def value(self, state):
        _, _, _, _, A, _, _, B, _, _ = self._pieces(state)
        return np.sqrt(self.eps) * A * B

    def tube_jet(self, state):
        """Value plus first and second partials in tube coordinates (x1, x2, x3)."""
        x1, x2, x3, rho, A, A1, A2, B, Bp, Bpp = self._pieces(state)
        se = np.sqrt(self.eps)
        C, d = self.C, self.delta
        safe_rho = np.where(rho == 0.0, 1.0, rho)
        n2 = np.where(rho == 0.0, 0.0, x2 / safe_rho)
        n3 = np.where(rho == 0.0, 0.0, x3 / safe_rho)
        inv_rho = np.where(rho == 0.0, 0.0, 1.0 / safe_rho)
        p = {}
        p["f"] = se * A * B
        p["1"] = se * (A1 / C) * B
        p["2"] = se * A * (Bp / d) * n2
        p["3"] = se * A * (Bp / d) * n3
        p["11"] = se * (A2 / C**2) * B
        p["12"] = se * (A1 / C) * (Bp / d) * n2
        p["13"] = se * (A1 / C) * (Bp / d) * n3
        p["22"] = se * A * (Bpp / d**2 * n2**2 + Bp / d * (inv_rho - x2**2 * inv_rho**3))
        p["33"] = se * A * (Bpp / d**2 * n3**2 + Bp / d * (inv_rho - x3**2 * inv_rho**3))
        p["23"] = se * A * (Bpp / d**2 - Bp / d * inv_rho) * n2 * n3
        return p

    def jet(self, metric, state):
        """LambdaJet in chart coordinates, by the (constant) chart rotation."""
        state = np.asarray(state, dtype=float)
        p = self.tube_jet(state)
        c, s = np.cos(self.theta0), np.sin(self.theta0)
        d1 = c * p["1"] - s * p["2"]
        d2 = s * p["1"] + c * p["2"]
        dth = p["3"]
        dth1 = c * p["13"] - s * p["23"]
        dth2 = s * p["13"] + c * p["23"]
        dthth = p["33"]
        return LambdaJet(p["f"], d1, d2, dth, dth1, dth2, dthth)

    def c2_norm(self, n_axis=48):
        """Grid sup of |phi| and all first/second tube partials (C^2 proxy)."""
        x1 = np.linspace(-self.C, self.C, n_axis)
        x2 = np.linspace(-self.delta, self.delta, n_axis)
        x3 = np.linspace(-self.delta, self.delta, n_axis)
        X1, X2, X3 = np.meshgrid(x1, x2, x3, indexing="ij")
        c, s = np.cos(self.theta0), np.sin(self.theta0)
        q1 = self.q0[0] + c * X1 - s * X2
        q2 = self.q0[1] + s * X1 + c * X2
        th = self.theta0 + X3
        states = np.stack([q1, q2, th], axis=-1).reshape(-1, 3)
        p = self.tube_jet(states)
        return float(max(np.max(np.abs(p[key])) for key in p))


class PerturbedGenerator:
    """lambda_base + sign * bump, exposing the generator evaluation protocol."""

    def __init__(self, base: GeneratorField, bump: FlowBoxBump, sign=1):
        if sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        self.base = base
        self.bump = bump
        self.sign = int(sign)
        self.N = None  # not fiber-band-limited

    def value(self, metric, state):
        return self.base.value(metric, state) + self.sign * self.bump.value(state)

    def value_and_vtheta(self, metric, state):
        val, vth = self.base.value_and_vtheta(metric, state)
        p = self.bump.tube_jet(np.asarray(state, dtype=float))
        return val + self.sign * p["f"], vth + self.sign * p["3"]

    def jet(self, metric, state):
        jb = self.base.jet(metric, state)
        jp = self.bump.jet(metric, state)
        if self.sign == 1:
            return jb + jp
        return jb + LambdaJet(-jp.f, -jp.d1, -jp.d2, -jp.dth, -jp.dth1, -jp.dth2, -jp.dthth)


@dataclass
class PerturbationBundle:
    bump: FlowBoxBump
    perturbed: PerturbedGenerator
    base: GeneratorField
    sign: int
    injectivity_bound: float


def flowbox_perturbation(metric, lam, v, C, delta, eps, sign=1):
    """Perturb lambda by +- the flow-box bump around the orbit through v.

    Implemented for the flat geodesic base (straight orbits, where the tubular
    chart is affine and exact); closed orbits need 2C equal to the wrap period.
    """
    if not isinstance(metric, FlatTorus):
        raise DomainError("flow-box perturbation supports the flat torus base only")
    base_mass = max((f.max_abs() for f in lam.modes.values()), default=0.0)
    if base_mass > 1e-13:
        raise DomainError(
            "flow-box tube construction needs a straight core orbit; the base "
            "generator must vanish (flat geodesic flow)"
        )
    state = metric.pack(v) if not isinstance(v, np.ndarray) else np.asarray(v, dtype=float)
    bump = FlowBoxBump(metric, state[:2], state[2], C, delta, eps)
    pert = PerturbedGenerator(lam, bump, sign)
    return PerturbationBundle(bump=bump, perturbed=pert, base=lam, sign=int(sign),
                              injectivity_bound=bump.injectivity_bound)


# -- the closed-orbit perturbation experiment --------------------------------------


@dataclass
class Theorem1Report:
    T: float
    eps: float
    delta: float
    sign: int
    C: float
    k: int
    closed: bool
    green_gap: float
    index_unperturbed: float
    index_identity: float
    identity_defect: float
    closed_form_2_over_T: float
    c_prime: float
    bound_estimate_ok: bool        # I(f_T) <= eps C'/4, the asymptotic-regime estimate
    core_correction: float         # int (kappa~ - kappa_bar)(core orbit) f^2
    delta_interval_contributions: list
    realignment_defect: float      # sup |kappa_bar(core(t)) - kappa_bar(core(t + 2C))|
    index_perturbed_core: float    # index with perturbed coefficients along the core orbit
    flow_deviation_sup: float      # sup_t dist(perturbed flow, core orbit)
    index_perturbed_flow: float    # honest index along the true perturbed flow
    deviation_integral: float
    conjugate_time_core: float | None
    conjugate_time_flow: float | None
    status: str
    notes: list = field(default_factory=list)


def theorem1_experiment(T, eps, delta, sign=1, q0=(0.375, 0.25), theta0=0.0,
                        L1=1.0, L2=1.0, scan_factor=2.0, rtol=1e-10, atol=1e-13):
    """Desk-scale run of the closed-orbit perturbation mechanism.

    Base system: flat-torus geodesic flow, closed orbit of period 2C through
    (q0, theta0), horizon T = kC.  The perturbed index is evaluated with the
    perturbed coefficients along the unchanged core orbit (the quantity the
    contradiction argument controls); the deviation incurred by the true
    perturbed flow is integrated separately and reported, not assumed away.
    """
    metric = FlatTorus(L1, L2)
    lam0 = GeneratorField.zero()
    T = float(T)
    c, s = np.cos(theta0), np.sin(theta0)
    if min(abs(c), abs(s)) > 1e-12:
        raise DomainError("experiment orbit must be axis-aligned")
    period = L1 if abs(c) > 0.5 else L2
    C = period / 2.0
    k = int(round(T / C))
    if abs(k * C - T) > 1e-12:
        raise DomainError(f"T must be an integer multiple of C = {C}")
    v0 = metric.unit_tangent(q0[0], q0[1], theta0)
    notes = []

    # Green bundles coincide along flat geodesics; record the measured gap.
    grep = green_limits(metric, lam0, v0, T_list=(5.0, 10.0, 20.0, 40.0))
    gap = float(grep.gap) if grep.valid else np.inf

    # Unperturbed tent and its boundary-value identity (closed form 2/T).
    base_trace = SyntheticTrace(0.0, (-T, T))
    tent = tent_fT(base_trace, T)
    f_T = tent.f

    if eps == 0.0:
        bump = None
        pert = lam0
        kappa_core = lambda t: np.zeros(np.shape(t)) if np.ndim(t) else 0.0  # noqa: E731
    else:
        bundle = flowbox_perturbation(metric, lam0, v0, C, delta, eps, sign)
        bump = bundle.bump
        pert = bundle.perturbed

        e_par = np.array([c, s])

        def core_state(t):
            t = np.asarray(t, dtype=float)
            q = np.asarray(q0, dtype=float) + np.multiply.outer(t, e_par)
            th = np.broadcast_to(theta0, t.shape)
            return np.concatenate([q, th[..., None]], axis=-1) if t.ndim else np.append(q, theta0)

        def kappa_core(t):
            st = core_state(t)
            return curvature_pair(metric, pert, st)[1]

    core_trace = SyntheticTrace(kappa_core, (-scan_factor * T, scan_factor * T))
    I_pert_core = index_form(core_trace, f_T)
    core_correction = I_pert_core - tent.index_value  # int (kappa~ - kappa_bar) f^2 along the core

    # per-period contributions of int (kappa~ - kappa_bar) f^2 over the Delta set,
    # i.e. the period windows of [-T, T] outside the central [-C, C]
    contributions = []
    if eps > 0.0:
        for j in range(-k, k + 1):
            a, b = j * 2 * C - C, j * 2 * C + C
            a, b = max(a, -T), min(b, T)
            if b <= a or j == 0:
                continue
            contributions.append(_weighted_quad(lambda t: -np.asarray(kappa_core(t)) * f_T.value(t) ** 2, a, b))
    c_prime = 0.49 * C
    bound_ok = bool(tent.index_value <= eps * c_prime / 4.0)

    # realignment of the tube under the period-2C return (exact for the affine chart)
    if eps > 0.0:
        probe = np.linspace(-C, C, 257)
        realign = float(np.max(np.abs(np.asarray(kappa_core(probe)) - np.asarray(kappa_core(probe + 2 * C)))))
    else:
        realign = 0.0

    # honest perturbed flow from v0 (reported, not substituted)
    if eps > 0.0:
        traj = integrate_flow(metric, pert, v0, (-scan_factor * T, scan_factor * T), rtol=rtol, atol=atol)
        ts = np.linspace(-T, T, 257)
        dev = float(
            np.max([metric.state_distance(traj.state(t), core_state(t)) for t in ts])
        )
        I_pert_flow = index_form(traj, f_T)
        scan_flow = conjugate_scan_trace(traj, T=scan_factor * T, t0=0.0)
        t_flow = scan_flow.first_conjugate_time
    else:
        dev = 0.0
        I_pert_flow = I_pert_core
        t_flow = None

    scan_core = conjugate_scan_trace(core_trace, T=scan_factor * T, t0=0.0)
    t_core = scan_core.first_conjugate_time

    if eps == 0.0:
        status = "positive-index"
    elif I_pert_core < 0.0 and t_core is not None:
        status = "negative-index-with-conjugate-pair"
    elif I_pert_core < 0.0:
        status = "negative-index-no-pair-found"
        notes.append("scan window may be too short for the first conjugate time")
    else:
        status = "inconclusive"
        notes.append("perturbation too weak at this horizon: eps * <chi^2> * 2T/3 < 2/T")

    if dev > delta:
        notes.append(
            "perturbed flow leaves the tube within the horizon; the deviation "
            "integral dominates the honest index (reported, not assumed small)"
        )

    return Theorem1Report(
        T=T, eps=float(eps), delta=float(delta), sign=int(sign), C=C, k=k, closed=True,
        green_gap=gap,
        index_unperturbed=tent.index_value,
        index_identity=tent.index_identity,
        identity_defect=tent.identity_defect,
        closed_form_2_over_T=2.0 / T,
        c_prime=c_prime,
        bound_estimate_ok=bound_ok,
        core_correction=core_correction,
        delta_interval_contributions=contributions,
        realignment_defect=realign,
        index_perturbed_core=I_pert_core,
        flow_deviation_sup=dev,
        index_perturbed_flow=I_pert_flow,
        deviation_integral=float(I_pert_flow - I_pert_core),
        conjugate_time_core=t_core,
        conjugate_time_flow=t_flow,
        status=status,
        notes=notes,
    )


def _weighted_quad(fn, a, b, n=512):
    """Composite-Simpson integral of fn over [a, b]."""
    ts = np.linspace(a, b, n + 1)
    vals = np.asarray(fn(ts), dtype=float)
    h = (b - a) / n
    return float(h / 3.0 * (vals[0] + vals[-1] + 4 * np.sum(vals[1:-1:2]) + 2 * np.sum(vals[2:-2:2])))
