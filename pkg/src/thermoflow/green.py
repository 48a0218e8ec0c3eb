"""Green-bundle approximation by boundary-value shooting, and domination checks.

The stable/unstable candidate directions at a state are the limits of the
boundary slopes z'_T(0) as the horizon T grows forward/backward; the limits
are extrapolated with Aitken's delta-squared over the horizon list.  The
domination certificate transports the candidates with the linearized field
dynamics and measures finite-time expansion products; it is an explicitly
labeled numerical heuristic, not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConjugatePointError, DomainError
from .flow import integrate_flow
from .jacobi import damped_solve, jacobi_solve, scan_zeros


def shoot_zT(trace, T, direction="forward", rtol=1e-11, atol=1e-14):
    """z'_T(0) for the boundary problem z(0) = 1, z(+-T) = 0 by linear shooting.

    Exact in exact arithmetic: with basis solutions u1 = (1,0), u2 = (0,1) at
    t = 0, the slope is -u1(+-T)/u2(+-T).  A conjugate point strictly between
    0 and the horizon, or at it, raises ConjugatePointError.
    """
    T = float(T)
    if T <= 0:
        raise DomainError("shooting horizon must be positive")
    end = T if direction == "forward" else -T
    lo, hi = (0.0, end) if end > 0 else (end, 0.0)
    if lo < trace.span[0] - 1e-12 or hi > trace.span[1] + 1e-12:
        raise DomainError("trace span does not cover the shooting horizon")
    u1 = damped_solve(trace, 1.0, 0.0, t0=0.0, span=(lo, hi), rtol=rtol, atol=atol)
    u2 = damped_solve(trace, 0.0, 1.0, t0=0.0, span=(lo, hi), rtol=rtol, atol=atol)
    interior = scan_zeros(u2, lo + 1e-9 * T, hi - 1e-9 * T)
    interior = [z for z in interior if abs(z) > 1e-9 * T]  # drop the anchor zero at t = 0
    if interior:
        raise ConjugatePointError(
            f"conjugate point at t = {interior[0]:.6g} before the horizon", horizon=interior[0]
        )
    den = float(u2.value(end))
    scale = max(float(np.max(np.abs(u2.value(np.linspace(lo, hi, 65))))), 1e-300)
    if abs(den) < 1e-9 * scale:
        raise ConjugatePointError("conjugate point at the shooting horizon", horizon=end)
    return -float(u1.value(end)) / den


def aitken_limit(seq):
    """Aitken delta-squared extrapolation of the tail; falls back to the last term."""
    s = np.asarray(seq, dtype=float)
    if s.size < 3:
        return float(s[-1])
    best = float(s[-1])
    d1 = s[-2] - s[-3]
    d2 = s[-1] - s[-2]
    dd = d2 - d1
    scale = max(abs(s[-1]), 1.0)
    if abs(dd) > 1e3 * np.finfo(float).eps * scale:
        cand = s[-3] - d1 * d1 / dd
        # accept only when extrapolation stays near the tail (divergence guard)
        if abs(cand - best) < 10.0 * (abs(d1) + abs(d2)) + 1e-12:
            best = float(cand)
    return best


@dataclass
class GreenReport:
    """Forward/backward boundary slopes over growing horizons and their limits."""

    T_list: list
    dzT_forward: list
    dzT_backward: list
    u_s: float | None
    u_u: float | None
    gap: float | None
    cauchy_defect: float | None
    valid: bool
    invalid_reason: str | None = None
    offending_horizon: float | None = None
    monotone_forward: bool | None = None
    monotone_backward: bool | None = None
    state0: np.ndarray | None = field(default=None, repr=False)
    vlam0: float = 0.0


def green_limits_trace(trace, T_list=(5.0, 10.0, 20.0, 40.0), rtol=1e-11, atol=1e-14):
    """Green limits along an existing trace covering [-max T, max T]."""
    fwd, bwd = [], []
    try:
        for T in T_list:
            fwd.append(shoot_zT(trace, T, "forward", rtol, atol))
            bwd.append(shoot_zT(trace, T, "backward", rtol, atol))
    except ConjugatePointError as exc:
        return GreenReport(
            T_list=list(T_list), dzT_forward=fwd, dzT_backward=bwd,
            u_s=None, u_u=None, gap=None, cauchy_defect=None,
            valid=False, invalid_reason=str(exc), offending_horizon=exc.horizon,
        )
    u_s = aitken_limit(fwd)
    u_u = aitken_limit(bwd)
    defect = max(
        abs(fwd[-1] - fwd[-2]) if len(fwd) > 1 else 0.0,
        abs(bwd[-1] - bwd[-2]) if len(bwd) > 1 else 0.0,
    )
    mono_f = bool(np.all(np.diff(fwd) > 0)) or bool(np.all(np.diff(fwd) < 0)) if len(fwd) > 1 else None
    mono_b = bool(np.all(np.diff(bwd) > 0)) or bool(np.all(np.diff(bwd) < 0)) if len(bwd) > 1 else None
    vlam0 = float(trace.vlam(0.0))
    return GreenReport(
        T_list=list(T_list), dzT_forward=fwd, dzT_backward=bwd,
        u_s=float(u_s), u_u=float(u_u), gap=abs(float(u_s) - float(u_u)),
        cauchy_defect=float(defect), valid=True,
        monotone_forward=mono_f, monotone_backward=mono_b, vlam0=vlam0,
    )


def green_limits(metric, lam, v, T_list=(5.0, 10.0, 20.0, 40.0),
                 flow_rtol=1e-11, flow_atol=1e-14, rtol=1e-11, atol=1e-14):
    """Integrate the orbit of v over [-max T, max T] and extrapolate Green slopes."""
    Tm = float(max(T_list))
    traj = integrate_flow(metric, lam, v, (-Tm, Tm), rtol=flow_rtol, atol=flow_atol)
    rep = green_limits_trace(traj, T_list, rtol, atol)
    rep.state0 = traj.state(0.0)
    return rep


# -- domination certificate -------------------------------------------------------


@dataclass
class DominationSample:
    state: object
    green: GreenReport
    rate_half: float | None
    rate_full: float | None
    status: str
    reason: str = ""


@dataclass
class DominationReport:
    samples: list
    status: str
    T: float
    margin: float
    gap_tol: float
    note: str = "finite-time numerical heuristic, not a proof"


def _covector_norm(x, y, lam_val):
    """Sasaki-orthonormal coframe norm of x beta + y psi_lambda."""
    return np.sqrt(x**2 + y**2 * (1.0 + lam_val**2))


def _sample_certificate(trace, green_rep, T, margin, gap_tol, rtol, atol):
    if not green_rep.valid:
        if "conjugate" in (green_rep.invalid_reason or ""):
            return None, None, "NEGATIVE", f"conjugate points: {green_rep.invalid_reason}"
        return None, None, "INCONCLUSIVE", green_rep.invalid_reason or "invalid green report"
    if green_rep.gap < gap_tol:
        return None, None, "NEGATIVE", f"green bundles coincide (gap = {green_rep.gap:.3e})"

    lam_along = getattr(trace, "_lam_along", None)

    def lam_at(t):
        return lam_along(t) if lam_along is not None else 0.0

    def norms(u0, ts):
        # (y, y') transport of the candidate (z, z') = (1, u0); x = -y' - vlam y
        y0, dy0 = 1.0, u0 - 0.5 * float(trace.vlam(0.0))
        sol = jacobi_solve(trace, y0, dy0, t0=0.0, span=(0.0, float(ts[-1])), rtol=rtol, atol=atol)
        out = []
        for t in ts:
            y = float(sol.value(t))
            dy = float(sol.derivative(t))
            x = -dy - float(trace.vlam(t)) * y
            out.append(_covector_norm(x, y, lam_at(t)))
        return np.asarray(out)

    ts = np.array([T / 2.0, T])
    n0_s = _covector_norm(-(green_rep.u_s - 0.5 * green_rep.vlam0) - green_rep.vlam0 * 1.0, 1.0, lam_at(0.0))
    n0_u = _covector_norm(-(green_rep.u_u - 0.5 * green_rep.vlam0) - green_rep.vlam0 * 1.0, 1.0, lam_at(0.0))
    ns = norms(green_rep.u_s, ts) / n0_s
    nu = norms(green_rep.u_u, ts) / n0_u
    prod = ns / nu  # ||dphi_t|E_s|| * ||dphi_-t|E_u(phi_t v)|| along the candidates
    rate_half = float(prod[0] ** (2.0 / T))
    rate_full = float(prod[1] ** (1.0 / T))
    if max(rate_half, rate_full) <= 1.0 - margin:
        return rate_half, rate_full, "POSITIVE", ""
    return rate_half, rate_full, "INCONCLUSIVE", "decay slower than the requested margin"


def domination_certificate(metric, lam, sample_set, T, margin, gap_tol=1e-6,
                           T_list=(5.0, 10.0, 20.0, 40.0), rtol=1e-11, atol=1e-14):
    """Per-sample transversality/domination report over a set of unit tangents.

    POSITIVE: the stable/unstable expansion product decays by at least
    (1 - margin) per unit time at T/2 and T, uniformly over samples.
    NEGATIVE: some gap below tolerance, or conjugate points found.
    INCONCLUSIVE otherwise.
    """
    if margin <= 0:
        raise DomainError("margin must be positive")
    Tm = max(float(max(T_list)), float(T))
    out = []
    for v in sample_set:
        traj = integrate_flow(metric, lam, v, (-Tm, Tm), rtol=rtol, atol=atol)
        traj._lam_along = lambda t, tr=traj: float(tr.lam.value(metric, tr.state(t)))
        rep = green_limits_trace(traj, T_list, rtol, atol)
        rep.state0 = traj.state(0.0)
        rh, rf, status, reason = _sample_certificate(traj, rep, T, margin, gap_tol, rtol, atol)
        out.append(DominationSample(state=v, green=rep, rate_half=rh, rate_full=rf,
                                    status=status, reason=reason))
    statuses = {s.status for s in out}
    if statuses == {"POSITIVE"}:
        overall = "POSITIVE"
    elif "NEGATIVE" in statuses:
        overall = "NEGATIVE"
    else:
        overall = "INCONCLUSIVE"
    return DominationReport(samples=out, status=overall, T=float(T), margin=float(margin), gap_tol=gap_tol)


def domination_certificate_trace(trace, T, margin, gap_tol=1e-6,
                                 T_list=(5.0, 10.0, 20.0, 40.0), rtol=1e-11, atol=1e-14):
    """Single-sample certificate on an existing (possibly synthetic) trace."""
    rep = green_limits_trace(trace, T_list, rtol, atol)
    rh, rf, status, reason = _sample_certificate(trace, rep, T, margin, gap_tol, rtol, atol)
    sample = DominationSample(state=None, green=rep, rate_half=rh, rate_full=rf,
                              status=status, reason=reason)
    return DominationReport(samples=[sample], status=status, T=float(T), margin=float(margin), gap_tol=gap_tol)
