"""Generator fields lambda on the unit tangent bundle.

The primary representation is a finite fiber-Fourier sum
lambda(q, theta) = sum_{|k| <= N} c_k(q) exp(i k theta) with conjugate-symmetric
coefficient fields, which makes fiber derivatives exact and parity questions
decidable.  A small jet protocol (:class:`LambdaJet`) carries exactly the
derivatives the curvature formulas consume.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .fields import ConstantField
from .geometry import RoundSphere, UnitTangent


class LambdaJet:
    """lambda and chart partials at a state: f, d1, d2, dth, dth1, dth2, dthth."""

    __slots__ = ("f", "d1", "d2", "dth", "dth1", "dth2", "dthth")

    def __init__(self, f, d1, d2, dth, dth1, dth2, dthth):
        self.f = f
        self.d1 = d1
        self.d2 = d2
        self.dth = dth
        self.dth1 = dth1
        self.dth2 = dth2
        self.dthth = dthth

    def __add__(self, other):
        return LambdaJet(
            self.f + other.f,
            self.d1 + other.d1,
            self.d2 + other.d2,
            self.dth + other.dth,
            self.dth1 + other.dth1,
            self.dth2 + other.dth2,
            self.dthth + other.dthth,
        )

    @classmethod
    def zero(cls, shape=()):
        z = np.zeros(shape)
        return cls(z, z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), z.copy())


class GeneratorField:
    """lambda as a fiber-Fourier sum with coefficient fields on the surface."""

    def __init__(self, modes, check_real=True):
        modes = {int(k): f for k, f in modes.items()}
        self.modes = modes
        self.N = max((abs(k) for k in modes), default=0)
        if check_real:
            self._check_conjugate_symmetry()

    def _check_conjugate_symmetry(self, tol=1e-12, n=16):
        for k, f in self.modes.items():
            g = self.modes.get(-k)
            if g is None:
                raise DomainError(f"mode {-k} missing for conjugate symmetry")
            probe = np.stack(
                np.meshgrid(np.linspace(0, 1, n, endpoint=False), np.linspace(0, 1, n, endpoint=False), indexing="ij"),
                axis=-1,
            )
            # probe in the field's own period box if it advertises one
            L1 = getattr(f, "L1", 1.0)
            L2 = getattr(f, "L2", 1.0)
            probe = probe * np.array([L1, L2])
            if np.max(np.abs(np.conj(np.asarray(f.value(probe))) - np.asarray(g.value(probe)))) > tol:
                raise DomainError(f"coefficients for modes +-{abs(k)} are not conjugate")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, value):
        return cls({0: ConstantField(float(value))})

    @classmethod
    def zero(cls):
        return cls.constant(0.0)

    @classmethod
    def from_cos_sin(cls, k, cos_field, sin_field=None):
        """a(q) cos(k theta) + b(q) sin(k theta) for k >= 1 as modes +-k."""
        if k < 1:
            raise DomainError("use GeneratorField.constant for the k = 0 mode")
        a = cos_field
        b = sin_field
        half_a = a.scaled(0.5)
        ck = half_a if b is None else _field_sum(half_a, b.scaled(-0.5j))
        return cls({k: ck, -k: ck.conj()})

    # -- evaluation -----------------------------------------------------------

    def _require_torus(self, metric):
        if isinstance(metric, RoundSphere) and any(k != 0 for k in self.modes):
            raise DomainError(
                "fiber modes k != 0 need a global fiber angle; the sphere backend "
                "supports only fiber-constant generators"
            )
        if isinstance(metric, RoundSphere):
            for f in self.modes.values():
                if not isinstance(f, ConstantField):
                    raise DomainError("sphere backend supports only constant coefficients")

    def value(self, metric, state):
        """lambda at a state (or batch of states)."""
        state = np.asarray(state, dtype=float)
        self._require_torus(metric)
        if isinstance(metric, RoundSphere):
            c0 = self.modes.get(0)
            v = 0.0 if c0 is None else c0.value_const
            return np.broadcast_to(np.real(v), state.shape[:-1]).copy()
        q = state[..., :2]
        th = state[..., 2]
        out = np.zeros(state.shape[:-1], dtype=complex)
        for k, f in self.modes.items():
            out += np.asarray(f.value(q)) * np.exp(1j * k * th)
        return np.real(out)

    def value_and_vtheta(self, metric, state):
        """(lambda, V lambda) fast path for the flow integrator."""
        state = np.asarray(state, dtype=float)
        self._require_torus(metric)
        if isinstance(metric, RoundSphere):
            c0 = self.modes.get(0)
            v = 0.0 if c0 is None else np.real(c0.value_const)
            z = np.zeros(state.shape[:-1])
            return np.broadcast_to(v, state.shape[:-1]).copy(), z
        q = state[..., :2]
        th = state[..., 2]
        val = np.zeros(state.shape[:-1], dtype=complex)
        dth = np.zeros_like(val)
        for k, f in self.modes.items():
            term = np.asarray(f.value(q)) * np.exp(1j * k * th)
            val += term
            dth += 1j * k * term
        return np.real(val), np.real(dth)

    def jet(self, metric, state):
        """Full jet used by the curvature formulas; broadcasts over states."""
        state = np.asarray(state, dtype=float)
        self._require_torus(metric)
        shape = state.shape[:-1]
        if isinstance(metric, RoundSphere):
            jet = LambdaJet.zero(shape)
            c0 = self.modes.get(0)
            if c0 is not None:
                jet.f = jet.f + np.real(c0.value_const)
            return jet
        q = state[..., :2]
        th = state[..., 2]
        f = np.zeros(shape, dtype=complex)
        d1 = np.zeros_like(f)
        d2 = np.zeros_like(f)
        dth = np.zeros_like(f)
        dth1 = np.zeros_like(f)
        dth2 = np.zeros_like(f)
        dthth = np.zeros_like(f)
        for k, fld in self.modes.items():
            cj = fld.jet(q, order=1)
            ph = np.exp(1j * k * th)
            ik = 1j * k
            f += np.asarray(cj.f) * ph
            d1 += np.asarray(cj.f1) * ph
            d2 += np.asarray(cj.f2) * ph
            dth += ik * np.asarray(cj.f) * ph
            dth1 += ik * np.asarray(cj.f1) * ph
            dth2 += ik * np.asarray(cj.f2) * ph
            dthth += ik * ik * np.asarray(cj.f) * ph
        return LambdaJet(*(np.real(a) for a in (f, d1, d2, dth, dth1, dth2, dthth)))

    # -- mirror / reversibility ------------------------------------------------

    def mirror(self):
        """Generator of the mirror thermostat: mode c_k -> (-1)^(k+1) c_k."""
        return GeneratorField(
            {k: (f if k % 2 else f.scaled(-1.0)) for k, f in self.modes.items()},
            check_real=False,
        )

    def reversibility_report(self, tol=1e-12, n=32):
        """(is_reversible, max even-mode sup-norm); reversible iff only odd modes."""
        mass = 0.0
        for k, f in self.modes.items():
            if k % 2 == 0:
                mass = max(mass, f.max_abs(n))
        return mass < tol, mass


def _field_sum(a, b):
    """Pointwise sum of two coefficient fields, staying in the field protocol."""
    from .fields import FourierField2D

    if isinstance(a, ConstantField) and isinstance(b, ConstantField):
        return ConstantField(a.value_const + b.value_const)
    if isinstance(a, FourierField2D) and isinstance(b, FourierField2D):
        if (a.L1, a.L2) != (b.L1, b.L2):
            raise DomainError("cannot sum Fourier fields with different periods")
        coeffs = {tuple(km): amp for km, amp in zip(map(tuple, a.modes), a.amps)}
        for km, amp in zip(map(tuple, b.modes), b.amps):
            coeffs[km] = coeffs.get(km, 0.0) + amp
        return FourierField2D(coeffs, a.L1, a.L2)

    class _Sum:
        def value(self, q):
            return np.asarray(a.value(q)) + np.asarray(b.value(q))

        def jet(self, q, order=1):
            ja, jb = a.jet(q, order), b.jet(q, order)
            from .fields import Jet2

            if order >= 2:
                return Jet2(
                    ja.f + jb.f, ja.f1 + jb.f1, ja.f2 + jb.f2,
                    ja.f11 + jb.f11, ja.f12 + jb.f12, ja.f22 + jb.f22,
                )
            return Jet2(ja.f + jb.f, ja.f1 + jb.f1, ja.f2 + jb.f2)

        def max_abs(self, n=64):
            return a.max_abs(n) + b.max_abs(n)

        def conj(self):
            return _field_sum(a.conj(), b.conj())

        def scaled(self, c):
            return _field_sum(a.scaled(c), b.scaled(c))

    return _Sum()


def flip(metric, v):
    """The flip (x, v) -> (x, -v); theta -> theta + pi on torus charts."""
    if isinstance(v, UnitTangent):
        return metric.unpack(metric.flip_state(metric.pack(v)))
    return metric.flip_state(np.asarray(v, dtype=float))


def mirror_lambda(lam: GeneratorField):
    """Module-level alias for GeneratorField.mirror."""
    return lam.mirror()


def reversibility_report(lam: GeneratorField, tol=1e-12, n=32):
    return lam.reversibility_report(tol=tol, n=n)
