"""Scalar fields on a periodic chart with exact first/second partials.

Fields come in two provenances: closed-form truncated double Fourier series
(:class:`FourierField2D`) and periodic grids differentiated spectrally
(:class:`GridField2D`).  Both evaluate the same trigonometric interpolant
everywhere, so derivative provenance is unambiguous.  Values may be complex
(fiber-Fourier coefficients are), but fields used as metric data must be real.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


class Jet2:
    """Value and partials of a chart function at one or many points.

    Attributes are ``f, f1, f2, f11, f12, f22`` (second-order slots are None
    unless requested).  Shapes broadcast with the evaluation points.
    """

    __slots__ = ("f", "f1", "f2", "f11", "f12", "f22")

    def __init__(self, f, f1, f2, f11=None, f12=None, f22=None):
        self.f = f
        self.f1 = f1
        self.f2 = f2
        self.f11 = f11
        self.f12 = f12
        self.f22 = f22


class ConstantField:
    """Spatially constant field; all partials vanish."""

    def __init__(self, value):
        self.value_const = complex(value) if np.iscomplexobj(np.asarray(value)) else float(value)

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(self.value_const, q.shape[:-1]).copy()

    def jet(self, q, order=1):
        z = self.value(q)
        zero = np.zeros_like(z)
        if order >= 2:
            return Jet2(z, zero, zero, zero.copy(), zero.copy(), zero.copy())
        return Jet2(z, zero, zero)

    def max_abs(self, n=8):
        return abs(self.value_const)

    def conj(self):
        return ConstantField(np.conj(self.value_const))

    def scaled(self, a):
        return ConstantField(a * self.value_const)


class FourierField2D:
    """Truncated double Fourier series sum_{k} a_k exp(2pi i (k1 q1/L1 + k2 q2/L2)).

    ``coeffs`` maps (k1, k2) -> complex amplitude.  The series is evaluated
    mode-by-mode, so all partials are exact.
    """

    def __init__(self, coeffs, L1=1.0, L2=1.0):
        if L1 <= 0 or L2 <= 0:
            raise DomainError("periods must be positive")
        self.L1 = float(L1)
        self.L2 = float(L2)
        items = sorted(coeffs.items())
        self.modes = np.array([km for km, _ in items], dtype=float)  # (M, 2)
        self.amps = np.array([a for _, a in items], dtype=complex)  # (M,)

    @classmethod
    def real_cosine(cls, amplitude, k1, k2, L1=1.0, L2=1.0, phase=0.0):
        """amplitude * cos(2pi(k1 q1/L1 + k2 q2/L2) + phase) as a real field."""
        if k1 == 0 and k2 == 0:
            return cls({(0, 0): amplitude * np.cos(phase)}, L1, L2)
        a = 0.5 * amplitude * np.exp(1j * phase)
        return cls({(k1, k2): a, (-k1, -k2): np.conj(a)}, L1, L2)

    def is_real(self, tol=1e-12):
        lookup = {tuple(km): a for km, a in zip(map(tuple, self.modes), self.amps)}
        for (k1, k2), a in lookup.items():
            b = lookup.get((-k1, -k2), 0.0)
            if abs(np.conj(a) - b) > tol:
                return False
        return True

    def _phases(self, q):
        q = np.asarray(q, dtype=float)
        ang = 2.0 * np.pi * (
            np.multiply.outer(q[..., 0], self.modes[:, 0]) / self.L1
            + np.multiply.outer(q[..., 1], self.modes[:, 1]) / self.L2
        )
        return np.exp(1j * ang)  # (..., M)

    def value(self, q):
        ph = self._phases(q)
        out = ph @ self.amps
        return out

    def jet(self, q, order=1):
        ph = self._phases(q)
        ik1 = 2j * np.pi * self.modes[:, 0] / self.L1
        ik2 = 2j * np.pi * self.modes[:, 1] / self.L2
        f = ph @ self.amps
        f1 = ph @ (self.amps * ik1)
        f2 = ph @ (self.amps * ik2)
        if order >= 2:
            f11 = ph @ (self.amps * ik1 * ik1)
            f12 = ph @ (self.amps * ik1 * ik2)
            f22 = ph @ (self.amps * ik2 * ik2)
            return Jet2(f, f1, f2, f11, f12, f22)
        return Jet2(f, f1, f2)

    def max_abs(self, n=64):
        g1 = np.linspace(0.0, self.L1, n, endpoint=False)
        g2 = np.linspace(0.0, self.L2, n, endpoint=False)
        q = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1)
        return float(np.max(np.abs(self.value(q))))

    def conj(self):
        out = {}
        for km, a in zip(map(tuple, self.modes), self.amps):
            out[(-km[0], -km[1])] = np.conj(a)
        return FourierField2D(out, self.L1, self.L2)

    def scaled(self, a):
        return FourierField2D(
            {tuple(km): a * amp for km, amp in zip(map(tuple, self.modes), self.amps)},
            self.L1,
            self.L2,
        )


class GridField2D:
    """Periodic samples on an N1 x N2 grid, differentiated spectrally.

    Grid sizes must be powers of two.  Point evaluation is the trigonometric
    interpolant (separable mode sum), so derivatives are those of the
    interpolant itself.
    """

    def __init__(self, values, L1=1.0, L2=1.0):
        values = np.asarray(values)
        n1, n2 = values.shape
        if n1 & (n1 - 1) or n2 & (n2 - 1) or n1 == 0 or n2 == 0:
            raise DomainError("grid sizes must be powers of two")
        if L1 <= 0 or L2 <= 0:
            raise DomainError("periods must be positive")
        self.L1 = float(L1)
        self.L2 = float(L2)
        self.shape = (n1, n2)
        self.real_data = bool(np.isrealobj(values))
        self.fhat = np.fft.fft2(np.asarray(values, dtype=complex)) / (n1 * n2)
        self.k1 = 2.0 * np.pi * np.fft.fftfreq(n1, d=1.0 / n1) / self.L1  # (n1,)
        self.k2 = 2.0 * np.pi * np.fft.fftfreq(n2, d=1.0 / n2) / self.L2
        # Nyquist mode of an even-length FFT has no well-defined derivative sign;
        # drop it from derivative spectra (it is zero for resolved data anyway).
        self.dk1 = self.k1.copy()
        self.dk2 = self.k2.copy()
        self.dk1[n1 // 2] = 0.0
        self.dk2[n2 // 2] = 0.0

    @classmethod
    def sample(cls, fn, n1, n2, L1=1.0, L2=1.0):
        g1 = np.linspace(0.0, L1, n1, endpoint=False)
        g2 = np.linspace(0.0, L2, n2, endpoint=False)
        q = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1)
        return cls(fn(q), L1, L2)

    def _basis(self, q):
        q = np.asarray(q, dtype=float)
        e1 = np.exp(1j * np.multiply.outer(q[..., 0], self.k1))  # (..., n1)
        e2 = np.exp(1j * np.multiply.outer(q[..., 1], self.k2))  # (..., n2)
        return e1, e2

    def _eval(self, coeff, e1, e2):
        out = np.einsum("...i,ij,...j->...", e1, coeff, e2)
        return out

    def value(self, q):
        e1, e2 = self._basis(q)
        v = self._eval(self.fhat, e1, e2)
        return v.real if self.real_data else v

    def jet(self, q, order=1):
        e1, e2 = self._basis(q)
        c = self.fhat
        ik1 = 1j * self.dk1[:, None]
        ik2 = 1j * self.dk2[None, :]
        f = self._eval(c, e1, e2)
        f1 = self._eval(c * ik1, e1, e2)
        f2 = self._eval(c * ik2, e1, e2)
        if order >= 2:
            f11 = self._eval(c * ik1 * ik1, e1, e2)
            f12 = self._eval(c * ik1 * ik2, e1, e2)
            f22 = self._eval(c * ik2 * ik2, e1, e2)
            parts = (f, f1, f2, f11, f12, f22)
        else:
            parts = (f, f1, f2)
        if self.real_data:
            parts = tuple(p.real for p in parts)
        return Jet2(*parts)

    def max_abs(self, n=None):
        return float(np.max(np.abs(self.value(self._probe_points(n)))))

    def _probe_points(self, n=None):
        n1 = n or self.shape[0]
        n2 = n or self.shape[1]
        g1 = np.linspace(0.0, self.L1, n1, endpoint=False)
        g2 = np.linspace(0.0, self.L2, n2, endpoint=False)
        return np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1)

    def conj(self):
        n1, n2 = self.shape
        vals = np.conj(np.fft.ifft2(self.fhat) * (n1 * n2))
        out = GridField2D(vals if not self.real_data else vals.real, self.L1, self.L2)
        return out

    def scaled(self, a):
        n1, n2 = self.shape
        vals = np.fft.ifft2(self.fhat) * (n1 * n2) * a
        if self.real_data and np.isreal(a):
            vals = vals.real
        return GridField2D(vals, self.L1, self.L2)


def wrap_callable(fn, dfn1, dfn2, d2fns=None):
    """Adapt explicit closed-form callables (vectorized over q) to the field API."""

    class _CallableField:
        def value(self, q):
            q = np.asarray(q, dtype=float)
            return fn(q)

        def jet(self, q, order=1):
            q = np.asarray(q, dtype=float)
            f, f1, f2 = fn(q), dfn1(q), dfn2(q)
            if order >= 2:
                if d2fns is None:
                    raise DomainError("second partials were not supplied")
                f11, f12, f22 = (d(q) for d in d2fns)
                return Jet2(f, f1, f2, f11, f12, f22)
            return Jet2(f, f1, f2)

        def max_abs(self, n=64):
            g = np.linspace(0.0, 1.0, n, endpoint=False)
            q = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
            return float(np.max(np.abs(fn(q))))

    return _CallableField()
