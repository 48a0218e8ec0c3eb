import numpy as np
import pytest

from thermoflow import ConformalTorus, FlatTorus, FourierField2D, GeneratorField, RoundSphere


@pytest.fixture(scope="session")
def flat():
    return FlatTorus(1.0, 1.0)


@pytest.fixture(scope="session")
def sphere():
    return RoundSphere(1.0)


@pytest.fixture(scope="session")
def conformal():
    u = FourierField2D.real_cosine(0.1, 1, 0, 1.0, 1.0)
    return ConformalTorus(1.0, 1.0, u)


@pytest.fixture(scope="session")
def lam_zero():
    return GeneratorField.zero()


@pytest.fixture(scope="session")
def lam_sin_theta():
    # lambda(q, theta) = sin(theta): the simplest odd (reversible) generator
    zero = FourierField2D({(0, 0): 0.0}, 1.0, 1.0)
    one = FourierField2D({(0, 0): 1.0}, 1.0, 1.0)
    return GeneratorField.from_cos_sin(1, zero, one)


def random_odd_generator(rng, L1=1.0, L2=1.0, scale=0.3):
    """A random reversible generator: odd fiber modes with small Fourier coefficients."""
    modes = {}
    for k in (1, 3):
        coeffs = {(0, 0): scale * (rng.standard_normal() + 0j)}
        for km in ((1, 0), (0, 1)):
            amp = scale * 0.3 * (rng.standard_normal() + 1j * rng.standard_normal())
            coeffs[km] = amp
            coeffs[(-km[0], -km[1])] = np.conj(amp)
        a = FourierField2D(coeffs, L1, L2)
        b = FourierField2D(
            {km: 0.5 * scale * (rng.standard_normal() + 0j) for km in [(0, 0)]}, L1, L2
        )
        half = a.scaled(0.5)
        ck = half if k == 3 else _sum_fields(half, b.scaled(-0.5j))
        modes[k] = ck
        modes[-k] = ck.conj()
    return GeneratorField(modes, check_real=False)


def random_even_generator(rng, L1=1.0, L2=1.0, scale=0.3):
    """A random non-reversible generator: includes even fiber modes."""
    base = random_odd_generator(rng, L1, L2, scale)
    c0 = FourierField2D({(0, 0): scale * (0.2 + abs(rng.standard_normal()))}, L1, L2)
    modes = dict(base.modes)
    modes[0] = c0
    return GeneratorField(modes, check_real=False)


def _sum_fields(a, b):
    from thermoflow.generators import _field_sum

    return _field_sum(a, b)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
