import numpy as np
import pytest

from thermoflow import ConformalTorus, GeneratorField, GridField2D, integrate_flow
from thermoflow.constructors import (
    bump_chi,
    flowbox_perturbation,
    gaussian_from_curvature,
    magnetic_counterexample,
    smoothstep_down,
    theorem1_experiment,
)
from thermoflow.errors import DomainError


# -- gaussian thermostat constructor ---------------------------------------------


def test_gaussian_flat_torus_gives_zero(flat):
    lam, diag = gaussian_from_curvature(flat, n=16, n_theta=4)
    assert diag.kk_max_abs < 1e-12
    assert lam.value(flat, np.array([0.3, 0.8, 1.0])) == pytest.approx(0.0, abs=1e-14)


def test_gaussian_conformal_flattens_curvature(conformal):
    lam, diag = gaussian_from_curvature(conformal, n=64, n_theta=8)
    assert diag.kk_max_abs < 1e-6
    assert diag.hodge_residual < 1e-9
    assert diag.is_reversible and diag.even_mode_mass < 1e-12


def test_gaussian_output_reversible_by_fft(conformal):
    # independent check: FFT of fiber samples has only the k = +-1 modes
    lam, _ = gaussian_from_curvature(conformal, n=32, n_theta=4)
    th = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    q = np.array([0.3, 0.7])
    vals = np.array([float(lam.value(conformal, np.array([q[0], q[1], t]))) for t in th])
    spec = np.fft.fft(vals) / len(th)
    mass_even = max(abs(spec[0]), abs(spec[2]), abs(spec[4]))
    assert mass_even < 1e-12
    assert abs(spec[1]) > 0  # the construction genuinely carries a mode


def test_gaussian_on_grid_backend():
    u = GridField2D.sample(lambda q: 0.08 * np.cos(2 * np.pi * (q[..., 0] + q[..., 1])), 64, 64)
    ct = ConformalTorus(1.0, 1.0, u)
    lam, diag = gaussian_from_curvature(ct, n=64, n_theta=4)
    assert diag.kk_max_abs < 1e-6


def test_gaussian_rejects_sphere(sphere):
    with pytest.raises(DomainError):
        gaussian_from_curvature(sphere)


# -- magnetic counterexample bundle -----------------------------------------------


def test_magnetic_oracle_values():
    mo = magnetic_counterexample(1.0)
    assert mo.conjugate_time == pytest.approx(np.pi)
    mo2 = magnetic_counterexample(2.0)
    assert mo2.period == pytest.approx(np.pi)
    with pytest.raises(DomainError):
        magnetic_counterexample(0.0)


def test_magnetic_oracle_orbit_matches_integration():
    mo = magnetic_counterexample(1.5)
    traj = integrate_flow(mo.metric, mo.lam, mo.metric.unit_tangent(0.1, 0.2, 0.4),
                          (0.0, mo.period), rtol=1e-12, atol=1e-14)
    ts = np.linspace(0, mo.period, 9)
    oracle = mo.orbit_state(ts, (0.1, 0.2, 0.4))
    got = np.stack([traj.state(t) for t in ts])
    assert np.max(np.abs(got - oracle)) < 1e-9


def test_magnetic_oracle_jacobi_closed_form():
    mo = magnetic_counterexample(2.0)
    ts = np.linspace(0, np.pi, 33)
    x, y = mo.jacobi_xy(ts, 1.0, 0.5)
    assert np.max(np.abs(x - (np.cos(2 * ts) + 0.5 * 2 * np.sin(2 * ts)))) < 1e-14
    assert np.max(np.abs(y - (0.5 * np.cos(2 * ts) - 0.5 * np.sin(2 * ts)))) < 1e-14
    # x = -y' along the family
    h = 1e-6
    _, yp = mo.jacobi_xy(ts + h, 1.0, 0.5)
    _, ym = mo.jacobi_xy(ts - h, 1.0, 0.5)
    assert np.max(np.abs((yp - ym) / (2 * h) + x)) < 1e-8


# -- bump machinery -----------------------------------------------------------------


def test_smoothstep_endpoints_and_derivatives():
    S, S1, S2 = smoothstep_down(np.array([-0.5, 0.0, 0.5, 1.0, 1.5]))
    assert np.allclose(S, [1.0, 1.0, 0.5, 0.0, 0.0])
    assert np.allclose(S1[[0, 1, 3, 4]], 0.0)
    assert np.allclose(S2[[0, 1, 3, 4]], 0.0)


def test_chi_plateau_support_and_fd_derivatives():
    assert bump_chi(0.0)[0] == 1.0 and bump_chi(0.49)[0] == 1.0 and bump_chi(0.5)[0] == 1.0
    assert bump_chi(1.0)[0] == 0.0 and bump_chi(1.2)[0] == 0.0
    h = 1e-6
    for x in (0.6, -0.7, 0.85):
        c0, c1, c2 = (float(v) for v in bump_chi(x))
        fd1 = float((bump_chi(x + h)[0] - bump_chi(x - h)[0]) / (2 * h))
        fd2 = float((bump_chi(x + h)[0] - 2 * c0 + bump_chi(x - h)[0]) / h**2)
        assert abs(c1 - fd1) < 1e-6
        assert abs(c2 - fd2) < 1e-3


# -- flow-box perturbation ------------------------------------------------------------


@pytest.fixture
def bump_bundle(flat):
    v = flat.unit_tangent(0.375, 0.25, 0.0)
    return flowbox_perturbation(flat, GeneratorField.zero(), v, C=0.5, delta=0.05, eps=0.04)


def test_bump_on_core_value(bump_bundle):
    # chi == 1 on [-1/2, 1/2]: phi = sqrt(eps) exactly on the inner core
    b = bump_bundle.bump
    for x1 in (-0.2, 0.0, 0.125, 0.24):
        st = np.array([0.375 + x1, 0.25, 0.0])
        assert b.value(st) == pytest.approx(np.sqrt(0.04), abs=1e-15)


def test_bump_vanishes_outside_tube(bump_bundle):
    b = bump_bundle.bump
    assert b.value(np.array([0.375, 0.25 + 0.06, 0.0])) == 0.0
    assert b.value(np.array([0.375, 0.25, 0.2])) == 0.0


def test_bump_transverse_derivatives_vanish_on_core(flat, bump_bundle):
    b = bump_bundle.bump
    h = 1e-6
    st = np.array([0.5, 0.25, 0.0])
    _, H, V = flat.frame(st)
    for direction in (H, V):
        fd = (b.value(st + h * direction) - b.value(st - h * direction)) / (2 * h)
        assert abs(float(fd)) < 1e-6


def test_bump_jet_matches_fd(flat, bump_bundle):
    # generic off-core point inside the shell: compare jet slots to FD
    b = bump_bundle.bump
    st = np.array([0.55, 0.25 + 0.035, 0.012])
    jet = b.jet(flat, st)
    h = 1e-6

    def val(s):
        return float(b.value(s))

    for slot, direction in (("d1", [1, 0, 0]), ("d2", [0, 1, 0]), ("dth", [0, 0, 1])):
        d = np.array(direction, dtype=float)
        fd = (val(st + h * d) - val(st - h * d)) / (2 * h)
        assert abs(getattr(jet, slot) - fd) < 1e-5
    dth = np.array([0.0, 0.0, 1.0])
    d1 = np.array([1.0, 0.0, 0.0])
    fd_mixed = (
        val(st + h * (dth + d1)) - val(st + h * (dth - d1)) - val(st - h * (dth - d1)) + val(st - h * (dth + d1))
    ) / (4 * h**2)
    assert abs(jet.dth1 - fd_mixed) < 1e-3


def test_bump_wrap_periodicity(bump_bundle):
    b = bump_bundle.bump
    st = np.array([0.375 + 0.1, 0.25 + 0.02, 0.01])
    wrapped = st + np.array([3.0, -2.0, 2 * np.pi])
    assert b.value(st) == pytest.approx(b.value(wrapped), rel=1e-14)


def test_perturbation_requires_straight_base(flat):
    v = flat.unit_tangent(0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        flowbox_perturbation(flat, GeneratorField.constant(1.0), v, 0.5, 0.05, 0.01)


def test_perturbation_delta_injectivity_bound(flat):
    v = flat.unit_tangent(0.0, 0.0, 0.0)
    with pytest.raises(DomainError) as err:
        flowbox_perturbation(flat, GeneratorField.zero(), v, 0.5, 0.6, 0.01)
    assert "injectivity" in str(err.value)


def test_c2_norm_decreases_with_eps(flat):
    v = flat.unit_tangent(0.375, 0.25, 0.0)
    norms = [
        flowbox_perturbation(flat, GeneratorField.zero(), v, 0.5, 0.05, e).bump.c2_norm(24)
        for e in (0.1, 0.01, 0.001)
    ]
    assert norms[0] > norms[1] > norms[2]


def test_perturbed_generator_curvature_on_core(flat, bump_bundle):
    # on the core orbit: kappa_bar = eps chi(x1/C)^2 exactly (base lambda = 0)
    pert = bump_bundle.perturbed
    eps = 0.04
    for x1, chi_sq in ((0.0, 1.0), (0.125, 1.0)):
        st = np.array([0.375 + x1, 0.25, 0.0])
        from thermoflow.flow import curvature_pair

        _, kt = curvature_pair(flat, pert, st)
        assert abs(float(kt) - eps * chi_sq) < 1e-12


# -- the perturbation experiment -------------------------------------------------------


@pytest.fixture(scope="module")
def experiment_report():
    return theorem1_experiment(T=10.0, eps=0.1, delta=0.05)


def test_experiment_unperturbed_identity(experiment_report):
    rep = experiment_report
    assert abs(rep.index_unperturbed - 0.2) < 1e-8
    assert abs(rep.index_identity - 2.0 / rep.T) < 1e-8
    assert rep.identity_defect < 1e-8
    assert rep.green_gap < 1e-6
    assert rep.k * rep.C == pytest.approx(rep.T)


def test_experiment_negative_index_and_conjugate_pair(experiment_report):
    rep = experiment_report
    assert rep.index_perturbed_core < 0.0
    assert rep.status == "negative-index-with-conjugate-pair"
    assert rep.conjugate_time_core is not None
    assert rep.core_correction < 0.0
    assert all(c < 0.0 for c in rep.delta_interval_contributions)
    assert rep.realignment_defect < 1e-12


def test_experiment_reports_flow_deviation(experiment_report):
    # the true perturbed flow exits the tube; the report must carry that
    rep = experiment_report
    assert rep.flow_deviation_sup > rep.delta
    assert any("tube" in n for n in rep.notes)


def test_experiment_conjugate_scan_confirms(experiment_report):
    rep = experiment_report
    assert rep.conjugate_time_core < 2.0 * rep.T


def test_experiment_eps_zero(flat):
    rep = theorem1_experiment(T=5.0, eps=0.0, delta=0.05)
    assert rep.status == "positive-index"
    assert abs(rep.index_perturbed_core - 0.4) < 1e-9
    assert rep.conjugate_time_core is None


def test_experiment_weak_eps_inconclusive():
    rep = theorem1_experiment(T=5.0, eps=0.01, delta=0.05)
    assert rep.status == "inconclusive"
    assert rep.index_perturbed_core > 0.0


def test_experiment_requires_commensurate_T():
    with pytest.raises(DomainError):
        theorem1_experiment(T=5.3, eps=0.1, delta=0.05)
