from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

import capaf.fd as fd
from capaf.errors import InvalidInputError, ModelInvalidError
from capaf.norms import (EllipsoidNorm, IsotropicNorm, PerturbedNorm,
                         PerturbTerm, anisotropy_matrix, cahn_hoffman,
                         dual_norm, eval_norm, metric_g, norm_from_descriptor,
                         q_tensor, tangent_basis, unit_rows)

MODELS = ("iso3", "ell3", "pert3")


def sample_dirs(dim, count, seed=0):
    rng = np.random.default_rng(seed)
    return unit_rows(rng.normal(size=(count, dim)))


def test_eval_norm_unit_isotropic(model_factory):
    assert eval_norm(model_factory("iso3"), np.array([0.0, 0.0, 1.0])) == 1.0


def test_eval_norm_ellipsoid_axis(model_factory):
    assert eval_norm(model_factory("ell3diag"), np.array([0.0, 0.0, 1.0])) == pytest.approx(2.0)


@pytest.mark.parametrize("name", MODELS)
def test_homogeneity(model_factory, name):
    model = model_factory(name)
    x = sample_dirs(3, 20, seed=1)
    f1 = np.asarray(model.value(x))
    f2 = np.asarray(model.value(2.0 * x))
    assert np.max(np.abs(f2 / f1 - 2.0)) < 1e-12


def test_zero_vector_rejected(model_factory):
    with pytest.raises(InvalidInputError):
        eval_norm(model_factory("iso3"), np.zeros(3))
    with pytest.raises(InvalidInputError):
        dual_norm(model_factory("ell3"), np.zeros(3))


def test_cahn_hoffman_isotropic_identity(model_factory):
    x = sample_dirs(3, 10, seed=2)
    psi = cahn_hoffman(model_factory("iso3"), x)
    assert np.max(np.abs(psi - x)) < 1e-14


def test_cahn_hoffman_ellipsoid_axis(model_factory):
    psi = cahn_hoffman(model_factory("ell3diag"), np.array([0.0, 0.0, 1.0]))
    assert np.allclose(psi, [0.0, 0.0, 2.0], atol=1e-14)


def test_cahn_hoffman_nonunit_flag(model_factory):
    model = model_factory("ell3")
    with pytest.raises(InvalidInputError):
        model.cahn_hoffman(np.array([0.0, 0.0, 2.0]), on_nonunit="reject")
    a = model.cahn_hoffman(np.array([0.0, 0.0, 2.0]))
    b = model.cahn_hoffman(np.array([0.0, 0.0, 1.0]))
    assert np.allclose(a, b)


@pytest.mark.parametrize("name,tol", [("iso3", 1e-10), ("ell3", 1e-10), ("pert3", 1e-6)])
def test_euler_relation(model_factory, name, tol):
    model = model_factory(name)
    x = sample_dirs(3, 50, seed=3)
    psi = np.asarray(model.cahn_hoffman(x))
    dev = np.abs(np.einsum("bi,bi->b", psi, x) - np.asarray(model.value(x)))
    assert np.max(dev) < tol


@pytest.mark.parametrize("name", MODELS)
def test_wulff_membership(model_factory, name):
    # F0(Psi(x)) = 1 on the Wulff shape
    model = model_factory(name)
    x = sample_dirs(3, 100, seed=4)
    psi = np.asarray(model.cahn_hoffman(x))
    f0 = np.asarray(model.dual_value(psi))
    assert np.max(np.abs(f0 - 1.0)) < 1e-8


def test_anisotropy_isotropic_identity(model_factory):
    a = anisotropy_matrix(model_factory("iso3"), sample_dirs(3, 5, seed=5))
    assert np.max(np.abs(a - np.eye(2))) < 1e-13


def test_anisotropy_ellipsoid_axis(model_factory):
    basis = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    a = anisotropy_matrix(model_factory("ell3diag"), np.array([0.0, 0.0, 1.0]), basis=basis)
    assert np.allclose(a, 0.5 * np.eye(2), atol=1e-13)


@pytest.mark.parametrize("name", MODELS)
def test_anisotropy_symmetric_positive(model_factory, name):
    model = model_factory(name)
    a = np.asarray(model.anisotropy_matrix(sample_dirs(3, 40, seed=6)))
    assert np.max(np.abs(a - np.swapaxes(a, -1, -2))) < 1e-9
    assert np.min(np.linalg.eigvalsh(a)) > 0


def test_perturbed_fd_hessian_step_halving(model_factory):
    # central differences converge at second order toward the closed form
    model = model_factory("pert3")
    x = sample_dirs(3, 10, seed=7)
    exact = np.asarray(model.exact_hess(x))
    errs = []
    for h in (4e-3, 2e-3, 1e-3):
        approx, _ = fd.central_hessian(lambda p: np.asarray(model.value(p)), x, h,
                                       richardson=False)
        errs.append(np.max(np.abs(approx - exact)))
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_perturbed_validation_rejects_wild_amplitude():
    with pytest.raises(ModelInvalidError):
        PerturbedNorm(IsotropicNorm(3),
                      [PerturbTerm("bump", (0.0, 0.0, 1.0), 0.05, 0.8)])


def test_dual_norm_isotropic():
    assert dual_norm(IsotropicNorm(3), np.array([3.0, 4.0, 0.0])) == pytest.approx(5.0)


def test_dual_norm_ellipsoid_vs_numeric_sup(model_factory):
    # independent oracle: dense sample plus derivative-free polish
    model = model_factory("ell3diag")
    xi = np.array([0.0, 0.0, 1.0])
    dirs = sample_dirs(3, 4000, seed=8)
    phi = dirs @ xi / np.asarray(model.value(dirs))
    best = dirs[int(np.argmax(phi))]

    def neg_phi(ang):
        th, ph = ang
        y = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        return -float(y @ xi) / float(model.value(y))

    th0 = np.arccos(np.clip(best[2], -1, 1))
    ph0 = np.arctan2(best[1], best[0])
    res = minimize(neg_phi, np.array([th0, ph0]), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 600})
    numeric_sup = -res.fun
    assert numeric_sup == pytest.approx(0.5, abs=1e-8)
    assert dual_norm(model, xi) == pytest.approx(numeric_sup, abs=1e-8)


@pytest.mark.parametrize("name", MODELS)
def test_dual_homogeneity(model_factory, name):
    model = model_factory(name)
    xi = 1.7 * sample_dirs(3, 20, seed=9)
    f1 = np.asarray(model.dual_value(xi))
    f2 = np.asarray(model.dual_value(3.0 * xi))
    assert np.max(np.abs(f2 / f1 - 3.0)) < 1e-9


def test_metric_isotropic_identity(model_factory):
    g = metric_g(model_factory("iso3"), sample_dirs(3, 4, seed=10))
    assert np.max(np.abs(g - np.eye(3))) < 1e-14


def test_metric_ellipsoid_constant(model_factory):
    model = model_factory("ell3diag")
    g = np.asarray(metric_g(model, 2.0 * sample_dirs(3, 6, seed=11)))
    assert np.max(np.abs(g - np.diag([1.0, 1.0, 0.25]))) < 1e-13
    q = np.asarray(q_tensor(model, sample_dirs(3, 3, seed=12)))
    assert np.max(np.abs(q)) == 0.0


def test_metric_identity_on_wulff_perturbed(model_factory):
    model = model_factory("pert3")
    x = sample_dirs(3, 100, seed=13)
    psi = np.asarray(model.cahn_hoffman(x))
    g = np.asarray(model.metric_on_wulff(psi, x))
    vals = np.einsum("bi,bij,bj->b", psi, g, psi)
    assert np.max(np.abs(vals - 1.0)) < 1e-6


def test_metric_tangent_identity_oracle(model_factory):
    # G(A_F u, A_F v) = <u, A_F v>/F cross-checks the FD metric route
    model = model_factory("pert3")
    x = sample_dirs(3, 30, seed=14)
    tb = tangent_basis(x)
    a = np.asarray(model.anisotropy_matrix(x, basis=tb))
    g = np.asarray(model.metric_on_wulff(np.asarray(model.cahn_hoffman(x)), x))
    f = np.asarray(model.value(x))
    au = np.einsum("bkl,bld->bkd", a, tb)
    lhs = np.einsum("bkd,bde,ble->bkl", au, g, au)
    assert np.max(np.abs(lhs - a / f[:, None, None])) < 1e-5


def test_q_tensor_radial_contraction_perturbed(model_factory):
    model = model_factory("pert3")
    x = sample_dirs(3, 5, seed=15)
    psi = np.asarray(model.cahn_hoffman(x))
    q = np.asarray(model.q_on_wulff(psi, x))
    contraction = np.einsum("bijk,bk->bij", q, psi)
    assert np.max(np.abs(contraction)) < 5e-4


def test_descriptor_roundtrip(model_factory):
    for name in MODELS:
        model = model_factory(name)
        clone = norm_from_descriptor(model.descriptor())
        x = sample_dirs(model.dim, 10, seed=16)
        assert np.allclose(np.asarray(model.value(x)), np.asarray(clone.value(x)),
                           rtol=0, atol=0)


def test_anisotropy_condition_diagnostic(model_factory):
    cond = model_factory("ell3").anisotropy_condition()
    assert 1.0 < cond < 10.0


@settings(max_examples=30, deadline=None)
@given(t=st.floats(min_value=0.01, max_value=50.0))
def test_homogeneity_property(t):
    model = EllipsoidNorm(np.array([[1.0, 0.0, 0.2], [0.0, 1.2, 0.0], [0.2, 0.0, 0.9]]))
    x = np.array([0.3, -0.5, 0.81])
    assert float(model.value(t * x)) == pytest.approx(t * float(model.value(x)), rel=1e-12)
