import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alflow.rheology import (FAMILIES, ActivatedEuler, BinghamBE, BinghamPapanastasiou, CarreauYasuda,
                             EulerPowerLaw, Newtonian, eff_viscosity, eff_viscosity_field, eval_dG,
                             eval_G, make_model, sqnorm)

MODELS = [
    Newtonian(nu=0.3),
    CarreauYasuda(nu=0.2, r1=1.8, r2=2.5, beta1=0.9, beta2=0.5, Gamma1=3.0, Gamma2=2.0),
    CarreauYasuda(nu=1.0, r1=1.2, r2=2.5, beta1=0.5, beta2=0.0, Gamma1=10.0, Gamma2=10.0),
    BinghamBE(nu=1.0, tau_y=1.0, eps=0.1),
    BinghamPapanastasiou(nu=0.5, tau_y=2.0, eps=0.3),
    ActivatedEuler(nu=0.7, tau_y=1.5, eps=0.2),
    EulerPowerLaw(nu=0.5, r=1.3, tau_y=3.0, eps=0.1),
    EulerPowerLaw(nu=0.5, r=2.5, tau_y=0.0, eps=0.1),
]


def fd_derivatives(model, s, d, h=1e-7):
    dS = np.zeros((2, 2))
    dD = np.zeros((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h * (1 + np.abs(np.r_[s, d]).max())
        dS[:, j] = (model.G(s + e, d) - model.G(s - e, d)) / (2 * e[j])
        dD[:, j] = (model.G(s, d + e) - model.G(s, d - e)) / (2 * e[j])
    return dS, dD


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_origin(model):
    assert np.all(eval_G(model, np.zeros(2), np.zeros(2)) == 0.0)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_derivatives_match_finite_differences(model):
    rng = np.random.default_rng(7)
    for _ in range(100):
        s, d = rng.standard_normal(2), rng.standard_normal(2)
        dS, dD = eval_dG(model, s, d)
        fS, fD = fd_derivatives(model, s, d)
        assert np.linalg.norm(dS - fS) <= 1e-6 * max(np.linalg.norm(dS), 1.0)
        assert np.linalg.norm(dD - fD) <= 1e-6 * max(np.linalg.norm(dD), 1.0)


def test_vectorized_evaluation_matches_pointwise():
    rng = np.random.default_rng(2)
    s, d = rng.standard_normal((4, 5, 2)), rng.standard_normal((4, 5, 2))
    for model in MODELS:
        G = model.G(s, d)
        dS, dD = model.dG(s, d)
        assert G.shape == (4, 5, 2) and dS.shape == dD.shape == (4, 5, 2, 2)
        i, j = 2, 3
        assert np.allclose(G[i, j], model.G(s[i, j], d[i, j]))
        assert np.allclose(dD[i, j], model.dG(s[i, j], d[i, j])[1])


def test_carreau_newtonian_reductions():
    rng = np.random.default_rng(0)
    s, d = rng.standard_normal(2), rng.standard_normal(2)
    nu = 0.4
    for m in (CarreauYasuda(nu=nu, r1=2, r2=2, beta1=0.3, beta2=0.1),
              CarreauYasuda(nu=nu, r1=1.5, r2=3.0, beta1=1, beta2=1)):
        assert np.allclose(m.G(s, d), d - s / (2 * nu))
        assert np.allclose(m.G(2 * nu * d, d), 0)


def test_bingham_be_origin():
    assert np.all(BinghamBE(nu=1, tau_y=1, eps=1).G(np.zeros(2), np.zeros(2)) == 0)


def test_euler_power_law_coefficient():
    # scalar oracle computed by hand: |S| = 1, nu = 0.5, r = 1.3
    m = EulerPowerLaw(nu=0.5, r=1.3, tau_y=3.0, eps=1e-5)
    s = np.array([1 / np.sqrt(2), 0.0])
    assert sqnorm(s) == pytest.approx(1.0)
    rp = 1.3 / 0.3
    expected = (1 / (2 * 0.5)) * (1 / (2 * 0.5)) ** (rp - 2) + 3.0 / np.sqrt(1e-10 + 1)
    assert -m.G(s, np.zeros(2))[0] / s[0] == pytest.approx(expected, rel=1e-12)


def test_newtonian_derivatives():
    dS, dD = Newtonian(nu=0.25).dG(np.ones(2), np.ones(2))
    assert np.allclose(dD, np.eye(2))
    assert np.allclose(dS, -2 * np.eye(2))


def test_activated_euler_derivative_formula():
    nu, ty, eps = 0.7, 1.5, 0.2
    m = ActivatedEuler(nu=nu, tau_y=ty, eps=eps)
    s = np.array([0.3, -0.8])
    dS, _ = m.dG(s, np.zeros(2))
    # tensor form, reduced to components: T:E_j = 2 t_j, so S (x) S -> 2 s s^T
    q = eps**2 + sqnorm(s)
    expected = -np.eye(2) / (2 * nu) - ty / np.sqrt(q) * (np.eye(2) - 2 * np.outer(s, s) / q)
    assert np.allclose(dS, expected, rtol=1e-12)


def test_papanastasiou_small_d_branch():
    m = BinghamPapanastasiou(nu=1.0, tau_y=2.0, eps=0.5)
    s = np.zeros(2)
    d_small = np.array([1e-10, 0.0])
    d_big = np.array([1e-6, 0.0])
    # continuity across the switch and the limit tau_y/eps
    assert -m.G(s, d_small)[0] == pytest.approx(0.0, abs=1e-9)
    assert m.G(s, d_small)[0] / d_small[0] == pytest.approx(2.0 / 0.5, rel=1e-6)
    assert m.G(s, d_big)[0] / d_big[0] == pytest.approx(2.0 / 0.5, rel=1e-5)
    assert np.all(np.isfinite(m.dG(s, np.zeros(2))[1]))


def test_eff_viscosity_examples():
    z = np.zeros(2)
    assert eff_viscosity(CarreauYasuda(nu=0.3, r1=1.5, r2=2.5, beta1=0.5, beta2=0.2), z, z) == pytest.approx(0.3)
    fig1 = CarreauYasuda(nu=1, r1=1.2, r2=2.5, beta1=0.5, beta2=0, Gamma1=10, Gamma2=10)
    assert eff_viscosity(fig1, z, z) == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    s, d = rng.standard_normal((10, 2)), rng.standard_normal((10, 2))
    assert np.allclose(eff_viscosity(Newtonian(nu=2.5), s, d), 2.5)


def test_eff_viscosity_field_guard():
    m = Newtonian(nu=0.5)
    d = np.array([[0.2, 0.1], [0.0, 0.0]])
    s = 2 * 0.5 * d
    mu = eff_viscosity_field(m, s, d)
    assert mu == pytest.approx([0.5, 0.5])
    pl = EulerPowerLaw(nu=0.5, r=1.5, tau_y=0.0)
    assert np.isinf(eff_viscosity_field(pl, np.zeros(2), np.zeros(2)))


def test_make_model():
    m = make_model("carreau", nu="0.2", r1=1.8)
    assert isinstance(m, CarreauYasuda) and m.nu == 0.2
    assert set(FAMILIES) == {"newtonian", "carreau", "bingham-be", "bingham-papanastasiou",
                             "activated-euler", "euler-power-law"}
    with pytest.raises(ValueError):
        make_model("maxwell")
    with pytest.raises(ValueError):
        make_model("newtonian", tau_y=1)


@pytest.mark.parametrize("bad", [dict(nu=0), dict(r1=1.0), dict(beta1=1.5), dict(Gamma2=-1)])
def test_carreau_parameter_ranges(bad):
    with pytest.raises(ValueError):
        CarreauYasuda(**bad)


@pytest.mark.parametrize("cls", [BinghamBE, BinghamPapanastasiou, ActivatedEuler])
def test_regularized_parameter_ranges(cls):
    with pytest.raises(ValueError):
        cls(eps=0.0)
    with pytest.raises(ValueError):
        cls(tau_y=-1.0)


carreau_params = st.fixed_dictionaries(dict(
    nu=st.floats(0.01, 10), r1=st.floats(1.05, 4), r2=st.floats(1.05, 4),
    beta1=st.floats(0, 1), beta2=st.floats(0, 1), Gamma1=st.floats(0.01, 100), Gamma2=st.floats(0.01, 100)))
tensors = st.lists(st.floats(-5, 5), min_size=4, max_size=4)


@settings(max_examples=100, deadline=None)
@given(carreau_params, tensors)
def test_carreau_pointwise_definiteness(params, sd):
    m = CarreauYasuda(**params)
    dS, dD = m.dG(np.array(sd[:2]), np.array(sd[2:]))
    assert np.linalg.eigvalsh(0.5 * (dD + dD.T)).min() > 0
    assert np.linalg.eigvalsh(-0.5 * (dS + dS.T)).min() > 0


@settings(max_examples=100, deadline=None)
@given(carreau_params, tensors)
def test_carreau_monotone_graph(params, dd):
    params["beta2"] = 1.0
    m = CarreauYasuda(**params)
    d1, d2 = np.array(dd[:2]), np.array(dd[2:])

    def stress(d):
        al, be = m.alpha_beta(np.zeros(2), d)
        return al / be * d

    ds, dD = stress(d1) - stress(d2), d1 - d2
    assert 2 * np.dot(ds, dD) >= -1e-9 * (1 + np.abs(ds).max() * np.abs(dD).max())
