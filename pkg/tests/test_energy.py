import numpy as np
import pytest

from core.catalog import CATALOG_CONFIG, lookup
from core.energy import (
    DerivativeMode,
    Domain,
    EnergyDomainError,
    EnergyEvaluationError,
    NotIsotropicError,
    NotSymmetricError,
    Representation,
    ScalarProfile,
    energy_from_definition,
    eval_energy,
    evaluate_batch,
    extract_phi,
    invariant_psi_energy,
    matrix_energy,
    phi_from_h,
    phi_from_psi,
    psi_from_phi,
    shear_phi_energy,
    singular_g_energy,
    to_phi,
    to_psi,
    with_domain,
)
from core.exprparse import ExprSyntaxError, UnknownNameError
from core.isochoric import as_isochoric
from core.tensor2 import Mat2, batch_norm_sq, batch_shear_amplitude, random_sl2

GAMMAS = np.linspace(0.1, 3.0, 30)


def test_phi_from_psi_neo_hooke():
    phi = phi_from_psi(lookup("neo-hooke-inc").energy.payload)
    np.testing.assert_allclose(phi(GAMMAS), GAMMAS ** 2, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(phi.derivative(GAMMAS, 1), 2.0 * GAMMAS, rtol=1e-12)
    np.testing.assert_allclose(phi.derivative(GAMMAS, 2), 2.0, rtol=1e-12)
    assert phi.derivative_mode is DerivativeMode.ANALYTIC


def test_psi_from_phi_linear_profile():
    psi = psi_from_phi(lookup("counterexample-inc").energy.payload)
    I = 2.0 + GAMMAS ** 2
    np.testing.assert_allclose(psi(I), GAMMAS, rtol=1e-12)
    np.testing.assert_allclose(psi.derivative(I, 1), 0.5 / GAMMAS, rtol=1e-12)
    np.testing.assert_allclose(psi.derivative(I, 2), -0.25 / GAMMAS ** 3, rtol=1e-12)
    with pytest.raises(EnergyDomainError):
        psi(1.5)


def test_phi_from_h_ratio_energy():
    phi = phi_from_h(lookup("iso-ratio").energy.payload)
    np.testing.assert_allclose(phi(GAMMAS), GAMMAS ** 2 + 2.0, rtol=1e-12)
    np.testing.assert_allclose(phi.derivative(GAMMAS, 1), 2.0 * GAMMAS, rtol=1e-10)
    np.testing.assert_allclose(phi.derivative(GAMMAS, 2), 2.0, rtol=1e-10)


def test_phi_from_h_counterexample_is_linear():
    phi = phi_from_h(lookup("counterexample-iso").energy.payload)
    np.testing.assert_allclose(phi(GAMMAS), GAMMAS, rtol=1e-12)
    np.testing.assert_allclose(phi.derivative(GAMMAS, 1), 1.0, rtol=1e-10)
    np.testing.assert_allclose(phi.derivative(GAMMAS, 2), 0.0, atol=1e-10)


def test_to_psi_of_ratio_energy_is_identity():
    psi = to_psi(lookup("iso-ratio").energy)
    I = np.linspace(2.1, 10.0, 20)
    np.testing.assert_allclose(psi(I), I, rtol=1e-12)


def test_eval_energy_on_shear():
    neo = lookup("neo-hooke-inc").energy
    assert eval_energy(neo, Mat2.shear(2.0)) == 4.0
    assert eval_energy(neo, Mat2.identity()) == 0.0


def test_evaluate_batch_rejects_outside_domain():
    neo = lookup("neo-hooke-inc").energy
    with pytest.raises(EnergyDomainError):
        eval_energy(neo, Mat2.diag(2.0, 1.0))
    with pytest.raises(EnergyDomainError):
        eval_energy(neo, Mat2.diag(-1.0, 1.0))
    relaxed = with_domain(neo, Domain.GLPLUS2)
    assert eval_energy(relaxed, Mat2.diag(2.0, 1.0)) == pytest.approx(1.0)


def test_evaluate_batch_shape(rng):
    Fs = random_sl2(rng, 12).reshape(3, 4, 2, 2)
    values = evaluate_batch(lookup("fung-inc").energy, Fs)
    assert values.shape == (3, 4)


def test_matrix_energy_matches_invariant_form(rng):
    W = matrix_energy("neo-matrix", lambda F: batch_norm_sq(F) - 2.0, Domain.SL2)
    Fs = random_sl2(rng, 200)
    np.testing.assert_allclose(
        evaluate_batch(W, Fs), evaluate_batch(lookup("neo-hooke-inc").energy, Fs), rtol=1e-10, atol=1e-12
    )
    phi = to_phi(W)
    assert phi.derivative_mode is DerivativeMode.FINITE_DIFFERENCE
    assert phi(2.0) == pytest.approx(4.0, rel=1e-12)
    assert phi.derivative(2.0, 1) == pytest.approx(4.0, rel=1e-8)
    assert phi.derivative(2.0, 2) == pytest.approx(2.0, rel=1e-6)


@pytest.mark.parametrize("name", list(CATALOG_CONFIG))
def test_representations_agree_on_sl2(name, rng):
    energy = lookup(name).energy
    phi, psi = to_phi(energy), to_psi(energy)
    forms = [
        shear_phi_energy(name, phi),
        invariant_psi_energy(name, psi),
        matrix_energy(name, lambda F: phi(batch_shear_amplitude(F)), Domain.SL2, validate=False),
    ]
    Fs = random_sl2(rng, 1000)
    # у I − 2 вблизи единицы теряются знаки, а √γ этого не прощает
    Fs = Fs[batch_shear_amplitude(Fs) >= 1e-3]
    reference = evaluate_batch(energy, Fs)
    for form in forms:
        values = evaluate_batch(form, Fs)
        assert np.all(np.abs(values - reference) <= 1e-10 * np.maximum(1.0, np.abs(reference))), form.representation


@pytest.mark.parametrize("name", list(CATALOG_CONFIG))
def test_extract_phi_recovers_shear_profile(name):
    phi = to_phi(lookup(name).energy)
    W = matrix_energy(name, lambda F: phi(batch_shear_amplitude(F)), Domain.SL2, validate=False)
    gamma = np.linspace(0.0, 6.0, 601)
    np.testing.assert_allclose(extract_phi(W)(gamma), phi(gamma), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("name", list(CATALOG_CONFIG))
def test_phi_from_h_matches_shear_of_isochoric_energy(name):
    iso = as_isochoric(lookup(name).energy)
    W = matrix_energy(name, iso.evaluate_batch, Domain.GLPLUS2, validate=False)
    gamma = np.linspace(0.0, 6.0, 121)
    np.testing.assert_allclose(phi_from_h(iso.h)(gamma), extract_phi(W)(gamma), rtol=1e-10, atol=1e-12)


def test_matrix_energy_rejects_anisotropic():
    with pytest.raises(NotIsotropicError):
        matrix_energy("aniso", lambda F: F[..., 0, 0] ** 2, Domain.SL2)


def test_extract_phi_reports_offending_gamma():
    W = matrix_energy("fragile", lambda F: np.log(3.0 - batch_norm_sq(F)), Domain.SL2, validate=False)
    with pytest.raises(EnergyEvaluationError) as excinfo:
        to_phi(W)(np.array([0.5, 2.0]))
    assert excinfo.value.argument == 2.0


def test_singular_g_symmetry():
    with pytest.raises(NotSymmetricError):
        singular_g_energy("skew", lambda a, b: a + 2.0 * b)
    g = singular_g_energy("ratio", lambda a, b: a / b + b / a)
    assert eval_energy(g, Mat2.diag(2.0, 1.0)) == pytest.approx(2.5)


def test_scalar_profile_domain_and_finiteness():
    psi = lookup("neo-hooke-inc").energy.payload
    with pytest.raises(EnergyDomainError) as excinfo:
        psi(1.0)
    assert excinfo.value.argument == 1.0

    h = lookup("iso-ratio").energy.payload
    with pytest.raises(EnergyDomainError):
        h(0.0)

    broken = ScalarProfile(lambda x: np.log(x - 1.0))
    with pytest.raises(EnergyEvaluationError) as excinfo:
        broken(np.array([2.0, 0.5]))
    assert excinfo.value.argument == 0.5

    with pytest.raises(ValueError):
        psi.derivative(3.0, order=3)


def test_finite_difference_derivatives():
    profile = ScalarProfile(np.exp)
    x = np.linspace(0.5, 3.0, 11)
    np.testing.assert_allclose(profile.derivative(x, 1), np.exp(x), rtol=1e-8)
    np.testing.assert_allclose(profile.derivative(x, 2), np.exp(x), rtol=1e-6)


def test_one_sided_differences_at_domain_boundary():
    square = ScalarProfile(lambda x: x ** 2)
    assert square.derivative(0.0, 1) == pytest.approx(0.0, abs=1e-8)
    assert square.derivative(0.0, 2) == pytest.approx(2.0, rel=1e-6)
    cube = ScalarProfile(lambda x: x ** 3)
    assert cube.derivative(1e-5, 1) == pytest.approx(3e-10, abs=1e-9)


@pytest.mark.parametrize(
    "text, representation, domain, expression",
    [
        ("phi: gamma^2", Representation.SHEAR_PHI, Domain.SL2, "phi: gamma^2.0"),
        ("psi: I - 2", Representation.INVARIANT_PSI, Domain.SL2, "psi: I - 2.0"),
        ("h: t + 1/t", Representation.RATIO_H, Domain.GLPLUS2, "h: t + 1.0 / t"),
        ("g: l1/l2 + l2/l1", Representation.SINGULAR_G, Domain.GLPLUS2, "g: l1 / l2 + l2 / l1"),
        ("# профиль сдвига\nphi:\n  gamma  # линейный", Representation.SHEAR_PHI, Domain.SL2, "phi: gamma"),
    ],
)
def test_energy_from_definition(text, representation, domain, expression):
    energy = energy_from_definition(text)
    assert energy.representation is representation
    assert energy.claimed_domain is domain
    assert energy.expression == expression
    assert energy.name == expression


def test_energy_from_definition_values():
    energy = energy_from_definition("phi: gamma^2", name="square")
    assert energy.name == "square"
    assert eval_energy(energy, Mat2.shear(1.5)) == pytest.approx(2.25, rel=1e-12)


@pytest.mark.parametrize(
    "text, error",
    [
        ("gamma^2", ExprSyntaxError),
        ("w: gamma", ExprSyntaxError),
        ("phi: gamma +", ExprSyntaxError),
        ("psi: gamma", UnknownNameError),
        ("g: l1 - l2", NotSymmetricError),
    ],
)
def test_energy_from_definition_errors(text, error):
    with pytest.raises(error):
        energy_from_definition(text)
