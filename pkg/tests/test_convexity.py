import math

import numpy as np
import pytest

from core.catalog import CATALOG_CONFIG, catalog, lookup, random_phi_family
from core.convexity import (
    SL2_CRITERIA,
    KernelInvariantError,
    NonUnitDirectionError,
    abeyaratne_check,
    acoustic_quadratic,
    acoustic_tensor,
    agreement_diagnostics,
    analyze,
    detect_kinks,
    dfz_check,
    divided_differences,
    e_matrix,
    e_matrix_check,
    e_matrix_sweep,
    elasticity_tensor,
    even_extension_defect,
    fd_acoustic_tensor,
    lh_quartic,
    rank_one_oracle,
    segment_oracle,
    shear_convexity_check,
)
from core.energy import Domain, energy_from_definition, evaluate_batch, matrix_energy, to_phi, to_psi
from core.schemas import CriterionResult, Verdict
from core.tensor2 import (
    Mat2,
    NotSpecialLinearError,
    batch_norm_sq,
    random_sl2,
    random_unit_vectors,
)

SMOOTH = [name for name, meta in CATALOG_CONFIG.items() if meta["smooth_psi"]]
# у iso-ratio ψ собрана из h через γ и λ, округление мешает разностному гессиану
FD_CHECKED = [name for name in SMOOTH if name != "iso-ratio"]


def stretch(gamma: float) -> float:
    return 0.5 * (gamma + math.sqrt(gamma ** 2 + 4.0))


def assert_consistent(report, expected: bool):
    verdict = Verdict.HOLDS if expected else Verdict.FAILS
    for criterion in SL2_CRITERIA:
        assert report.verdicts[criterion] is verdict, criterion
    assert report.hard_disagreements == []
    for result in report.results:
        if result.boundary:
            assert abs(result.min_slack) <= 10 * result.tolerance
        if result.verdict is Verdict.FAILS:
            assert result.witnesses


@pytest.mark.parametrize("name", list(CATALOG_CONFIG))
def test_catalog_verdicts_on_sl2(name, fast_cfg):
    entry = lookup(name)
    report = analyze(entry.energy, Domain.SL2, fast_cfg)
    assert report.domain == "SL2"
    assert_consistent(report, entry.expected["sl2_rank_one"])
    assert entry.expected["sl2_polyconvex"] == entry.expected["sl2_rank_one"]


@pytest.mark.parametrize("name", ["counterexample-iso", "counterexample-inc"])
def test_counterexample_sits_on_the_boundary(name, fast_cfg):
    report = analyze(lookup(name).energy, Domain.SL2, fast_cfg)
    assert report.result("abeyaratne").boundary
    assert report.result("e_matrix").boundary
    assert report.all_hold


def test_random_family_agrees_with_expectations(fast_cfg):
    members = random_phi_family(seed=99, count=20)
    assert [m.kind for m in members[:3]] == ["convex-polynomial", "negated-polynomial", "log-concave"]
    for member in members:
        report = analyze(member.energy, Domain.SL2, fast_cfg)
        assert_consistent(report, member.expected_sl2)


def test_random_family_is_reproducible():
    first = [m.energy.description for m in random_phi_family(seed=5, count=9)]
    second = [m.energy.description for m in random_phi_family(seed=5, count=9)]
    assert first == second


def test_dfz_witnesses(fast_cfg):
    neg = dfz_check(to_phi(lookup("phi-neg").energy), fast_cfg)
    assert neg.verdict is Verdict.FAILS
    assert neg.witnesses[0].kind == "gamma-pair"
    assert neg.witnesses[0].margin > 0

    concave = dfz_check(to_phi(lookup("phi-sqrt").energy), fast_cfg)
    assert concave.verdict is Verdict.FAILS
    assert {w.kind for w in concave.witnesses} == {"gamma-triple"}
    assert len(concave.witnesses[0].points) == 3


def test_abeyaratne_on_square_root_invariant_profile(fast_cfg):
    energy = energy_from_definition("psi: sqrt(I - 2)")
    result = abeyaratne_check(to_psi(energy), fast_cfg)
    assert result.verdict is Verdict.HOLDS
    assert result.boundary
    assert result.derivative_mode == "finite-difference"
    assert result.tolerance == fast_cfg.tau_fd


def test_matrix_energy_analysis(fast_cfg):
    W = matrix_energy("neo-matrix", lambda F: batch_norm_sq(F) - 2.0, Domain.SL2)
    report = analyze(W, Domain.SL2, fast_cfg)
    assert_consistent(report, True)
    assert even_extension_defect(to_phi(W), W, fast_cfg) < 1e-12


def test_shear_convexity_of_linear_profile(fast_cfg):
    result = shear_convexity_check(lookup("counterexample-inc").energy, fast_cfg)
    assert result.verdict is Verdict.HOLDS
    assert result.notes and "gamma" in result.notes[0]


def test_divided_differences_on_nonuniform_grid():
    x = np.array([0.0, 0.1, 0.4, 0.5, 1.3, 2.0])
    dd1, _, dd2, _ = divided_differences(x, x ** 2)
    np.testing.assert_allclose(dd1, x[:-1] + x[1:], rtol=1e-12)
    np.testing.assert_allclose(dd2, 2.0, rtol=1e-12)


def test_detect_kinks():
    x = np.linspace(0.0, 1.0, 101)
    assert list(detect_kinks(x, np.abs(x - 0.5))) == [50]
    assert detect_kinks(x, x ** 2).size == 0


# --- Акустический тензор и квартика ---

def test_neo_hooke_acoustic_tensor_is_constant(rng):
    psi = to_psi(lookup("neo-hooke-inc").energy)
    Fs = random_sl2(rng, 50)
    etas = random_unit_vectors(rng, 50)
    for F, eta in zip(Fs, etas):
        Q = acoustic_tensor(psi, Mat2.from_array(F), eta).Q
        assert Q.distance(Mat2.diag(2.0, 2.0)) < 1e-12


def test_elasticity_tensor_symmetry():
    psi = to_psi(lookup("fung-inc").energy)
    C = elasticity_tensor(psi, Mat2.shear(1.0) @ Mat2.rotation(0.4))
    np.testing.assert_allclose(C, np.transpose(C, (2, 3, 0, 1)), atol=1e-14)


@pytest.mark.parametrize("name", FD_CHECKED)
def test_acoustic_tensor_matches_finite_differences(name, rng):
    psi = to_psi(lookup(name).energy)
    Fs = random_sl2(rng, 400)
    Fs = Fs[batch_norm_sq(Fs) >= 2.05][:200]
    etas = random_unit_vectors(rng, len(Fs))
    for F, eta in zip(Fs, etas):
        F = Mat2.from_array(F)
        analytic = acoustic_tensor(psi, F, eta).Q
        numeric = fd_acoustic_tensor(psi, F, eta)
        scale = max(1.0, max(abs(v) for v in analytic.as_array().ravel()))
        assert analytic.distance(numeric) <= 1e-6 * scale


@pytest.mark.parametrize("name", SMOOTH)
def test_acoustic_quadratic_is_twice_the_quartic(name):
    psi = to_psi(lookup(name).energy)
    for gamma in (0.3, 1.0, 2.5):
        lam1 = stretch(gamma)
        lam2 = 1.0 / lam1
        for angle in np.linspace(0.0, np.pi, 13):
            eta = (math.cos(angle), math.sin(angle))
            quartic = lh_quartic(psi, lam1, lam2, eta).expanded
            quadratic = acoustic_quadratic(psi, Mat2.diag(lam1, lam2), eta)
            assert quadratic == pytest.approx(2.0 * quartic, rel=1e-9, abs=1e-12)


def test_printed_quartic_differs_from_expanded():
    psi = to_psi(lookup("neo-hooke-inc").energy)
    eta = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
    quartic = lh_quartic(psi, 2.0, 0.5, eta)
    assert quartic.expanded == pytest.approx(2.125, rel=1e-12)
    assert quartic.printed == pytest.approx(4.515625, rel=1e-12)
    assert quartic.discrepancy == pytest.approx(2.390625, rel=1e-12)


def test_quartic_matches_e_matrix_form():
    psi = to_psi(lookup("fung-inc").energy)
    lam1 = stretch(1.7)
    m = e_matrix(psi, lam1, 1.0 / lam1)
    for angle in np.linspace(0.0, np.pi, 9):
        e1, e2 = math.cos(angle), math.sin(angle)
        quartic = lh_quartic(psi, lam1, 1.0 / lam1, (e1, e2)).expanded
        form = m.e11 * e1 ** 4 + 2.0 * m.e12 * e1 ** 2 * e2 ** 2 + m.e22 * e2 ** 4
        assert quartic == pytest.approx(float(form), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize(
    "name, gamma",
    [("neo-hooke-inc", 1.0), ("hencky-inc", 1.0), ("hencky-inc", 4.0), ("phi-sqrt", 1.0), ("fung-inc", 3.0)],
)
def test_copositivity_agrees_with_quartic_minimum(name, gamma):
    psi = to_psi(lookup(name).energy)
    lam1 = stretch(gamma)
    lam2 = 1.0 / lam1
    angles = np.linspace(0.0, np.pi, 721)
    lowest = min(lh_quartic(psi, lam1, lam2, (math.cos(a), math.sin(a))).expanded for a in angles)
    verdict = e_matrix_check(psi, lam1, lam2)
    assert (verdict is Verdict.FAILS) == (lowest < 0.0)


@pytest.mark.parametrize("name", ["phi-neg", "phi-sqrt"])
def test_e_matrix_witness_carries_violated_margin(name, fast_cfg):
    psi = to_psi(lookup(name).energy)
    result = e_matrix_sweep(psi, fast_cfg)
    assert result.verdict is Verdict.FAILS
    assert len(result.witnesses) == 1
    witness = result.witnesses[0]
    assert witness.margin > result.tolerance
    m = e_matrix(psi, *witness.points)
    diagonal = min(float(m.e11), float(m.e22))
    if diagonal < 0.0:
        assert witness.margin == pytest.approx(-diagonal)
    else:
        assert float(m.e12) < 0.0 and float(m.det) < 0.0


def test_quartic_argument_validation():
    psi = to_psi(lookup("neo-hooke-inc").energy)
    with pytest.raises(NotSpecialLinearError):
        lh_quartic(psi, 2.0, 1.0, (1.0, 0.0))
    with pytest.raises(NonUnitDirectionError):
        lh_quartic(psi, 2.0, 0.5, (1.0, 1.0))
    with pytest.raises(NotSpecialLinearError):
        acoustic_tensor(psi, Mat2.diag(2.0, 1.0), (1.0, 0.0))
    normalized = acoustic_tensor(psi, Mat2.identity(), (3.0, 4.0), normalize=True)
    assert normalized.Q.distance(Mat2.diag(2.0, 2.0)) < 1e-12


# --- Оракул ---

def test_oracle_is_independent_of_worker_count(fast_cfg):
    energy = lookup("hencky-inc").energy
    single = rank_one_oracle(energy, fast_cfg)
    threaded = rank_one_oracle(energy, fast_cfg.model_copy(update={"oracle_workers": 4}))
    assert single.model_dump() == threaded.model_dump()


def test_oracle_witnesses(fast_cfg):
    result = rank_one_oracle(lookup("phi-neg").energy, fast_cfg)
    assert result.verdict is Verdict.FAILS
    ratios = [w.margin / w.scale for w in result.witnesses]
    assert ratios == sorted(ratios, reverse=True)
    for witness in result.witnesses:
        F = Mat2.from_array(witness.F)
        assert F.det() == pytest.approx(1.0, abs=1e-12)
        xi_dot = np.dot(witness.xi, F.inverse_T().apply(witness.eta))
        assert xi_dot == pytest.approx(0.0, abs=1e-10)
        c_minus, c, c_plus = witness.t_triple
        assert c - c_minus == pytest.approx(c_plus - c)


@pytest.mark.parametrize("name", ["phi-neg", "phi-sqrt", "hencky-inc"])
def test_oracle_witnesses_reproduce(name, fast_cfg):
    energy = lookup(name).energy
    result = rank_one_oracle(energy, fast_cfg)
    assert result.verdict is Verdict.FAILS
    assert result.witnesses
    for witness in result.witnesses:
        F = np.asarray(witness.F)
        H = np.outer(witness.xi, witness.eta)
        values = evaluate_batch(energy, np.stack([F + t * H for t in witness.t_triple]))
        violation = values[1] - 0.5 * (values[0] + values[2])
        assert violation == pytest.approx(witness.margin, rel=1e-9, abs=1e-12)
        assert violation / witness.scale >= fast_cfg.tau_oracle / 2


def test_oracle_detects_segments_leaving_sl2(fast_cfg):
    Fs = np.eye(2)[None]
    xis = np.array([[[1.0, 0.0]]])
    etas = np.array([[[1.0, 0.0]]])
    energy = lookup("neo-hooke-inc").energy
    with pytest.raises(KernelInvariantError):
        segment_oracle(lambda P: evaluate_batch(energy, P), Fs, xis, etas, fast_cfg,
                       "rank_one_oracle", "test", Domain.SL2)


# --- Сверка критериев ---

def make_result(criterion: str, verdict: Verdict, boundary: bool = False) -> CriterionResult:
    return CriterionResult(criterion=criterion, label=criterion, verdict=verdict,
                           boundary=boundary, min_slack=0.0, tolerance=1e-8)


def test_agreement_diagnostics():
    assert agreement_diagnostics([make_result("a", Verdict.HOLDS), make_result("b", Verdict.HOLDS)]) == []

    hard = agreement_diagnostics([make_result("a", Verdict.HOLDS), make_result("b", Verdict.FAILS)])
    assert [d.kind for d in hard] == ["disagreement"]

    soft = agreement_diagnostics(
        [make_result("a", Verdict.HOLDS), make_result("b", Verdict.FAILS, boundary=True)]
    )
    assert [d.kind for d in soft] == ["boundary-disagreement"]

    ignored = agreement_diagnostics(
        [make_result("a", Verdict.HOLDS), make_result("b", Verdict.INAPPLICABLE)]
    )
    assert ignored == []


def test_catalog_listing_is_stable():
    names = [entry.name for entry in catalog()]
    assert names == list(CATALOG_CONFIG)
    assert len(names) >= 6
    with pytest.raises(KeyError):
        lookup("no-such-energy")
