"""
Изохорные энергии в GL+(2): подъем с SL(2), сужение обратно, критерии для h(t)
и воспроизводимая проверка контрпримера (энергия, ранг-один выпуклая на SL(2),
но не в GL+(2)).
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.convexity import (
    agreement_diagnostics,
    dfz_check,
    divided_differences,
    grid_check,
    is_boundary,
    mielke_polyconvexity_check,
    segment_oracle,
    timed_stage,
    verdict_for,
)
from core.energy import (
    VALIDATION_SEED,
    Domain,
    EnergyDomainError,
    EnergySpec,
    NotConvertibleError,
    Representation,
    ScalarProfile,
    evaluate_batch,
    extract_phi,
    phi_from_h,
    with_domain,
)
from core.schemas import (
    AnalysisConfig,
    ClaimResult,
    ConvexityReport,
    CriterionResult,
    Diagnostic,
    GridStat,
    Verdict,
    Witness,
)
from core.tensor2 import (
    Mat2,
    batch_det,
    batch_principal_directions,
    random_glplus2,
    random_orthogonal,
    random_rotations,
    random_unit_vectors,
)
from utils.timing import track_stage

logger = logging.getLogger(__name__)

ISOCHORIC_SCALES = (0.5, 2.0, 3.0, 10.0)
ISOCHORIC_TOLERANCE = 1e-10


class CounterexampleDefect(AssertionError):
    """Утверждение о контрпримере не подтвердилось численно."""


def _diag_batch(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    Fs = np.zeros(np.broadcast(d1, d2).shape + (2, 2))
    Fs[..., 0, 0] = d1
    Fs[..., 1, 1] = d2
    return Fs


@dataclass(frozen=True)
class IsochoricEnergy:
    """
    Изохорная энергия W_iso(F) = W_iso(aF) для всех a > 0.

    Attributes:
        name (str): Имя энергии.
        source (EnergySpec): Исходная энергия: несжимаемая (при подъеме) или изохорная.
        lifted (bool): Получена ли подъемом W_iso(F) = W_inc(F / √det F).
    """
    name: str
    source: EnergySpec
    lifted: bool

    def evaluate_batch(self, Fs) -> np.ndarray:
        Fs = np.asarray(Fs, dtype=float)
        if not self.lifted:
            return evaluate_batch(self.source, Fs)
        det = batch_det(Fs)
        if np.any(det <= 0.0):
            raise EnergyDomainError(f"Энергия '{self.name}': det F ≤ 0 вне GL+(2)",
                                    argument=float(det[det <= 0.0].flat[0]))
        return evaluate_batch(self.source, Fs / np.sqrt(det)[..., None, None])

    def evaluate(self, F: Mat2) -> float:
        return float(self.evaluate_batch(F.as_array()[None])[0])

    def g(self, lam1, lam2) -> np.ndarray:
        """g(λ1, λ2) = W_iso(diag(λ1, λ2))."""
        return self.evaluate_batch(_diag_batch(np.asarray(lam1, float), np.asarray(lam2, float)))

    @property
    def h(self) -> ScalarProfile:
        """h(t) = W_iso(diag(√t, 1/√t)), t > 0."""
        if self.source.representation is Representation.RATIO_H:
            return self.source.payload

        def h(t):
            root = np.sqrt(np.asarray(t, dtype=float))
            return self.evaluate_batch(_diag_batch(root, 1.0 / root))

        return ScalarProfile(func=h, domain_lo=0.0, domain_open=True, variable="t")


def check_isochoric(energy: EnergySpec, samples: int = 50) -> float:
    """
    Проверяет W(aF) = W(F) для a ∈ {0.5, 2, 3, 10} на фиксированной выборке GL+(2).

    Raises:
        NotConvertibleError: Энергия не изохорна
    """
    rng = np.random.default_rng(VALIDATION_SEED)
    Fs = random_glplus2(rng, samples)
    base = evaluate_batch(energy, Fs)
    worst = 0.0
    for a in ISOCHORIC_SCALES:
        scaled = evaluate_batch(energy, a * Fs)
        worst = max(worst, float(np.max(np.abs(scaled - base) / np.maximum(1.0, np.abs(base)))))
    if worst > ISOCHORIC_TOLERANCE:
        raise NotConvertibleError(
            f"Энергия '{energy.name}' не изохорна (дефект {worst:.3e}); анализ в GL+(2) невозможен"
        )
    return worst


def lift(energy: EnergySpec) -> IsochoricEnergy:
    """Изохорное продолжение W_iso(F) = W(F / √det F) энергии на SL(2)."""
    return IsochoricEnergy(name=energy.name, source=with_domain(energy, Domain.SL2), lifted=True)


def restrict(iso: IsochoricEnergy) -> EnergySpec:
    """Сужение изохорной энергии на SL(2); restrict(lift(W)) совпадает с W."""
    if iso.lifted:
        return iso.source
    return with_domain(iso.source, Domain.SL2)


def as_isochoric(energy: EnergySpec) -> IsochoricEnergy:
    """
    Приводит энергию к изохорной: энергии на SL(2) поднимаются, энергии в GL+(2)
    проверяются на изохорность (RatioH изохорна по построению).
    """
    if energy.claimed_domain is Domain.SL2:
        return lift(energy)
    if energy.representation is not Representation.RATIO_H:
        check_isochoric(energy)
    return IsochoricEnergy(name=energy.name, source=energy, lifted=False)


# --- Критерии в GL+(2) ---

def h_criterion(iso: IsochoricEnergy, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """Ранг-один выпуклость в GL+(2): h неубывает и выпукла на [1, tmax]."""
    cfg = cfg or AnalysisConfig()
    grid = cfg.ratio_grid()
    return grid_check(grid, np.asarray(iso.h(grid)), "h_criterion",
                      "ранг-один выпуклость в GL+(2): h неубывает и выпукла на [1, tmax]",
                      cfg, "t", witness_prefix="t")


def h_full_convexity_check(iso: IsochoricEnergy, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """Эквивалентная форма: h выпукла на [1/tmax, tmax]."""
    cfg = cfg or AnalysisConfig()
    grid = cfg.full_ratio_grid()
    return grid_check(grid, np.asarray(iso.h(grid)), "h_full_convexity",
                      "h выпукла на [1/tmax, tmax]", cfg, "t", monotone=False, witness_prefix="t")


def separate_convexity_check(iso: IsochoricEnergy, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """
    Раздельная выпуклость g(λ1, λ2) по каждому аргументу на сетке λ × λ.
    """
    cfg = cfg or AnalysisConfig()
    tol = cfg.tau
    lam = cfg.lambda_grid()
    L1, L2 = np.meshgrid(lam, lam, indexing="ij")
    G = iso.g(L1, L2)

    worst = np.inf
    where: dict[str, float] = {}
    witness = None
    for axis, moving in ((0, "lambda1"), (1, "lambda2")):
        fixed = "lambda2" if moving == "lambda1" else "lambda1"
        for k in range(lam.size):
            values = G[:, k] if axis == 0 else G[k, :]
            _, _, dd2, scale2 = divided_differences(lam, values)
            s = dd2 / scale2
            j = int(np.argmin(s))
            if s[j] < worst:
                worst = float(s[j])
                where = {moving: float(lam[j + 1]), fixed: float(lam[k])}
                witness = Witness(kind="lambda-triple", margin=float(-dd2[j]),
                                  points=[float(lam[j]), float(lam[j + 1]), float(lam[j + 2]), float(lam[k])])

    return CriterionResult(
        criterion="separate_convexity",
        label="g(λ1, λ2) выпукла по каждому аргументу",
        verdict=verdict_for(worst, tol),
        boundary=is_boundary(worst, tol, cfg),
        min_slack=worst,
        tolerance=tol,
        derivative_mode="divided-differences",
        inequalities=[GridStat(inequality="convexity", min_slack=worst, argmin=where, points=int(G.size))],
        witnesses=[witness] if worst < -tol and witness is not None else [],
        samples=int(G.size),
    )


def glplus_rank_one_oracle(iso: IsochoricEnergy, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """
    Брутфорс-проверка в GL+(2): ξ и η независимы и единичны, условия касания нет.
    Отрезки, где det падает ниже glplus_det_floor · det F или t = λmax/λmin выходит
    за tmax², пропускаются.
    """
    cfg = cfg or AnalysisConfig()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.oracle_samples_f
    Fs = random_glplus2(rng, n, cfg.sampling_log_range)
    xis = random_unit_vectors(rng, (n, cfg.oracle_samples_eta))
    etas = random_unit_vectors(rng, (n, cfg.oracle_samples_eta))
    if cfg.oracle_aligned_directions:
        left, right = batch_principal_directions(Fs)
        xis = np.concatenate([xis, left[:, None, :]], axis=1)
        etas = np.concatenate([etas, right[:, None, :]], axis=1)
    return segment_oracle(
        iso.evaluate_batch, Fs, xis, etas, cfg,
        "glplus_rank_one_oracle", "выпуклость вдоль отрезков ранга один в GL+(2)", Domain.GLPLUS2,
    )


def restriction_phi(iso: IsochoricEnergy) -> ScalarProfile:
    """Профиль сдвига сужения на SL(2): φ(θ) = h(λ²), λ = (θ + √(θ² + 4))/2."""
    return phi_from_h(iso.h)


def forward_implication_check(iso: IsochoricEnergy, cfg: AnalysisConfig | None = None) -> tuple[Diagnostic, CriterionResult]:
    """
    Ранг-один выпуклость в GL+(2) влечет ранг-один выпуклость сужения на SL(2).

    Returns:
        (диагностика, результат DFZ для сужения). Случай «сужение выпукло, подъем нет»
        отмечается как демонстрация того, что обратное неверно.
    """
    cfg = cfg or AnalysisConfig()
    glplus = h_criterion(iso, cfg)
    restricted = dfz_check(restriction_phi(iso), cfg).model_copy(
        update={"criterion": "sl2_restriction", "label": "DFZ для сужения на SL(2)"}
    )
    if glplus.holds and not restricted.holds:
        logger.error(f"❌ '{iso.name}': h проходит, а сужение на SL(2) нет — нарушена прямая импликация")
        diagnostic = Diagnostic(kind="implication", criteria=["h_criterion", "sl2_restriction"],
                                message="Импликация GL+(2) ⇒ SL(2) нарушена численно")
    elif restricted.holds and not glplus.holds:
        diagnostic = Diagnostic(kind="info", criteria=["h_criterion", "sl2_restriction"],
                                message="Сужение на SL(2) ранг-один выпукло, а подъем в GL+(2) — нет")
    else:
        diagnostic = Diagnostic(kind="info", criteria=["h_criterion", "sl2_restriction"],
                                message="Импликация GL+(2) ⇒ SL(2) согласована")
    return diagnostic, restricted


def analyze_glplus(energy: EnergySpec, cfg: AnalysisConfig) -> ConvexityReport:
    """Анализ в GL+(2) через изохорную форму."""
    iso = as_isochoric(energy)
    results = [
        timed_stage("h_criterion", lambda: h_criterion(iso, cfg)),
        timed_stage("h_full_convexity", lambda: h_full_convexity_check(iso, cfg)),
        timed_stage("separate_convexity", lambda: separate_convexity_check(iso, cfg)),
        timed_stage("glplus_rank_one_oracle", lambda: glplus_rank_one_oracle(iso, cfg)),
    ]
    diagnostics = agreement_diagnostics(results)
    with track_stage("sl2_restriction"):
        implication, restricted = forward_implication_check(iso, cfg)
    diagnostics.append(implication)
    results.append(restricted)
    logger.info(f"Анализ '{energy.name}' в GL+(2): "
                + ", ".join(f"{r.criterion}={r.verdict.value}" for r in results))
    return ConvexityReport(
        energy_name=energy.name,
        domain=Domain.GLPLUS2.value,
        verdicts={r.criterion: r.verdict for r in results},
        results=results,
        diagnostics=diagnostics,
        seed=cfg.seed,
        sample_counts={r.criterion: r.samples for r in results},
    )


# --- Контрпример ---

def h_second_derivative_formula(t):
    """h″(t) для h(t) = √t − 1/√t при t > 1."""
    t = np.asarray(t, dtype=float)
    return -0.25 * t ** -1.5 - 0.75 * t ** -2.5


def _invariance_defects(iso: IsochoricEnergy, rng: np.random.Generator, samples: int) -> dict[str, float]:
    Fs = random_glplus2(rng, samples)
    base = iso.evaluate_batch(Fs)
    scale = np.maximum(1.0, np.abs(base))

    Q = random_rotations(rng, samples)
    objectivity = float(np.max(np.abs(iso.evaluate_batch(Q @ Fs) - base) / scale))

    Q1 = random_orthogonal(rng, samples)
    Q2 = random_orthogonal(rng, samples)
    mismatch = (np.linalg.det(Q1) < 0) != (np.linalg.det(Q2) < 0)
    Q2[mismatch, :, 1] *= -1.0
    isotropy = float(np.max(np.abs(iso.evaluate_batch(Q1 @ Fs @ Q2) - base) / scale))

    isochoricity = max(
        float(np.max(np.abs(iso.evaluate_batch(a * Fs) - base) / scale)) for a in ISOCHORIC_SCALES
    )
    return {"objectivity": objectivity, "isotropy": isotropy, "isochoricity": isochoricity}


def counterexample_suite(cfg: AnalysisConfig | None = None, strict: bool = False) -> list[ClaimResult]:
    """
    Численно проверяет утверждения о контрпримере W(F) = |√(λ1/λ2) − √(λ2/λ1)|:
    инвариантность, отсутствие ранг-один выпуклости в GL+(2) и ранг-один
    выпуклость (и поливыпуклость) его сужения на SL(2), где φ(γ) = γ.

    Args:
        cfg: Конфигурация (seed и размеры выборок)
        strict: Бросать CounterexampleDefect при неподтвержденном утверждении

    Returns:
        Список ClaimResult в фиксированном порядке
    """
    from core.catalog import lookup

    cfg = cfg or AnalysisConfig()
    iso = as_isochoric(lookup("counterexample-iso").energy)
    incompressible = lift(lookup("counterexample-inc").energy)
    rng = np.random.default_rng(cfg.seed)
    claims: list[ClaimResult] = []

    defects = _invariance_defects(iso, rng, 200)
    claims.append(ClaimResult(
        claim="invariance",
        statement="W объективна, изотропна и изохорна",
        verified=max(defects.values()) <= ISOCHORIC_TOLERANCE,
        details=defects,
    ))

    Fs = random_glplus2(rng, 200)
    lift_defect = float(np.max(np.abs(incompressible.evaluate_batch(Fs) - iso.evaluate_batch(Fs))))
    claims.append(ClaimResult(
        claim="lift_of_shear_energy",
        statement="W совпадает с изохорным подъемом энергии сдвига φ(γ) = γ",
        verified=lift_defect <= ISOCHORIC_TOLERANCE,
        details={"max_defect": lift_defect},
    ))

    t_grid = cfg.ratio_grid()
    h_values = np.asarray(iso.h(t_grid))
    symmetry = float(np.max(np.abs(np.asarray(iso.h(1.0 / t_grid)) - h_values)))
    claims.append(ClaimResult(
        claim="h_symmetry",
        statement="h(t) = h(1/t)",
        verified=symmetry <= ISOCHORIC_TOLERANCE,
        details={"max_defect": symmetry},
    ))

    fd_h = ScalarProfile(func=iso.h.func, domain_lo=0.0, domain_open=True, variable="t")
    h_crit = h_criterion(iso, cfg)
    oracle = glplus_rank_one_oracle(iso, cfg)
    details = {}
    curvature_ok = True
    for t in (2.0, 4.0):
        fd_value = float(fd_h.derivative(t, 2))
        exact = float(h_second_derivative_formula(t))
        details[f"h2_fd_at_{t:g}"] = fd_value
        details[f"h2_formula_at_{t:g}"] = exact
        curvature_ok &= abs(fd_value - exact) <= 1e-6 and exact < 0
    best_margin = max((w.margin for w in oracle.witnesses), default=0.0)
    details["oracle_best_margin"] = best_margin
    details["h_criterion_min_slack"] = float(h_crit.min_slack)
    claims.append(ClaimResult(
        claim="not_rank_one_convex_on_glplus",
        statement="W не ранг-один выпукла в GL+(2): h″ < 0 при t > 1",
        verified=(curvature_ok and h_crit.verdict is Verdict.FAILS
                  and oracle.verdict is Verdict.FAILS and best_margin >= 1e-6),
        details=details,
        witnesses=oracle.witnesses + h_crit.witnesses,
    ))

    gamma = cfg.gamma_grid()
    phi_route = np.asarray(restriction_phi(iso)(gamma))
    shear_route = np.asarray(extract_phi(restrict(iso))(gamma))
    identity_defect = float(max(np.max(np.abs(phi_route - gamma)), np.max(np.abs(shear_route - gamma))))
    restricted_dfz = dfz_check(restriction_phi(iso), cfg)
    restricted_poly = mielke_polyconvexity_check(restriction_phi(iso), cfg)
    claims.append(ClaimResult(
        claim="sl2_restriction_convex",
        statement="Сужение на SL(2) имеет φ(γ) = γ и ранг-один выпукло и поливыпукло",
        verified=(identity_defect <= 1e-12 * max(1.0, cfg.gamma_grid_max)
                  and restricted_dfz.holds and restricted_poly.holds),
        details={"identity_defect": identity_defect,
                 "dfz_min_slack": float(restricted_dfz.min_slack),
                 "mielke_min_slack": float(restricted_poly.min_slack)},
    ))

    failed = [c.claim for c in claims if not c.verified]
    if failed:
        logger.error(f"❌ Контрпример: не подтверждены {', '.join(failed)}")
        if strict:
            raise CounterexampleDefect(f"Не подтверждены утверждения: {', '.join(failed)}")
    else:
        logger.info("✅ Контрпример подтвержден")
    return claims
