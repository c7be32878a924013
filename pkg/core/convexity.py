"""
Критерии выпуклости изотропных энергий на SL(2).

Все критерии сводят неравенства к нормированным slack-значениям:
    v / max(1, Σ|слагаемых|)  для производных,
    dd / max(1, max|f| на шаблоне)  для разделенных разностей.
Неравенство выполнено при slack ≥ −τ; |slack| ≤ boundary_factor · τ помечается
как граничный случай. Брутфорс-оракул проверяет выпуклость вдоль отрезков
ранга один и служит независимой сверкой аналитических критериев.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple

import numpy as np

import config
from core.energy import (
    DerivativeMode,
    Domain,
    EnergySpec,
    ScalarProfile,
    evaluate_batch,
    to_phi,
    to_psi,
    with_domain,
)
from core.schemas import (
    AnalysisConfig,
    ConvexityReport,
    CriterionResult,
    Diagnostic,
    GridStat,
    Verdict,
    Witness,
)
from core.tensor2 import (
    Mat2,
    NotSpecialLinearError,
    ZeroVectorError,
    batch_det,
    batch_det_expand,
    batch_outer,
    batch_shear_aligned_eta,
    batch_singular_values,
    batch_tangent_basis,
    random_sl2,
    random_unit_vectors,
    singular_values,
    tangent_basis,
)
from utils.timing import track_stage

logger = logging.getLogger(__name__)

KINK_RATIO = 1e3
KINK_FLOOR = 1e-6
UNIT_TOLERANCE = 1e-12
ORACLE_CHUNK = 50
SEGMENT_DET_TOLERANCE = 1e-8


class KernelInvariantError(AssertionError):
    """Нарушен инвариант ядра, например отрезок ранга один вышел из SL(2)."""


class NonUnitDirectionError(ValueError):
    """‖η‖ ≠ 1 там, где требуется единичное направление."""


# --- Общие помощники ---

def verdict_for(min_slack: float, tolerance: float) -> Verdict:
    return Verdict.HOLDS if min_slack >= -tolerance else Verdict.FAILS


def is_boundary(min_slack: float, tolerance: float, cfg: AnalysisConfig) -> bool:
    return abs(min_slack) <= cfg.boundary_factor * tolerance


def _unit(eta, normalize: bool) -> tuple[float, float]:
    x, y = float(eta[0]), float(eta[1])
    norm = math.hypot(x, y)
    if norm == 0.0:
        raise ZeroVectorError("eta не может быть нулевым вектором")
    if normalize:
        return x / norm, y / norm
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise NonUnitDirectionError(f"‖η‖ = {norm!r}, ожидался единичный вектор")
    return x, y


def divided_differences(x: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Первые и вторые разделенные разности на (возможно неравномерной) сетке.

    Returns:
        (dd1, dd1_scale, dd2, dd2_scale): разности и масштабы max(1, max|f|) их шаблонов.
        dd2[i] относится к узлу x[i + 1].
    """
    dd1 = np.diff(f) / np.diff(x)
    dd2 = 2.0 * (dd1[1:] - dd1[:-1]) / (x[2:] - x[:-2])
    af = np.abs(f)
    scale1 = np.maximum(1.0, np.maximum(af[:-1], af[1:]))
    scale2 = np.maximum(1.0, np.maximum(np.maximum(af[:-2], af[1:-1]), af[2:]))
    return dd1, scale1, dd2, scale2


def detect_kinks(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """
    Индексы внутренних узлов, где |dd2| превосходит соседей в KINK_RATIO раз.
    """
    _, _, dd2, scale2 = divided_differences(x, f)
    s = np.abs(dd2 / scale2)
    if s.size < 3:
        return np.array([], dtype=int)
    neighbours = np.maximum(np.concatenate(([s[1]], s[:-1])), np.concatenate((s[1:], [s[-2]])))
    mask = (s > KINK_RATIO * neighbours) & (s > KINK_FLOOR)
    return np.flatnonzero(mask) + 1


def grid_check(
    x: np.ndarray,
    f: np.ndarray,
    criterion: str,
    label: str,
    cfg: AnalysisConfig,
    variable: str,
    monotone: bool = True,
    witness_prefix: str = "gamma",
) -> CriterionResult:
    """
    Проверяет на сетке неубывание (по первым разностям) и выпуклость (по вторым).

    Используется критериями DFZ и полиномиальной выпуклости (φ на γ-сетке),
    выпуклостью сдвига (φ̃ на симметричной сетке) и критериями для h на t-сетке.
    """
    tol = cfg.tau
    dd1, scale1, dd2, scale2 = divided_differences(x, f)
    stats: list[GridStat] = []
    witnesses: list[Witness] = []
    slacks = []

    if monotone:
        s1 = dd1 / scale1
        i = int(np.argmin(s1))
        slacks.append(float(s1[i]))
        stats.append(GridStat(inequality="monotonicity", min_slack=float(s1[i]),
                              argmin={variable: float(x[i]), f"{variable}_next": float(x[i + 1])},
                              points=int(s1.size)))
        if s1[i] < -tol:
            witnesses.append(Witness(kind=f"{witness_prefix}-pair", margin=float(-dd1[i]),
                                     points=[float(x[i]), float(x[i + 1])]))

    s2 = dd2 / scale2
    j = int(np.argmin(s2))
    slacks.append(float(s2[j]))
    stats.append(GridStat(inequality="convexity", min_slack=float(s2[j]),
                          argmin={variable: float(x[j + 1])}, points=int(s2.size)))
    if s2[j] < -tol:
        witnesses.append(Witness(kind=f"{witness_prefix}-triple", margin=float(-dd2[j]),
                                 points=[float(x[j]), float(x[j + 1]), float(x[j + 2])]))

    kinks = detect_kinks(x, f)
    notes = [f"Изломы при {variable} = {', '.join(f'{x[k]:.6g}' for k in kinks[:5])}"] if kinks.size else []
    min_slack = min(slacks)
    return CriterionResult(
        criterion=criterion,
        label=label,
        verdict=verdict_for(min_slack, tol),
        boundary=is_boundary(min_slack, tol, cfg),
        min_slack=min_slack,
        tolerance=tol,
        derivative_mode="divided-differences",
        inequalities=stats,
        witnesses=witnesses,
        samples=int(x.size),
        notes=notes,
    )


# --- Критерии на профиле сдвига φ ---

def dfz_check(phi: ScalarProfile, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """
    Ранг-один выпуклость на SL(2): φ неубывает и выпукла на [0, γmax].

    Args:
        phi: Профиль сдвига
        cfg: Конфигурация (сетка и допуски)

    Returns:
        CriterionResult; при fails содержит γ-пару или γ-тройку со знаком нарушения

    Raises:
        EnergyEvaluationError: φ не вычисляется в узле сетки
    """
    cfg = cfg or AnalysisConfig()
    grid = cfg.gamma_grid()
    return grid_check(grid, np.asarray(phi(grid)), "dfz",
                      "ранг-один выпуклость на SL(2): φ неубывает и выпукла", cfg, "gamma")


def mielke_polyconvexity_check(phi: ScalarProfile, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """Поливыпуклость на SL(2): то же условие на φ, что и у ранг-один выпуклости."""
    cfg = cfg or AnalysisConfig()
    grid = cfg.gamma_grid()
    return grid_check(grid, np.asarray(phi(grid)), "mielke",
                      "поливыпуклость на SL(2): φ неубывает и выпукла", cfg, "gamma")


def shear_convexity_check(energy: EnergySpec, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """
    Выпуклость φ̃(γ) = W(K(γ)) на симметричной сетке [−γmax, γmax].

    Монотонность φ на [0, ∞) следует из выпуклости четной φ̃, поэтому проверяется только выпуклость.
    """
    cfg = cfg or AnalysisConfig()
    grid = np.linspace(-cfg.gamma_grid_max, cfg.gamma_grid_max, 2 * cfg.gamma_grid_points - 1)
    shears = np.zeros(grid.shape + (2, 2))
    shears[:, 0, 0] = 1.0
    shears[:, 1, 1] = 1.0
    shears[:, 0, 1] = grid
    values = evaluate_batch(with_domain(energy, Domain.SL2), shears)
    return grid_check(grid, values, "shear_convexity",
                      "выпуклость W(K(γ)) по γ ∈ ℝ", cfg, "gamma", monotone=False)


def even_extension_defect(phi: ScalarProfile, energy: EnergySpec, cfg: AnalysisConfig | None = None) -> float:
    """max |W(K(−γ)) − φ(γ)| на сетке γ: четность сдвиговой энергии."""
    cfg = cfg or AnalysisConfig()
    grid = cfg.gamma_grid()
    shears = np.zeros(grid.shape + (2, 2))
    shears[:, 0, 0] = 1.0
    shears[:, 1, 1] = 1.0
    shears[:, 0, 1] = -grid
    values = evaluate_batch(with_domain(energy, Domain.SL2), shears)
    return float(np.max(np.abs(values - np.asarray(phi(grid)))))


# --- Инвариантные критерии на ψ(I) ---

class InvariantSlacks(NamedTuple):
    """Значения на I-сетке: ψ′, ψ″, ψ′ + 2(I−2)ψ″ и нормированные slack-значения."""
    I: np.ndarray
    psi_d1: np.ndarray
    psi_d2: np.ndarray
    combination: np.ndarray
    slack_first: np.ndarray
    slack_second: np.ndarray
    skipped: int


def _derivative_grid(psi: ScalarProfile, cfg: AnalysisConfig) -> tuple[np.ndarray, int]:
    """I-сетка 2 + γ² без изломов ψ (изломы ищутся только при численных производных)."""
    fd = psi.derivative_mode is not DerivativeMode.ANALYTIC
    gamma = cfg.derivative_gamma_grid(fd)
    I = 2.0 + gamma ** 2
    if not fd:
        return I, 0
    kinks = detect_kinks(I, np.asarray(psi(I)))
    if kinks.size == 0:
        return I, 0
    drop = np.zeros(I.size, dtype=bool)
    for k in kinks:
        drop[max(k - 1, 0):k + 2] = True
    logger.info(f"Пропускаем {int(drop.sum())} узлов I-сетки рядом с изломами ψ")
    return I[~drop], int(drop.sum())


def invariant_slacks(psi: ScalarProfile, cfg: AnalysisConfig | None = None) -> InvariantSlacks:
    cfg = cfg or AnalysisConfig()
    I, skipped = _derivative_grid(psi, cfg)
    d1 = np.asarray(psi.derivative(I, 1))
    d2 = np.asarray(psi.derivative(I, 2))
    curvature = 2.0 * (I - 2.0) * d2
    combination = d1 + curvature
    return InvariantSlacks(
        I=I,
        psi_d1=d1,
        psi_d2=d2,
        combination=combination,
        slack_first=d1 / np.maximum(1.0, np.abs(d1)),
        slack_second=combination / np.maximum(1.0, np.abs(d1) + np.abs(curvature)),
        skipped=skipped,
    )


def abeyaratne_check(psi: ScalarProfile, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """
    Ранг-один выпуклость через ψ: ψ′(I) ≥ 0 и ψ′ + 2(I − 2)ψ″ ≥ 0 для I > 2.

    Точка I = 2 исключена; при численных производных сетка начинается с γ ≥ fd_min_gamma.
    """
    cfg = cfg or AnalysisConfig()
    fd = psi.derivative_mode is not DerivativeMode.ANALYTIC
    tol = cfg.tolerance(fd)
    data = invariant_slacks(psi, cfg)
    stats, witnesses, mins = [], [], []
    for name, slack, raw in (
        ("psi_prime_nonnegative", data.slack_first, data.psi_d1),
        ("psi_prime_plus_curvature", data.slack_second, data.combination),
    ):
        i = int(np.argmin(slack))
        mins.append(float(slack[i]))
        stats.append(GridStat(inequality=name, min_slack=float(slack[i]),
                              argmin={"I": float(data.I[i])}, points=int(slack.size)))
        if slack[i] < -tol:
            witnesses.append(Witness(kind="grid-point", margin=float(-raw[i]), points=[float(data.I[i])]))
    min_slack = min(mins)
    return CriterionResult(
        criterion="abeyaratne",
        label="ранг-один выпуклость: ψ′ ≥ 0 и ψ′ + 2(I − 2)ψ″ ≥ 0",
        verdict=verdict_for(min_slack, tol),
        boundary=is_boundary(min_slack, tol, cfg),
        min_slack=min_slack,
        tolerance=tol,
        derivative_mode=psi.derivative_mode.value,
        inequalities=stats,
        witnesses=witnesses,
        samples=int(data.I.size),
        skipped=data.skipped,
    )


class EMatrix(NamedTuple):
    """Матрица E(λ1, λ2) квартики Лежандра–Адамара и ее определитель."""
    e11: np.ndarray
    e22: np.ndarray
    e12: np.ndarray
    det: np.ndarray
    psi_d1: np.ndarray
    psi_d2: np.ndarray


def e_matrix(psi: ScalarProfile, lam1, lam2) -> EMatrix:
    """
    E11 = λ2²ψ′, E22 = λ1²ψ′, E12 = ½[(λ1² + λ2²)ψ′ + 2(λ1² − λ2²)²ψ″], ψ в точке I = λ1² + λ2².
    """
    l1sq = np.asarray(lam1, dtype=float) ** 2
    l2sq = np.asarray(lam2, dtype=float) ** 2
    I = l1sq + l2sq
    d1 = np.asarray(psi.derivative(I, 1))
    d2 = np.asarray(psi.derivative(I, 2))
    e11 = l2sq * d1
    e22 = l1sq * d1
    e12 = 0.5 * (I * d1 + 2.0 * (l1sq - l2sq) ** 2 * d2)
    return EMatrix(e11, e22, e12, e11 * e22 - e12 ** 2, d1, d2)


class EMatrixCheck(NamedTuple):
    """
    cone_slack — копозитивность E (E11, E22 ≥ 0 и E12 ≥ 0 или det E ≥ 0),
    invariant_slack — эквивалентная форма через ψ′ и ψ′ + 2(I−2)ψ″.
    """
    matrix: EMatrix
    cone_slack: np.ndarray
    invariant_slack: np.ndarray


def e_matrix_slacks(psi: ScalarProfile, lam1, lam2) -> EMatrixCheck:
    m = e_matrix(psi, lam1, lam2)
    s11 = m.e11 / np.maximum(1.0, np.abs(m.e11))
    s22 = m.e22 / np.maximum(1.0, np.abs(m.e22))
    s12 = m.e12 / np.maximum(1.0, np.abs(m.e12))
    sdet = m.det / np.maximum(1.0, np.abs(m.e11 * m.e22) + m.e12 ** 2)
    cone = np.minimum(np.minimum(s11, s22), np.maximum(s12, sdet))

    I = np.asarray(lam1, dtype=float) ** 2 + np.asarray(lam2, dtype=float) ** 2
    curvature = 2.0 * (I - 2.0) * m.psi_d2
    first = m.psi_d1 / np.maximum(1.0, np.abs(m.psi_d1))
    second = (m.psi_d1 + curvature) / np.maximum(1.0, np.abs(m.psi_d1) + np.abs(curvature))
    return EMatrixCheck(m, cone, np.minimum(first, second))


def e_matrix_check(psi: ScalarProfile, lam1: float, lam2: float,
                   cfg: AnalysisConfig | None = None) -> Verdict:
    """Копозитивность E(λ1, λ2) в одной точке λ1 λ2 = 1."""
    cfg = cfg or AnalysisConfig()
    if abs(lam1 * lam2 - 1.0) > 1e-10 * max(1.0, abs(lam1 * lam2)):
        raise NotSpecialLinearError(f"λ1 λ2 = {lam1 * lam2!r} ≠ 1")
    check = e_matrix_slacks(psi, lam1, lam2)
    tol = cfg.tolerance(psi.derivative_mode is not DerivativeMode.ANALYTIC)
    return verdict_for(float(check.cone_slack), tol)


def e_matrix_sweep(psi: ScalarProfile, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """
    Копозитивность E вдоль λ1 = (γ + √(γ² + 4))/2, λ2 = 1/λ1 по сетке γ > 0.

    Вердикт дает конусная форма; расхождение с инвариантной формой попадает в notes.
    """
    cfg = cfg or AnalysisConfig()
    fd = psi.derivative_mode is not DerivativeMode.ANALYTIC
    tol = cfg.tolerance(fd)
    I, skipped = _derivative_grid(psi, cfg)
    gamma = np.sqrt(I - 2.0)
    lam1 = 0.5 * (gamma + np.sqrt(gamma ** 2 + 4.0))
    lam2 = 1.0 / lam1
    check = e_matrix_slacks(psi, lam1, lam2)

    i = int(np.argmin(check.cone_slack))
    min_slack = float(check.cone_slack[i])
    stats = [
        GridStat(inequality="copositivity", min_slack=min_slack,
                 argmin={"lambda1": float(lam1[i]), "lambda2": float(lam2[i])},
                 points=int(lam1.size)),
        GridStat(inequality="invariant_form", min_slack=float(np.min(check.invariant_slack)),
                 argmin={"lambda1": float(lam1[int(np.argmin(check.invariant_slack))])},
                 points=int(lam1.size)),
    ]
    witnesses = []
    if min_slack < -tol:
        m = check.matrix
        diagonal = min(float(m.e11[i]), float(m.e22[i]))
        # запас именно того неравенства, которое нарушено
        margin = -diagonal if diagonal < 0.0 else -max(float(m.e12[i]), float(m.det[i]))
        witnesses.append(Witness(kind="grid-point", margin=margin,
                                 points=[float(lam1[i]), float(lam2[i])]))

    notes = []
    cone_ok = check.cone_slack >= -tol
    inv_ok = check.invariant_slack >= -tol
    clear = np.minimum(np.abs(check.cone_slack), np.abs(check.invariant_slack)) > cfg.boundary_factor * tol
    mismatch = (cone_ok != inv_ok) & clear
    if np.any(mismatch):
        k = int(np.flatnonzero(mismatch)[0])
        notes.append(f"Конусная и инвариантная формы расходятся при λ1 = {lam1[k]:.6g}")
        logger.warning(f"⚠️ E-матрица: формы критерия расходятся в {int(mismatch.sum())} узлах")

    return CriterionResult(
        criterion="e_matrix",
        label="копозитивность матрицы E(λ1, 1/λ1)",
        verdict=verdict_for(min_slack, tol),
        boundary=is_boundary(min_slack, tol, cfg),
        min_slack=min_slack,
        tolerance=tol,
        derivative_mode=psi.derivative_mode.value,
        inequalities=stats,
        witnesses=witnesses,
        samples=int(lam1.size),
        skipped=skipped,
        notes=notes,
    )


# --- Акустический тензор и квартика ---

class AcousticTensor(NamedTuple):
    """Q(F, η) = 4ψ″(Fη) ⊗ (Fη) + 2ψ′ Id и матрица E в сингулярных числах F."""
    Q: Mat2
    e11: float
    e22: float
    e12: float
    I: float
    psi_d1: float
    psi_d2: float


def elasticity_tensor(psi: ScalarProfile, F: Mat2) -> np.ndarray:
    """
    Тензор упругости ℂ = 4 F ⊗ F ψ″ + 2 Id ⊗ Id ψ′ энергии W(F) = ψ(‖F‖²), массив (2, 2, 2, 2).
    """
    I = F.norm_sq()
    d1 = float(psi.derivative(I, 1))
    d2 = float(psi.derivative(I, 2))
    A = F.as_array()
    eye = np.eye(2)
    return 4.0 * d2 * np.einsum("ab,cd->abcd", A, A) + 2.0 * d1 * np.einsum("ac,bd->abcd", eye, eye)


def acoustic_tensor(psi: ScalarProfile, F: Mat2, eta, normalize: bool = False) -> AcousticTensor:
    """
    Акустический тензор энергии W(F) = ψ(‖F‖²) в точке F ∈ SL(2) по направлению η:
    свертка тензора упругости Q_ac = ℂ_abcd η_b η_d.

    Args:
        psi: Профиль ψ(I)
        F: Матрица из SL(2)
        eta: Единичный вектор (или любой ненулевой при normalize=True)
        normalize: Нормировать η вместо проверки ‖η‖ = 1

    Raises:
        NotSpecialLinearError: F не принадлежит SL(2)
        NonUnitDirectionError: ‖η‖ ≠ 1 при normalize=False
    """
    if not F.is_special():
        raise NotSpecialLinearError(f"det F = {F.det()!r}, F не принадлежит SL(2)")
    eta = _unit(eta, normalize)
    I = F.norm_sq()
    C = elasticity_tensor(psi, F)
    Q = np.einsum("abcd,b,d->ac", C, np.asarray(eta), np.asarray(eta))
    sv = singular_values(F)
    m = e_matrix(psi, sv.lmax, sv.lmin)
    return AcousticTensor(Mat2.from_array(Q), float(m.e11), float(m.e22), float(m.e12), I,
                          float(m.psi_d1), float(m.psi_d2))


def acoustic_quadratic(psi: ScalarProfile, F: Mat2, eta, normalize: bool = False) -> float:
    """⟨Q ξ, ξ⟩ для касательного ξ = εF⁻ᵀη; при F = diag(λ1, λ2) равно удвоенной квартике."""
    unit = _unit(eta, normalize)
    Q = acoustic_tensor(psi, F, unit).Q
    xi = tangent_basis(F, unit)
    return float(np.dot(xi, Q.as_array() @ np.asarray(xi)))


def fd_acoustic_tensor(psi: ScalarProfile, F: Mat2, eta, step: float = 1e-4) -> Mat2:
    """
    Акустический тензор через центральные разности гессиана G(A) = ψ(‖A‖²) по четырем элементам A.
    Точка F должна отстоять от I = 2 больше, чем на ~4‖F‖·step.
    """
    eta = _unit(eta, normalize=False)
    base = F.as_array().ravel()
    basis = np.eye(4) * step
    signs = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    weights = np.array([1.0, -1.0, -1.0, 1.0])
    points = (base[None, None, None, :]
              + signs[None, None, :, 0, None] * basis[:, None, None, :]
              + signs[None, None, :, 1, None] * basis[None, :, None, :])
    G = np.asarray(psi(np.sum(points ** 2, axis=-1)))
    hessian = np.einsum("ijk,k->ij", G, weights) / (4.0 * step ** 2)
    C = hessian.reshape(2, 2, 2, 2)
    Q = np.einsum("abcd,b,d->ac", C, np.asarray(eta), np.asarray(eta))
    return Mat2.from_array(Q)


class LHQuartic(NamedTuple):
    """
    printed — форма с квадратом суммы (λ1²η2² + λ2²η1²)², как ее часто записывают;
    expanded — развернутая форма ½⟨Q ξ, ξ⟩, по ней принимаются решения.
    """
    printed: float
    expanded: float
    discrepancy: float


def lh_quartic(psi: ScalarProfile, lam1: float, lam2: float, eta) -> LHQuartic:
    """
    Квартика Лежандра–Адамара в сингулярных числах λ1 λ2 = 1 по единичному направлению η.

    Raises:
        NotSpecialLinearError: λ1 λ2 ≠ 1
        NonUnitDirectionError: ‖η‖ ≠ 1
    """
    if abs(lam1 * lam2 - 1.0) > 1e-10 * max(1.0, abs(lam1 * lam2)):
        raise NotSpecialLinearError(f"λ1 λ2 = {lam1 * lam2!r} ≠ 1")
    e1, e2 = _unit(eta, normalize=False)
    l1sq, l2sq = lam1 ** 2, lam2 ** 2
    I = l1sq + l2sq
    d1 = float(psi.derivative(I, 1))
    d2 = float(psi.derivative(I, 2))
    mixed = 2.0 * (l1sq - l2sq) ** 2 * e1 ** 2 * e2 ** 2 * d2
    printed = (l1sq * e2 ** 2 + l2sq * e1 ** 2) ** 2 * d1 + mixed
    expanded = (l2sq * d1 * e1 ** 4 + l1sq * d1 * e2 ** 4
                + (I * d1 + 2.0 * (l1sq - l2sq) ** 2 * d2) * e1 ** 2 * e2 ** 2)
    return LHQuartic(printed, expanded, printed - expanded)


# --- Брутфорс-оракул по отрезкам ранга один ---

class _ChunkResult(NamedTuple):
    tested: int
    skipped: int
    worst: float
    candidates: list


def _segment_chunk(
    evaluate: Callable[[np.ndarray], np.ndarray],
    Fs: np.ndarray,
    xis: np.ndarray,
    etas: np.ndarray,
    indices: np.ndarray,
    cfg: AnalysisConfig,
    mode: Domain,
) -> _ChunkResult:
    ladder = cfg.ladder()
    centers = np.asarray(cfg.oracle_centers, dtype=float)
    offsets = np.array([-1.0, 0.0, 1.0])
    t = centers[:, None, None] + ladder[None, :, None] * offsets          # (C, S, 3)

    H = batch_outer(xis, etas)                                            # (N, M, 2, 2)
    tH = t[None, None, :, :, :, None, None] * H[:, :, None, None, None]    # (N, M, C, S, 3, 2, 2)
    Fb = np.broadcast_to(Fs[:, None, None, None, None], tH.shape)
    points = Fb + tH
    det = batch_det_expand(Fb, tH)

    if mode is Domain.SL2:
        drift = np.abs(det - 1.0)
        bound = SEGMENT_DET_TOLERANCE * (1.0 + t[None, None] ** 2)
        if np.any(drift > bound):
            raise KernelInvariantError(f"Отрезок вышел из SL(2): |det − 1| = {float(np.max(drift)):.3e}")
        valid = np.ones(det.shape[:-1], dtype=bool)
    else:
        base_det = batch_det(Fs)[:, None, None, None, None]
        lmax, lmin = batch_singular_values(np.where((det > 0)[..., None, None], points, Fb))
        ratio_cap = cfg.ratio_grid_max ** 2
        ok = (det >= cfg.glplus_det_floor * base_det) & (lmax / lmin <= ratio_cap)
        valid = np.all(ok, axis=-1)

    values = np.full(det.shape, np.nan)
    if np.any(valid):
        flat = points[valid].reshape(-1, 2, 2)
        values[valid] = evaluate(flat).reshape(-1, 3)

    violation = values[..., 1] - 0.5 * (values[..., 0] + values[..., 2])
    scale = np.maximum(1.0, np.max(np.abs(values), axis=-1))
    relative = np.where(valid, violation / scale, -np.inf)
    tested = int(valid.sum())
    worst = float(np.max(relative)) if tested else -np.inf

    candidates = []
    bad = np.argwhere(relative > cfg.tau_oracle)
    if bad.size:
        order = sorted(
            (tuple(int(v) for v in idx) for idx in bad),
            key=lambda idx: (-relative[idx], int(indices[idx[0]]), idx[1:]),
        )[: cfg.oracle_max_witnesses]
        for n, m, c, s in order:
            candidates.append((
                -float(relative[n, m, c, s]),
                int(indices[n]),
                (m, c, s),
                Witness(
                    kind="segment",
                    margin=float(violation[n, m, c, s]),
                    F=Fs[n].tolist(),
                    xi=xis[n, m].tolist(),
                    eta=etas[n, m].tolist(),
                    t_triple=[float(v) for v in t[c, s]],
                    scale=float(scale[n, m, c, s]),
                    sample_index=int(indices[n]),
                ),
            ))
    return _ChunkResult(tested, int(valid.size - tested), worst, candidates)


def segment_oracle(
    evaluate: Callable[[np.ndarray], np.ndarray],
    Fs: np.ndarray,
    xis: np.ndarray,
    etas: np.ndarray,
    cfg: AnalysisConfig,
    criterion: str,
    label: str,
    mode: Domain,
) -> CriterionResult:
    """
    Тест середины W(F + cH) ≤ ½W(F + (c − s)H) + ½W(F + (c + s)H), H = ξ ⊗ η,
    по всем F, направлениям, центрам c и шагам s из лестницы.

    Блоки по ORACLE_CHUNK матриц F обрабатываются в ThreadPoolExecutor при oracle_workers > 1;
    результаты сливаются в порядке блоков, поэтому отчет не зависит от числа потоков.
    """
    n = Fs.shape[0]
    chunks = [np.arange(i, min(i + ORACLE_CHUNK, n)) for i in range(0, n, ORACLE_CHUNK)]

    def run(idx: np.ndarray) -> _ChunkResult:
        return _segment_chunk(evaluate, Fs[idx], xis[idx], etas[idx], idx, cfg, mode)

    if cfg.oracle_workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.oracle_workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(idx) for idx in chunks]

    tested = sum(p.tested for p in parts)
    skipped = sum(p.skipped for p in parts)
    worst = max((p.worst for p in parts), default=-np.inf)
    candidates = sorted(
        (c for p in parts for c in p.candidates), key=lambda c: (c[0], c[1], c[2])
    )[: cfg.oracle_max_witnesses]

    tol = cfg.tau_oracle
    min_slack = -worst if np.isfinite(worst) else 0.0
    verdict = Verdict.FAILS if candidates else Verdict.HOLDS
    notes = []
    if tested == 0:
        verdict = Verdict.INAPPLICABLE
        notes.append("Ни один отрезок не прошел фильтр области")
    if verdict is Verdict.FAILS:
        logger.info(f"🔎 Оракул '{criterion}': нарушение {candidates[0][3].margin:.3e} "
                    f"на F #{candidates[0][1]}")
    return CriterionResult(
        criterion=criterion,
        label=label,
        verdict=verdict,
        boundary=is_boundary(min_slack, tol, cfg) if tested else False,
        min_slack=min_slack,
        tolerance=tol,
        derivative_mode=None,
        inequalities=[GridStat(inequality="midpoint", min_slack=min_slack, argmin={}, points=tested)],
        witnesses=[c[3] for c in candidates],
        samples=tested,
        skipped=skipped,
        notes=notes,
    )


def rank_one_oracle(energy: EnergySpec, cfg: AnalysisConfig | None = None) -> CriterionResult:
    """
    Брутфорс-проверка ранг-один выпуклости на SL(2).

    F = R(a) diag(λ, 1/λ) R(b), η — случайные единичные векторы (и при
    oracle_aligned_directions еще направление, вдоль которого F сопряжена сдвигу),
    ξ = εF⁻ᵀη, так что каждый отрезок лежит в SL(2).
    """
    cfg = cfg or AnalysisConfig()
    rng = np.random.default_rng(cfg.seed)
    Fs = random_sl2(rng, cfg.oracle_samples_f, cfg.sampling_log_range)
    etas = random_unit_vectors(rng, (cfg.oracle_samples_f, cfg.oracle_samples_eta))
    if cfg.oracle_aligned_directions:
        etas = np.concatenate([etas, batch_shear_aligned_eta(Fs)[:, None, :]], axis=1)
    xis = batch_tangent_basis(Fs[:, None], etas)
    restricted = with_domain(energy, Domain.SL2)
    return segment_oracle(
        lambda P: evaluate_batch(restricted, P), Fs, xis, etas, cfg,
        "rank_one_oracle", "выпуклость вдоль отрезков ранга один в SL(2)", Domain.SL2,
    )


# --- Полный анализ ---

SL2_CRITERIA = ("dfz", "mielke", "shear_convexity", "abeyaratne", "e_matrix", "rank_one_oracle")


def agreement_diagnostics(results: list[CriterionResult]) -> list[Diagnostic]:
    """
    Сверяет вердикты критериев, которые должны совпадать.
    Расхождение, в котором одна из сторон — граничный случай, считается мягким.
    """
    applicable = [r for r in results if r.verdict is not Verdict.INAPPLICABLE]
    holding = [r for r in applicable if r.verdict is Verdict.HOLDS]
    failing = [r for r in applicable if r.verdict is Verdict.FAILS]
    if not holding or not failing:
        return []
    names = [r.criterion for r in applicable]
    if all(r.boundary for r in failing) or all(r.boundary for r in holding):
        return [Diagnostic(kind="boundary-disagreement", criteria=names,
                           message="Критерии расходятся только в граничных случаях")]
    message = (f"Выполнены: {', '.join(r.criterion for r in holding)}; "
               f"нарушены: {', '.join(r.criterion for r in failing)}")
    logger.warning(f"⚠️ Расхождение критериев: {message}")
    return [Diagnostic(kind="disagreement", criteria=names, message=message)]


def timed_stage(name: str, fn: Callable[[], CriterionResult]) -> CriterionResult:
    with track_stage(name):
        return fn()


def analyze(energy: EnergySpec, domain: Domain | str = Domain.SL2,
            cfg: AnalysisConfig | None = None) -> ConvexityReport:
    """
    Прогоняет все применимые критерии и сверку между ними.

    Args:
        energy: Энергия в любой форме
        domain: SL2 — критерии на профиле сдвига; GLplus2 — через изохорный подъем
        cfg: Конфигурация анализа

    Returns:
        ConvexityReport

    Raises:
        NotConvertibleError: Энергию нельзя проанализировать на запрошенной области
        EnergyEvaluationError: Энергия не вычисляется в узле сетки
    """
    cfg = cfg or AnalysisConfig()
    domain = Domain(domain)
    if domain is Domain.GLPLUS2:
        from core import isochoric
        return isochoric.analyze_glplus(energy, cfg)

    phi = to_phi(energy)
    psi = to_psi(energy)
    results = [
        timed_stage("dfz", lambda: dfz_check(phi, cfg)),
        timed_stage("mielke", lambda: mielke_polyconvexity_check(phi, cfg)),
        timed_stage("shear_convexity", lambda: shear_convexity_check(energy, cfg)),
        timed_stage("abeyaratne", lambda: abeyaratne_check(psi, cfg)),
        timed_stage("e_matrix", lambda: e_matrix_sweep(psi, cfg)),
        timed_stage("rank_one_oracle", lambda: rank_one_oracle(energy, cfg)),
    ]
    diagnostics = agreement_diagnostics(results)
    logger.info(f"Анализ '{energy.name}' на SL(2): "
                + ", ".join(f"{r.criterion}={r.verdict.value}" for r in results))
    return ConvexityReport(
        energy_name=energy.name,
        domain=domain.value,
        verdicts={r.criterion: r.verdict for r in results},
        results=results,
        diagnostics=diagnostics,
        seed=cfg.seed,
        sample_counts={r.criterion: r.samples for r in results},
    )
