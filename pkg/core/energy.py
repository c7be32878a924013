"""
Представления изотропных энергий и преобразования между ними.

Энергия задается одной из пяти форм:
    MatrixW       W(F) на пакете матриц (..., 2, 2)
    InvariantPsi  ψ(I), I = ‖F‖² (несжимаемый случай, I ≥ 2)
    ShearPhi      φ(γ), γ ≥ 0 — энергия простого сдвига
    RatioH        h(t), t = λmax/λmin > 0 (изохорный случай)
    SingularG     g(λ1, λ2), симметричная

Анализ на SL(2) приводит любую форму к ShearPhi, анализ в GL+(2) идет через
изохорный подъем (core.isochoric). Все полезные нагрузки векторизованы.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

import config
from core import exprparse
from core.tensor2 import (
    Mat2,
    batch_det,
    batch_shear_amplitude,
    batch_singular_values,
    random_glplus2,
    random_orthogonal,
    random_sl2,
)
from utils.timing import record_evaluations

logger = logging.getLogger(__name__)

# Фиксированный seed для проверок при регистрации энергии
VALIDATION_SEED = 7
ISOTROPY_SAMPLES = 100
ISOTROPY_TOLERANCE = 1e-8
SYMMETRY_TOLERANCE = 1e-10


class EnergyError(ValueError):
    """Базовая ошибка энергии."""


class EnergyDomainError(EnergyError):
    """Аргумент вне области определения энергии."""

    def __init__(self, message: str, argument=None):
        self.argument = argument
        super().__init__(message)


class EnergyEvaluationError(EnergyError):
    """Энергия вернула нечисловое значение или упала при вычислении."""

    def __init__(self, message: str, argument=None):
        self.argument = argument
        super().__init__(message)


class NotIsotropicError(EnergyError):
    """W(Q1 F Q2) ≠ W(F) для ортогональных Q1, Q2."""


class NotSymmetricError(EnergyError):
    """g(λ1, λ2) ≠ g(λ2, λ1)."""


class NotConvertibleError(EnergyError):
    """Форму энергии нельзя привести к требуемой (например, энергия не изохорна)."""


class Representation(str, Enum):
    MATRIX_W = "MatrixW"
    INVARIANT_PSI = "InvariantPsi"
    SHEAR_PHI = "ShearPhi"
    RATIO_H = "RatioH"
    SINGULAR_G = "SingularG"


class Domain(str, Enum):
    SL2 = "SL2"
    GLPLUS2 = "GLplus2"


class DerivativeMode(str, Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite-difference"


@dataclass(frozen=True)
class ScalarProfile:
    """
    Скалярная функция одной переменной с необязательными производными.

    Attributes:
        func (Callable): Векторизованная функция.
        d1 (Callable | None): Первая производная; None -> конечные разности.
        d2 (Callable | None): Вторая производная; None -> конечные разности.
        domain_lo (float): Нижняя граница области определения.
        domain_open (bool): Исключена ли граница domain_lo.
        variable (str): Имя переменной для сообщений.
        approximate (bool): Производные d1/d2 сами опираются на конечные разности.
    """
    func: Callable
    d1: Callable | None = None
    d2: Callable | None = None
    domain_lo: float = 0.0
    domain_open: bool = False
    variable: str = "x"
    approximate: bool = False

    @property
    def derivative_mode(self) -> DerivativeMode:
        if self.d1 is not None and self.d2 is not None and not self.approximate:
            return DerivativeMode.ANALYTIC
        return DerivativeMode.FINITE_DIFFERENCE

    def _outside(self, x: np.ndarray) -> np.ndarray:
        return x <= self.domain_lo if self.domain_open else x < self.domain_lo

    def _check_domain(self, x: np.ndarray):
        bad = self._outside(x)
        if np.any(bad):
            offending = float(np.asarray(x)[bad].flat[0]) if x.ndim else float(x)
            bound = "(" if self.domain_open else "["
            raise EnergyDomainError(
                f"{self.variable}={offending!r} вне области {bound}{self.domain_lo}, ∞)",
                argument=offending,
            )

    def _finite(self, x: np.ndarray, y, what: str) -> np.ndarray:
        y = np.broadcast_to(np.asarray(y, dtype=float), x.shape)
        bad = ~np.isfinite(y)
        if np.any(bad):
            offending = float(np.broadcast_to(x, y.shape)[bad].flat[0])
            raise EnergyEvaluationError(
                f"{what} не конечна при {self.variable}={offending!r}", argument=offending
            )
        return y

    def _raw(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            y = self.func(x)
        return self._finite(x, y, "Функция")

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        y = self._raw(arr)
        return float(y) if arr.ndim == 0 else np.array(y)

    def derivative(self, x, order: int = 1):
        """
        Производная порядка 1 или 2: аналитическая, если задана, иначе конечными разностями.

        Шаг h = max(c, c|x|), c = FD_RELATIVE_STEP для первой производной и
        FD_SECOND_RELATIVE_STEP для второй. У границы области — односторонние формулы.
        """
        if order not in (1, 2):
            raise ValueError(f"Поддерживаются производные порядка 1 и 2, запрошен {order}")
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        exact = self.d1 if order == 1 else self.d2
        if exact is not None:
            with np.errstate(all="ignore"):
                y = exact(arr)
            y = self._finite(arr, y, f"Производная порядка {order}")
        else:
            y = self._finite_difference(arr, order).reshape(arr.shape)
        return float(y) if arr.ndim == 0 else np.array(y)

    def _finite_difference(self, x: np.ndarray, order: int) -> np.ndarray:
        rel = config.FD_RELATIVE_STEP if order == 1 else config.FD_SECOND_RELATIVE_STEP
        x = np.atleast_1d(x)
        h = np.maximum(rel, rel * np.abs(x))
        one_sided = self._outside(x - 2.0 * h)
        result = np.empty_like(x)

        central = ~one_sided
        if np.any(central):
            xc, hc = x[central], h[central]
            f_plus, f_minus = self._raw(xc + hc), self._raw(xc - hc)
            if order == 1:
                result[central] = (f_plus - f_minus) / (2.0 * hc)
            else:
                result[central] = (f_plus - 2.0 * self._raw(xc) + f_minus) / hc ** 2

        if np.any(one_sided):
            xf, hf = x[one_sided], h[one_sided]
            f0, f1, f2 = self._raw(xf), self._raw(xf + hf), self._raw(xf + 2.0 * hf)
            if order == 1:
                result[one_sided] = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * hf)
            else:
                f3 = self._raw(xf + 3.0 * hf)
                result[one_sided] = (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / hf ** 2
        return result


@dataclass(frozen=True)
class EnergySpec:
    """
    Изотропная энергия в одной из пяти форм.

    Attributes:
        name (str): Имя энергии.
        representation (Representation): Форма полезной нагрузки.
        payload (ScalarProfile | Callable): ScalarProfile для φ, ψ, h; функция для W и g.
        claimed_domain (Domain): Область, на которой энергия определена.
        expression (str | None): Исходный текст определения, если энергия задана выражением.
        description (str): Короткое описание.
    """
    name: str
    representation: Representation
    payload: ScalarProfile | Callable
    claimed_domain: Domain
    expression: str | None = None
    description: str = ""


# --- Проверки при регистрации ---

def _sample_domain(domain: Domain, rng: np.random.Generator, n: int) -> np.ndarray:
    if domain is Domain.SL2:
        return random_sl2(rng, n)
    return random_glplus2(rng, n)


def check_isotropy(fn: Callable, domain: Domain, samples: int = ISOTROPY_SAMPLES,
                   tolerance: float = ISOTROPY_TOLERANCE) -> float:
    """
    Проверяет W(Q1 F Q2) = W(F) на случайных парах ортогональных матриц.

    Q1 и Q2 одновременно содержат или не содержат отражение, чтобы det не менял знак.

    Returns:
        Максимальный относительный дефект

    Raises:
        NotIsotropicError: Если дефект превышает tolerance
    """
    rng = np.random.default_rng(VALIDATION_SEED)
    Fs = _sample_domain(domain, rng, samples)
    Q1 = random_orthogonal(rng, samples)
    Q2 = random_orthogonal(rng, samples)
    flipped_1 = np.linalg.det(Q1) < 0
    flipped_2 = np.linalg.det(Q2) < 0
    mismatch = flipped_1 != flipped_2
    Q2[mismatch, :, 1] *= -1.0

    with np.errstate(all="ignore"):
        base = np.asarray(fn(Fs), dtype=float)
        rotated = np.asarray(fn(Q1 @ Fs @ Q2), dtype=float)
    defect = np.abs(rotated - base) / np.maximum(1.0, np.abs(base))
    worst = float(np.max(defect))
    if not np.isfinite(worst) or worst > tolerance:
        raise NotIsotropicError(f"Энергия не изотропна: дефект {worst:.3e} > {tolerance:.1e}")
    return worst


def check_symmetry(g: Callable, tolerance: float = SYMMETRY_TOLERANCE) -> float:
    """Проверяет g(λ1, λ2) = g(λ2, λ1) на логарифмической сетке [1/4, 4]²."""
    lam = np.geomspace(0.25, 4.0, 9)
    l1, l2 = np.meshgrid(lam, lam, indexing="ij")
    with np.errstate(all="ignore"):
        forward = np.asarray(g(l1, l2), dtype=float)
        backward = np.asarray(g(l2, l1), dtype=float)
    defect = np.abs(forward - backward) / np.maximum(1.0, np.abs(forward))
    worst = float(np.max(defect))
    if not np.isfinite(worst) or worst > tolerance:
        raise NotSymmetricError(f"g не симметрична: дефект {worst:.3e}")
    return worst


# --- Конструкторы энергий ---

def shear_phi_energy(name: str, phi: ScalarProfile, **kwargs) -> EnergySpec:
    return EnergySpec(name, Representation.SHEAR_PHI, phi, Domain.SL2, **kwargs)


def invariant_psi_energy(name: str, psi: ScalarProfile, **kwargs) -> EnergySpec:
    return EnergySpec(name, Representation.INVARIANT_PSI, psi, Domain.SL2, **kwargs)


def ratio_h_energy(name: str, h: ScalarProfile, **kwargs) -> EnergySpec:
    return EnergySpec(name, Representation.RATIO_H, h, Domain.GLPLUS2, **kwargs)


def singular_g_energy(name: str, g: Callable, domain: Domain = Domain.GLPLUS2, **kwargs) -> EnergySpec:
    check_symmetry(g)
    return EnergySpec(name, Representation.SINGULAR_G, g, domain, **kwargs)


def matrix_energy(name: str, fn: Callable, domain: Domain, validate: bool = True, **kwargs) -> EnergySpec:
    """
    Энергия, заданная функцией матрицы. При validate=True проверяется изотропия.

    Args:
        name: Имя энергии
        fn: Векторизованная W над массивом (..., 2, 2)
        domain: SL2 или GLplus2
        validate: Проверять ли изотропию на фиксированной выборке
    """
    if validate:
        defect = check_isotropy(fn, domain)
        logger.debug(f"Энергия '{name}': дефект изотропии {defect:.2e}")
    return EnergySpec(name, Representation.MATRIX_W, fn, domain, **kwargs)


# --- Вычисление ---

def evaluate_batch(energy: EnergySpec, Fs) -> np.ndarray:
    """
    Вычисляет W на пакете матриц формы (..., 2, 2).

    Raises:
        EnergyDomainError: det F ≤ 0, или F вне SL(2) для энергии на SL(2)
        EnergyEvaluationError: Нечисловое значение
    """
    Fs = np.asarray(Fs, dtype=float)
    if Fs.shape[-2:] != (2, 2):
        raise ValueError(f"Ожидался массив формы (..., 2, 2), получено {Fs.shape}")
    det = batch_det(Fs)
    if np.any(det <= 0.0):
        raise EnergyDomainError(f"Энергия '{energy.name}': det F ≤ 0 вне GL+(2)",
                                argument=float(det[det <= 0.0].flat[0]))
    if energy.claimed_domain is Domain.SL2:
        drift = np.abs(det - 1.0)
        if np.any(drift > config.SL2_DET_TOLERANCE):
            raise EnergyDomainError(
                f"Энергия '{energy.name}' задана на SL(2), а |det F − 1| = {float(np.max(drift)):.3e}",
                argument=float(det.flat[int(np.argmax(drift))]),
            )
    record_evaluations(det.size)

    rep = energy.representation
    if rep is Representation.MATRIX_W:
        with np.errstate(all="ignore"):
            values = np.asarray(energy.payload(Fs), dtype=float)
    elif rep is Representation.SHEAR_PHI:
        values = energy.payload(batch_shear_amplitude(Fs))
    elif rep is Representation.INVARIANT_PSI:
        values = energy.payload(2.0 + batch_shear_amplitude(Fs) ** 2)
    else:
        lmax, lmin = batch_singular_values(Fs)
        if rep is Representation.RATIO_H:
            values = energy.payload(lmax / lmin)
        else:
            with np.errstate(all="ignore"):
                values = np.asarray(energy.payload(lmax, lmin), dtype=float)

    values = np.broadcast_to(np.asarray(values, dtype=float), det.shape)
    bad = ~np.isfinite(values)
    if np.any(bad):
        F_bad = Fs[bad][0]
        raise EnergyEvaluationError(
            f"Энергия '{energy.name}' не конечна при F={F_bad.tolist()}", argument=F_bad.tolist()
        )
    return np.array(values)


def eval_energy(energy: EnergySpec, F: Mat2) -> float:
    """W(F) для одной матрицы."""
    return float(evaluate_batch(energy, F.as_array()[None])[0])


# --- Преобразования профилей ---

def _shear_stretch(gamma):
    """λmax простого сдвига K(γ): (γ + √(γ² + 4)) / 2."""
    return 0.5 * (gamma + np.sqrt(gamma ** 2 + 4.0))


def phi_from_psi(psi: ScalarProfile) -> ScalarProfile:
    """
    φ(γ) = ψ(2 + γ²), φ′ = 2γψ′, φ″ = 2ψ′ + 4γ²ψ″.
    """
    return ScalarProfile(
        func=lambda g: psi(2.0 + g ** 2),
        d1=lambda g: 2.0 * g * psi.derivative(2.0 + g ** 2, 1),
        d2=lambda g: 2.0 * psi.derivative(2.0 + g ** 2, 1) + 4.0 * g ** 2 * psi.derivative(2.0 + g ** 2, 2),
        domain_lo=0.0,
        variable="gamma",
        approximate=psi.derivative_mode is not DerivativeMode.ANALYTIC,
    )


def psi_from_phi(phi: ScalarProfile) -> ScalarProfile:
    """
    ψ(I) = φ(√(I − 2)); I < 2 вне области.
    ψ′ = φ′/(2γ), ψ″ = φ″/(4γ²) − φ′/(4γ³), в точке I = 2 производные не определены.
    """
    def gamma_of(I):
        return np.sqrt(np.maximum(I - 2.0, 0.0))

    def d1(I):
        g = gamma_of(I)
        return phi.derivative(g, 1) / (2.0 * g)

    def d2(I):
        g = gamma_of(I)
        return phi.derivative(g, 2) / (4.0 * g ** 2) - phi.derivative(g, 1) / (4.0 * g ** 3)

    return ScalarProfile(
        func=lambda I: phi(gamma_of(I)),
        d1=d1,
        d2=d2,
        domain_lo=2.0,
        variable="I",
        approximate=phi.derivative_mode is not DerivativeMode.ANALYTIC,
    )


def phi_from_h(h: ScalarProfile) -> ScalarProfile:
    """
    φ(θ) = h(λ²), λ = (θ + √(θ² + 4))/2 — сужение изохорной энергии на простой сдвиг.
    """
    def parts(theta):
        root = np.sqrt(theta ** 2 + 4.0)
        t = _shear_stretch(theta) ** 2
        t1 = 2.0 * t / root
        t2 = 2.0 * t1 / root - 2.0 * t * theta / root ** 3
        return t, t1, t2

    def d1(theta):
        t, t1, _ = parts(theta)
        return h.derivative(t, 1) * t1

    def d2(theta):
        t, t1, t2 = parts(theta)
        return h.derivative(t, 2) * t1 ** 2 + h.derivative(t, 1) * t2

    return ScalarProfile(
        func=lambda theta: h(_shear_stretch(theta) ** 2),
        d1=d1,
        d2=d2,
        domain_lo=0.0,
        variable="gamma",
        approximate=h.derivative_mode is not DerivativeMode.ANALYTIC,
    )


def _shear_batch(gamma: np.ndarray) -> np.ndarray:
    Fs = np.zeros(gamma.shape + (2, 2))
    Fs[..., 0, 0] = 1.0
    Fs[..., 1, 1] = 1.0
    Fs[..., 0, 1] = gamma
    return Fs


def extract_phi(energy: EnergySpec) -> ScalarProfile:
    """
    φ(γ) = W(K(γ)) для γ ≥ 0. Производные считаются конечными разностями.

    Ошибка вычисления W пробрасывается как EnergyEvaluationError с проблемным γ.
    """
    def phi(gamma):
        gamma = np.asarray(gamma, dtype=float)
        try:
            return evaluate_batch(energy, _shear_batch(gamma))
        except (EnergyError, exprparse.ExprError) as e:
            for value in np.atleast_1d(gamma).ravel():
                try:
                    evaluate_batch(energy, _shear_batch(np.array([value])))
                except (EnergyError, exprparse.ExprError):
                    raise EnergyEvaluationError(
                        f"Энергия '{energy.name}' не вычисляется на сдвиге γ={float(value)!r}: {e}",
                        argument=float(value),
                    ) from e
            raise

    return ScalarProfile(func=phi, domain_lo=0.0, variable="gamma")


def to_phi(energy: EnergySpec) -> ScalarProfile:
    """Профиль сдвига φ для анализа на SL(2)."""
    rep = energy.representation
    if rep is Representation.SHEAR_PHI:
        return energy.payload
    if rep is Representation.INVARIANT_PSI:
        return phi_from_psi(energy.payload)
    if rep is Representation.RATIO_H:
        return phi_from_h(energy.payload)
    if rep is Representation.SINGULAR_G:
        g = energy.payload

        def phi(gamma):
            lam = _shear_stretch(gamma)
            return g(lam, 1.0 / lam)

        return ScalarProfile(func=phi, domain_lo=0.0, variable="gamma")
    return extract_phi(energy)


def to_psi(energy: EnergySpec) -> ScalarProfile:
    """Профиль ψ(I) для инвариантных критериев на SL(2)."""
    if energy.representation is Representation.INVARIANT_PSI:
        return energy.payload
    return psi_from_phi(to_phi(energy))


def with_domain(energy: EnergySpec, domain: Domain) -> EnergySpec:
    return replace(energy, claimed_domain=domain)


# --- Энергии из текстовых определений ---

DEFINITION_KEYS: dict[str, tuple[Representation, tuple[str, ...]]] = {
    "phi": (Representation.SHEAR_PHI, ("gamma",)),
    "psi": (Representation.INVARIANT_PSI, ("I",)),
    "h": (Representation.RATIO_H, ("t",)),
    "g": (Representation.SINGULAR_G, ("l1", "l2")),
}


def energy_from_definition(text: str, name: str | None = None) -> EnergySpec:
    """
    Строит энергию по определению вида "phi: <выражение>".

    Допустимые ключи: phi (переменная gamma), psi (I), h (t), g (l1, l2).
    Строки после '#' считаются комментариями.

    Raises:
        exprparse.ExprSyntaxError: Нет ключа или выражение не разбирается
        exprparse.UnknownNameError: Переменная не соответствует ключу
    """
    lines = [line.split("#", 1)[0].strip() for line in text.splitlines()]
    body = " ".join(line for line in lines if line)
    key, sep, source = body.partition(":")
    key = key.strip()
    if not sep or key not in DEFINITION_KEYS:
        raise exprparse.ExprSyntaxError(
            f"Ожидалось определение вида '<{'|'.join(DEFINITION_KEYS)}>: <выражение>'", body, 0
        )
    representation, variables = DEFINITION_KEYS[key]
    source = source.strip()
    expr = exprparse.parse(source, variables)
    canonical = f"{key}: {exprparse.to_source(expr)}"
    label = name or canonical
    fn = exprparse.to_callable(expr, variables)

    if representation is Representation.SHEAR_PHI:
        return shear_phi_energy(label, ScalarProfile(fn, domain_lo=0.0, variable="gamma"), expression=canonical)
    if representation is Representation.INVARIANT_PSI:
        return invariant_psi_energy(label, ScalarProfile(fn, domain_lo=2.0, variable="I"), expression=canonical)
    if representation is Representation.RATIO_H:
        return ratio_h_energy(
            label, ScalarProfile(fn, domain_lo=0.0, domain_open=True, variable="t"), expression=canonical
        )
    return singular_g_energy(label, fn, expression=canonical)
