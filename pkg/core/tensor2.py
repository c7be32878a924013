"""
Линейная алгебра 2x2.

Разложение определителя по направлению, сингулярные числа в замкнутой форме,
касательное пространство к SL(2) и разложение F = Q1 · K(γ) · Q2 на простой сдвиг.
У скалярных операций над Mat2 есть пакетные аналоги над массивами формы (..., 2, 2),
ими пользуются оракулы.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

import config

logger = logging.getLogger(__name__)

Vec2 = tuple[float, float]


class MatrixError(ValueError):
    """Базовая ошибка ядра 2x2."""


class NonFiniteMatrixError(MatrixError):
    """Матрица содержит NaN или бесконечность."""


class SingularMatrixError(MatrixError):
    """det F = 0 там, где нужна обратная матрица."""


class NotSpecialLinearError(MatrixError):
    """|det F - 1| превышает допуск принадлежности SL(2)."""


class ZeroVectorError(MatrixError):
    """Нулевой вектор в роли направления."""


@dataclass(frozen=True, slots=True)
class Mat2:
    """
    Вещественная матрица 2x2 с конечными элементами.

    Attributes:
        a11, a12, a21, a22 (float): Элементы по строкам.
    """
    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        for field_name in ("a11", "a12", "a21", "a22"):
            value = float(getattr(self, field_name))
            if not math.isfinite(value):
                raise NonFiniteMatrixError(f"Элемент {field_name}={value} не конечен")
            object.__setattr__(self, field_name, value)

    # --- Конструкторы ---

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diag(cls, d1: float, d2: float) -> "Mat2":
        return cls(d1, 0.0, 0.0, d2)

    @classmethod
    def shear(cls, gamma: float) -> "Mat2":
        """Простой сдвиг K(γ) = [[1, γ], [0, 1]]."""
        return cls(1.0, gamma, 0.0, 1.0)

    @classmethod
    def rotation(cls, angle: float) -> "Mat2":
        c, s = math.cos(angle), math.sin(angle)
        return cls(c, -s, s, c)

    @classmethod
    def outer(cls, xi: Vec2, eta: Vec2) -> "Mat2":
        """Тензорное произведение ξ ⊗ η."""
        return cls(xi[0] * eta[0], xi[0] * eta[1], xi[1] * eta[0], xi[1] * eta[1])

    @classmethod
    def from_array(cls, array) -> "Mat2":
        arr = np.asarray(array, dtype=float)
        if arr.shape != (2, 2):
            raise MatrixError(f"Ожидалась форма (2, 2), получено {arr.shape}")
        return cls(arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def as_list(self) -> list[list[float]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]

    # --- Алгебра ---

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def trace(self) -> float:
        return self.a11 + self.a22

    def norm_sq(self) -> float:
        """Квадрат нормы Фробениуса ‖F‖² = tr(FᵀF)."""
        return self.a11 ** 2 + self.a12 ** 2 + self.a21 ** 2 + self.a22 ** 2

    def inner(self, other: "Mat2") -> float:
        """Скалярное произведение ⟨A, B⟩ = tr(AᵀB)."""
        return (self.a11 * other.a11 + self.a12 * other.a12
                + self.a21 * other.a21 + self.a22 * other.a22)

    @property
    def T(self) -> "Mat2":
        return Mat2(self.a11, self.a21, self.a12, self.a22)

    def cofactor(self) -> "Mat2":
        """Матрица алгебраических дополнений, cof F = det F · F⁻ᵀ."""
        return Mat2(self.a22, -self.a21, -self.a12, self.a11)

    def inverse(self) -> "Mat2":
        d = self.det()
        if d == 0.0:
            raise SingularMatrixError(f"Матрица {self.as_list()} вырождена")
        return Mat2(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)

    def inverse_T(self) -> "Mat2":
        d = self.det()
        if d == 0.0:
            raise SingularMatrixError(f"Матрица {self.as_list()} вырождена")
        return Mat2(self.a22 / d, -self.a21 / d, -self.a12 / d, self.a11 / d)

    def apply(self, v: Vec2) -> Vec2:
        return (self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1])

    def scale(self, factor: float) -> "Mat2":
        return Mat2(factor * self.a11, factor * self.a12, factor * self.a21, factor * self.a22)

    def __add__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a11 + other.a11, self.a12 + other.a12,
                    self.a21 + other.a21, self.a22 + other.a22)

    def __sub__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a11 - other.a11, self.a12 - other.a12,
                    self.a21 - other.a21, self.a22 - other.a22)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def is_special(self, tolerance: float | None = None) -> bool:
        tol = config.SL2_DET_TOLERANCE if tolerance is None else tolerance
        return abs(self.det() - 1.0) <= tol

    def distance(self, other: "Mat2") -> float:
        return math.sqrt((self - other).norm_sq())


# Альтернатор ε: εv = (v2, -v1)
ALTERNATOR = Mat2(0.0, 1.0, -1.0, 0.0)


class SingularPair(NamedTuple):
    """Сингулярные числа λmax ≥ λmin > 0, инвариант I = ‖F‖² и амплитуда сдвига γ."""
    lmax: float
    lmin: float
    I: float
    gamma: float


@dataclass(frozen=True, slots=True)
class RankOneDirection:
    """
    Направление ранга один ξ ⊗ η.

    Attributes:
        xi (Vec2): Левый множитель, ненулевой.
        eta (Vec2): Правый множитель, ненулевой.
    """
    xi: Vec2
    eta: Vec2

    def __post_init__(self):
        for label, vec in (("xi", self.xi), ("eta", self.eta)):
            x, y = float(vec[0]), float(vec[1])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise NonFiniteMatrixError(f"{label}={vec} не конечен")
            if x == 0.0 and y == 0.0:
                raise ZeroVectorError(f"{label} не может быть нулевым вектором")
            object.__setattr__(self, label, (x, y))

    def as_matrix(self) -> Mat2:
        return Mat2.outer(self.xi, self.eta)


class ShearDecomposition(NamedTuple):
    """F = q1 · K(gamma) · q2, residual — норма Фробениуса невязки."""
    q1: Mat2
    gamma: float
    q2: Mat2
    residual: float


def _require_nonzero(v: Vec2, label: str) -> Vec2:
    x, y = float(v[0]), float(v[1])
    if x == 0.0 and y == 0.0:
        raise ZeroVectorError(f"{label} не может быть нулевым вектором")
    return x, y


def det_expand(F: Mat2, H: Mat2) -> float:
    """
    Вычисляет det(F + H) = det F + det F · ⟨F⁻ᵀ, H⟩ + det H.

    При det F = 0 член с F⁻ᵀ не определен, и определитель суммы считается напрямую.

    Args:
        F: Базовая матрица
        H: Приращение

    Returns:
        det(F + H)
    """
    d = F.det()
    if d == 0.0:
        return (F + H).det()
    return d + d * F.inverse_T().inner(H) + H.det()


def _stretch_parts(a11, a12, a21, a22):
    """
    q = ½‖(a11 + a22, a21 − a12)‖ и r = ½‖(a11 − a22, a12 + a21)‖: λmax = q + r, λmin = |q − r|.

    Разность λmax − λmin = 2·min(q, r) считается без вычитания близких чисел.
    """
    return 0.5 * np.hypot(a11 + a22, a21 - a12), 0.5 * np.hypot(a11 - a22, a12 + a21)


def singular_values(F: Mat2) -> SingularPair:
    """
    Сингулярные числа в замкнутой форме через q ± r, s = ‖F‖² и d = |det F|.

    Raises:
        SingularMatrixError: Если det F = 0
    """
    d = abs(F.det())
    if d == 0.0:
        raise SingularMatrixError(f"Сингулярные числа не определены: det {F.as_list()} = 0")
    q, r = (float(v) for v in _stretch_parts(F.a11, F.a12, F.a21, F.a22))
    lmax = q + r
    return SingularPair(lmax=lmax, lmin=d / lmax, I=F.norm_sq(), gamma=2.0 * min(q, r))


def tangent_test(F: Mat2, direction: RankOneDirection) -> float:
    """
    Возвращает ⟨ξ, F⁻ᵀη⟩; ноль означает, что ξ ⊗ η касается SL(2) в F.
    """
    x, y = F.inverse_T().apply(direction.eta)
    return direction.xi[0] * x + direction.xi[1] * y


def tangent_basis(F: Mat2, eta: Vec2) -> Vec2:
    """
    Единственное с точностью до множителя ξ, для которого ξ ⊗ η касается SL(2) в F: ξ = εF⁻ᵀη.

    Args:
        F: Обратимая матрица
        eta: Ненулевой вектор

    Returns:
        Вектор ξ
    """
    eta = _require_nonzero(eta, "eta")
    return ALTERNATOR.apply(F.inverse_T().apply(eta))


def _svd_angles(a11, a12, a21, a22):
    """
    Замкнутая форма SVD 2x2: F = R(phi) · diag(sx, sy) · R(theta).

    Работает поэлементно и для скаляров, и для массивов numpy.
    """
    e = 0.5 * (a11 + a22)
    h = 0.5 * (a21 - a12)
    f = 0.5 * (a11 - a22)
    g = 0.5 * (a12 + a21)
    q = np.hypot(e, h)
    r = np.hypot(f, g)
    angle_1 = np.arctan2(g, f)
    angle_2 = np.arctan2(h, e)
    phi = 0.5 * (angle_2 + angle_1)
    theta = 0.5 * (angle_2 - angle_1)
    return phi, theta, q + r, q - r


def shear_decompose(F: Mat2, tolerance: float | None = None) -> ShearDecomposition:
    """
    Раскладывает F ∈ SL(2) в произведение Q1 · K(γ) · Q2 с поворотами Q1, Q2.

    γ = √(‖F‖² − 2) = λmax − λmin. Для F = I и для F = K(γ) оба поворота единичные.

    Args:
        F: Матрица из SL(2)
        tolerance: Допуск |det F − 1| (по умолчанию SL2_DET_TOLERANCE)

    Returns:
        ShearDecomposition с невязкой восстановления

    Raises:
        NotSpecialLinearError: Если F не принадлежит SL(2)
    """
    tol = config.SL2_DET_TOLERANCE if tolerance is None else tolerance
    if not F.is_special(tol):
        raise NotSpecialLinearError(f"det F = {F.det()!r}, F не принадлежит SL(2)")

    gamma = 2.0 * float(min(_stretch_parts(F.a11, F.a12, F.a21, F.a22)))
    K = Mat2.shear(gamma)
    phi_f, theta_f, _, _ = _svd_angles(F.a11, F.a12, F.a21, F.a22)
    phi_k, theta_k, _, _ = _svd_angles(K.a11, K.a12, K.a21, K.a22)
    q1 = Mat2.rotation(float(phi_f - phi_k))
    q2 = Mat2.rotation(float(theta_f - theta_k))
    residual = (q1 @ K @ q2).distance(F)
    if residual > 1e-8:
        logger.warning(f"⚠️ Большая невязка разложения на сдвиг: {residual:.3e} для F={F.as_list()}")
    return ShearDecomposition(q1=q1, gamma=gamma, q2=q2, residual=residual)


# --- Пакетные операции над массивами (..., 2, 2) ---

def batch_det(F: np.ndarray) -> np.ndarray:
    return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]


def batch_norm_sq(F: np.ndarray) -> np.ndarray:
    return np.sum(F * F, axis=(-2, -1))


def batch_inverse_transpose(F: np.ndarray) -> np.ndarray:
    d = batch_det(F)
    if np.any(d == 0.0):
        raise SingularMatrixError("В пакете есть вырожденная матрица")
    cof = np.empty_like(F)
    cof[..., 0, 0] = F[..., 1, 1]
    cof[..., 0, 1] = -F[..., 1, 0]
    cof[..., 1, 0] = -F[..., 0, 1]
    cof[..., 1, 1] = F[..., 0, 0]
    return cof / d[..., None, None]


def batch_det_expand(F: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Пакетный det(F + H) через разложение; det F должен быть ненулевым."""
    d = batch_det(F)
    return d + d * np.sum(batch_inverse_transpose(F) * H, axis=(-2, -1)) + batch_det(H)


def batch_singular_values(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Возвращает (λmax, λmin) для каждой матрицы пакета."""
    d = np.abs(batch_det(F))
    if np.any(d == 0.0):
        raise SingularMatrixError("В пакете есть вырожденная матрица")
    q, r = _stretch_parts(F[..., 0, 0], F[..., 0, 1], F[..., 1, 0], F[..., 1, 1])
    lmax = q + r
    return lmax, d / lmax


def batch_shear_amplitude(F: np.ndarray) -> np.ndarray:
    """γ = λmax − λmin = 2·min(q, r); для det F > 0 это ‖(a11 − a22, a12 + a21)‖."""
    q, r = _stretch_parts(F[..., 0, 0], F[..., 0, 1], F[..., 1, 0], F[..., 1, 1])
    return 2.0 * np.minimum(q, r)


def batch_apply(F: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", F, v)


def batch_outer(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    return xi[..., :, None] * eta[..., None, :]


def batch_tangent_basis(F: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """ξ = εF⁻ᵀη для каждой пары (F, η)."""
    v = batch_apply(batch_inverse_transpose(F), eta)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def batch_rotation(angle: np.ndarray) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)


def batch_shear_aligned_eta(F: np.ndarray) -> np.ndarray:
    """
    η = Q2ᵀe2 из разложения F = Q1 K(γ) Q2. Вдоль F + t(εF⁻ᵀη) ⊗ η
    матрица остается сопряженной сдвигу K(γ + t).
    """
    _, theta, _, _ = _svd_angles(F[..., 0, 0], F[..., 0, 1], F[..., 1, 0], F[..., 1, 1])
    gamma = batch_shear_amplitude(F)
    ones = np.ones_like(gamma)
    _, theta_k, _, _ = _svd_angles(ones, gamma, np.zeros_like(gamma), ones)
    alpha = theta - theta_k
    return np.stack([np.sin(alpha), np.cos(alpha)], axis=-1)


def batch_principal_directions(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Главные направления (U e1, V e1) сингулярного разложения F = U Σ Vᵀ.
    Вдоль F + t (Ue1) ⊗ (Ve1) меняется только старшее сингулярное число.
    """
    phi, theta, _, _ = _svd_angles(F[..., 0, 0], F[..., 0, 1], F[..., 1, 0], F[..., 1, 1])
    left = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    right = np.stack([np.cos(theta), -np.sin(theta)], axis=-1)
    return left, right


# --- Генераторы выборок ---

def random_unit_vectors(rng: np.random.Generator, shape) -> np.ndarray:
    angle = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    return np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def random_rotations(rng: np.random.Generator, n: int) -> np.ndarray:
    return batch_rotation(rng.uniform(0.0, 2.0 * np.pi, size=n))


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Повороты, половина из которых домножена на отражение diag(1, −1)."""
    Q = random_rotations(rng, n)
    flip = rng.random(n) < 0.5
    Q[flip, :, 1] *= -1.0
    return Q


def random_sl2(rng: np.random.Generator, n: int, log_range: float | None = None) -> np.ndarray:
    """F = R(a) · diag(λ, 1/λ) · R(b), log λ ~ U[−L, L]."""
    L = config.SAMPLING_LOG_RANGE if log_range is None else log_range
    R1 = random_rotations(rng, n)
    R2 = random_rotations(rng, n)
    lam = np.exp(rng.uniform(-L, L, size=n))
    D = np.zeros((n, 2, 2))
    D[:, 0, 0] = lam
    D[:, 1, 1] = 1.0 / lam
    return R1 @ D @ R2


def random_glplus2(rng: np.random.Generator, n: int, log_range: float | None = None) -> np.ndarray:
    """F = R(a) · diag(λ1, λ2) · R(b), log λ1, log λ2 ~ U[−L, L] независимо."""
    L = config.SAMPLING_LOG_RANGE if log_range is None else log_range
    R1 = random_rotations(rng, n)
    R2 = random_rotations(rng, n)
    D = np.zeros((n, 2, 2))
    D[:, 0, 0] = np.exp(rng.uniform(-L, L, size=n))
    D[:, 1, 1] = np.exp(rng.uniform(-L, L, size=n))
    return R1 @ D @ R2
