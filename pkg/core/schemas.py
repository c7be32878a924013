"""
Pydantic-модели конфигурации анализа и отчетов.

Отчеты сериализуются через model_dump_json(indent=2); все поля, кроме timing,
детерминированы при фиксированном seed.
"""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config


class Verdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INAPPLICABLE = "inapplicable"


class AnalysisConfig(BaseModel):
    """
    Параметры анализа. Значения по умолчанию берутся из config.py.

    Attributes:
        seed (int): Seed генератора для оракулов.
        tau (float): Допуск нормированных slack-значений при аналитических производных.
        tau_fd (float): Допуск, если хотя бы одна производная получена конечными разностями.
        tau_oracle (float): Относительный допуск оракула (умножается на масштаб энергии).
        boundary_factor (float): |slack| ≤ boundary_factor · τ помечается как граничный случай.
        gamma_grid_max (float): Правый конец сетки γ ∈ [0, gamma_grid_max].
        gamma_grid_points (int): Число узлов сетки γ.
        fd_min_gamma (float): Начало сетки по I для численных производных (I = 2 + γ²).
        ratio_grid_max (float): Правый конец сетки t ∈ [1, ratio_grid_max].
        ratio_grid_points (int): Число узлов сетки t.
        lambda_grid_points (int): Размер сетки λ1 × λ2 для раздельной выпуклости.
        oracle_samples_f (int): Число случайных F в оракуле.
        oracle_samples_eta (int): Число случайных направлений на каждую F.
        oracle_ladder_points (int): Длина геометрической лестницы шагов s.
        oracle_ladder_min (float): Минимальный шаг s.
        oracle_ladder_max (float): Максимальный шаг s.
        oracle_centers (list[float]): Центры c троек (c − s, c, c + s).
        oracle_aligned_directions (bool): Добавлять направление, выровненное по сдвигу (SL(2))
            или по главной оси (GL+(2)).
        oracle_max_witnesses (int): Сколько свидетелей нарушения хранить.
        oracle_workers (int): Число потоков оракула.
        glplus_det_floor (float): Отрезки в GL+(2) с det < floor · det F пропускаются.
        sampling_log_range (float): log λ ~ U[−L, L] для выборок F.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(default_factory=lambda: config.DEFAULT_SEED)
    tau: float = config.CRITERION_TOLERANCE
    tau_fd: float = config.FD_TOLERANCE
    tau_oracle: float = config.ORACLE_TOLERANCE
    boundary_factor: float = config.BOUNDARY_FACTOR
    gamma_grid_max: float = Field(default=config.GAMMA_GRID_MAX, gt=0)
    gamma_grid_points: int = Field(default=config.GAMMA_GRID_POINTS, ge=3)
    fd_min_gamma: float = Field(default=config.FD_MIN_GAMMA, gt=0)
    ratio_grid_max: float = Field(default=config.RATIO_GRID_MAX, gt=1)
    ratio_grid_points: int = Field(default=config.RATIO_GRID_POINTS, ge=3)
    lambda_grid_points: int = Field(default=config.LAMBDA_GRID_POINTS, ge=3)
    oracle_samples_f: int = Field(default=config.ORACLE_SAMPLES_F, ge=1)
    oracle_samples_eta: int = Field(default=config.ORACLE_SAMPLES_ETA, ge=0)
    oracle_ladder_points: int = Field(default=config.ORACLE_LADDER_POINTS, ge=1)
    oracle_ladder_min: float = Field(default=config.ORACLE_LADDER_MIN, gt=0)
    oracle_ladder_max: float = Field(default=config.ORACLE_LADDER_MAX, gt=0)
    oracle_centers: list[float] = Field(default_factory=lambda: [0.0, -1.0, 1.0])
    oracle_aligned_directions: bool = True
    oracle_max_witnesses: int = Field(default=config.ORACLE_MAX_WITNESSES, ge=1)
    oracle_workers: int = Field(default=config.ORACLE_WORKERS, ge=1)
    glplus_det_floor: float = Field(default=config.GLPLUS_DET_FLOOR, gt=0, lt=1)
    sampling_log_range: float = Field(default=config.SAMPLING_LOG_RANGE, gt=0)

    @model_validator(mode="after")
    def check_ladder(self):
        if self.oracle_ladder_min > self.oracle_ladder_max:
            raise ValueError("oracle_ladder_min должен быть ≤ oracle_ladder_max")
        if self.oracle_samples_eta == 0 and not self.oracle_aligned_directions:
            raise ValueError("Оракулу нужно хотя бы одно направление на каждую F")
        return self

    @field_validator("oracle_centers")
    @classmethod
    def check_centers(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("Нужен хотя бы один центр тройки")
        return value

    def tolerance(self, finite_difference: bool) -> float:
        return self.tau_fd if finite_difference else self.tau

    def gamma_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.gamma_grid_max, self.gamma_grid_points)

    def derivative_gamma_grid(self, finite_difference: bool) -> np.ndarray:
        """Сетка γ > 0 для производных критериев; при численных производных γ ≥ fd_min_gamma."""
        grid = self.gamma_grid()[1:]
        if finite_difference:
            grid = grid[grid >= self.fd_min_gamma]
        return grid

    def ratio_grid(self) -> np.ndarray:
        return np.geomspace(1.0, self.ratio_grid_max, self.ratio_grid_points)

    def full_ratio_grid(self) -> np.ndarray:
        """Сетка t ∈ [1/tmax, tmax], симметричная в логарифмической шкале."""
        return np.geomspace(1.0 / self.ratio_grid_max, self.ratio_grid_max, 2 * self.ratio_grid_points - 1)

    def lambda_grid(self) -> np.ndarray:
        edge = np.exp(self.sampling_log_range)
        return np.geomspace(1.0 / edge, edge, self.lambda_grid_points)

    def ladder(self) -> np.ndarray:
        return np.geomspace(self.oracle_ladder_min, self.oracle_ladder_max, self.oracle_ladder_points)


class GridStat(BaseModel):
    """
    Минимум одного неравенства на сетке.

    Attributes:
        inequality (str): Имя неравенства.
        min_slack (float): Минимальное нормированное значение.
        argmin (dict[str, float]): Координаты минимума.
        points (int): Число проверенных узлов.
    """
    inequality: str
    min_slack: float
    argmin: dict[str, float]
    points: int


class Witness(BaseModel):
    """
    Свидетель нарушения: тройка на отрезке, пара или узел сетки.

    Attributes:
        kind (str): "segment", "gamma-pair", "gamma-triple", "grid-point", "t-pair",
            "t-triple", "lambda-triple".
        margin (float): Величина нарушения (> 0), в единицах неравенства.
        points (list[float]): Координаты узлов сетки (для сеточных свидетелей).
        F (list[list[float]] | None): Матрица F для отрезков.
        xi (list[float] | None): Вектор ξ.
        eta (list[float] | None): Вектор η.
        t_triple (list[float] | None): Параметры (c − s, c, c + s) на отрезке F + t ξ ⊗ η.
        scale (float | None): Масштаб max(1, |W|) тройки.
        sample_index (int | None): Номер F в выборке оракула.
    """
    kind: str
    margin: float
    points: list[float] = Field(default_factory=list)
    F: list[list[float]] | None = None
    xi: list[float] | None = None
    eta: list[float] | None = None
    t_triple: list[float] | None = None
    scale: float | None = None
    sample_index: int | None = None


class CriterionResult(BaseModel):
    """
    Результат одного критерия.

    Attributes:
        criterion (str): Машинное имя критерия.
        label (str): Что проверяется.
        verdict (Verdict): holds / fails / inapplicable.
        boundary (bool): Минимальный slack в пределах boundary_factor · τ от нуля.
        min_slack (float | None): Минимальное нормированное значение по всем неравенствам.
        tolerance (float): Использованный допуск.
        derivative_mode (str | None): analytic / finite-difference.
        inequalities (list[GridStat]): Статистика по каждому неравенству.
        witnesses (list[Witness]): Свидетели нарушения (непусто при fails).
        samples (int): Число проверенных узлов или троек.
        skipped (int): Пропущенные узлы (изломы, отрезки вне GL+(2)).
        notes (list[str]): Пояснения.
    """
    criterion: str
    label: str
    verdict: Verdict
    boundary: bool = False
    min_slack: float | None = None
    tolerance: float
    derivative_mode: str | None = None
    inequalities: list[GridStat] = Field(default_factory=list)
    witnesses: list[Witness] = Field(default_factory=list)
    samples: int = 0
    skipped: int = 0
    notes: list[str] = Field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


class Diagnostic(BaseModel):
    """
    Attributes:
        kind (str): "disagreement", "boundary-disagreement", "implication", "info".
        message (str): Текст.
        criteria (list[str]): Затронутые критерии.
    """
    kind: str
    message: str
    criteria: list[str] = Field(default_factory=list)


class ConvexityReport(BaseModel):
    """
    Итог анализа одной энергии на одной области.

    Attributes:
        energy_name (str): Имя энергии.
        domain (str): SL2 или GLplus2.
        verdicts (dict[str, Verdict]): Вердикт каждого критерия.
        results (list[CriterionResult]): Подробности по критериям.
        diagnostics (list[Diagnostic]): Расхождения критериев и прочие замечания.
        seed (int): Seed оракула.
        sample_counts (dict[str, int]): Размеры сеток и выборок.
    """
    energy_name: str
    domain: str
    verdicts: dict[str, Verdict]
    results: list[CriterionResult]
    diagnostics: list[Diagnostic] = Field(default_factory=list)
    seed: int
    sample_counts: dict[str, int] = Field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(v is not Verdict.FAILS for v in self.verdicts.values())

    @property
    def hard_disagreements(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.kind == "disagreement"]

    def result(self, criterion: str) -> CriterionResult:
        for item in self.results:
            if item.criterion == criterion:
                return item
        raise KeyError(criterion)


class ClaimResult(BaseModel):
    """
    Проверка одного утверждения о контрпримере.

    Attributes:
        claim (str): Короткое имя утверждения.
        statement (str): Формулировка.
        verified (bool): Подтверждено ли численно.
        details (dict[str, float]): Числовые подробности (дефекты, значения h″, запасы).
        witnesses (list[Witness]): Свидетели для отрицательных утверждений.
    """
    claim: str
    statement: str
    verified: bool
    details: dict[str, float] = Field(default_factory=dict)
    witnesses: list[Witness] = Field(default_factory=list)


class EnergyDescriptor(BaseModel):
    """
    Attributes:
        name (str): Имя энергии.
        representation (str): Форма энергии.
        claimed_domain (str): Область определения.
        expression (str | None): Текст определения для пользовательских энергий.
        catalog_entry (str | None): Имя записи каталога.
    """
    name: str
    representation: str
    claimed_domain: str
    expression: str | None = None
    catalog_entry: str | None = None


class ReportDocument(BaseModel):
    """
    Машиночитаемый отчет команды CLI.

    Attributes:
        schema_version (str): Версия схемы отчета.
        tool (str): Имя инструмента.
        tool_version (str): Версия инструмента.
        command (str): analyze или counterexample.
        energy (EnergyDescriptor | None): Анализируемая энергия.
        config (AnalysisConfig): Полная конфигурация; повторный запуск с ней воспроизводит отчет.
        analysis (ConvexityReport | None): Результат analyze.
        claims (list[ClaimResult]): Результат counterexample.
        passed (bool): Все критерии выполнены / все утверждения подтверждены.
        timing (dict[str, float]): Время стадий; единственное недетерминированное поле.
    """
    schema_version: str = config.REPORT_SCHEMA_VERSION
    tool: str = config.TOOL_NAME
    tool_version: str = config.TOOL_VERSION
    command: str
    energy: EnergyDescriptor | None = None
    config: AnalysisConfig
    analysis: ConvexityReport | None = None
    claims: list[ClaimResult] = Field(default_factory=list)
    passed: bool
    timing: dict[str, float] = Field(default_factory=dict)


class CatalogEntryInfo(BaseModel):
    """
    Attributes:
        name (str): Имя записи.
        representation (str): Форма энергии.
        family (str): Семейство (одинаково у изохорной и несжимаемой версий одной энергии).
        description (str): Описание.
        expected (dict[str, bool]): Ожидаемые вердикты.
    """
    name: str
    representation: str
    family: str
    description: str
    expected: dict[str, bool]
