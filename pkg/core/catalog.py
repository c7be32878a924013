# -*- coding: utf-8 -*-
"""
Каталог эталонных энергий и случайное семейство профилей сдвига.

Ожидаемые вердикты:
    sl2_rank_one    — ранг-один выпукла на SL(2)
    sl2_polyconvex  — поливыпукла на SL(2)
    glplus_rank_one — изохорный подъем ранг-один выпукл в GL+(2)
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from core.energy import (
    EnergySpec,
    ScalarProfile,
    invariant_psi_energy,
    ratio_h_energy,
    shear_phi_energy,
)
from core.schemas import CatalogEntryInfo

logger = logging.getLogger(__name__)

FUNG_STIFFENING = 0.2

CATALOG_CONFIG = {
    "neo-hooke-inc": {
        "family": "neo-hooke",
        "description": "ψ(I) = I − 2, несжимаемый неогук",
        "expected": {"sl2_rank_one": True, "sl2_polyconvex": True, "glplus_rank_one": True},
        "smooth_psi": True,
    },
    "counterexample-iso": {
        "family": "counterexample",
        "description": "h(t) = |√t − 1/√t|: изохорная, ранг-один выпукла на SL(2), но не в GL+(2)",
        "expected": {"sl2_rank_one": True, "sl2_polyconvex": True, "glplus_rank_one": False},
        "smooth_psi": False,
    },
    "counterexample-inc": {
        "family": "counterexample",
        "description": "φ(γ) = γ: несжимаемая версия контрпримера",
        "expected": {"sl2_rank_one": True, "sl2_polyconvex": True, "glplus_rank_one": False},
        "smooth_psi": False,
    },
    "iso-ratio": {
        "family": "iso-ratio",
        "description": "h(t) = t + 1/t, на SL(2) это ψ(I) = I и φ(γ) = γ² + 2",
        "expected": {"sl2_rank_one": True, "sl2_polyconvex": True, "glplus_rank_one": True},
        "smooth_psi": True,
    },
    "phi-neg": {
        "family": "phi-neg",
        "description": "φ(γ) = −γ: убывающий профиль сдвига",
        "expected": {"sl2_rank_one": False, "sl2_polyconvex": False, "glplus_rank_one": False},
        "smooth_psi": False,
    },
    "phi-sqrt": {
        "family": "phi-sqrt",
        "description": "φ(γ) = √γ: вогнутый профиль сдвига",
        "expected": {"sl2_rank_one": False, "sl2_polyconvex": False, "glplus_rank_one": False},
        "smooth_psi": False,
    },
    "quadratic-psi": {
        "family": "quadratic-psi",
        "description": "ψ(I) = I²",
        "expected": {"sl2_rank_one": True, "sl2_polyconvex": True, "glplus_rank_one": True},
        "smooth_psi": True,
    },
    "fung-inc": {
        "family": "fung",
        "description": f"ψ(I) = (exp(k(I − 2)) − 1)/(2k), k = {FUNG_STIFFENING}",
        "expected": {"sl2_rank_one": True, "sl2_polyconvex": True, "glplus_rank_one": True},
        "smooth_psi": True,
    },
    "hencky-inc": {
        "family": "hencky",
        "description": "ψ(I) = ½ arcosh(I/2)², φ(γ) = 2 arsinh(γ/2)²: теряет выпуклость при γ > 3.02",
        "expected": {"sl2_rank_one": False, "sl2_polyconvex": False, "glplus_rank_one": False},
        "smooth_psi": True,
    },
}


def _counterexample_h() -> ScalarProfile:
    def h(t):
        return np.abs(np.sqrt(t) - 1.0 / np.sqrt(t))

    def d1(t):
        return np.sign(t - 1.0) * (0.5 * t ** -0.5 + 0.5 * t ** -1.5)

    def d2(t):
        return np.sign(t - 1.0) * (-0.25 * t ** -1.5 - 0.75 * t ** -2.5)

    return ScalarProfile(h, d1, d2, domain_lo=0.0, domain_open=True, variable="t")


def _hencky_psi() -> ScalarProfile:
    def d1(I):
        return np.arccosh(I / 2.0) / np.sqrt(I ** 2 - 4.0)

    def d2(I):
        root = np.sqrt(I ** 2 - 4.0)
        return (1.0 - I * np.arccosh(I / 2.0) / root) / (I ** 2 - 4.0)

    return ScalarProfile(lambda I: 0.5 * np.arccosh(I / 2.0) ** 2, d1, d2, domain_lo=2.0, variable="I")


def _fung_psi(k: float = FUNG_STIFFENING) -> ScalarProfile:
    return ScalarProfile(
        lambda I: (np.exp(k * (I - 2.0)) - 1.0) / (2.0 * k),
        lambda I: 0.5 * np.exp(k * (I - 2.0)),
        lambda I: 0.5 * k * np.exp(k * (I - 2.0)),
        domain_lo=2.0,
        variable="I",
    )


def _build(name: str) -> EnergySpec:
    description = CATALOG_CONFIG[name]["description"]
    if name == "neo-hooke-inc":
        psi = ScalarProfile(lambda I: I - 2.0, lambda I: np.ones_like(I), lambda I: np.zeros_like(I),
                            domain_lo=2.0, variable="I")
        return invariant_psi_energy(name, psi, description=description)
    if name == "counterexample-iso":
        return ratio_h_energy(name, _counterexample_h(), description=description)
    if name == "counterexample-inc":
        phi = ScalarProfile(lambda g: g, lambda g: np.ones_like(g), lambda g: np.zeros_like(g), variable="gamma")
        return shear_phi_energy(name, phi, description=description)
    if name == "iso-ratio":
        h = ScalarProfile(lambda t: t + 1.0 / t, lambda t: 1.0 - t ** -2.0, lambda t: 2.0 * t ** -3.0,
                          domain_lo=0.0, domain_open=True, variable="t")
        return ratio_h_energy(name, h, description=description)
    if name == "phi-neg":
        phi = ScalarProfile(lambda g: -g, lambda g: -np.ones_like(g), lambda g: np.zeros_like(g), variable="gamma")
        return shear_phi_energy(name, phi, description=description)
    if name == "phi-sqrt":
        phi = ScalarProfile(np.sqrt, lambda g: 0.5 * g ** -0.5, lambda g: -0.25 * g ** -1.5, variable="gamma")
        return shear_phi_energy(name, phi, description=description)
    if name == "quadratic-psi":
        psi = ScalarProfile(lambda I: I ** 2, lambda I: 2.0 * I, lambda I: np.full_like(I, 2.0),
                            domain_lo=2.0, variable="I")
        return invariant_psi_energy(name, psi, description=description)
    if name == "fung-inc":
        return invariant_psi_energy(name, _fung_psi(), description=description)
    return invariant_psi_energy(name, _hencky_psi(), description=description)


@dataclass(frozen=True)
class CatalogEntry:
    """
    Запись каталога.

    Attributes:
        name (str): Имя записи.
        energy (EnergySpec): Энергия.
        family (str): Семейство; изохорная и несжимаемая версии одной энергии делят семейство.
        expected (dict[str, bool]): Ожидаемые вердикты.
        smooth_psi (bool): ψ гладкая при I > 2 (пригодна для проверки акустического тензора).
    """
    name: str
    energy: EnergySpec
    family: str
    expected: dict[str, bool]
    smooth_psi: bool

    def info(self) -> CatalogEntryInfo:
        return CatalogEntryInfo(
            name=self.name,
            representation=self.energy.representation.value,
            family=self.family,
            description=self.energy.description,
            expected=dict(self.expected),
        )


def catalog() -> list[CatalogEntry]:
    """Все записи каталога в фиксированном порядке."""
    return [
        CatalogEntry(
            name=name,
            energy=_build(name),
            family=meta["family"],
            expected=dict(meta["expected"]),
            smooth_psi=meta["smooth_psi"],
        )
        for name, meta in CATALOG_CONFIG.items()
    ]


def lookup(name: str) -> CatalogEntry:
    """
    Raises:
        KeyError: Нет записи с таким именем
    """
    if name not in CATALOG_CONFIG:
        raise KeyError(f"В каталоге нет энергии '{name}'. Доступны: {', '.join(CATALOG_CONFIG)}")
    meta = CATALOG_CONFIG[name]
    return CatalogEntry(name, _build(name), meta["family"], dict(meta["expected"]), meta["smooth_psi"])


# --- Случайное семейство профилей сдвига ---

@dataclass(frozen=True)
class FamilyMember:
    """
    Attributes:
        energy (EnergySpec): Энергия ShearPhi с аналитическими производными.
        kind (str): "convex-polynomial", "negated-polynomial" или "log-concave".
        expected_sl2 (bool): Ожидаемая ранг-один выпуклость на SL(2).
    """
    energy: EnergySpec
    kind: str
    expected_sl2: bool


def _polynomial_profile(p: Polynomial, sign: float = 1.0) -> ScalarProfile:
    dp, ddp = p.deriv(1), p.deriv(2)
    return ScalarProfile(
        lambda g: sign * p(g),
        lambda g: sign * dp(g),
        lambda g: sign * ddp(g),
        variable="gamma",
    )


def _log_profile(p: Polynomial) -> ScalarProfile:
    dp, ddp = p.deriv(1), p.deriv(2)
    return ScalarProfile(
        lambda g: np.log1p(p(g)),
        lambda g: dp(g) / (1.0 + p(g)),
        lambda g: (ddp(g) * (1.0 + p(g)) - dp(g) ** 2) / (1.0 + p(g)) ** 2,
        variable="gamma",
    )


def random_phi_family(seed: int, count: int) -> list[FamilyMember]:
    """
    Воспроизводимое семейство профилей φ для сверки критериев.

    По остатку i mod 3:
        0 — многочлен Σ c_k γ^k, c_k ∈ [0.1, 1], степень 2–4: неубывает и выпукл;
        1 — тот же многочлен со знаком минус: убывает;
        2 — log(1 + c1 γ + c2 γ²), c1 ∈ [1, 2], c2 ∈ [0.1, 0.5]: вогнут уже в нуле.
    """
    rng = np.random.default_rng(seed)
    members = []
    for i in range(count):
        kind = i % 3
        if kind < 2:
            degree = int(rng.integers(2, 5))
            coefficients = np.concatenate(([0.0], rng.uniform(0.1, 1.0, size=degree)))
            p = Polynomial(coefficients)
            sign = 1.0 if kind == 0 else -1.0
            label = "convex-polynomial" if kind == 0 else "negated-polynomial"
            energy = shear_phi_energy(f"family-{i}-{label}", _polynomial_profile(p, sign),
                                      description=f"{'' if sign > 0 else '−'}({p})")
            members.append(FamilyMember(energy, label, expected_sl2=kind == 0))
        else:
            c1 = rng.uniform(1.0, 2.0)
            c2 = rng.uniform(0.1, 0.5)
            p = Polynomial([0.0, c1, c2])
            energy = shear_phi_energy(f"family-{i}-log-concave", _log_profile(p),
                                      description=f"log(1 + {c1:.4f}γ + {c2:.4f}γ²)")
            members.append(FamilyMember(energy, "log-concave", expected_sl2=False))
    logger.debug(f"Сгенерировано семейство из {count} профилей (seed={seed})")
    return members
