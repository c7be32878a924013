"""
Разбор общих опций CLI: источник энергии и конфигурация анализа.

Приоритет seed: --seed (или SLCONVEX_SEED) > файл --config > значение по умолчанию.
"""

import json
import logging
from pathlib import Path
from typing import NamedTuple, NoReturn

import click
from pydantic import ValidationError

from core import exprparse
from core.catalog import lookup
from core.energy import Domain, EnergyError, EnergySpec, energy_from_definition
from core.reporting import describe_energy
from core.schemas import AnalysisConfig, EnergyDescriptor
from utils.validators import is_valid_catalog_name, is_valid_definition

logger = logging.getLogger(__name__)

USAGE_EXIT_CODE = 2


class ReportHints(NamedTuple):
    """Что можно взять из отчета, переданного через --config: описание энергии и область анализа."""
    energy: dict | None = None
    domain: str | None = None


def fail(message: str) -> NoReturn:
    """Сообщение в stderr и выход с кодом 2."""
    click.echo(f"Ошибка: {message}", err=True)
    raise click.exceptions.Exit(USAGE_EXIT_CODE)


def energy_source_options(func):
    func = click.option("--catalog", "catalog_name", default=None, help="Имя энергии из каталога.")(func)
    func = click.option("--energy-file", type=click.Path(exists=True, dir_okay=False), default=None,
                        help="Файл с определением вида 'phi: <выражение>'.")(func)
    func = click.option("--energy-expr", default=None,
                        help="Определение энергии, например 'phi: gamma^2' или 'h: t + 1/t'.")(func)
    return func


def config_options(func):
    func = click.option("--workers", type=int, default=None, help="Потоки оракула.")(func)
    func = click.option("--samples-eta", type=int, default=None, help="Направлений η на каждую F.")(func)
    func = click.option("--samples-f", type=int, default=None, help="Число случайных F в оракуле.")(func)
    func = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                        help="JSON с AnalysisConfig или полный отчет (берется его поле config).")(func)
    func = click.option("--seed", type=int, envvar="SLCONVEX_SEED", default=None,
                        help="Seed оракулов (также SLCONVEX_SEED).")(func)
    return func


def load_config(config_path: str | None, seed: int | None, samples_f: int | None = None,
                samples_eta: int | None = None, workers: int | None = None) -> tuple[AnalysisConfig, ReportHints]:
    """
    Собирает AnalysisConfig из файла и опций.

    Returns:
        (конфигурация, подсказки из файла-отчета; пустые, если передан голый AnalysisConfig)
    """
    data: dict = {}
    hints = ReportHints()
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            fail(f"Не удалось прочитать {config_path}: {e}")
        if isinstance(raw, dict) and "config" in raw:
            data = dict(raw["config"])
            analysis = raw.get("analysis")
            hints = ReportHints(energy=raw.get("energy"),
                                domain=analysis.get("domain") if isinstance(analysis, dict) else None)
        elif isinstance(raw, dict):
            data = raw
        else:
            fail(f"{config_path}: ожидался JSON-объект")

    overrides = {"seed": seed, "oracle_samples_f": samples_f,
                 "oracle_samples_eta": samples_eta, "oracle_workers": workers}
    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        cfg = AnalysisConfig.model_validate(data)
    except ValidationError as e:
        fail(f"Некорректная конфигурация: {e}")
    logger.debug(f"Конфигурация анализа: seed={cfg.seed}")
    return cfg, hints


DOMAIN_CHOICES = {"sl2": Domain.SL2, "glplus2": Domain.GLPLUS2}


def resolve_domain(option: str | None, hints: ReportHints) -> Domain:
    """Явный --domain, иначе область из отчета --config, иначе SL(2)."""
    if option:
        return DOMAIN_CHOICES[option.lower()]
    if hints.domain:
        try:
            return Domain(hints.domain)
        except ValueError:
            fail(f"Неизвестная область анализа в отчете: {hints.domain!r}")
    return Domain.SL2


def read_definition(path: str) -> str:
    """Читает файл с определением энергии; нечитаемый файл или не-UTF-8 — ошибка использования."""
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        fail(f"Не удалось прочитать {path}: {e}")


def load_energy(energy_expr: str | None, energy_file: str | None, catalog_name: str | None,
                energy_hint: dict | None = None) -> tuple[EnergySpec, EnergyDescriptor]:
    """
    Ровно один источник энергии: выражение, файл, запись каталога или описание из отчета.
    """
    given = [s for s in (energy_expr, energy_file, catalog_name) if s]
    if len(given) > 1:
        fail("Укажите только один из --energy-expr, --energy-file, --catalog")
    if not given and energy_hint:
        try:
            hint = EnergyDescriptor.model_validate(energy_hint)
        except ValidationError as e:
            fail(f"Некорректное описание энергии в отчете: {e}")
        catalog_name, energy_expr = hint.catalog_entry, None if hint.catalog_entry else hint.expression
        if not catalog_name and not energy_expr:
            fail("В отчете нет воспроизводимого описания энергии")
    elif not given:
        fail("Нужен источник энергии: --energy-expr, --energy-file или --catalog")

    if catalog_name and not is_valid_catalog_name(catalog_name):
        fail(f"Некорректное имя записи каталога: {catalog_name!r}")

    try:
        if catalog_name:
            entry = lookup(catalog_name)
            return entry.energy, describe_energy(entry.energy, catalog_entry=entry.name)
        if energy_file:
            text = read_definition(energy_file)
        else:
            text = energy_expr
        if not is_valid_definition(text):
            fail("Пустое или слишком длинное определение энергии")
        energy = energy_from_definition(text)
    except KeyError as e:
        fail(str(e.args[0]))
    except exprparse.ExprError as e:
        fail(str(e))
    except EnergyError as e:
        fail(f"Энергия отклонена: {e}")
    return energy, describe_energy(energy)
