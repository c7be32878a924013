import logging
from pathlib import Path

import click

from cli.loaders import (
    DOMAIN_CHOICES,
    config_options,
    energy_source_options,
    fail,
    load_config,
    load_energy,
    resolve_domain,
)
from core import exprparse
from core.convexity import KernelInvariantError, analyze as run_analysis
from core.energy import EnergyError
from core.reporting import analysis_document, render_report
from core.tensor2 import MatrixError
from utils.timing import reset_stage_metrics

logger = logging.getLogger(__name__)


@click.command()
@energy_source_options
@click.option("--domain", type=click.Choice(list(DOMAIN_CHOICES), case_sensitive=False), default=None,
              help="Область анализа: sl2 (по умолчанию) или glplus2; с отчетом в --config берется из него.")
@config_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Куда записать JSON-отчет.")
@click.option("--json", "as_json", is_flag=True, help="Печатать JSON-отчет вместо сводки.")
def analyze(energy_expr, energy_file, catalog_name, domain, seed, config_path, samples_f, samples_eta,
            workers, out, as_json):
    """
    Анализирует энергию всеми критериями. Код выхода: 0 — все критерии выполнены,
    1 — есть нарушения, 2 — ошибка использования или разбора.
    """
    reset_stage_metrics()
    cfg, hints = load_config(config_path, seed, samples_f, samples_eta, workers)
    energy, descriptor = load_energy(energy_expr, energy_file, catalog_name, hints.energy)
    target = resolve_domain(domain, hints)

    try:
        report = run_analysis(energy, target, cfg)
    except (EnergyError, exprparse.ExprError, MatrixError) as e:
        logger.error(f"Анализ '{energy.name}' прерван: {e}")
        fail(str(e))
    except KernelInvariantError as e:
        logger.error(f"💥 Нарушен инвариант ядра при анализе '{energy.name}': {e}", exc_info=True)
        raise

    document = analysis_document(report, descriptor, cfg)
    payload = document.model_dump_json(indent=2)
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
        logger.info(f"📄 Отчет записан в {out}")
    else:
        click.echo(payload if as_json else render_report(report))
    raise click.exceptions.Exit(0 if report.all_hold else 1)
