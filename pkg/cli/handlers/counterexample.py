import logging
from pathlib import Path

import click

from cli.loaders import config_options, load_config
from core.isochoric import CounterexampleDefect, counterexample_suite
from core.reporting import counterexample_document, render_claims
from utils.timing import reset_stage_metrics, track_stage

logger = logging.getLogger(__name__)


@click.command()
@config_options
@click.option("--strict", is_flag=True, help="Падать при первом неподтвержденном утверждении.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Куда записать JSON-отчет.")
@click.option("--json", "as_json", is_flag=True, help="Печатать JSON-отчет вместо сводки.")
def counterexample(seed, config_path, samples_f, samples_eta, workers, strict, out, as_json):
    """Воспроизводит проверку контрпримера; код 0, если все утверждения подтверждены."""
    reset_stage_metrics()
    cfg, _ = load_config(config_path, seed, samples_f, samples_eta, workers)
    try:
        with track_stage("counterexample"):
            claims = counterexample_suite(cfg, strict=strict)
    except CounterexampleDefect as e:
        click.echo(f"Ошибка: {e}", err=True)
        raise click.exceptions.Exit(1)

    document = counterexample_document(claims, cfg)
    payload = document.model_dump_json(indent=2)
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
    else:
        click.echo(payload if as_json else render_claims(claims))
    raise click.exceptions.Exit(0 if document.passed else 1)
