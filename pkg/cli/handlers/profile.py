import click

from cli.loaders import config_options, energy_source_options, fail, load_config, load_energy
from core import exprparse
from core.energy import EnergyError
from core.reporting import CURVES, profile_curve, write_csv


@click.command()
@energy_source_options
@click.option("--curve", type=click.Choice(CURVES), default="phi", show_default=True,
              help="Какую кривую выводить.")
@config_options
@click.option("--out", type=click.File("w", encoding="utf-8"), default="-", help="CSV-файл (по умолчанию stdout).")
def profile(energy_expr, energy_file, catalog_name, curve, seed, config_path, samples_f, samples_eta, workers, out):
    """Печатает кривую φ, ψ, h или slack-значения критерия в CSV."""
    cfg, hints = load_config(config_path, seed, samples_f, samples_eta, workers)
    energy, _ = load_energy(energy_expr, energy_file, catalog_name, hints.energy)
    try:
        header, rows = profile_curve(energy, curve, cfg)
    except (EnergyError, exprparse.ExprError) as e:
        fail(str(e))
    write_csv(out, header, rows)
