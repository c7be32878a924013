import json

import click

from cli.loaders import fail
from core.catalog import catalog, lookup
from core.schemas import ReportDocument


@click.command("catalog")
@click.option("--name", default=None, help="Показать одну запись.")
@click.option("--json", "as_json", is_flag=True, help="Вывод в JSON.")
def catalog_command(name, as_json):
    """Список эталонных энергий и их ожидаемые вердикты."""
    try:
        entries = [lookup(name)] if name else catalog()
    except KeyError as e:
        fail(str(e.args[0]))

    if as_json:
        click.echo(json.dumps([e.info().model_dump() for e in entries], ensure_ascii=False, indent=2))
        return

    width = max(len(e.name) for e in entries)
    for entry in entries:
        expected = ", ".join(f"{key}={'yes' if value else 'no'}" for key, value in entry.expected.items())
        click.echo(f"{entry.name:<{width}}  {entry.energy.representation.value:<13} {expected}")
        click.echo(f"{'':<{width}}  {entry.energy.description}")


@click.command("schema")
def schema_command():
    """JSON Schema машиночитаемого отчета."""
    click.echo(json.dumps(ReportDocument.model_json_schema(), ensure_ascii=False, indent=2))
