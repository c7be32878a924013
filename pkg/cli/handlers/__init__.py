import click

from .analyze import analyze
from .catalog import catalog_command, schema_command
from .counterexample import counterexample
from .profile import profile


def register_commands(group: click.Group):
    group.add_command(analyze)
    group.add_command(counterexample)
    group.add_command(profile)
    group.add_command(catalog_command)
    group.add_command(schema_command)
