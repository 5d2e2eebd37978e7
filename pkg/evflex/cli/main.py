"""
evflex command-line entry point.

Exit codes: 0 success, 1 input error, 2 invariant violation, 3 I/O error.
"""
import click
from pydantic import ValidationError

from evflex import __version__
from evflex.cli.commands.flex import flex
from evflex.cli.commands.generate import generate
from evflex.cli.commands.report import report
from evflex.cli.commands.run_all import run_all
from evflex.cli.commands.simulate import simulate
from evflex.core.logs import logger
from evflex.utils.exceptions import (
    BatteryAssignmentError,
    ChronologyError,
    ConfigError,
    FlexibilityPreconditionError,
    InvariantViolationError,
    ScheduleFormatError,
    UnknownRegionError,
)

EXIT_INPUT = 1
EXIT_INVARIANT = 2
EXIT_IO = 3

INPUT_ERRORS = (ScheduleFormatError, ConfigError, UnknownRegionError, BatteryAssignmentError, ValidationError)
INVARIANT_ERRORS = (ChronologyError, InvariantViolationError, FlexibilityPreconditionError)


def _fail(ctx: click.Context, code: int, error: Exception) -> None:
    logger.error(f"{type(error).__name__}: {error}")
    click.echo(f"error: {error}", err=True)
    if isinstance(error, ChronologyError):
        for violation in error.violations[:20]:
            click.echo(f"  {violation}", err=True)
    ctx.exit(code)


class EvflexGroup(click.Group):
    """Maps domain exceptions raised by subcommands to exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except INPUT_ERRORS as e:
            _fail(ctx, EXIT_INPUT, e)
        except INVARIANT_ERRORS as e:
            _fail(ctx, EXIT_INVARIANT, e)
        except OSError as e:
            _fail(ctx, EXIT_IO, e)


@click.group(cls=EvflexGroup)
@click.version_option(__version__, prog_name="evflex")
def cli():
    """Simulate EV fleet charging and quantify its flexibility."""


cli.add_command(generate)
cli.add_command(simulate)
cli.add_command(flex)
cli.add_command(report)
cli.add_command(run_all)


def main():
    cli(prog_name="evflex")
