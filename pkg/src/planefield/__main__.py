"""Run the command line with `python -m planefield`."""

from planefield.cli import cli

cli(prog_name="planefield")
