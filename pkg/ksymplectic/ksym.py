#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# KSymplectic project.
#
import click
from ksymplectic import __version__
from ksymplectic.common.config import setup_logging
from ksymplectic.cli.all import all_suites
from ksymplectic.cli.charclass import charclass
from ksymplectic.cli.connection import connection
from ksymplectic.cli.curvature import curvature
from ksymplectic.cli.geodesic import geodesic
from ksymplectic.cli.kaehler import kaehler
from ksymplectic.cli.normal_form import normal_form
from ksymplectic.cli.rectangle import rectangle
from ksymplectic.cli.transport import transport
from ksymplectic.cli.validate import validate


@click.group()
@click.version_option(__version__, prog_name="ksym")
@click.option("--debug", is_flag=True, envvar="KSYM_DEBUG", help="Debug logging for every command")
def ksymcli(debug):
    setup_logging(debug)


ksymcli.add_command(validate)
ksymcli.add_command(connection)
ksymcli.add_command(curvature)
ksymcli.add_command(transport)
ksymcli.add_command(geodesic)
ksymcli.add_command(rectangle)
ksymcli.add_command(normal_form)
ksymcli.add_command(kaehler)
ksymcli.add_command(charclass)
ksymcli.add_command(all_suites)


if __name__ == '__main__':
    ksymcli()
