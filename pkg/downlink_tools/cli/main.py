'''Entry point of the sidsp console script.'''
import logging

from downlink_tools.caragols.logger import config_logging_for_app
from downlink_tools.cli.app import SchedulerApp

LOGGER = logging.getLogger(__name__)


def cli():
    '''Command line interface for downlink scheduling'''
    config_logging_for_app()
    SchedulerApp().run()


if __name__ == '__main__':
    cli()
