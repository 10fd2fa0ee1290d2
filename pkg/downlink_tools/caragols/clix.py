"""
caragols.clix

I am the Command Line Invocation eXtension (clix)

Defaults live in YAML documents layered on top of each other; the command line is an edit
stream over the result. Any method named do_<word>[_<word>...] becomes a command whose
tokens are the words after "do_".
"""
import logging
import shutil
import sys
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional
from uuid import uuid4

import downlink_tools
from downlink_tools.caragols import carp, condo
from downlink_tools.caragols.session import SessionLogger

LOGGER = logging.getLogger(__name__)


@dataclass
class Dispatch:
    '''natural language tokens mapped to a do_* method'''
    tokens: list[str]
    action: Callable
    gravity: int = field(init=False)
    barewords: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.gravity = len(self.tokens)


class App:
    """Configuration, logging and command line parsing for one invocation."""

    template_config_path = Path(__file__).parent / 'config-template.yaml'
    config_filename = 'config.yaml'
    default_config_path = Path.home() / '.config' / 'downlink-tools' / config_filename

    # (exception type, reply status code) pairs tried in order when an action raises
    error_statuses: tuple[tuple[type[BaseException], int], ...] = ((ValueError, 400),)

    def __init__(self, name=None, argv: list[str] | None = None):
        self.session_id = str(uuid4())[:8]
        self.session_start = datetime.now()
        SessionLogger.start_session_info(LOGGER, self.session_id, self.session_start)

        self._name = name
        self.argv: list[str] = sys.argv[1:] if argv is None else list(argv)
        self.report: carp.Report | None = None
        self.conf: condo.CxNode
        self.matched_dispatch: Dispatch | None = None
        self.barewords: list[str] = []

        SessionLogger.log_header_section(LOGGER, '(i) Configuration setup')
        self.configure(self.argv)

        SessionLogger.log_header_section(LOGGER, '(ii) Initializing dispatches (do_) methods')
        self.dispatches: list[Dispatch] = []
        self.init_do_dispatches()

        self.prepare_for_run(self.argv)
        SessionLogger.log_header_section(LOGGER, 'End of CLIX initialization')

    def init_do_dispatches(self):
        '''scan all methods starting with do_; longer token lists are tried first'''
        for attr in dir(self):
            if attr.startswith("do_"):
                action = getattr(self, attr)
                if callable(action):
                    self.dispatches.append(Dispatch(tokens=attr[3:].split('_'), action=action))
        self.dispatches.sort(key=lambda d: -d.gravity)

    @property
    def name(self):
        if self._name is None:
            self._name = Path(sys.argv[0]).stem
        return self._name

    # --------------------------------
    # -- BEGIN configuration methods |
    # --------------------------------
    @classmethod
    def _initialize_user_config(cls) -> None:
        '''Creates ~/.config/downlink-tools/config.yaml from the template when missing'''
        if not cls.default_config_path.exists():
            cls.default_config_path.parent.mkdir(parents=True, exist_ok=True)
            shutil.copy(cls.template_config_path, cls.default_config_path)
            LOGGER.debug('Initialized config file at %s', cls.default_config_path)

    @staticmethod
    def _passed_config_file(argv: list[str]) -> Optional[Path]:
        """Config file named on the command line; read before the edit stream is applied"""
        for i, arg in enumerate(argv):
            if arg in ('config:', '--config') and i + 1 < len(argv):
                return Path(argv[i + 1]).expanduser().absolute()
        return None

    @classmethod
    def get_configuration_files(cls, argv: list[str]) -> list[Path]:
        '''template, then user config, then a config: file; later files win'''
        candidates = [cls.template_config_path, cls.default_config_path]
        if passed := cls._passed_config_file(argv):
            candidates.append(passed)
        found = [path for path in candidates if path.exists()]
        LOGGER.debug('Found the following config files: %s', found)
        return found

    def configure(self, argv: list[str] | None = None):
        argv = sys.argv[1:] if argv is None else argv
        self._initialize_user_config()
        nuconf = condo.Condex()
        config_files = self.get_configuration_files(argv)
        if not config_files:
            LOGGER.warning('No configuration files found!')
        for path in config_files:
            try:
                nuconf.load(path)
            except Exception:
                LOGGER.exception('Error loading conf file: %s', path)
                raise
        self.conf = nuconf
    # ------------------------------
    # -- END configuration methods |
    # ------------------------------

    def cognize(self, comargs: list[str]) -> Dispatch | None:
        """
        Find the dispatch whose tokens prefix comargs; the remaining tokens are applied to
        the configuration as an edit stream and what is left over becomes barewords.
        """
        LOGGER.debug('Cognizing %s', comargs)
        for dispatch in self.dispatches:
            if comargs[:dispatch.gravity] == dispatch.tokens:
                dispatch.barewords = self.conf.sed(comargs[dispatch.gravity:])
                LOGGER.debug('Matched: %s', dispatch.tokens)
                return dispatch
        LOGGER.debug('No match found when cognizing')
        return None

    def prepare_for_run(self, argv: list[str] | None = None):
        comargs = sys.argv[1:] if argv is None else list(argv)
        try:
            self.matched_dispatch = self.cognize(comargs)
        except ValueError as err:
            self.failed(f'Could not parse the command line: {err}')
            return

        if self.matched_dispatch is None:
            self.failed(f'Unknown command {" ".join(comargs[:1]) or "(none)"}; try "help"')
        else:
            self.barewords = self.matched_dispatch.barewords

    def status_for(self, err: BaseException) -> int | None:
        for kind, code in self.error_statuses:
            if isinstance(err, kind):
                return code
        return None

    def execute(self) -> int:
        '''Runs the matched action and answers the process exit code'''
        if self.matched_dispatch is not None:
            try:
                self.matched_dispatch.action()
            except Exception as err:
                code = self.status_for(err)
                if code is None:
                    LOGGER.exception('Unhandled error in %s', self.matched_dispatch.tokens)
                    self.crashed(f'{type(err).__name__}: {err}')
                else:
                    LOGGER.debug('Action raised %r', err)
                    self.respond(code, str(err), {'error': type(err).__name__})

        if self.report is None:
            self.crashed("No report returned by action!")

        form = self.conf.get('report.form', 'prose')
        LOGGER.info('\n📄 Report:\n%s', self.report.formatted(form))
        self.done()
        return self.report.status.exit_code

    def run(self):
        sys.exit(self.execute())

    def done(self):
        SessionLogger.end_session_info(LOGGER, self.session_id, self.session_start)

    # ------------------------------ report helpers ---------------------------- #
    def respond(self, status, msg="", dex=None):
        self.report = carp.Report(status, dex, msg)
        return self.report

    def succeeded(self, msg="", dex=None):
        self.report = carp.Report.Success(body=msg, data=dex)
        return self.report

    def failed(self, msg="", dex=None):
        self.report = carp.Report.Failure(body=msg, data=dex)
        return self.report

    def infeasible(self, msg="", dex=None):
        self.report = carp.Report.Infeasible(body=msg, data=dex)
        return self.report

    def crashed(self, msg="", dex=None):
        self.report = carp.Report.Exception(body=msg, data=dex)
        LOGGER.critical(msg)
        return self.report

    # ------------------------ begin default do_* methods ------------------------ #
    def do_help(self, **kwargs):
        """Show all commands and their help messages"""
        doclines = [downlink_tools.main_help, ""]
        for dispatch in sorted(self.dispatches, key=lambda d: d.tokens):
            if getattr(dispatch.action, '__cmd_hidden__', False):
                continue
            doclines.append(f'\033[92m $ {self.name} {" ".join(dispatch.tokens)}\033[0m')
            if dispatch.action.__doc__:
                doclines.extend(line.strip() for line in dispatch.action.__doc__.strip().split('\n'))
            doclines.append('')
        return self.succeeded("\n".join(doclines))
