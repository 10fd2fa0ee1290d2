'''
The `command` decorator for do_* methods.

A decorated method declares its flags as typer options. The options are never parsed by
typer (values come from the configuration edit stream); they drive `--help` output and
the check that rejects flags the command does not know.
'''
import inspect
import io
import logging
from contextlib import redirect_stdout

import typer

from downlink_tools.exceptions import UsageError

LOGGER = logging.getLogger(__name__)

# flags every command accepts
GLOBAL_FLAGS = {'help', 'config'}


def _option_names(sig: inspect.Signature) -> list[str]:
    return [name for name, param in sig.parameters.items()
            if name not in ('self', 'kwargs') and param.kind is not param.VAR_KEYWORD]


def _typer_app(fn, sig: inspect.Signature) -> typer.Typer:
    app = typer.Typer(add_completion=False)

    def typer_cmd(**kwargs):
        return None

    params = []
    for name in _option_names(sig):
        param = sig.parameters[name]
        annotation = param.annotation if param.annotation is not inspect.Parameter.empty else str
        params.append(inspect.Parameter(name, inspect.Parameter.KEYWORD_ONLY,
                                        default=param.default, annotation=annotation))
    typer_cmd.__signature__ = inspect.Signature(parameters=params)
    typer_cmd.__doc__ = fn.__doc__
    app.command(name=fn.__name__.removeprefix('do_'))(typer_cmd)
    return app


def help_text(app: typer.Typer) -> str:
    buffer = io.StringIO()
    try:
        with redirect_stdout(buffer):
            app(['--help'], prog_name='sidsp', standalone_mode=True)
    except SystemExit:
        pass
    return buffer.getvalue()


def passed_flags(argv: list[str]) -> set[str]:
    return {token[2:].replace('-', '_') for token in argv if token.startswith('--') and len(token) > 2}


def command(fn_or_name=None, *, hidden: bool = False):
    '''Marks a do_* method as a command; works as @command or @command(hidden=True)'''
    def deco(fn):
        cmd_name = fn_or_name if isinstance(fn_or_name, str) else fn.__name__.removeprefix('do_')
        sig = inspect.signature(fn)
        known = set(_option_names(sig)) | GLOBAL_FLAGS
        app = _typer_app(fn, sig)

        def wrapper(self, *args, **kwargs):
            argv = getattr(self, 'argv', [])
            if '--help' in argv:
                print(help_text(app))
                return self.succeeded(msg=f'Help displayed for {cmd_name}',
                                      dex={'action': 'help', 'command': cmd_name})
            unknown = sorted(passed_flags(argv) - known)
            if unknown:
                raise UsageError(f'{cmd_name} does not take ' + ', '.join(f'--{u}' for u in unknown))
            return fn(self, *args, **kwargs)

        wrapper.__typer_app__ = app
        wrapper.__cmd_name__ = cmd_name
        wrapper.__cmd_hidden__ = hidden
        wrapper.__cmd_flags__ = known
        wrapper.__doc__ = fn.__doc__
        wrapper.__name__ = fn.__name__
        return wrapper

    if callable(fn_or_name):
        return deco(fn_or_name)
    return deco
