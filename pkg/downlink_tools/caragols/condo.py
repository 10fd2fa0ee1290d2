"""
CONfiguration DOer
caragols.condo

I provide a nested mapping object for configuration.
Multi-part keys (separated by the dot "." element) are parsed into nested keys.

conf = Condex()
conf['solver.max_iter'] = 200
conf['solver.reaction'] = 0.5

#------------------------------------
#-- These two lines are equivalent. |
#------------------------------------
print(conf['solver.max_iter'])
print(conf['solver']['max_iter'])

Values given on the command line arrive as strings; the typed getters (get_int,
get_float, get_bool, get_list) coerce them and raise ValueError naming the key.
"""
import collections.abc as pycollections
import json
import logging
from pathlib import Path

import yaml

LOGGER = logging.getLogger(__name__)

TRUTHY = {'1', 'true', 'yes', 'on'}
FALSY = {'0', 'false', 'no', 'off'}


class CxKey(tuple):
    def __new__(cls, k=None):
        if k is None:
            return tuple.__new__(cls, [None])

        if isinstance(k, cls):
            return k

        if isinstance(k, str):
            return cls([token.strip() for token in k.split('.')])

        if isinstance(k, pycollections.Sequence):
            return tuple.__new__(cls, k)

        raise TypeError(f'cannot use {type(k).__name__} as a configuration key')

    @property
    def isEmpty(self):
        if len(self) == 0:
            return True
        if len(self) == 1:
            return (self[0] is None) or (self[0] == '')
        return False

    @property
    def head(self):
        return self[0]

    @property
    def tail(self):
        return CxKey(self[1:])

    def __str__(self):
        return '' if self.isEmpty else '.'.join(map(str, self))

    def __repr__(self):
        return str(self)

    def __truediv__(self, other):
        other = CxKey(other)
        if self[0] is None:
            return other
        return CxKey(tuple(self) + tuple(other))


class CxNode:
    def __init__(self, parent=None, name=None):
        self.children = {}
        self.parent = parent
        self.name = name

    # ---------------------------- mapping protocol ---------------------------- #
    def __getitem__(self, k):
        k = CxKey(k)
        if k.isEmpty:
            return self
        if k.head not in self.children:
            raise KeyError(str(k))
        child = self.children[k.head]
        if isinstance(child, CxNode):
            return child[k.tail]
        if not k.tail.isEmpty:
            raise KeyError(str(k))
        return child

    def __setitem__(self, k, v):
        k = CxKey(k)
        if len(k) == 1:
            self.children[k.head] = v
            return
        if not isinstance(self.children.get(k.head), CxNode):
            self.children[k.head] = CxNode(self, k.head)
        self.children[k.head][k.tail] = v

    def __contains__(self, k):
        try:
            self[k]
        except KeyError:
            return False
        return True

    @property
    def allKeys(self):
        collected = []
        for name, child in self.children.items():
            if isinstance(child, CxNode):
                collected.extend(CxKey(name) / sub for sub in child.allKeys)
            else:
                collected.append(CxKey(name))
        return tuple(sorted(collected, key=str))

    @property
    def flattened(self):
        '''((dotted key, value), ...) for every leaf'''
        return tuple((str(k), self[k]) for k in self.allKeys)

    def show(self) -> str:
        return ''.join("{key:40s}: {value}\n".format(key=k, value=v) for k, v in self.flattened)

    def get(self, k, default=None):
        try:
            return self[k]
        except KeyError:
            return default

    # ----------------------------- typed getters ------------------------------ #
    def get_int(self, k, default=None) -> int | None:
        value = self.get(k, default)
        if value is None or isinstance(value, bool):
            return value
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ValueError(f'{k} must be an integer, got {value!r}') from None

    def get_float(self, k, default=None) -> float | None:
        value = self.get(k, default)
        if value is None:
            return None
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ValueError(f'{k} must be a number, got {value!r}') from None

    def get_bool(self, k, default=False) -> bool:
        value = self.get(k, default)
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in TRUTHY:
            return True
        if text in FALSY:
            return False
        raise ValueError(f'{k} must be a boolean, got {value!r}')

    def get_list(self, k, default=None, cast=str) -> list | None:
        '''lists come from YAML sequences or comma-separated command-line strings'''
        value = self.get(k, default)
        if value is None:
            return None
        items = value if isinstance(value, (list, tuple)) else str(value).split(',')
        try:
            return [cast(item.strip() if isinstance(item, str) else item)
                    for item in items if str(item).strip() != '']
        except (TypeError, ValueError):
            raise ValueError(f'{k} has an unparsable list value {value!r}') from None

    # ------------------------------- loading ---------------------------------- #
    def load(self, fname, form=None):
        path = Path(fname)
        if not path.exists():
            LOGGER.error('CxNode/load: I cannot find the specified file: %s', path)
            return self

        LOGGER.debug("CxNode/load: reading configuration from %s", path)
        form = (form or path.suffix.lstrip('.')).strip().upper()
        text = path.read_text()

        if form in ('JSON', 'JSN'):
            blob = json.loads(text)
        elif form in ('YAML', 'YML'):
            blob = yaml.safe_load(text)
        else:
            raise ValueError(f"CxNode/load: I don't know how to handle files of form '{form}'")

        if blob is not None:
            self.update(blob)
        return self

    def update(self, d):
        if isinstance(d, CxNode):
            for k in d.allKeys:
                self[k] = d[k]
            return self

        if isinstance(d, pycollections.Mapping):
            for k, v in d.items():
                if isinstance(v, pycollections.Mapping):
                    if not isinstance(self.get(k), CxNode):
                        self[k] = CxNode(self, k)
                    self[k].update(v)
                else:
                    self[k] = v
            return self

        raise TypeError(f'cannot update configuration from {type(d).__name__}')

    # ------------------------------ edit stream ------------------------------- #
    def sed(self, tokens):
        """
        Interpret the given list of tokens as an edit stream (aka "sed").
        ^file (LOAD) reads the given file name into the configuration
        key: value (SET) sets a nested key to some value
        --key value (SET) same, GNU style; dashes in the key become underscores
        --key (ON) when no value follows
        key! (ON) sets the key to True
        key~ (OFF) sets the key to False
        Tokens with none of these forms are answered as barewords.
        """
        nakeds = []
        pending = None
        tokens = list(tokens)

        for i, token in enumerate(tokens):
            LOGGER.debug("CxNode/sed --> token: %s | pending: %s", token, pending)
            if pending is not None:
                self[pending] = token
                pending = None
                continue

            if token.startswith('--') and len(token) > 2:
                key = token[2:].replace('-', '_')
                upcoming = tokens[i + 1] if i + 1 < len(tokens) else None
                if upcoming is None or (upcoming.startswith('--') and len(upcoming) > 2):
                    self[key] = True
                else:
                    pending = key
            elif token.startswith('^'):
                self.load(token[1:])
            elif token.endswith(':') and len(token) > 1:
                pending = token[:-1]
            elif token.endswith('!') and len(token) > 1:
                self[token[:-1]] = True
            elif token.endswith('~') and len(token) > 1:
                self[token[:-1]] = False
            else:
                nakeds.append(token)

        if pending is not None:
            raise ValueError(f'no value given for {pending}')
        return nakeds

    def toJDN(self):
        out = {}
        for name, child in self.children.items():
            out[name] = child.toJDN() if isinstance(child, CxNode) else child
        return out


def Condex(*args, **kwargs):
    c = CxNode()
    for arg in args:
        c.update(dict(arg))
    c.update(kwargs)
    return c
