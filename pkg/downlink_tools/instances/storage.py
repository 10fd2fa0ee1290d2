'''
Reading and writing instance, schedule and run documents.

Documents are JSON with a schema_version field. Writes go to a sibling temporary file that
is renamed into place, so a reader never sees half a document.
'''
from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel, ValidationError

from downlink_tools.exceptions import MalformedContentError, SchemaVersionError
from downlink_tools.instances.schema import (
    SCHEMA_VERSION, InstanceDocument, RunDocument, ScheduleDocument, ScheduleRecord)
from downlink_tools.scheduling.model import Instance, Schedule, SolveMode

LOGGER = logging.getLogger(__name__)

Doc = TypeVar('Doc', bound=BaseModel)


def write_atomic(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def _dump(document: BaseModel, path: str | Path) -> Path:
    text = json.dumps(document.model_dump(mode='json'), indent=2) + '\n'
    path = write_atomic(path, text)
    LOGGER.debug('wrote %s', path)
    return path


def _read(path: str | Path, model: type[Doc]) -> Doc:
    path = Path(path)
    text = path.read_text(encoding='utf-8')
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise MalformedContentError(f'{path}: not valid JSON ({err.msg} at line {err.lineno})') from None
    if not isinstance(raw, dict):
        raise MalformedContentError(f'{path}: expected a JSON object')
    version = raw.get('schema_version')
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f'{path}: schema_version {version!r}, this version reads {SCHEMA_VERSION}')
    try:
        return model.model_validate(raw)
    except ValidationError as err:
        first = err.errors()[0]
        where = '.'.join(str(p) for p in first['loc'])
        raise MalformedContentError(f'{path}: {where}: {first["msg"]}') from None


# ---------------------------------------------------------------------------- #
#                                   instances                                  #
# ---------------------------------------------------------------------------- #
def save_instance(instance: Instance, path: str | Path) -> Path:
    return _dump(InstanceDocument.from_instance(instance), path)


def load_instance(path: str | Path) -> Instance:
    return _read(path, InstanceDocument).to_instance()


# ---------------------------------------------------------------------------- #
#                                   schedules                                  #
# ---------------------------------------------------------------------------- #
def save_schedules(schedules: list[Schedule], path: str | Path, instance_ref: str,
                   mode: SolveMode | str, objectives: list | None = None,
                   instance: Instance | None = None) -> Path:
    '''Given the instance, every schedule also lists its transmitted pieces as segment data'''
    objectives = objectives or [None] * len(schedules)
    document = ScheduleDocument(
        schema_version=SCHEMA_VERSION,
        instance=str(instance_ref),
        mode=str(SolveMode.parse(mode)),
        schedules=[ScheduleRecord.from_schedule(s, o, instance) for s, o in zip(schedules, objectives)],
    )
    return _dump(document, path)


def load_schedule_document(path: str | Path) -> ScheduleDocument:
    return _read(path, ScheduleDocument)


def load_schedules(path: str | Path) -> list[Schedule]:
    return [record.to_schedule() for record in load_schedule_document(path).schedules]


# ---------------------------------------------------------------------------- #
#                                      runs                                    #
# ---------------------------------------------------------------------------- #
def save_run(document: RunDocument, path: str | Path) -> Path:
    return _dump(document, path)


def load_run(path: str | Path) -> RunDocument:
    return _read(path, RunDocument)
