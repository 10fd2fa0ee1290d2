'''
Tidy CSV tables and result documents written by solve and bench.

Every CSV is written with a fixed float format and no wall-clock values, so repeating a
command with the same flags and seeds reproduces the files byte for byte. Timings go to
the JSON documents and the log.
'''
from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd

from downlink_tools.exceptions import MalformedContentError
from downlink_tools.instances.schema import SCHEMA_VERSION, RunDocument
from downlink_tools.instances.storage import save_run, save_schedules, write_atomic
from downlink_tools.scheduling.evolve import RunResult
from downlink_tools.scheduling.model import Instance, ObjectivePoint

LOGGER = logging.getLogger(__name__)

FLOAT_FORMAT = '%.10g'
TRACE_COLUMNS = ['run_id', 'seed', 'iteration', 'hv', 'v1', 'v2']


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = write_atomic(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n'))
    LOGGER.debug('wrote %d rows to %s', len(frame), path)
    return path


def front_frame(points) -> pd.DataFrame:
    rows = [p.as_tuple() if isinstance(p, ObjectivePoint) else tuple(p) for p in points]
    frame = pd.DataFrame(rows, columns=['f1', 'f2'])
    frame.insert(0, 'point', range(len(frame)))
    return frame


def read_front(path: str | Path) -> list[tuple[float, float]]:
    '''Objective points from a CSV with f1 and f2 columns'''
    try:
        frame = pd.read_csv(path)
    except pd.errors.ParserError as err:
        raise MalformedContentError(f'{path}: {err}') from None
    except pd.errors.EmptyDataError:
        return []
    missing = {'f1', 'f2'} - set(frame.columns)
    if missing:
        raise MalformedContentError(f'{path}: missing column(s) {", ".join(sorted(missing))}')
    try:
        values = frame[['f1', 'f2']].astype(float)
    except ValueError as err:
        raise MalformedContentError(f'{path}: {err}') from None
    return list(values.itertuples(index=False, name=None))


def trace_frame(result: RunResult, run_id) -> pd.DataFrame:
    frame = pd.DataFrame({
        'run_id': run_id,
        'seed': result.params.seed,
        'iteration': range(len(result.hv_trace)),
        'hv': result.hv_trace,
        'v1': [v1 for v1, _ in result.stat_trace],
        'v2': [v2 for _, v2 in result.stat_trace],
    })
    return frame[TRACE_COLUMNS]


def weights_frame(result: RunResult, run_id) -> pd.DataFrame:
    frame = pd.DataFrame(result.weight_trace)
    frame.insert(0, 'seed', result.params.seed)
    frame.insert(0, 'run_id', run_id)
    return frame


def run_document(result: RunResult, instance_ref: str) -> RunDocument:
    return RunDocument(
        schema_version=SCHEMA_VERSION,
        instance=str(instance_ref),
        mode=str(result.mode),
        algorithm=result.algorithm.value,
        seed=result.params.seed,
        params=result.params.model_dump(mode='json'),
        elapsed_seconds=result.elapsed,
        final_hv=result.final_hv,
        front=[p.as_tuple() for p in result.points],
        hv_trace=result.hv_trace,
    )


def write_solve_outputs(result: RunResult, out_dir: str | Path, instance_ref: str,
                        instance: Instance | None = None) -> dict[str, Path]:
    '''front.csv, hv_trace.csv, weights.csv, schedules.json and run.json under out_dir'''
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_id = 0
    written = {
        'front': write_csv(front_frame(result.points), out_dir / 'front.csv'),
        'hv_trace': write_csv(trace_frame(result, run_id), out_dir / 'hv_trace.csv'),
        'weights': write_csv(weights_frame(result, run_id), out_dir / 'weights.csv'),
        'schedules': save_schedules([ind.schedule for ind in result.front], out_dir / 'schedules.json',
                                    instance_ref, result.mode, [p.as_tuple() for p in result.points], instance),
        'run': save_run(run_document(result, instance_ref), out_dir / 'run.json'),
    }
    return written
