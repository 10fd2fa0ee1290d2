'''
Experiment harness behind `sidsp bench`.

A study expands into a list of BenchTask (one solver run each, seed = base + restart
index). Tasks run sequentially or on a process pool; results are merged back in task
order so the written tables do not depend on the number of workers.

Studies:
    default  every solve mode per instance size, plus segment:rearrange against each
             control group
    crem     ALNS+NSGA-II against the random-elitism control on the same seeds
    taboo    static taboo rates 0..1 against adaptive intervals [0, L]
    lambda   reaction factor 0..1 with the final operator weights of every run
'''
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from downlink_tools.cli.outputs import front_frame, trace_frame, write_csv
from downlink_tools.exceptions import UsageError
from downlink_tools.instances.storage import write_atomic
from downlink_tools.scheduling.evolve import Algorithm, RunParams, run
from downlink_tools.scheduling.metrics import front_stats, sign_test
from downlink_tools.scheduling.model import ALL_MODES, Instance, SolveMode

LOGGER = logging.getLogger(__name__)

JOBS_ENV = 'SIDSP_JOBS'
SWEEP = tuple(round(0.1 * k, 1) for k in range(11))
REFERENCE_MODE = SolveMode()


class Study(str, Enum):
    DEFAULT = 'default'
    CREM = 'crem'
    TABOO = 'taboo'
    LAMBDA = 'lambda'

    @classmethod
    def parse(cls, text) -> Study:
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise UsageError(f'study must be one of {", ".join(s.value for s in cls)}, got {text!r}') from None


@dataclass
class BenchTask:
    run_id: int
    instance: Instance
    mode: SolveMode
    algorithm: Algorithm
    params: RunParams
    labels: dict = field(default_factory=dict)


@dataclass
class BenchOutcome:
    task: BenchTask
    hv: float
    v1: float
    v2: float
    elapsed: float
    trace: pd.DataFrame
    front: list[tuple[float, float]]
    final_weights: dict

    def row(self) -> dict:
        return {
            'run_id': self.task.run_id,
            **self.task.labels,
            'seed': self.task.params.seed,
            'hv_x1000': 1000.0 * self.hv,
            'v1': self.v1,
            'v2': self.v2,
            'points': len(self.front),
        }


def parse_modes(text) -> list[SolveMode]:
    if text is None or str(text).strip().lower() == 'all':
        return list(ALL_MODES)
    items = text if isinstance(text, (list, tuple)) else str(text).split(',')
    try:
        return [SolveMode.parse(item) for item in items]
    except ValueError as err:
        raise UsageError(str(err)) from None


def resolve_jobs(flag, default=1) -> int:
    '''--jobs, else SIDSP_JOBS, else the configured default'''
    value = flag if flag is not None else os.environ.get(JOBS_ENV, default)
    try:
        jobs = int(value)
    except (TypeError, ValueError):
        raise UsageError(f'jobs must be an integer, got {value!r}') from None
    if jobs < 1:
        raise UsageError(f'jobs must be at least 1, got {jobs}')
    return jobs


def with_params(base: RunParams, **changes) -> RunParams:
    return RunParams(**{**base.model_dump(), **changes})


# ---------------------------------------------------------------------------- #
#                                 task expansion                               #
# ---------------------------------------------------------------------------- #
def plan_study(study: Study, instances: dict[int, Instance], modes: list[SolveMode],
               restarts: int, base_seed: int, params: RunParams) -> list[BenchTask]:
    if restarts < 1:
        raise UsageError(f'restarts must be at least 1, got {restarts}')
    tasks: list[BenchTask] = []

    def add(instance, size, mode, algorithm, run_params, **labels):
        for restart in range(restarts):
            tasks.append(BenchTask(
                run_id=len(tasks),
                instance=instance,
                mode=mode,
                algorithm=algorithm,
                params=with_params(run_params, seed=base_seed + restart),
                labels={'size': size, 'mode': str(mode), 'algorithm': algorithm.value, **labels},
            ))

    for size, instance in instances.items():
        if study is Study.DEFAULT:
            for mode in modes:
                add(instance, size, mode, Algorithm.NSGA2, params)
        elif study is Study.CREM:
            for algorithm in Algorithm:
                add(instance, size, modes[0], algorithm, params)
        elif study is Study.TABOO:
            for rate in SWEEP:
                add(instance, size, modes[0], Algorithm.NSGA2, with_params(params, taboo_rate=(rate, rate)),
                    variant='static', taboo_low=rate, taboo_high=rate)
            for limit in SWEEP[1:]:
                add(instance, size, modes[0], Algorithm.NSGA2, with_params(params, taboo_rate=(0.0, limit)),
                    variant='adaptive', taboo_low=0.0, taboo_high=limit)
        elif study is Study.LAMBDA:
            for reaction in SWEEP:
                add(instance, size, modes[0], Algorithm.NSGA2, with_params(params, reaction=reaction),
                    reaction=reaction)
    return tasks


# ---------------------------------------------------------------------------- #
#                                   execution                                  #
# ---------------------------------------------------------------------------- #
def run_task(task: BenchTask) -> BenchOutcome:
    result = run(task.instance, task.mode, task.params, task.algorithm)
    v1, v2 = front_stats(result.points)
    final_weights = {k: v for k, v in result.weight_trace[-1].items() if k.startswith('w_')}
    return BenchOutcome(
        task=task,
        hv=result.final_hv,
        v1=v1,
        v2=v2,
        elapsed=result.elapsed,
        trace=trace_frame(result, task.run_id),
        front=[p.as_tuple() for p in result.points],
        final_weights=final_weights,
    )


def execute(tasks: list[BenchTask], jobs: int = 1) -> list[BenchOutcome]:
    LOGGER.info('bench: %d runs on %d worker(s)', len(tasks), jobs)
    if jobs == 1 or len(tasks) < 2:
        return [run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_task, tasks))


# ---------------------------------------------------------------------------- #
#                                    tables                                    #
# ---------------------------------------------------------------------------- #
def group_columns(study: Study) -> list[str]:
    return {
        Study.DEFAULT: ['size', 'mode'],
        Study.CREM: ['size', 'algorithm'],
        Study.TABOO: ['size', 'variant', 'taboo_low', 'taboo_high'],
        Study.LAMBDA: ['size', 'reaction'],
    }[study]


def summarize(runs: pd.DataFrame, study: Study) -> pd.DataFrame:
    keys = group_columns(study)
    summary = (runs.groupby(keys, sort=False)
                   .agg(runs=('run_id', 'size'), hv_x1000=('hv_x1000', 'mean'),
                        hv_x1000_std=('hv_x1000', 'std'), v1=('v1', 'mean'), v2=('v2', 'mean'))
                   .reset_index())
    summary['hv_x1000_std'] = summary['hv_x1000_std'].fillna(0.0)
    return summary


def compare(runs: pd.DataFrame, key: str, reference: str) -> pd.DataFrame:
    '''Reference group against every other group of `key`, paired by size and seed'''
    rows = []
    for size, by_size in runs.groupby('size', sort=False):
        pivot = by_size.pivot_table(index='seed', columns=key, values='hv_x1000')
        if reference not in pivot.columns:
            continue
        for other in pivot.columns:
            if other == reference:
                continue
            paired = pivot[[reference, other]].dropna()
            wins, losses, p_value = sign_test(paired[reference].to_numpy(), paired[other].to_numpy())
            rows.append({
                'size': size,
                'reference': reference,
                'other': other,
                'reference_hv_x1000': paired[reference].mean(),
                'other_hv_x1000': paired[other].mean(),
                'wins': wins,
                'losses': losses,
                'p_value': p_value,
            })
    return pd.DataFrame(rows, columns=['size', 'reference', 'other', 'reference_hv_x1000',
                                       'other_hv_x1000', 'wins', 'losses', 'p_value'])


def best_fronts(outcomes: list[BenchOutcome], key: str) -> pd.DataFrame:
    '''The max-HV front of every (size, key) group, ties to the lowest run id'''
    best: dict[tuple, BenchOutcome] = {}
    for outcome in outcomes:
        group = (outcome.task.labels['size'], outcome.task.labels[key])
        if group not in best or outcome.hv > best[group].hv:
            best[group] = outcome
    frames = []
    for (size, label), outcome in best.items():
        frame = front_frame(outcome.front)
        frame.insert(0, 'run_id', outcome.task.run_id)
        frame.insert(0, key, label)
        frame.insert(0, 'size', size)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def write_tables(study: Study, outcomes: list[BenchOutcome], out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    runs = pd.DataFrame([o.row() for o in outcomes])
    written = {
        'runs': write_csv(runs, out_dir / 'runs.csv'),
        'summary': write_csv(summarize(runs, study), out_dir / 'summary.csv'),
        'traces': write_csv(pd.concat([o.trace for o in outcomes], ignore_index=True),
                            out_dir / 'traces.csv'),
    }
    if study is Study.DEFAULT:
        written['comparison'] = write_csv(compare(runs, 'mode', str(REFERENCE_MODE)),
                                          out_dir / 'comparison.csv')
    elif study is Study.CREM:
        written['comparison'] = write_csv(compare(runs, 'algorithm', Algorithm.NSGA2.value),
                                          out_dir / 'comparison.csv')
        written['fronts'] = write_csv(best_fronts(outcomes, 'algorithm'), out_dir / 'best_fronts.csv')
    elif study is Study.LAMBDA:
        weights = pd.DataFrame([{'run_id': o.task.run_id, 'size': o.task.labels['size'],
                                 'reaction': o.task.labels['reaction'], 'seed': o.task.params.seed,
                                 **o.final_weights} for o in outcomes])
        written['weights'] = write_csv(weights, out_dir / 'final_weights.csv')

    timing = pd.DataFrame([{'run_id': o.task.run_id, **o.task.labels, 'elapsed_seconds': o.elapsed}
                           for o in outcomes])
    written['timing'] = write_atomic(out_dir / 'timing.json',
                                     timing.to_json(orient='records', indent=2) + '\n')
    LOGGER.info('bench: mean elapsed %.2f s per run', float(np.mean([o.elapsed for o in outcomes])))
    return written
