'''
The `sidsp` command line application.

    $ sidsp gen --family ND --n 50 --seed 7 --out nd-50.json
    $ sidsp solve --instance nd-50.json --mode segment:rearrange --seed 1 --out run-1
    $ sidsp validate --instance nd-50.json --schedule run-1/schedules.json
    $ sidsp hv --front run-1/front.csv --mc 100000
    $ sidsp bench --family ND --sizes 50,100 --modes all --restarts 10 --seeds 0 --jobs 4

Flags are read from the configuration after the command line edit stream is applied,
so `--seed 3` and `seed: 3` mean the same thing. Solver defaults live under `solver.*`.
'''
import logging
from pathlib import Path

import pandas as pd
import typer

from downlink_tools.caragols import clix
from downlink_tools.cli import bench
from downlink_tools.cli.base import command
from downlink_tools.cli.outputs import front_frame, read_front, write_csv, write_solve_outputs
from downlink_tools.exceptions import (
    EncodingError, InstanceError, InstanceFileError, MetricError, OracleLimitError,
    ScheduleResolutionError, UsageError)
from downlink_tools.instances.generate import Family, generate
from downlink_tools.instances.storage import load_instance, load_schedule_document, save_instance
from downlink_tools.scheduling.evolve import Algorithm, RunParams, run
from downlink_tools.scheduling.metrics import REFERENCE, hypervolume_hso, hypervolume_mc
from downlink_tools.scheduling.model import SolveMode, evaluate, validate_schedule
from downlink_tools.scheduling.oracle import exact_front

LOGGER = logging.getLogger(__name__)


class SchedulerApp(clix.App):
    '''Instance generation, solving, benchmarking and checking of downlink schedules'''

    error_statuses = (
        (UsageError, 400),
        (ScheduleResolutionError, 422),
        (InstanceFileError, 422),
        (InstanceError, 422),
        (EncodingError, 422),
        (MetricError, 422),
        (OracleLimitError, 400),
        (OSError, 404),
        (ValueError, 400),
    )

    def __init__(self, argv: list[str] | None = None):
        super().__init__(name='sidsp', argv=argv)

    # ------------------------------- conf helpers ----------------------------- #
    def required(self, key: str) -> str:
        value = self.conf.get(key)
        if value is None or value is True or str(value).strip() == '':
            raise UsageError(f'--{key} <value> is required')
        return str(value)

    def mode(self, default='segment:rearrange') -> SolveMode:
        try:
            return SolveMode.parse(self.conf.get('mode', default))
        except ValueError as err:
            raise UsageError(str(err)) from None

    def run_params(self, **overrides) -> RunParams:
        '''RunParams from solver.* with command-line overrides; None values keep the defaults'''
        conf = self.conf
        scores = conf.get_list('solver.scores', None, float)
        taboo = conf.get_list('solver.taboo_rate', None, float)
        values = {
            'population_size': conf.get_int('solver.population_size'),
            'archive_size': conf.get_int('solver.archive_size'),
            'max_iter': conf.get_int('solver.max_iter'),
            'reaction': conf.get_float('solver.reaction'),
            'scores': tuple(scores) if scores else None,
            'dominated_score_probability': conf.get_float('solver.dominated_score_probability'),
            'taboo_rate': tuple(taboo) if taboo else None,
            'tournament_size': conf.get_int('solver.tournament_size'),
            'log_every': conf.get_int('solver.log_every'),
            'check_feasibility': conf.get_bool('solver.check_feasibility', False),
            **{k: v for k, v in overrides.items() if v is not None},
        }
        try:
            return RunParams(**{k: v for k, v in values.items() if v is not None})
        except ValueError as err:
            raise UsageError(f'invalid solver parameters: {err}') from None

    def window_targets(self) -> dict:
        node = self.conf.get('instances.window_targets')
        return node.toJDN() if hasattr(node, 'toJDN') else dict(node or {})

    # --------------------------------- commands ------------------------------- #
    @command
    def do_gen(self,
               family: str = typer.Option(None, help='ND (normal stations), PD (polar) or MD (mixed)'),
               n: int = typer.Option(None, help='number of original image data'),
               seed: int = typer.Option(0, help='generator seed'),
               out: str = typer.Option(None, help='instance file to write, default <family>-<n>-s<seed>.json'),
               **kwargs):
        '''Generate a benchmark instance file'''
        family = Family.parse(self.required('family'))
        size = self.conf.get_int('n')
        if size is None:
            raise UsageError('--n <value> is required')
        seed = self.conf.get_int('seed', 0)
        instance = generate(
            family, size, seed,
            window_targets=self.window_targets(),
            window_duration=tuple(self.conf.get_list('instances.window_duration', [300.0, 700.0], float)),
            sigma=self.conf.get_float('instances.sigma', 60.0),
            horizon=self.conf.get_float('instances.horizon', 86400.0),
        )
        out = Path(self.conf.get('out') or f'{instance.name}.json')
        save_instance(instance, out)
        self.succeeded(
            msg=f'Wrote {instance.name} ({len(instance.data)} data, {len(instance.windows)} windows) to {out}',
            dex={'path': str(out), 'name': instance.name, 'data': len(instance.data),
                 'windows': len(instance.windows), 'stations': len(instance.stations)})

    @command
    def do_solve(self,
                 instance: str = typer.Option(None, help='instance file'),
                 mode: str = typer.Option('segment:rearrange', help='<segment|unsegment>:<rearrange|fofd>'),
                 seed: int = typer.Option(0, help='run seed'),
                 iters: int = typer.Option(None, help='iterations, default solver.max_iter'),
                 algo: str = typer.Option('alns-nsga2', help='alns-nsga2 or crem'),
                 out: str = typer.Option('sidsp-out', help='output directory'),
                 **kwargs):
        '''Evolve a Pareto front for one instance and write its CSV traces and schedules'''
        instance_path = self.required('instance')
        problem = load_instance(instance_path)
        mode = self.mode()
        try:
            algorithm = Algorithm(str(self.conf.get('algo', Algorithm.NSGA2.value)).lower())
        except ValueError:
            raise UsageError(f'algo must be alns-nsga2 or crem, got {self.conf.get("algo")!r}') from None
        params = self.run_params(seed=self.conf.get_int('seed', 0), max_iter=self.conf.get_int('iters'))

        result = run(problem, mode, params, algorithm)
        out = Path(self.conf.get('out') or 'sidsp-out')
        written = write_solve_outputs(result, out, instance_path, problem)
        self.succeeded(
            msg=(f'{algorithm.value} {mode}: {len(result.front)} points, '
                 f'HV x1000 = {1000 * result.final_hv:.3f}, outputs in {out}'),
            dex={'hv_x1000': 1000 * result.final_hv, 'points': [p.as_tuple() for p in result.points],
                 'elapsed_seconds': result.elapsed, 'files': {k: str(v) for k, v in written.items()}})

    @command
    def do_bench(self,
                 family: str = typer.Option(None, help='ND, PD or MD'),
                 sizes: str = typer.Option(None, help='comma-separated numbers of data, default bench.sizes'),
                 modes: str = typer.Option('all', help='"all" or comma-separated solve modes'),
                 restarts: int = typer.Option(None, help='runs per group, default bench.restarts'),
                 seeds: int = typer.Option(0, help='base seed; run k uses base + k'),
                 instance_seed: int = typer.Option(None, help='generator seed, default the base seed'),
                 study: str = typer.Option('default', help='default, crem, taboo or lambda'),
                 iters: int = typer.Option(None, help='iterations per run, default bench.max_iter'),
                 jobs: int = typer.Option(None, help='worker processes, default $SIDSP_JOBS or bench.jobs'),
                 out: str = typer.Option('sidsp-bench', help='output directory'),
                 **kwargs):
        '''Run one of the benchmark studies over generated instances'''
        family = Family.parse(self.required('family'))
        study = bench.Study.parse(self.conf.get('study', 'default'))
        sizes = self.conf.get_list('sizes', None, int) or self.conf.get_list('bench.sizes', [50], int)
        modes = bench.parse_modes(self.conf.get('modes', 'all'))
        restarts = self.conf.get_int('restarts', self.conf.get_int('bench.restarts', 10))
        base_seed = self.conf.get_int('seeds', 0)
        instance_seed = self.conf.get_int('instance_seed', base_seed)
        jobs = bench.resolve_jobs(self.conf.get('jobs'), default=self.conf.get('bench.jobs', 1))
        iters = self.conf.get_int('iters', self.conf.get_int('bench.max_iter'))
        params = self.run_params(max_iter=iters)
        out = Path(self.conf.get('out') or 'sidsp-bench')

        instances = {}
        for size in sizes:
            instance = generate(family, size, instance_seed, window_targets=self.window_targets())
            save_instance(instance, out / 'instances' / f'{instance.name}.json')
            instances[size] = instance

        tasks = bench.plan_study(study, instances, modes, restarts, base_seed, params)
        outcomes = bench.execute(tasks, jobs)
        written = bench.write_tables(study, outcomes, out)
        summary = pd.read_csv(written['summary'])
        self.succeeded(
            msg=f'{study.value} study, {len(tasks)} runs, tables in {out}\n\n{summary.to_string(index=False)}',
            dex={'runs': len(tasks), 'files': {k: str(v) for k, v in written.items()}})

    @command
    def do_hv(self,
              front: str = typer.Option(None, help='CSV with f1 and f2 columns'),
              ref: str = typer.Option('1,1', help='reference point'),
              mc: int = typer.Option(None, help='Monte-Carlo samples for a cross-check'),
              seed: int = typer.Option(0, help='Monte-Carlo seed'),
              **kwargs):
        '''Hypervolume (x1000) of a front by exact slicing, optionally checked by Monte Carlo'''
        points = read_front(self.required('front'))
        reference = tuple(self.conf.get_list('ref', None, float)
                          or self.conf.get_list('hv.reference', list(REFERENCE), float))
        if len(reference) != 2:
            raise UsageError(f'--ref needs two numbers, got {reference}')
        exact = 1000 * hypervolume_hso(points, reference)
        data = {'points': len(points), 'reference': list(reference), 'hv_x1000': round(exact, 9)}
        msg = f'HV x1000 = {exact:.6f} over {len(points)} points'

        samples = self.conf.get_int('mc')
        if samples is not None:
            estimate, stderr = hypervolume_mc(points, reference, samples, self.conf.get_int('seed', 0))
            data.update({'mc_hv_x1000': 1000 * estimate, 'mc_stderr_x1000': 1000 * stderr, 'mc_samples': samples})
            msg += f'\nMonte Carlo ({samples} samples): {1000 * estimate:.6f} +/- {1000 * stderr:.6f}'
        self.succeeded(msg=msg, dex=data)

    @command
    def do_validate(self,
                    instance: str = typer.Option(None, help='instance file'),
                    schedule: str = typer.Option(None, help='schedule document written by solve'),
                    mode: str = typer.Option(None, help='solve mode, default the one stored with the schedules'),
                    **kwargs):
        '''Report every constraint violation; exits 0 only when all schedules are feasible'''
        problem = load_instance(self.required('instance'))
        document = load_schedule_document(self.required('schedule'))
        mode = self.mode(default=document.mode)

        problems = []
        points = []
        for k, record in enumerate(document.schedules):
            schedule = record.to_schedule()
            violations = validate_schedule(problem, schedule, mode)
            problems.extend(f'schedule {k}: {v}' for v in violations)
            if not violations:
                points.append(evaluate(problem, schedule).as_tuple())

        count = len(document.schedules)
        if problems:
            self.infeasible(msg=f'{len(problems)} violation(s) in {count} schedule(s) under {mode}:\n'
                            + '\n'.join(problems), dex={'violations': problems})
        else:
            self.succeeded(msg=f'all {count} schedule(s) feasible under {mode}',
                           dex={'schedules': count, 'objectives': points})

    @command
    def do_summary(self, instance: str = typer.Option(None, help='instance file'), **kwargs):
        '''Window capacity against data demand, per satellite'''
        problem = load_instance(self.required('instance'))
        rows = []
        for satellite in problem.satellites:
            windows = [problem.window(w) for w in problem.windows_of(satellite.id)]
            data = [d for d in problem.data if d.satellite == satellite.id]
            rows.append({
                'satellite': satellite.id,
                'd0': satellite.d0,
                'windows': len(windows),
                'window_seconds': round(sum(w.length for w in windows), 3),
                'data': len(data),
                'demand_seconds': round(sum(d.duration for d in data), 3),
            })
        table = pd.DataFrame(rows)
        self.succeeded(
            msg=(f'{problem.name or "instance"}: {len(problem.stations)} stations, '
                 f'{len(problem.windows)} windows, {len(problem.data)} data\n\n{table.to_string(index=False)}'),
            dex={'name': problem.name, 'satellites': rows})

    @command(hidden=True)
    def do_oracle(self,
                  instance: str = typer.Option(None, help='instance file'),
                  mode: str = typer.Option('segment:rearrange', help='solve mode'),
                  grid: float = typer.Option(None, help='segment grid in seconds, default the largest d0'),
                  out: str = typer.Option(None, help='front CSV to write'),
                  **kwargs):
        '''Exact front of a tiny instance by enumeration'''
        problem = load_instance(self.required('instance'))
        front = exact_front(problem, self.mode(), self.conf.get_float('grid'))
        data = {'front': [p.as_tuple() for p in front]}
        if out := self.conf.get('out'):
            data['path'] = str(write_csv(front_frame(front), out))
        self.succeeded(msg=f'{len(front)} nondominated points: {data["front"]}', dex=data)
