"""
Tests for the sidsp command run as a separate process.
"""
import json
import subprocess
import sys

import pandas as pd
import pytest

SMALL_SOLVER = ['solver.population_size:', '4', 'solver.archive_size:', '4']


def sidsp(args, env, cwd):
    return subprocess.run(
        [sys.executable, '-m', 'downlink_tools.cli.main', *args],
        capture_output=True,
        text=True,
        env=env,
        cwd=cwd,
    )


@pytest.fixture
def instance_file(cli_env, tmp_path):
    result = sidsp(['gen', '--family', 'MD', '--n', '8', '--seed', '3', '--out', 'md-8.json'],
                   cli_env, tmp_path)
    assert result.returncode == 0, result.stdout + result.stderr
    return tmp_path / 'md-8.json'


class TestCLI:
    """Exit codes and written files of every command."""

    def test_help(self, cli_env, tmp_path):
        result = sidsp(['help'], cli_env, tmp_path)
        assert result.returncode == 0
        for name in ('gen', 'solve', 'bench', 'hv', 'validate'):
            assert f'sidsp {name}' in result.stdout
        assert 'oracle' not in result.stdout

    def test_gen_and_summary(self, cli_env, tmp_path, instance_file):
        assert instance_file.exists()
        result = sidsp(['summary', '--instance', str(instance_file)], cli_env, tmp_path)
        assert result.returncode == 0
        assert 'MD-8-s3' in result.stdout
        assert 'GF0101' in result.stdout

    def test_gen_bad_family(self, cli_env, tmp_path):
        result = sidsp(['gen', '--family', 'XD', '--n', '5'], cli_env, tmp_path)
        assert result.returncode == 2

    def test_unknown_flag(self, cli_env, tmp_path):
        result = sidsp(['gen', '--family', 'ND', '--n', '5', '--colour', 'red'], cli_env, tmp_path)
        assert result.returncode == 2

    def test_solve_then_validate(self, cli_env, tmp_path, instance_file):
        result = sidsp(['solve', '--instance', str(instance_file), '--seed', '1', '--iters', '2',
                        '--out', 'run', *SMALL_SOLVER], cli_env, tmp_path)
        assert result.returncode == 0, result.stdout + result.stderr
        for name in ('front.csv', 'hv_trace.csv', 'weights.csv', 'schedules.json', 'run.json'):
            assert (tmp_path / 'run' / name).exists()

        for record in json.loads((tmp_path / 'run' / 'schedules.json').read_text())['schedules']:
            assert {s['parent'] for s in record['segments']} == set(record['scheduled'])

        trace = pd.read_csv(tmp_path / 'run' / 'hv_trace.csv')
        assert list(trace.columns) == ['run_id', 'seed', 'iteration', 'hv', 'v1', 'v2']
        assert len(trace) == 3

        result = sidsp(['validate', '--instance', str(instance_file),
                        '--schedule', str(tmp_path / 'run' / 'schedules.json')], cli_env, tmp_path)
        assert result.returncode == 0, result.stdout

    def test_solve_deterministic(self, cli_env, tmp_path, instance_file):
        for out in ('first', 'second'):
            result = sidsp(['solve', '--instance', str(instance_file), '--mode', 'unsegment:fofd',
                            '--seed', '5', '--iters', '2', '--out', out, *SMALL_SOLVER], cli_env, tmp_path)
            assert result.returncode == 0, result.stdout + result.stderr
        for name in ('front.csv', 'hv_trace.csv', 'weights.csv'):
            assert (tmp_path / 'first' / name).read_bytes() == (tmp_path / 'second' / name).read_bytes()

    def test_solve_missing_instance(self, cli_env, tmp_path):
        result = sidsp(['solve', '--instance', 'absent.json'], cli_env, tmp_path)
        assert result.returncode == 3

    def test_hv_example_front(self, cli_env, tmp_path, test_files_dir):
        result = sidsp(['hv', '--front', str(test_files_dir / 'example-front.csv')], cli_env, tmp_path)
        assert result.returncode == 0
        assert '480.000000' in result.stdout

    def test_hv_malformed(self, cli_env, tmp_path):
        (tmp_path / 'bad.csv').write_text('a,b\n1,2\n')
        result = sidsp(['hv', '--front', 'bad.csv'], cli_env, tmp_path)
        assert result.returncode == 3

    def test_validate_infeasible(self, cli_env, tmp_path, instance_file):
        (tmp_path / 'bad.json').write_text(
            '{"schema_version": 1, "kind": "schedules", "instance": "md-8.json", '
            '"mode": "segment:rearrange", "schedules": '
            '[{"scheduled": ["od-0001"], "tasks": [], "plans": []}]}')
        result = sidsp(['validate', '--instance', str(instance_file), '--schedule', 'bad.json'],
                       cli_env, tmp_path)
        assert result.returncode == 1
        assert 'completed_transmission' in result.stdout

    def test_bench_on_two_workers(self, cli_env, tmp_path):
        env = dict(cli_env, SIDSP_JOBS='2')
        result = sidsp(['bench', '--family', 'PD', '--sizes', '5', '--modes', 'segment:rearrange',
                        '--restarts', '2', '--iters', '1', '--out', 'bench', *SMALL_SOLVER], env, tmp_path)
        assert result.returncode == 0, result.stdout + result.stderr
        runs = pd.read_csv(tmp_path / 'bench' / 'runs.csv')
        assert list(runs['seed']) == [0, 1]
        for name in ('summary.csv', 'traces.csv', 'comparison.csv', 'timing.json'):
            assert (tmp_path / 'bench' / name).exists()
        assert (tmp_path / 'bench' / 'instances' / 'PD-5-s0.json').exists()

    def test_bench_crem_study(self, cli_env, tmp_path):
        result = sidsp(['bench', '--family', 'ND', '--sizes', '6', '--study', 'crem', '--restarts', '2',
                        '--iters', '1', '--jobs', '1', '--out', 'crem', *SMALL_SOLVER], cli_env, tmp_path)
        assert result.returncode == 0, result.stdout + result.stderr
        comparison = pd.read_csv(tmp_path / 'crem' / 'comparison.csv')
        assert list(comparison['other']) == ['crem']
        assert (tmp_path / 'crem' / 'best_fronts.csv').exists()

    def test_bench_taboo_study(self, cli_env, tmp_path):
        """Eleven static rates and ten adaptive intervals, one run each."""
        result = sidsp(['bench', '--family', 'PD', '--sizes', '5', '--study', 'taboo', '--restarts', '1',
                        '--iters', '1', '--jobs', '1', '--out', 'taboo', *SMALL_SOLVER], cli_env, tmp_path)
        assert result.returncode == 0, result.stdout + result.stderr
        summary = pd.read_csv(tmp_path / 'taboo' / 'summary.csv')
        assert len(summary) == 21
        static = summary[summary['variant'] == 'static']
        adaptive = summary[summary['variant'] == 'adaptive']
        assert len(static) == 11
        assert (static['taboo_low'] == static['taboo_high']).all()
        assert len(adaptive) == 10
        assert (adaptive['taboo_low'] == 0.0).all()
        assert adaptive['taboo_high'].max() == pytest.approx(1.0)

    def test_bench_lambda_study(self, cli_env, tmp_path):
        """Final operator weights per reaction factor; timings stay out of the CSVs."""
        result = sidsp(['bench', '--family', 'PD', '--sizes', '5', '--study', 'lambda', '--restarts', '1',
                        '--iters', '1', '--jobs', '1', '--out', 'lambda', *SMALL_SOLVER], cli_env, tmp_path)
        assert result.returncode == 0, result.stdout + result.stderr
        weights = pd.read_csv(tmp_path / 'lambda' / 'final_weights.csv')
        assert list(weights['reaction']) == pytest.approx([k / 10 for k in range(11)])
        weight_columns = [c for c in weights.columns if c.startswith('w_')]
        assert len(weight_columns) == 12
        assert weights[weight_columns].to_numpy().sum(axis=1) == pytest.approx([2.0] * 11)

        summary = pd.read_csv(tmp_path / 'lambda' / 'summary.csv')
        assert not [c for c in summary.columns if 'elapsed' in c]
        timing = json.loads((tmp_path / 'lambda' / 'timing.json').read_text())
        assert len(timing) == 11
        assert all(row['elapsed_seconds'] >= 0 for row in timing)
