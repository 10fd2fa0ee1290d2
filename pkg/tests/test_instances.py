"""
Tests for the instance generator and the document files.
"""
import json

import pytest

from downlink_tools.cli.outputs import run_document
from downlink_tools.exceptions import (
    DanglingReferenceError, MalformedContentError, SchemaVersionError, UsageError)
from downlink_tools.instances import (
    Family, generate, load_instance, load_run, load_schedules, save_instance, save_run, save_schedules,
    synth_windows)
from downlink_tools.instances.generate import HORIZON, SATELLITES, SERIES_DURATION, series_of
from downlink_tools.instances.storage import load_schedule_document
from downlink_tools.scheduling.construct import rhga
from downlink_tools.scheduling.evolve import RunParams, run
from downlink_tools.scheduling.model import ALL_MODES, GroundStation, SolveMode, segments, validate_schedule


class TestGenerate:
    """Benchmark families."""

    def test_counts_and_name(self):
        instance = generate('nd', 25, seed=9)
        assert len(instance.data) == 25
        assert instance.name == 'ND-25-s9'
        assert len(instance.satellites) == 10
        assert [d.id for d in instance.data[:2]] == ['od-0001', 'od-0002']

    def test_deterministic(self):
        assert generate('MD', 30, seed=4) == generate('MD', 30, seed=4)
        assert generate('MD', 30, seed=4) != generate('MD', 30, seed=5)

    def test_station_sets(self):
        assert [g.id for g in generate('PD', 5).stations] == ['CNPGS']
        assert [g.id for g in generate('ND', 5).stations] == ['Miyun', 'Kashi', 'Sanya']
        assert len(generate(Family.MD, 5).stations) == 4

    def test_data_ranges(self):
        """Durations follow the satellite series and validity reaches into the horizon."""
        instance = generate('MD', 200, seed=1)
        for datum in instance.data:
            low, high = SERIES_DURATION[series_of(datum.satellite)]
            assert low <= datum.duration <= high
            assert 1 <= datum.priority <= 10
            assert datum.release < HORIZON
            assert datum.expiry > 0.0

    def test_windows_inside_horizon(self):
        instance = generate('ND', 10, seed=2)
        for window in instance.windows:
            assert 0.0 <= window.begin < window.end <= HORIZON
            assert 300.0 - 1e-6 <= window.length <= 700.0 + 1e-6

    def test_no_overlap_per_satellite(self):
        instance = generate('MD', 10, seed=3)
        for satellite in instance.satellites:
            spans = sorted((instance.window(w).begin, instance.window(w).end)
                           for w in instance.windows_of(satellite.id))
            assert all(prev[1] <= nxt[0] for prev, nxt in zip(spans, spans[1:]))

    @pytest.mark.parametrize('family,n', [('XD', 5), ('ND', 0)])
    def test_bad_arguments(self, family, n):
        with pytest.raises(UsageError):
            generate(family, n)

    def test_constructs_feasibly(self):
        instance = generate('PD', 40, seed=6)
        schedule, _ = rhga(instance, SolveMode.parse('segment:fofd'), rng=0)
        assert validate_schedule(instance, schedule, SolveMode.parse('segment:fofd')) == []


class TestSynthWindows:
    """Statistical window synthesis."""

    def test_target_reached(self):
        """Fixed 500 s windows against a 1500 s budget give three per satellite."""
        stations = [GroundStation('A', 0.0, 0.0), GroundStation('B', 1.0, 1.0)]
        windows = synth_windows(SATELLITES[:2], stations, seed=1, target=1500.0,
                                duration_range=(500.0, 500.0))
        for satellite in SATELLITES[:2]:
            mine = [w for w in windows if w.satellite == satellite.id]
            assert len(mine) == 3
            assert {w.station for w in mine} == {'A', 'B'}

    def test_ids_by_begin(self):
        windows = synth_windows(SATELLITES[:1], [GroundStation('A', 0.0, 0.0)], seed=0, target=2000.0)
        begins = [w.begin for w in windows]
        assert begins == sorted(begins)
        assert windows[0].id == f'tw-{SATELLITES[0].id}-1'

    def test_bad_target(self):
        with pytest.raises(ValueError):
            synth_windows(SATELLITES[:1], [GroundStation('A', 0.0, 0.0)], target=0.0)


class TestStorage:
    """Instance and schedule documents on disk."""

    def test_instance_round_trip(self, tmp_path):
        instance = generate('MD', 12, seed=3)
        path = save_instance(instance, tmp_path / 'md.json')
        assert load_instance(path) == instance
        assert not list(tmp_path.glob('.*.tmp'))

    def test_written_fields(self, tmp_path):
        path = save_instance(generate('PD', 3, seed=1), tmp_path / 'pd.json')
        raw = json.loads(path.read_text())
        assert raw['schema_version'] == 1
        assert raw['kind'] == 'instance'
        assert raw['data'][0]['due'] in (3, 6, 12, 24)

    def test_dangling_reference(self, tmp_path):
        path = save_instance(generate('PD', 3, seed=1), tmp_path / 'pd.json')
        raw = json.loads(path.read_text())
        raw['windows'][0]['station'] = 'Nowhere'
        path.write_text(json.dumps(raw))
        with pytest.raises(DanglingReferenceError, match='Nowhere'):
            load_instance(path)

    def test_truncated_file(self, tmp_path):
        path = save_instance(generate('PD', 3, seed=1), tmp_path / 'pd.json')
        path.write_text(path.read_text()[:40])
        with pytest.raises(MalformedContentError):
            load_instance(path)

    def test_unknown_field(self, tmp_path):
        path = save_instance(generate('PD', 3, seed=1), tmp_path / 'pd.json')
        raw = json.loads(path.read_text())
        raw['data'][0]['colour'] = 'blue'
        path.write_text(json.dumps(raw))
        with pytest.raises(MalformedContentError):
            load_instance(path)

    def test_schema_version(self, tmp_path):
        path = save_instance(generate('PD', 3, seed=1), tmp_path / 'pd.json')
        raw = json.loads(path.read_text())
        raw['schema_version'] = 99
        path.write_text(json.dumps(raw))
        with pytest.raises(SchemaVersionError):
            load_instance(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_instance(tmp_path / 'absent.json')

    def test_schedules_round_trip(self, tmp_path, tiny_instance):
        schedule, point = rhga(tiny_instance, SolveMode(), order=['c', 'a', 'b'])
        path = save_schedules([schedule], tmp_path / 'schedules.json', 'tiny.json', SolveMode(),
                              [point.as_tuple()])
        (loaded,) = load_schedules(path)
        assert loaded == schedule
        document = load_schedule_document(path)
        assert document.mode == 'segment:rearrange'
        assert document.schedules[0].objectives == pytest.approx(point.as_tuple())
        assert document.schedules[0].segments == []

    def test_schedules_list_segments(self, tmp_path, tiny_instance):
        """With the instance at hand every transmitted piece is written as a parented datum."""
        schedule, _ = rhga(tiny_instance, SolveMode(), order=['c', 'a', 'b'])
        path = save_schedules([schedule], tmp_path / 'schedules.json', 'tiny.json', SolveMode(),
                              instance=tiny_instance)
        (record,) = load_schedule_document(path).schedules
        expected = segments(schedule, tiny_instance)
        assert [s.id for s in record.segments] == [s.id for s in expected]
        assert {s.parent for s in record.segments} == set(schedule.scheduled)
        for written, piece in zip(record.segments, expected):
            assert written.duration == pytest.approx(piece.duration)
            assert written.priority == tiny_instance.datum(written.parent).priority
        assert load_schedules(path) == [schedule]

    def test_run_round_trip(self, tmp_path, tiny_instance):
        """A run summary reads back equal, and its params rebuild the run's settings."""
        result = run(tiny_instance, SolveMode(), RunParams(population_size=4, archive_size=4, max_iter=2, seed=3))
        document = run_document(result, 'tiny.json')
        path = save_run(document, tmp_path / 'run.json')
        loaded = load_run(path)
        assert loaded == document
        assert loaded.kind == 'run'
        assert RunParams(**loaded.params) == result.params
        assert len(loaded.hv_trace) == 3
        assert loaded.front == [p.as_tuple() for p in result.points]


class TestExampleInstances:
    """The committed example instance of each family."""

    @pytest.mark.parametrize('family, stations', [
        ('nd', {'Miyun', 'Kashi', 'Sanya'}),
        ('pd', {'CNPGS'}),
        ('md', {'Miyun', 'Kashi', 'Sanya', 'CNPGS'}),
    ])
    def test_loads_and_schedules(self, test_files_dir, family, stations):
        instance = load_instance(test_files_dir / f'example-{family}.json')
        assert instance.name == f'example-{family.upper()}'
        assert {g.id for g in instance.stations} == stations
        assert all(instance.admissible_windows(d.id) for d in instance.data)
        for mode in ALL_MODES:
            schedule, _ = rhga(instance, mode, rng=0)
            assert validate_schedule(instance, schedule, mode) == []

    @pytest.mark.parametrize('family', ['nd', 'pd', 'md'])
    def test_rewrite_is_stable(self, test_files_dir, tmp_path, family):
        """Saving a loaded example gives back the committed document."""
        source = test_files_dir / f'example-{family}.json'
        path = save_instance(load_instance(source), tmp_path / source.name)
        assert json.loads(path.read_text()) == json.loads(source.read_text())
