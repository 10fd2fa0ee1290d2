"""
Pytest configuration and shared fixtures.
"""
import os
import sys
from pathlib import Path

import pytest

# Add the project root to Python path so imports work
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from downlink_tools.caragols import clix  # noqa: E402
from downlink_tools.scheduling.model import (  # noqa: E402
    GroundStation, ImageData, Instance, Satellite, TransmissionWindow)


def build_instance(windows, data, satellites=None, stations=None, sigma=60.0, end=10_000.0, name='hand'):
    """Instance from plain tuples.

    windows: (id, station, satellite, begin, end)
    data: (id, satellite, priority, duration, release)
    satellites: {id: d0}, default S1 and S2 with d0 10
    stations: station ids, default G1 and G2
    """
    satellites = satellites or {'S1': 10.0, 'S2': 10.0}
    stations = stations or ['G1', 'G2']
    return Instance(
        start=0.0,
        end=end,
        satellites=tuple(Satellite(s, d0) for s, d0 in satellites.items()),
        stations=tuple(GroundStation(g, 10.0 * k, 10.0 * k) for k, g in enumerate(stations)),
        windows=tuple(TransmissionWindow(*w) for w in windows),
        data=tuple(ImageData(*d) for d in data),
        sigma=sigma,
        name=name,
    )


@pytest.fixture(scope="session")
def project_root_path():
    """Provide the project root path."""
    return project_root


@pytest.fixture(scope="session")
def test_files_dir():
    """Provide the test-files directory path."""
    test_dir = project_root / "test-files"
    if not test_dir.exists():
        pytest.skip("test-files directory not found")
    return test_dir


@pytest.fixture
def make_instance():
    """Factory for hand-built instances"""
    return build_instance


@pytest.fixture
def tiny_instance():
    """Two satellites sharing station G1, S1 with a second window at G2.

    w1 G1/S1 [0, 300], w2 G1/S2 [200, 500], w3 G2/S1 [600, 900]
    a S1 p5 100 s released 0, b S1 p3 150 s released 50, c S2 p8 120 s released 0
    """
    return build_instance(
        windows=[('w1', 'G1', 'S1', 0.0, 300.0),
                 ('w2', 'G1', 'S2', 200.0, 500.0),
                 ('w3', 'G2', 'S1', 600.0, 900.0)],
        data=[('a', 'S1', 5, 100.0, 0.0),
              ('b', 'S1', 3, 150.0, 50.0),
              ('c', 'S2', 8, 120.0, 0.0)],
        name='tiny')


@pytest.fixture
def isolated_home(tmp_path, monkeypatch):
    """Keep the user config and the log files of a test inside tmp_path"""
    home = tmp_path / 'home'
    home.mkdir()
    monkeypatch.setenv('HOME', str(home))
    monkeypatch.setattr(clix.App, 'default_config_path',
                        home / '.config' / 'downlink-tools' / 'config.yaml')
    return home


@pytest.fixture
def cli_env(isolated_home):
    """Environment for running the sidsp entry point in a subprocess"""
    env = dict(os.environ)
    env['HOME'] = str(isolated_home)
    env['PYTHONPATH'] = os.pathsep.join(filter(None, [str(project_root), env.get('PYTHONPATH')]))
    env.pop('SIDSP_JOBS', None)
    return env


@pytest.fixture(autouse=True)
def setup_test_environment():
    """Set up the test environment."""
    # Ensure we're in the project root directory
    original_cwd = os.getcwd()
    os.chdir(project_root)

    yield

    # Restore original directory
    os.chdir(original_cwd)


# Pytest collection configuration
def pytest_collection_modifyitems(config, items):
    """Modify test collection to add markers automatically."""
    for item in items:
        if "test_cli" in item.nodeid:
            item.add_marker(pytest.mark.cli)
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)
