'''
Benchmark instance generator.

Stations, satellites and data ranges follow the published benchmark setup. Visible windows
are synthesized statistically instead of propagated from orbits: per satellite, windows of
random length are scattered over the day and handed to the family's stations in turn until
the satellite's daily downlink budget is reached.
'''
from __future__ import annotations

import logging
from enum import Enum

import numpy as np

from downlink_tools.exceptions import UsageError
from downlink_tools.scheduling.model import (
    DEFAULT_SIGMA, GroundStation, ImageData, Instance, Satellite, TransmissionWindow, on_grid)

LOGGER = logging.getLogger(__name__)

HORIZON = 86400.0
WINDOW_DURATION = (300.0, 700.0)
MAX_PLACEMENT_TRIES = 1000


class Family(str, Enum):
    ND = 'ND'
    PD = 'PD'
    MD = 'MD'

    @classmethod
    def parse(cls, text) -> Family:
        try:
            return cls(str(text).strip().upper())
        except ValueError:
            raise UsageError(f'family must be one of ND, PD, MD, got {text!r}') from None


NORMAL_STATIONS = (
    GroundStation('Miyun', 40.0, 117.0),
    GroundStation('Kashi', 39.0, 76.0),
    GroundStation('Sanya', 18.0, 109.0),
)
POLAR_STATIONS = (GroundStation('CNPGS', 67.0, 21.0),)

STATIONS = {
    Family.ND: NORMAL_STATIONS,
    Family.PD: POLAR_STATIONS,
    Family.MD: NORMAL_STATIONS + POLAR_STATIONS,
}

# elements as tabulated: semi-major axis km, eccentricity, inclination, RAAN, argument of
# perigee, mean anomaly
SATELLITES = (
    Satellite('GF0101', 30.0, (7145.08, 0.001, 98.55, 359.06, 152.17, 265.39)),
    Satellite('GF0201', 30.0, (7011.57, 0.002, 97.83, 2.89, 98.15, 257.45)),
    Satellite('GF0601', 30.0, (7020.45, 0.002, 97.99, 6.87, 56.94, 94.33)),
    Satellite('SV01', 10.0, (6901.65, 0.002, 97.43, 1.01, 124.24, 242.68)),
    Satellite('SV02', 10.0, (6894.39, 0.001, 97.54, 11.87, 128.22, 90.39)),
    Satellite('SV03', 10.0, (6883.14, 0.000, 97.51, 5.98, 341.26, 106.70)),
    Satellite('SV04', 10.0, (6884.95, 0.004, 97.51, 6.14, 92.52, 195.65)),
    Satellite('ZY02C', 60.0, (7143.90, 0.002, 98.64, 341.91, 57.55, 186.17)),
    Satellite('ZY3', 60.0, (6875.80, 0.001, 97.41, 0.79, 59.20, 71.87)),
    Satellite('ZY0104', 60.0, (7145.08, 0.001, 98.55, 359.06, 152.17, 265.39)),
)

SERIES_DURATION = {
    'GF': (60.0, 120.0),
    'SV': (10.0, 60.0),
    'ZY': (120.0, 200.0),
}

DEFAULT_WINDOW_TARGETS = {Family.ND: 900.0, Family.PD: 600.0, Family.MD: 1500.0}


def series_of(satellite_id: str) -> str:
    return satellite_id[:2]


def synth_windows(satellites, stations, horizon: float = HORIZON, seed=0,
                  target: float = 1500.0, duration_range=WINDOW_DURATION) -> tuple[TransmissionWindow, ...]:
    '''Windows per satellite until their total length first reaches `target` seconds'''
    if target <= 0:
        raise ValueError(f'window target must be positive, got {target}')
    low, high = duration_range
    if not 0 < low <= high <= horizon:
        raise ValueError(f'window durations need 0 < low <= high <= horizon, got {duration_range}')
    stations = list(stations)
    if not stations:
        raise ValueError('at least one station is needed')

    rng = np.random.default_rng(seed)
    windows = []
    for satellite in satellites:
        placed: list[tuple[float, float, str]] = []
        total = 0.0
        turn = 0
        while total < target:
            length = on_grid(rng.uniform(low, high)) if high > low else on_grid(low)
            for _ in range(MAX_PLACEMENT_TRIES):
                begin = min(on_grid(rng.uniform(0.0, horizon - length)), on_grid(horizon - length))
                end = on_grid(begin + length)
                if all(end <= b or begin >= e for b, e, _ in placed):
                    break
            else:
                LOGGER.warning('%s: no room for another %.0f s window, stopping at %.0f s',
                               satellite.id, length, total)
                break
            placed.append((begin, end, stations[turn % len(stations)].id))
            turn += 1
            total += length

        for k, (begin, end, station) in enumerate(sorted(placed), start=1):
            windows.append(TransmissionWindow(f'tw-{satellite.id}-{k}', station, satellite.id, begin, end))
    return tuple(windows)


def _draw_data(rng: np.random.Generator, n: int, satellites, horizon: float) -> tuple[ImageData, ...]:
    data = []
    while len(data) < n:
        satellite = satellites[int(rng.integers(len(satellites)))]
        low, high = SERIES_DURATION[series_of(satellite.id)]
        priority = int(rng.integers(1, 11))
        duration = on_grid(rng.uniform(low, high))
        release = on_grid(rng.uniform(-horizon, horizon))
        datum = ImageData(f'od-{len(data) + 1:04d}', satellite.id, priority, duration, release)
        # validity window has to reach into the horizon
        if datum.release < horizon and datum.expiry > 0.0:
            data.append(datum)
    return tuple(data)


def generate(family: Family | str, n: int, seed: int = 0, window_targets: dict | None = None,
             window_duration=WINDOW_DURATION, sigma: float = DEFAULT_SIGMA,
             horizon: float = HORIZON) -> Instance:
    '''Seed-deterministic instance of the family with `n` valid original data'''
    family = Family.parse(family)
    if n < 1:
        raise UsageError(f'number of data must be at least 1, got {n}')
    targets = {Family.parse(k): float(v) for k, v in (window_targets or {}).items()}
    target = targets.get(family, DEFAULT_WINDOW_TARGETS[family])

    data_seed, window_seed = np.random.SeedSequence(seed).spawn(2)
    stations = STATIONS[family]
    windows = synth_windows(SATELLITES, stations, horizon, window_seed,
                            target, window_duration)
    data = _draw_data(np.random.default_rng(data_seed), n, SATELLITES, horizon)

    instance = Instance(0.0, horizon, SATELLITES, stations, windows, data, sigma=sigma,
                        name=f'{family.value}-{n}-s{seed}')
    LOGGER.debug('generated %s: %d windows, %d data', instance.name, len(windows), len(data))
    return instance
