'''
Pydantic documents for instance, schedule and run files.

Field order in each model is the order fields are written, so dumps are stable under diff.
All times are seconds since the horizon start.
'''
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from downlink_tools.exceptions import DanglingReferenceError
from downlink_tools.scheduling.model import (
    DownlinkTask, GroundStation, ImageData, Instance, Satellite, Schedule, SegmentationPlan,
    TransmissionWindow, segments as transmitted_segments)

SCHEMA_VERSION = 1
UNITS = 'seconds since horizon start'


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid')


class HorizonRecord(_Strict):
    start: float
    end: float


class SatelliteRecord(_Strict):
    id: str
    d0: float = Field(..., gt=0)
    elements: list[float] = Field(default_factory=list, description='orbital elements, not interpreted')


class StationRecord(_Strict):
    id: str
    lat: float = Field(..., ge=-90, le=90)
    lon: float = Field(..., ge=-180, le=180)
    alt: float = 0.0
    gamma: float = 90.0
    pi_angle: float = 90.0


class WindowRecord(_Strict):
    id: str
    station: str
    satellite: str
    begin: float
    end: float


class DatumRecord(_Strict):
    id: str
    satellite: str
    priority: int = Field(..., ge=1, le=10)
    duration: float = Field(..., gt=0)
    release: float
    due: int | None = Field(None, description='hours; derived from priority, written for readers')
    parent: str | None = None


class InstanceDocument(_Strict):
    schema_version: int
    kind: Literal['instance'] = 'instance'
    name: str = ''
    units: str = UNITS
    horizon: HorizonRecord
    sigma: float = Field(..., ge=0)
    satellites: list[SatelliteRecord]
    stations: list[StationRecord]
    windows: list[WindowRecord]
    data: list[DatumRecord]

    @classmethod
    def from_instance(cls, instance: Instance) -> InstanceDocument:
        return cls(
            schema_version=SCHEMA_VERSION,
            name=instance.name,
            horizon=HorizonRecord(start=instance.start, end=instance.end),
            sigma=instance.sigma,
            satellites=[SatelliteRecord(id=s.id, d0=s.d0, elements=list(s.elements))
                        for s in instance.satellites],
            stations=[StationRecord(id=g.id, lat=g.lat, lon=g.lon, alt=g.alt, gamma=g.gamma,
                                    pi_angle=g.pi_angle) for g in instance.stations],
            windows=[WindowRecord(id=w.id, station=w.station, satellite=w.satellite,
                                  begin=w.begin, end=w.end) for w in instance.windows],
            data=[DatumRecord(id=d.id, satellite=d.satellite, priority=d.priority,
                              duration=d.duration, release=d.release, due=d.due, parent=d.parent)
                  for d in instance.data],
        )

    def dangling(self) -> list[str]:
        satellites = {s.id for s in self.satellites}
        stations = {g.id for g in self.stations}
        problems = []
        for w in self.windows:
            if w.satellite not in satellites:
                problems.append(f'window {w.id} -> satellite {w.satellite}')
            if w.station not in stations:
                problems.append(f'window {w.id} -> station {w.station}')
        problems.extend(f'datum {d.id} -> satellite {d.satellite}'
                        for d in self.data if d.satellite not in satellites)
        return problems

    def to_instance(self) -> Instance:
        if problems := self.dangling():
            raise DanglingReferenceError('unresolved references: ' + '; '.join(problems))
        return Instance(
            start=self.horizon.start,
            end=self.horizon.end,
            satellites=tuple(Satellite(s.id, s.d0, tuple(s.elements)) for s in self.satellites),
            stations=tuple(GroundStation(g.id, g.lat, g.lon, g.alt, g.gamma, g.pi_angle)
                           for g in self.stations),
            windows=tuple(TransmissionWindow(w.id, w.station, w.satellite, w.begin, w.end)
                          for w in self.windows),
            data=tuple(ImageData(d.id, d.satellite, d.priority, d.duration, d.release, d.parent)
                       for d in self.data),
            sigma=self.sigma,
            name=self.name,
        )


class TaskRecord(_Strict):
    id: str
    window: str
    begin: float
    d_set: list[tuple[str, float]]


class PlanRecord(_Strict):
    datum: str
    pieces: list[tuple[str, float]]


class SegmentRecord(_Strict):
    id: str
    parent: str
    satellite: str
    priority: int
    duration: float
    release: float


class ScheduleRecord(_Strict):
    objectives: tuple[float, float] | None = None
    scheduled: list[str]
    tasks: list[TaskRecord]
    plans: list[PlanRecord]
    segments: list[SegmentRecord] = Field(default_factory=list,
                                          description='transmitted pieces as data, for readers')

    @classmethod
    def from_schedule(cls, schedule: Schedule, objectives=None, instance: Instance | None = None) -> ScheduleRecord:
        pieces = [] if instance is None else transmitted_segments(schedule, instance)
        return cls(
            objectives=None if objectives is None else tuple(objectives),
            scheduled=sorted(schedule.scheduled),
            tasks=[TaskRecord(id=t.id, window=t.window, begin=t.begin, d_set=list(t.d_set))
                   for t in schedule.tasks],
            plans=[PlanRecord(datum=p.datum, pieces=list(p.pieces)) for p in schedule.plans],
            segments=[SegmentRecord(id=s.id, parent=s.parent, satellite=s.satellite, priority=s.priority,
                                    duration=s.duration, release=s.release) for s in pieces],
        )

    def to_schedule(self) -> Schedule:
        return Schedule(
            tasks=tuple(DownlinkTask(t.id, t.window, t.begin, tuple(tuple(p) for p in t.d_set))
                        for t in self.tasks),
            plans=tuple(SegmentationPlan(p.datum, tuple(tuple(x) for x in p.pieces)) for p in self.plans),
            scheduled=frozenset(self.scheduled),
        )


class ScheduleDocument(_Strict):
    '''A list of schedules for one instance file; solve writes its final front this way'''
    schema_version: int
    kind: Literal['schedules'] = 'schedules'
    units: str = UNITS
    instance: str = Field(..., description='instance file the schedules refer to')
    mode: str
    schedules: list[ScheduleRecord]


class RunDocument(_Strict):
    '''Summary of one solver run next to its CSV traces'''
    schema_version: int
    kind: Literal['run'] = 'run'
    instance: str
    mode: str
    algorithm: str
    seed: int
    params: dict
    elapsed_seconds: float
    final_hv: float
    front: list[tuple[float, float]]
    hv_trace: list[float]
