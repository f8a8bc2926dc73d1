"""Continuous GPS time (week number + seconds of week)."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

from .constants import SECONDS_PER_WEEK


@dataclass(frozen=True)
class GpsTime:
    """A point in continuous GPS time.

    tow is kept in [0, 604800); differencing two values yields signed
    seconds accurate to well below 1e-9 s at week scale.
    """

    week: int
    tow: float

    def __post_init__(self):
        if not 0.0 <= self.tow < SECONDS_PER_WEEK:
            raise ValueError(f"tow out of range: {self.tow}")

    def add(self, seconds: float) -> "GpsTime":
        week, tow = self.week, self.tow + seconds
        while tow >= SECONDS_PER_WEEK:
            tow -= SECONDS_PER_WEEK
            week += 1
        while tow < 0.0:
            tow += SECONDS_PER_WEEK
            week -= 1
        return GpsTime(week, tow)

    def __sub__(self, other: "GpsTime") -> float:
        return (self.week - other.week) * SECONDS_PER_WEEK + (self.tow - other.tow)

    def __lt__(self, other: "GpsTime") -> bool:
        return self - other < 0.0

    def __le__(self, other: "GpsTime") -> bool:
        return self - other <= 0.0

    def to_calendar(self) -> datetime:
        """Calendar date/time on the continuous GPS timescale (no leap
        seconds applied)."""
        whole = int(self.tow)
        frac = self.tow - whole
        return (GPS_EPOCH + timedelta(weeks=self.week, seconds=whole,
                                      microseconds=round(frac * 1e6)))

    @staticmethod
    def from_calendar(moment: datetime) -> "GpsTime":
        delta = moment - GPS_EPOCH
        total = delta.days * 86400.0 + delta.seconds + delta.microseconds * 1e-6
        week = int(total // SECONDS_PER_WEEK)
        return GpsTime(week, total - week * SECONDS_PER_WEEK)


GPS_EPOCH = datetime(1980, 1, 6)
