"""Target state and simple motion models for spoofed aircraft and vessels."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .bits import CodecError

# Mean metres per degree of latitude; small-offset geodesy only.
METERS_PER_DEG = 111_320.0
KNOT = 1852.0 / 3600.0  # m/s

# 6-bit identification alphabet subset that is legal in callsigns.
CALLSIGN_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ")


@dataclass(frozen=True)
class KinematicState:
    """Position, velocity and identity of a single target.

    ``track`` is degrees clockwise from true north. ``vertical_rate`` is in
    feet per minute and only used by ADS-B velocity messages.
    """

    latitude: float
    longitude: float
    altitude: float = 0.0
    ground_speed: float = 0.0
    track: float = 0.0
    callsign: str = ""
    squawk_emergency: bool = False
    vertical_rate: float = 0.0

    def validate(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise CodecError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude < 180.0:
            raise CodecError(f"longitude {self.longitude} outside [-180, 180)")
        if not 0.0 <= self.track < 360.0:
            raise CodecError(f"track {self.track} outside [0, 360)")
        if self.ground_speed < 0:
            raise CodecError("ground speed must be non-negative")
        if len(self.callsign) > 8 or not set(self.callsign) <= CALLSIGN_CHARS:
            raise CodecError(f"illegal callsign {self.callsign!r}")


def wrap_lon(lon: float) -> float:
    return (lon + 180.0) % 360.0 - 180.0


def offset_position(lat: float, lon: float, east_m: float, north_m: float) -> tuple[float, float]:
    """Shift a position by a small east/north displacement in metres."""
    new_lat = lat + north_m / METERS_PER_DEG
    new_lon = lon + east_m / (METERS_PER_DEG * math.cos(math.radians(lat)))
    return new_lat, wrap_lon(new_lon)


def local_enu(lat0: float, lon0: float, lat: float, lon: float) -> tuple[float, float]:
    """Inverse of :func:`offset_position` around the reference ``(lat0, lon0)``."""
    dlon = wrap_lon(lon - lon0)
    return (
        dlon * METERS_PER_DEG * math.cos(math.radians(lat0)),
        (lat - lat0) * METERS_PER_DEG,
    )


@dataclass(frozen=True)
class Trajectory:
    """Constant speed motion with an optional constant turn rate.

    Positions come from a closed form in a local tangent plane anchored at
    the initial position, so ``state_at`` is a pure function of ``t``.
    """

    initial: KinematicState
    turn_rate: float = 0.0  # deg/s, positive = clockwise

    def displacement(self, t: float) -> tuple[float, float]:
        v = self.initial.ground_speed * KNOT
        psi0 = math.radians(self.initial.track)
        if abs(self.turn_rate) < 1e-12:
            return v * t * math.sin(psi0), v * t * math.cos(psi0)
        w = math.radians(self.turn_rate)
        psi = psi0 + w * t
        east = v / w * (math.cos(psi0) - math.cos(psi))
        north = v / w * (math.sin(psi) - math.sin(psi0))
        return east, north

    def state_at(self, t: float) -> KinematicState:
        east, north = self.displacement(t)
        lat, lon = offset_position(self.initial.latitude, self.initial.longitude, east, north)
        lat = max(-90.0, min(90.0, lat))
        track = (self.initial.track + self.turn_rate * t) % 360.0
        alt = self.initial.altitude + self.initial.vertical_rate * t / 60.0
        return replace(self.initial, latitude=lat, longitude=lon, track=track, altitude=alt)


def cpa(
    own_pos: tuple[float, float],
    own_vel: tuple[float, float],
    tgt_pos: tuple[float, float],
    tgt_vel: tuple[float, float],
) -> tuple[float, float]:
    """Closest point of approach in a plane.

    Positions in metres, velocities in m/s. Returns ``(tcpa, dcpa)`` with
    ``tcpa`` clamped to be non-negative.
    """
    rx, ry = tgt_pos[0] - own_pos[0], tgt_pos[1] - own_pos[1]
    vx, vy = tgt_vel[0] - own_vel[0], tgt_vel[1] - own_vel[1]
    vv = vx * vx + vy * vy
    t = 0.0 if vv == 0 else max(0.0, -(rx * vx + ry * vy) / vv)
    return t, math.hypot(rx + vx * t, ry + vy * t)


def velocity_en(speed_kt: float, track_deg: float) -> tuple[float, float]:
    v = speed_kt * KNOT
    psi = math.radians(track_deg)
    return v * math.sin(psi), v * math.cos(psi)
