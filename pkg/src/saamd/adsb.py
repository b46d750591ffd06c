"""Mode S Extended Squitter (DF17) encoder and decoder.

Covers identification (TC 1-4), airborne position with barometric altitude
(TC 9-18), airborne velocity over ground (TC 19, subtypes 1/2) and aircraft
emergency status (TC 28, subtype 1).

Frame layout, 0-indexed bit offsets into the 112-bit frame::

    DF 0-4 | CA 5-7 | ICAO 8-31 | ME 32-87 | PI 88-111
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping

from .bits import (
    CodecError,
    DecodeResult,
    apply_overrides,
    bits_to_hex,
    bits_to_int,
    hex_to_bits,
    int_to_bits,
)
from .kinematics import CALLSIGN_CHARS, KinematicState

FRAME_BITS = 112
DATA_BITS = 88

# x^24 + x^23 + ... + x^10 + x^3 + 1, with the leading term.
GENERATOR = 0x1FFF409

CHARSET = "#ABCDEFGHIJKLMNOPQRSTUVWXYZ##### ###############0123456789######"

NZ = 15
CPR_BITS = 17
CPR_SCALE = 1 << CPR_BITS

ALT_MIN_FT = -1000
ALT_MAX_FT = -1000 + 25 * 2047
MAX_VELOCITY_KT = 1022

EMERGENCY_STATES = {
    0: "none",
    1: "general",
    2: "lifeguard",
    3: "minimum_fuel",
    4: "no_communications",
    5: "unlawful_interference",
    6: "downed_aircraft",
    7: "reserved",
}
_DEFAULT_SQUAWK = {1: "7700", 4: "7600", 5: "7500"}

Format = Literal["even", "odd"]


class CprAmbiguityError(CodecError):
    """Even and odd positions fall in different longitude-zone bands."""


# --- CRC -------------------------------------------------------------------


def _build_table() -> list[int]:
    poly = GENERATOR & 0xFFFFFF
    table = []
    for i in range(256):
        crc = i << 16
        for _ in range(8):
            crc = ((crc << 1) ^ poly) if crc & 0x800000 else (crc << 1)
        table.append(crc & 0xFFFFFF)
    return table


_CRC_TABLE = _build_table()


def _crc_bytes(data: bytes) -> int:
    crc = 0
    for byte in data:
        crc = ((crc << 8) ^ _CRC_TABLE[((crc >> 16) ^ byte) & 0xFF]) & 0xFFFFFF
    return crc


def crc24(bits: str) -> int:
    """Parity for an 88-bit DF17 data block."""
    if len(bits) != DATA_BITS:
        raise CodecError(f"crc24 needs {DATA_BITS} bits, got {len(bits)}")
    return _crc_bytes(int(bits, 2).to_bytes(11, "big"))


def crc_remainder(bits: str) -> int:
    """Remainder of a whole frame; zero for an intact DF17 frame."""
    if len(bits) != FRAME_BITS:
        raise CodecError(f"expected {FRAME_BITS} bits, got {len(bits)}")
    return crc24(bits[:DATA_BITS]) ^ int(bits[DATA_BITS:], 2)


# --- frame container --------------------------------------------------------


@dataclass(frozen=True)
class ModeSFrame:
    df: int
    ca: int
    icao24: int
    me: int
    parity: int
    raw: str

    @classmethod
    def from_bits(cls, raw: str) -> ModeSFrame:
        if len(raw) != FRAME_BITS:
            raise CodecError(f"expected {FRAME_BITS} bits, got {len(raw)}")
        return cls(
            df=int(raw[0:5], 2),
            ca=int(raw[5:8], 2),
            icao24=int(raw[8:32], 2),
            me=int(raw[32:88], 2),
            parity=int(raw[88:], 2),
            raw=raw,
        )

    @classmethod
    def from_hex(cls, text: str) -> ModeSFrame:
        return cls.from_bits(hex_to_bits(text))

    @property
    def hex(self) -> str:
        return bits_to_hex(self.raw)

    @property
    def typecode(self) -> int:
        return self.me >> 51

    @property
    def crc_ok(self) -> bool:
        return crc_remainder(self.raw) == 0


def build_frame(icao24: int, me_bits: str, ca: int = 5, df: int = 17) -> ModeSFrame:
    if len(me_bits) != 56:
        raise CodecError("ME field must be 56 bits")
    data = int_to_bits(df, 5) + int_to_bits(ca, 3) + int_to_bits(icao24, 24) + me_bits
    return ModeSFrame.from_bits(data + int_to_bits(crc24(data), 24))


def with_valid_crc(bits: str) -> str:
    return bits[:DATA_BITS] + int_to_bits(crc24(bits[:DATA_BITS]), 24)


HEADER_FIELDS = {"df": (0, 5), "ca": (5, 3), "icao24": (8, 24), "tc": (32, 5)}
FIELD_MAPS: dict[str, dict[str, tuple[int, int]]] = {
    "identification": {**HEADER_FIELDS, "category": (37, 3), "callsign": (40, 48)},
    "position": {
        **HEADER_FIELDS,
        "surveillance_status": (37, 2),
        "saf": (39, 1),
        "altitude": (40, 12),
        "time": (52, 1),
        "format": (53, 1),
        "lat_cpr": (54, 17),
        "lon_cpr": (71, 17),
    },
    "velocity": {
        **HEADER_FIELDS,
        "subtype": (37, 3),
        "ew_sign": (45, 1),
        "ew_velocity": (46, 10),
        "ns_sign": (56, 1),
        "ns_velocity": (57, 10),
        "vr_sign": (68, 1),
        "vertical_rate": (69, 9),
    },
    "emergency": {
        **HEADER_FIELDS,
        "subtype": (37, 3),
        "emergency_state": (40, 3),
        "squawk": (43, 13),
    },
}


def override_fields(frame: ModeSFrame, kind: str, overrides: Mapping[str, int | str]) -> ModeSFrame:
    """Raw-mode field overwrite; the parity is recomputed so CRC stays valid."""
    bits = apply_overrides(frame.raw, FIELD_MAPS[kind], overrides)
    return ModeSFrame.from_bits(with_valid_crc(bits))


# --- messages ----------------------------------------------------------------


@dataclass(frozen=True)
class CprPosition:
    lat_cpr: int
    lon_cpr: int
    format: Format

    def __post_init__(self) -> None:
        if not (0 <= self.lat_cpr < CPR_SCALE and 0 <= self.lon_cpr < CPR_SCALE):
            raise CodecError("CPR indices must be 17-bit")
        if self.format not in ("even", "odd"):
            raise CodecError(f"bad CPR format {self.format!r}")


@dataclass(frozen=True)
class Identification:
    icao24: int
    callsign: str
    category: int = 0
    typecode: int = 4


@dataclass(frozen=True)
class AirbornePosition:
    icao24: int
    altitude: int | None
    cpr: CprPosition
    typecode: int = 11
    surveillance_status: int = 0


@dataclass(frozen=True)
class Velocity:
    icao24: int
    ew_velocity: int | None  # knots, positive east
    ns_velocity: int | None  # knots, positive north
    vertical_rate: int | None = 0  # ft/min
    subtype: int = 1

    @property
    def ground_speed(self) -> float | None:
        if self.ew_velocity is None or self.ns_velocity is None:
            return None
        return math.hypot(self.ew_velocity, self.ns_velocity)

    @property
    def track(self) -> float | None:
        if self.ew_velocity is None or self.ns_velocity is None:
            return None
        return math.degrees(math.atan2(self.ew_velocity, self.ns_velocity)) % 360.0


@dataclass(frozen=True)
class EmergencyStatus:
    icao24: int
    emergency_state: int
    squawk: str

    @property
    def emergency_name(self) -> str:
        return EMERGENCY_STATES[self.emergency_state]


# --- identification -------------------------------------------------------


def encode_identification(
    icao24: int, callsign: str, category: int = 0, typecode: int = 4, raw: bool = False
) -> ModeSFrame:
    if not raw:
        if not 0 <= icao24 < 1 << 24:
            raise CodecError("ICAO address must be 24-bit")
        if len(callsign) > 8 or not set(callsign) <= CALLSIGN_CHARS:
            raise CodecError(f"illegal callsign {callsign!r}")
        if typecode not in (1, 2, 3, 4):
            raise CodecError("identification typecode must be 1-4")
    padded = callsign.ljust(8)[:8]
    chars = "".join(int_to_bits(max(CHARSET.find(c), 0), 6) for c in padded)
    me = int_to_bits(typecode, 5) + int_to_bits(category, 3) + chars
    return build_frame(icao24, me)


# --- altitude --------------------------------------------------------------


def encode_altitude(feet: float) -> int:
    """12-bit altitude field with the Q bit set (25 ft steps)."""
    n = int(math.floor((feet - ALT_MIN_FT) / 25.0 + 0.5))
    if not 0 <= n <= 2047:
        raise CodecError(f"altitude {feet} ft outside [{ALT_MIN_FT}, {ALT_MAX_FT}]")
    return ((n >> 4) << 5) | 0x10 | (n & 0xF)


def decode_altitude(code: int) -> int | None:
    if code == 0 or not code & 0x10:
        return None
    n = ((code >> 5) << 4) | (code & 0xF)
    return n * 25 + ALT_MIN_FT


# --- CPR -------------------------------------------------------------------


def _nl_formula(lat: float) -> int:
    a = 1.0 - math.cos(math.pi / (2 * NZ))
    b = math.cos(math.radians(abs(lat))) ** 2
    return int(math.floor(2 * math.pi / math.acos(1.0 - a / b)))


def nl(lat: float) -> int:
    """Number of longitude zones for a latitude."""
    lat = abs(lat)
    if lat == 0.0:
        return 59
    if lat == 87.0:
        return 2
    if lat > 87.0:
        return 1
    return _nl_formula(lat)


def _mod(x: float, y: float) -> float:
    return x - y * math.floor(x / y)


def cpr_encode(lat: float, lon: float, format: Format) -> CprPosition:
    if not -90.0 <= lat <= 90.0:
        raise CodecError(f"latitude {lat} outside [-90, 90]")
    i = 1 if format == "odd" else 0
    dlat = 360.0 / (4 * NZ - i)
    yz = math.floor(CPR_SCALE * _mod(lat, dlat) / dlat + 0.5)
    rlat = dlat * (yz / CPR_SCALE + math.floor(lat / dlat))
    zones = nl(rlat) - i
    dlon = 360.0 / zones if zones > 0 else 360.0
    xz = math.floor(CPR_SCALE * _mod(lon, dlon) / dlon + 0.5)
    return CprPosition(yz % CPR_SCALE, xz % CPR_SCALE, format)


def cpr_decode_global(even: CprPosition, odd: CprPosition, most_recent: Format) -> tuple[float, float]:
    """Globally unambiguous decode of an even/odd pair.

    Raises :class:`CprAmbiguityError` when the two latitudes disagree on
    the zone count, and when the recovered latitude is not on the globe.
    """
    if even.format != "even" or odd.format != "odd":
        raise CodecError("need one even and one odd position")
    lat0 = even.lat_cpr / CPR_SCALE
    lat1 = odd.lat_cpr / CPR_SCALE
    lon0 = even.lon_cpr / CPR_SCALE
    lon1 = odd.lon_cpr / CPR_SCALE

    j = math.floor(59 * lat0 - 60 * lat1 + 0.5)
    rlat0 = (360.0 / 60) * (_mod(j, 60) + lat0)
    rlat1 = (360.0 / 59) * (_mod(j, 59) + lat1)
    if rlat0 >= 270.0:
        rlat0 -= 360.0
    if rlat1 >= 270.0:
        rlat1 -= 360.0
    if not (-90.0 <= rlat0 <= 90.0 and -90.0 <= rlat1 <= 90.0):
        raise CprAmbiguityError("decoded latitude outside [-90, 90]")
    if nl(rlat0) != nl(rlat1):
        raise CprAmbiguityError("even/odd latitudes straddle a zone boundary")

    zones_nl = nl(rlat0)
    m = math.floor(lon0 * (zones_nl - 1) - lon1 * zones_nl + 0.5)
    if most_recent == "even":
        lat, ni, frac = rlat0, max(zones_nl, 1), lon0
    else:
        lat, ni, frac = rlat1, max(zones_nl - 1, 1), lon1
    lon = (360.0 / ni) * (_mod(m, ni) + frac)
    if lon >= 180.0:
        lon -= 360.0
    return lat, lon


def cpr_lat_quantum(format: Format) -> float:
    return 360.0 / (4 * NZ - (1 if format == "odd" else 0)) / CPR_SCALE


def cpr_lon_quantum(lat: float, format: Format) -> float:
    zones = nl(lat) - (1 if format == "odd" else 0)
    return (360.0 / zones if zones > 0 else 360.0) / CPR_SCALE


# --- position --------------------------------------------------------------


def encode_airborne_position(
    icao24: int,
    state: KinematicState,
    format: Format,
    typecode: int = 11,
    surveillance_status: int = 0,
    raw: bool = False,
) -> ModeSFrame:
    if not raw:
        state.validate()
        if not 9 <= typecode <= 18:
            raise CodecError("airborne position typecode must be 9-18")
    alt = encode_altitude(state.altitude)
    cpr = cpr_encode(state.latitude, state.longitude, format)
    me = (
        int_to_bits(typecode, 5)
        + int_to_bits(surveillance_status, 2)
        + "0"
        + int_to_bits(alt, 12)
        + "0"
        + ("1" if format == "odd" else "0")
        + int_to_bits(cpr.lat_cpr, 17)
        + int_to_bits(cpr.lon_cpr, 17)
    )
    return build_frame(icao24, me)


# --- velocity --------------------------------------------------------------


def _velocity_field(v: int) -> tuple[str, str]:
    return ("1" if v < 0 else "0"), int_to_bits(abs(v) + 1, 10)


def velocity_components(ground_speed: float, track: float) -> tuple[int, int]:
    rad = math.radians(track)
    return round(ground_speed * math.sin(rad)), round(ground_speed * math.cos(rad))


def encode_velocity_components(
    icao24: int, ew: int, ns: int, vertical_rate: float = 0.0, raw: bool = False
) -> ModeSFrame:
    if not raw and max(abs(ew), abs(ns)) > MAX_VELOCITY_KT:
        raise CodecError(f"velocity component above {MAX_VELOCITY_KT} kt")
    vr_units = int(math.floor(abs(vertical_rate) / 64.0 + 0.5))
    if not raw and vr_units > 510:
        raise CodecError("vertical rate out of range")
    s_ew, v_ew = _velocity_field(ew)
    s_ns, v_ns = _velocity_field(ns)
    me = (
        int_to_bits(19, 5)
        + int_to_bits(1, 3)
        + "0"  # intent change
        + "0"  # IFR capability
        + int_to_bits(0, 3)  # NACv
        + s_ew + v_ew
        + s_ns + v_ns
        + "0"  # vertical rate source
        + ("1" if vertical_rate < 0 else "0")
        + int_to_bits(vr_units + 1, 9)
        + "00"
        + "0"
        + int_to_bits(0, 7)
    )
    return build_frame(icao24, me)


def encode_velocity(icao24: int, state: KinematicState, raw: bool = False) -> ModeSFrame:
    if not raw and state.ground_speed > MAX_VELOCITY_KT:
        raise CodecError(f"ground speed above {MAX_VELOCITY_KT} kt")
    ew, ns = velocity_components(state.ground_speed, state.track)
    return encode_velocity_components(icao24, ew, ns, state.vertical_rate, raw=raw)


# --- emergency -------------------------------------------------------------

# C1 A1 C2 A2 C4 A4 X B1 D1 B2 D2 B4 D4
_SQUAWK_ORDER = ["C1", "A1", "C2", "A2", "C4", "A4", "X", "B1", "D1", "B2", "D2", "B4", "D4"]


def encode_squawk(squawk: str) -> int:
    if len(squawk) != 4 or not set(squawk) <= set("01234567"):
        raise CodecError(f"squawk must be four octal digits, got {squawk!r}")
    digits = dict(zip("ABCD", (int(c) for c in squawk)))
    code = 0
    for name in _SQUAWK_ORDER:
        bit = 0 if name == "X" else (digits[name[0]] >> {"1": 0, "2": 1, "4": 2}[name[1]]) & 1
        code = (code << 1) | bit
    return code


def decode_squawk(code: int) -> str:
    digits = dict.fromkeys("ABCD", 0)
    for pos, name in enumerate(_SQUAWK_ORDER):
        if name == "X":
            continue
        if (code >> (12 - pos)) & 1:
            digits[name[0]] |= 1 << {"1": 0, "2": 1, "4": 2}[name[1]]
    return "".join(str(digits[k]) for k in "ABCD")


def encode_emergency(
    icao24: int, emergency_code: int | str, squawk: str | None = None, raw: bool = False
) -> ModeSFrame:
    if isinstance(emergency_code, str):
        names = {v: k for k, v in EMERGENCY_STATES.items()}
        if emergency_code not in names:
            raise CodecError(f"unknown emergency {emergency_code!r}")
        emergency_code = names[emergency_code]
    if not raw and not 0 <= emergency_code <= 6:
        raise CodecError("emergency state must be 0-6")
    if squawk is None:
        squawk = _DEFAULT_SQUAWK.get(emergency_code, "7700" if emergency_code else "1200")
    me = (
        int_to_bits(28, 5)
        + int_to_bits(1, 3)
        + int_to_bits(emergency_code, 3)
        + int_to_bits(encode_squawk(squawk), 13)
        + "0" * 32
    )
    return build_frame(icao24, me)


# --- decode ----------------------------------------------------------------


def _decode_me(frame: ModeSFrame) -> tuple[object, list[str]]:
    raw = frame.raw
    tc = frame.typecode
    issues: list[str] = []
    if 1 <= tc <= 4:
        chars = "".join(CHARSET[int(raw[40 + 6 * k: 46 + 6 * k], 2)] for k in range(8))
        if "#" in chars:
            issues.append("field_out_of_range:callsign")
        return Identification(frame.icao24, chars.rstrip(), int(raw[37:40], 2), tc), issues
    if 9 <= tc <= 18:
        code = int(raw[40:52], 2)
        alt = decode_altitude(code)
        if code and alt is None:
            issues.append("unsupported_altitude_encoding")
        cpr = CprPosition(int(raw[54:71], 2), int(raw[71:88], 2), "odd" if raw[53] == "1" else "even")
        return AirbornePosition(frame.icao24, alt, cpr, tc, int(raw[37:39], 2)), issues
    if tc == 19:
        subtype = int(raw[37:40], 2)
        if subtype not in (1, 2):
            return frame, ["unknown_subtype"]
        scale = 4 if subtype == 2 else 1

        def component(sign: str, field: str) -> int | None:
            value = int(field, 2)
            if value == 0:
                return None
            return (-1 if sign == "1" else 1) * (value - 1) * scale

        vr_field = int(raw[69:78], 2)
        vr = None if vr_field == 0 else (-1 if raw[68] == "1" else 1) * (vr_field - 1) * 64
        return Velocity(
            frame.icao24,
            component(raw[45], raw[46:56]),
            component(raw[56], raw[57:67]),
            vr,
            subtype,
        ), issues
    if tc == 28:
        subtype = int(raw[37:40], 2)
        if subtype != 1:
            return frame, ["unknown_subtype"]
        state = int(raw[40:43], 2)
        if state == 7:
            issues.append("field_out_of_range:emergency_state")
        return EmergencyStatus(frame.icao24, state, decode_squawk(int(raw[43:56], 2))), issues
    return frame, ["unknown_typecode"]


def decode_frame(raw: str, strict: bool = True) -> DecodeResult:
    """Decode a 112-bit frame.

    Never raises. In strict mode a CRC failure, wrong length or non-DF17
    frame yields ``message=None``; lenient mode decodes past those and
    reports them as issues.
    """
    if len(raw) != FRAME_BITS or set(raw) - {"0", "1"}:
        return DecodeResult(None, ("bad_length",))
    frame = ModeSFrame.from_bits(raw)
    issues: list[str] = []
    if not frame.crc_ok:
        issues.append("crc_failed")
    if frame.df != 17:
        issues.append("unsupported_df")
    if strict and issues:
        return DecodeResult(None, tuple(issues))
    if frame.df != 17:
        return DecodeResult(frame, tuple(issues))
    message, more = _decode_me(frame)
    return DecodeResult(message, tuple(issues + more))


def decode_hex(text: str, strict: bool = True) -> DecodeResult:
    return decode_frame(hex_to_bits(text), strict)


def message_kind(message: object) -> str:
    return {
        Identification: "identification",
        AirbornePosition: "position",
        Velocity: "velocity",
        EmergencyStatus: "emergency",
    }.get(type(message), "raw")


def describe(message: object) -> dict[str, object]:
    """Flat dict view of a decoded message for dumps and reports."""
    if isinstance(message, ModeSFrame):
        return {"kind": "raw", "df": message.df, "icao24": f"{message.icao24:06X}", "tc": message.typecode}
    out: dict[str, object] = {"kind": message_kind(message), "icao24": f"{message.icao24:06X}"}
    if isinstance(message, Identification):
        out.update(callsign=message.callsign, category=message.category, tc=message.typecode)
    elif isinstance(message, AirbornePosition):
        out.update(
            altitude=message.altitude,
            format=message.cpr.format,
            lat_cpr=message.cpr.lat_cpr,
            lon_cpr=message.cpr.lon_cpr,
            tc=message.typecode,
        )
    elif isinstance(message, Velocity):
        gs, trk = message.ground_speed, message.track
        out.update(
            ew=message.ew_velocity,
            ns=message.ns_velocity,
            ground_speed=None if gs is None else round(gs, 1),
            track=None if trk is None else round(trk, 1),
            vertical_rate=message.vertical_rate,
        )
    elif isinstance(message, EmergencyStatus):
        out.update(emergency=message.emergency_name, squawk=message.squawk)
    return out


def encode_message(message: object) -> ModeSFrame:
    """Inverse of :func:`decode_frame` for the decoded message types."""
    if isinstance(message, Identification):
        return encode_identification(message.icao24, message.callsign, message.category, message.typecode)
    if isinstance(message, AirbornePosition):
        me = (
            int_to_bits(message.typecode, 5)
            + int_to_bits(message.surveillance_status, 2)
            + "0"
            + int_to_bits(0 if message.altitude is None else encode_altitude(message.altitude), 12)
            + "0"
            + ("1" if message.cpr.format == "odd" else "0")
            + int_to_bits(message.cpr.lat_cpr, 17)
            + int_to_bits(message.cpr.lon_cpr, 17)
        )
        return build_frame(message.icao24, me)
    if isinstance(message, Velocity):
        if message.ew_velocity is None or message.ns_velocity is None:
            raise CodecError("cannot re-encode unavailable velocity")
        return encode_velocity_components(
            message.icao24, message.ew_velocity, message.ns_velocity, message.vertical_rate or 0
        )
    if isinstance(message, EmergencyStatus):
        return encode_emergency(message.icao24, message.emergency_state, message.squawk)
    raise CodecError(f"cannot encode {type(message).__name__}")
