"""AIS message codec: application payloads, AIVDM sentences and air frames.

Application layer handles message types 1 (also 2/3 on decode), 14 and 18.
The air-interface layer wraps a payload as::

    training | 0x7E | stuff(data + FCS) | 0x7E | buffer

then NRZI-encodes the whole stream for the GMSK modulator. Payload bytes
go on air LSB first; the FCS is CRC-16/X.25 (poly 0x1021 reflected, init
0xFFFF, complemented), low byte first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping

from .bits import (
    CodecError,
    DecodeResult,
    apply_overrides,
    bits_to_bytes,
    bits_to_int,
    bytes_to_bits,
    int_to_bits,
)

TEXT_CHARSET = "@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_ !\"#$%&'()*+,-./0123456789:;<=>?"
MAX_SAFETY_TEXT = 161

LAT_NA = 91.0
LON_NA = 181.0
SOG_NA = 1023
COG_NA = 3600
HEADING_NA = 511
ROT_NA = -128
TIMESTAMP_NA = 60

HDLC_FLAG = "01111110"
DEFAULT_TRAINING = "01" * 12
MAX_ARMOR_PER_SENTENCE = 62


class NmeaError(ValueError):
    pass


# --- field layouts -----------------------------------------------------------

TYPE1_LAYOUT: list[tuple[str, int]] = [
    ("msg_type", 6),
    ("repeat", 2),
    ("mmsi", 30),
    ("nav_status", 4),
    ("rot", 8),
    ("sog", 10),
    ("accuracy", 1),
    ("lon", 28),
    ("lat", 27),
    ("cog", 12),
    ("heading", 9),
    ("timestamp", 6),
    ("maneuver", 2),
    ("spare", 3),
    ("raim", 1),
    ("radio", 19),
]

TYPE18_LAYOUT: list[tuple[str, int]] = [
    ("msg_type", 6),
    ("repeat", 2),
    ("mmsi", 30),
    ("reserved", 8),
    ("sog", 10),
    ("accuracy", 1),
    ("lon", 28),
    ("lat", 27),
    ("cog", 12),
    ("heading", 9),
    ("timestamp", 6),
    ("reserved2", 2),
    ("cs_unit", 1),
    ("display", 1),
    ("dsc", 1),
    ("band", 1),
    ("msg22", 1),
    ("assigned", 1),
    ("raim", 1),
    ("radio", 20),
]

TYPE14_HEADER: list[tuple[str, int]] = [("msg_type", 6), ("repeat", 2), ("mmsi", 30), ("spare", 2)]


def _offsets(layout: list[tuple[str, int]]) -> dict[str, tuple[int, int]]:
    out, pos = {}, 0
    for name, width in layout:
        out[name] = (pos, width)
        pos += width
    return out


FIELD_MAPS = {
    1: _offsets(TYPE1_LAYOUT),
    14: {**_offsets(TYPE14_HEADER), "text": (40, 6 * MAX_SAFETY_TEXT)},
    18: _offsets(TYPE18_LAYOUT),
}

_SIGNED = {"rot", "lon", "lat"}


def _pack(layout: list[tuple[str, int]], values: Mapping[str, int]) -> str:
    return "".join(int_to_bits(values.get(name, 0), width) for name, width in layout)


def _unpack(layout: list[tuple[str, int]], bits: str) -> dict[str, int]:
    out, pos = {}, 0
    for name, width in layout:
        out[name] = bits_to_int(bits[pos:pos + width], signed=name in _SIGNED)
        pos += width
    return out


# --- messages ----------------------------------------------------------------


def _quant(value: float | None, scale: int, na: float) -> int:
    return round((na if value is None else value) * scale)


@dataclass(frozen=True)
class PositionReport:
    """Class A position report (types 1-3).

    Physical values are stored already quantized, so ``decode(encode(m))``
    is exact. ``None`` marks a field as not available.
    """

    mmsi: int
    lat: float | None = None
    lon: float | None = None
    sog: float | None = None
    cog: float | None = None
    heading: int | None = None
    nav_status: int = 15
    rot: int = ROT_NA
    accuracy: int = 0
    timestamp: int = TIMESTAMP_NA
    maneuver: int = 0
    raim: int = 0
    radio: int = 0
    msg_type: int = 1
    repeat: int = 0

    def raw_fields(self) -> dict[str, int]:
        return {
            "msg_type": self.msg_type,
            "repeat": self.repeat,
            "mmsi": self.mmsi,
            "nav_status": self.nav_status,
            "rot": self.rot,
            "sog": SOG_NA if self.sog is None else round(self.sog * 10),
            "accuracy": self.accuracy,
            "lon": _quant(self.lon, 600000, LON_NA),
            "lat": _quant(self.lat, 600000, LAT_NA),
            "cog": COG_NA if self.cog is None else round(self.cog * 10),
            "heading": HEADING_NA if self.heading is None else self.heading,
            "timestamp": self.timestamp,
            "maneuver": self.maneuver,
            "raim": self.raim,
            "radio": self.radio,
        }

    def to_bits(self) -> str:
        return _pack(TYPE1_LAYOUT, self.raw_fields())


@dataclass(frozen=True)
class ClassBPosition:
    mmsi: int
    lat: float | None = None
    lon: float | None = None
    sog: float | None = None
    cog: float | None = None
    heading: int | None = None
    accuracy: int = 0
    timestamp: int = TIMESTAMP_NA
    cs_unit: int = 1
    display: int = 0
    dsc: int = 1
    band: int = 1
    msg22: int = 1
    assigned: int = 0
    raim: int = 0
    radio: int = 0
    repeat: int = 0
    msg_type: int = field(default=18, init=False)

    def raw_fields(self) -> dict[str, int]:
        return {
            "msg_type": 18,
            "repeat": self.repeat,
            "mmsi": self.mmsi,
            "sog": SOG_NA if self.sog is None else round(self.sog * 10),
            "accuracy": self.accuracy,
            "lon": _quant(self.lon, 600000, LON_NA),
            "lat": _quant(self.lat, 600000, LAT_NA),
            "cog": COG_NA if self.cog is None else round(self.cog * 10),
            "heading": HEADING_NA if self.heading is None else self.heading,
            "timestamp": self.timestamp,
            "cs_unit": self.cs_unit,
            "display": self.display,
            "dsc": self.dsc,
            "band": self.band,
            "msg22": self.msg22,
            "assigned": self.assigned,
            "raim": self.raim,
            "radio": self.radio,
        }

    def to_bits(self) -> str:
        return _pack(TYPE18_LAYOUT, self.raw_fields())


@dataclass(frozen=True)
class SafetyBroadcast:
    mmsi: int
    text: str
    repeat: int = 0
    msg_type: int = field(default=14, init=False)

    def to_bits(self) -> str:
        head = _pack(TYPE14_HEADER, {"msg_type": 14, "repeat": self.repeat, "mmsi": self.mmsi})
        return head + "".join(int_to_bits(max(TEXT_CHARSET.find(c), 0), 6) for c in self.text)


AisMessage = PositionReport | ClassBPosition | SafetyBroadcast


# --- encoders ----------------------------------------------------------------


def _check_mmsi(mmsi: int) -> None:
    if not 0 <= mmsi < 1 << 30:
        raise CodecError(f"MMSI {mmsi} does not fit 30 bits")


def _check_position(lat: float | None, lon: float | None) -> None:
    if lat is not None and not -90.0 <= lat <= 90.0:
        raise CodecError(f"latitude {lat} outside [-90, 90]")
    if lon is not None and not -180.0 <= lon <= 180.0:
        raise CodecError(f"longitude {lon} outside [-180, 180]")


def _q(value: float | None, scale: int) -> float | None:
    return None if value is None else round(value * scale) / scale


def encode_position_report(
    mmsi: int,
    lat: float | None,
    lon: float | None,
    sog: float | None = None,
    cog: float | None = None,
    heading: int | None = None,
    nav_status: int = 15,
    raw: bool = False,
    **extra: int,
) -> PositionReport:
    """Build a type 1 report; values are quantized to their wire resolution."""
    if not raw:
        _check_mmsi(mmsi)
        _check_position(lat, lon)
        if sog is not None and not 0 <= sog <= 102.2:
            raise CodecError(f"speed {sog} kn outside [0, 102.2]")
        if cog is not None and not 0 <= cog < 360:
            raise CodecError(f"course {cog} outside [0, 360)")
        if heading is not None and not 0 <= heading <= 359:
            raise CodecError(f"heading {heading} outside [0, 359]")
        if not 0 <= nav_status <= 15:
            raise CodecError("nav status must be 4-bit")
    return PositionReport(
        mmsi=mmsi,
        lat=_q(lat, 600000),
        lon=_q(lon, 600000),
        sog=_q(sog, 10),
        cog=_q(cog, 10),
        heading=heading,
        nav_status=nav_status,
        **extra,
    )


def encode_class_b(
    mmsi: int,
    lat: float | None,
    lon: float | None,
    sog: float | None = None,
    cog: float | None = None,
    heading: int | None = None,
    raw: bool = False,
) -> ClassBPosition:
    if not raw:
        _check_mmsi(mmsi)
        _check_position(lat, lon)
    return ClassBPosition(mmsi, _q(lat, 600000), _q(lon, 600000), _q(sog, 10), _q(cog, 10), heading)


def encode_safety_broadcast(mmsi: int, text: str, raw: bool = False) -> SafetyBroadcast:
    if not raw:
        _check_mmsi(mmsi)
        if len(text) > MAX_SAFETY_TEXT:
            raise CodecError(f"safety text longer than {MAX_SAFETY_TEXT} characters")
        bad = {c for c in text if c not in TEXT_CHARSET or c == "@"}
        if bad:
            raise CodecError(f"illegal characters in safety text: {sorted(bad)}")
    return SafetyBroadcast(mmsi, text)


def override_fields(bits: str, msg_type: int, overrides: Mapping[str, int | str]) -> str:
    return apply_overrides(bits, FIELD_MAPS[msg_type], overrides)


# --- decoder -----------------------------------------------------------------


def _position_issues(raw: dict[str, int]) -> list[str]:
    issues = []
    if abs(raw["lat"]) > 90 * 600000 and raw["lat"] != LAT_NA * 600000:
        issues.append("field_out_of_range:lat")
    if abs(raw["lon"]) > 180 * 600000 and raw["lon"] != LON_NA * 600000:
        issues.append("field_out_of_range:lon")
    if raw["cog"] > COG_NA:
        issues.append("field_out_of_range:cog")
    if raw["heading"] > 359 and raw["heading"] != HEADING_NA:
        issues.append("field_out_of_range:heading")
    return issues


def _physical(raw: dict[str, int]) -> dict[str, object]:
    return {
        "lat": None if raw["lat"] == LAT_NA * 600000 else raw["lat"] / 600000,
        "lon": None if raw["lon"] == LON_NA * 600000 else raw["lon"] / 600000,
        "sog": None if raw["sog"] == SOG_NA else raw["sog"] / 10,
        "cog": None if raw["cog"] == COG_NA else raw["cog"] / 10,
        "heading": None if raw["heading"] == HEADING_NA else raw["heading"],
    }


def decode_payload(bits: str) -> DecodeResult:
    """Decode application payload bits. Total: never raises."""
    if len(bits) < 38 or set(bits) - {"0", "1"}:
        return DecodeResult(None, ("bad_length",))
    msg_type = int(bits[:6], 2)
    if msg_type in (1, 2, 3):
        if len(bits) < 168:
            return DecodeResult(None, ("bad_length",))
        raw = _unpack(TYPE1_LAYOUT, bits[:168])
        issues = _position_issues(raw)
        msg = PositionReport(
            mmsi=raw["mmsi"],
            nav_status=raw["nav_status"],
            rot=raw["rot"],
            accuracy=raw["accuracy"],
            timestamp=raw["timestamp"],
            maneuver=raw["maneuver"],
            raim=raw["raim"],
            radio=raw["radio"],
            msg_type=msg_type,
            repeat=raw["repeat"],
            **_physical(raw),
        )
        return DecodeResult(msg, tuple(issues))
    if msg_type == 18:
        if len(bits) < 168:
            return DecodeResult(None, ("bad_length",))
        raw = _unpack(TYPE18_LAYOUT, bits[:168])
        flags = {k: raw[k] for k in ("cs_unit", "display", "dsc", "band", "msg22", "assigned", "raim", "radio")}
        msg = ClassBPosition(
            raw["mmsi"], accuracy=raw["accuracy"], timestamp=raw["timestamp"],
            repeat=raw["repeat"], **_physical(raw), **flags,
        )
        return DecodeResult(msg, tuple(_position_issues(raw)))
    if msg_type == 14:
        if len(bits) < 40:
            return DecodeResult(None, ("bad_length",))
        head = _unpack(TYPE14_HEADER, bits[:40])
        body = bits[40:]
        text = "".join(TEXT_CHARSET[int(body[i:i + 6], 2)] for i in range(0, len(body) - 5, 6))
        issues = []
        if len(text.rstrip("@")) > MAX_SAFETY_TEXT:
            issues.append("field_out_of_range:text")
        return DecodeResult(SafetyBroadcast(head["mmsi"], text.rstrip("@"), head["repeat"]), tuple(issues))
    return DecodeResult(None, ("unknown_message_type",))


# --- 6-bit armoring and NMEA ---------------------------------------------------


def armor_6bit(bits: str) -> tuple[str, int]:
    """Armor bits into AIVDM payload characters; returns ``(text, fill_bits)``."""
    fill = (-len(bits)) % 6
    bits = bits + "0" * fill
    chars = []
    for i in range(0, len(bits), 6):
        v = int(bits[i:i + 6], 2)
        chars.append(chr(v + 48 if v < 40 else v + 56))
    return "".join(chars), fill


def dearmor_6bit(text: str, fill_bits: int = 0) -> str:
    out = []
    for ch in text:
        code = ord(ch)
        if 48 <= code <= 87:
            v = code - 48
        elif 96 <= code <= 119:
            v = code - 56
        else:
            raise NmeaError(f"character {ch!r} outside the armoring alphabet")
        out.append(format(v, "06b"))
    bits = "".join(out)
    if not 0 <= fill_bits <= 5:
        raise NmeaError(f"fill bits {fill_bits} outside 0-5")
    return bits[: len(bits) - fill_bits] if fill_bits else bits


def nmea_checksum(body: str) -> str:
    cs = 0
    for ch in body.encode("ascii"):
        cs ^= ch
    return f"{cs:02X}"


def build_aivdm_sentences(
    message: AisMessage | str, channel: str = "A", sequence_id: int = 1, talker: str = "AIVDM"
) -> list[str]:
    """Render a message (or raw payload bits) as CRLF-terminated sentences."""
    if channel not in ("A", "B"):
        raise CodecError("channel must be A or B")
    bits = message if isinstance(message, str) else message.to_bits()
    armored, fill = armor_6bit(bits)
    chunks = [armored[i:i + MAX_ARMOR_PER_SENTENCE] for i in range(0, len(armored), MAX_ARMOR_PER_SENTENCE)] or [""]
    total = len(chunks)
    seq = "" if total == 1 else str(sequence_id % 10)
    lines = []
    for num, chunk in enumerate(chunks, start=1):
        body = f"{talker},{total},{num},{seq},{channel},{chunk},{fill if num == total else 0}"
        lines.append(f"!{body}*{nmea_checksum(body)}\r\n")
    return lines


def build_aivdm_sentence(message: AisMessage | str, channel: str = "A") -> str:
    """Single-string form; multi-part messages are concatenated lines."""
    return "".join(build_aivdm_sentences(message, channel))


@dataclass(frozen=True)
class AivdmSentence:
    talker: str
    total: int
    number: int
    sequence_id: str
    channel: str
    payload: str
    fill_bits: int

    def render(self) -> str:
        body = (
            f"{self.talker},{self.total},{self.number},{self.sequence_id},"
            f"{self.channel},{self.payload},{self.fill_bits}"
        )
        return f"!{body}*{nmea_checksum(body)}\r\n"


_SENTENCE_RE = re.compile(r"^!(?P<body>[^*]*)\*(?P<cs>[0-9A-Fa-f]{2})\s*$")


def parse_sentence(line: str) -> AivdmSentence:
    m = _SENTENCE_RE.match(line.strip())
    if not m:
        raise NmeaError(f"not an NMEA encapsulation sentence: {line.strip()!r}")
    body = m["body"]
    if nmea_checksum(body) != m["cs"].upper():
        raise NmeaError("NMEA checksum mismatch")
    parts = body.split(",")
    if len(parts) != 7 or parts[0] not in ("AIVDM", "AIVDO"):
        raise NmeaError("expected 7 AIVDM/AIVDO fields")
    try:
        total, number, fill = int(parts[1]), int(parts[2]), int(parts[6])
    except ValueError as exc:
        raise NmeaError(str(exc)) from None
    if not 1 <= number <= total:
        raise NmeaError("fragment number out of range")
    dearmor_6bit(parts[5], 0)
    return AivdmSentence(parts[0], total, number, parts[3], parts[4], parts[5], fill)


def parse_aivdm(lines: Iterable[str]) -> list[tuple[str, str]]:
    """Reassemble fragments; returns ``(channel, payload_bits)`` per message."""
    out: list[tuple[str, str]] = []
    pending: list[AivdmSentence] = []
    for line in lines:
        if not line.strip():
            continue
        s = parse_sentence(line)
        if s.number == 1:
            pending = []
        if pending and (s.sequence_id != pending[0].sequence_id or s.number != len(pending) + 1):
            raise NmeaError("fragment out of sequence")
        pending.append(s)
        if s.number == s.total:
            payload = "".join(p.payload for p in pending)
            out.append((s.channel, dearmor_6bit(payload, s.fill_bits)))
            pending = []
    if pending:
        raise NmeaError("incomplete multi-sentence message")
    return out


# --- air interface ---------------------------------------------------------------


def crc16_x25(data: bytes) -> int:
    crc = 0xFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0x8408 if crc & 1 else crc >> 1
    return crc ^ 0xFFFF


def _lsb_first(data: bytes) -> str:
    return "".join(format(b, "08b")[::-1] for b in data)


def _from_lsb_first(bits: str) -> bytes:
    return bytes(int(bits[i:i + 8][::-1], 2) for i in range(0, len(bits), 8))


def bit_stuff(bits: str) -> str:
    out, ones = [], 0
    for b in bits:
        out.append(b)
        ones = ones + 1 if b == "1" else 0
        if ones == 5:
            out.append("0")
            ones = 0
    return "".join(out)


def bit_unstuff(bits: str) -> str | None:
    """Remove stuffed zeros; ``None`` on a run of six ones."""
    out, ones, skip = [], 0, False
    for b in bits:
        if skip:
            skip = False
            if b == "1":
                return None
            ones = 0
            continue
        out.append(b)
        ones = ones + 1 if b == "1" else 0
        if ones == 5:
            skip = True
    return "".join(out)


def nrzi_encode(bits: str, initial: int = 0) -> str:
    """A zero toggles the line level, a one holds it."""
    level = initial
    out = []
    for b in bits:
        if b == "0":
            level ^= 1
        out.append("1" if level else "0")
    return "".join(out)


def nrzi_decode(levels: str, initial: int = 0) -> str:
    prev = str(initial)
    out = []
    for lv in levels:
        out.append("1" if lv == prev else "0")
        prev = lv
    return "".join(out)


@dataclass(frozen=True)
class AisAirFrame:
    training: str
    payload_bits: str  # stuffed data + FCS in transmission order
    buffer_bits: str
    data_bits: str  # message bits, byte padded, MSB-first field order
    nrzi_initial: int = 0

    @property
    def hdlc_bits(self) -> str:
        return self.training + HDLC_FLAG + self.payload_bits + HDLC_FLAG + self.buffer_bits

    @property
    def line_bits(self) -> str:
        return nrzi_encode(self.hdlc_bits, self.nrzi_initial)


def build_air_frame(
    message: AisMessage | str,
    training_bits: str = DEFAULT_TRAINING,
    invert_crc: bool = False,
    omit_stuffing: bool = False,
    buffer_bits: int = 8,
    nrzi_initial: int = 0,
) -> AisAirFrame:
    if not 0 <= len(training_bits) <= 64 or set(training_bits) - {"0", "1"}:
        raise CodecError("training sequence must be 0-64 bits")
    bits = message if isinstance(message, str) else message.to_bits()
    data = bits_to_bytes(bits)
    fcs = crc16_x25(data)
    if invert_crc:
        fcs ^= 0xFFFF
    tx = _lsb_first(data + fcs.to_bytes(2, "little"))
    payload = tx if omit_stuffing else bit_stuff(tx)
    return AisAirFrame(training_bits, payload, "0" * buffer_bits, bytes_to_bits(data), nrzi_initial)


@dataclass(frozen=True)
class AirReceipt:
    message_bits: str
    training_length: int
    training_phase_ok: bool
    start_index: int


def _alternating_run(bits: str, end: int) -> int:
    k = 0
    while end - k - 1 >= 0 and (k == 0 or bits[end - k - 1] != bits[end - k]):
        k += 1
    return k


def receive_hdlc(hdlc: str) -> DecodeResult:
    """Deframe an NRZI-decoded bit stream. Total: never raises."""
    start = hdlc.find(HDLC_FLAG)
    if start < 0:
        return DecodeResult(None, ("no_start_flag",))
    training_len = _alternating_run(hdlc, start)
    phase_ok = training_len == 0 or hdlc[start - 1] == "1"
    body_start = start + len(HDLC_FLAG)
    while hdlc.startswith(HDLC_FLAG, body_start):
        body_start += len(HDLC_FLAG)
    end = hdlc.find("111111", body_start)
    if end < 0 or hdlc[end - 1:end + 7] != HDLC_FLAG:
        return DecodeResult(None, ("no_end_flag",))
    stuffed = hdlc[body_start:end - 1]
    tx = bit_unstuff(stuffed)
    if tx is None:
        return DecodeResult(None, ("stuffing_violation",))
    if len(tx) % 8 or len(tx) < 24:
        return DecodeResult(None, ("bad_length",))
    raw = _from_lsb_first(tx)
    receipt = AirReceipt(bytes_to_bits(raw[:-2]), training_len, phase_ok, start)
    data, fcs = raw[:-2], int.from_bytes(raw[-2:], "little")
    if crc16_x25(data) != fcs:
        return DecodeResult(receipt, ("crc_failed",))
    return DecodeResult(receipt, ())


def receive_air_frame(line_bits: str, nrzi_initial: int = 0) -> DecodeResult:
    return receive_hdlc(nrzi_decode(line_bits, nrzi_initial))


def decode_air_frame(line_bits: str, strict: bool = True, nrzi_initial: int = 0) -> DecodeResult:
    """Line bits all the way to an application message."""
    rx = receive_air_frame(line_bits, nrzi_initial)
    if rx.message is None or (strict and rx.issues):
        return DecodeResult(None, rx.issues)
    app = decode_payload(rx.message.message_bits)
    return DecodeResult(app.message, rx.issues + app.issues)


def message_fields(message: AisMessage) -> dict[str, object]:
    return {f.name: getattr(message, f.name) for f in fields(message)}
