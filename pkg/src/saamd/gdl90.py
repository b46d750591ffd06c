"""GDL-90 framing plus heartbeat, ownship and traffic report messages.

Wire form: ``0x7E | escape(id + payload + crc_lo + crc_hi) | 0x7E`` where
escaping maps ``0x7E -> 0x7D 0x5E`` and ``0x7D -> 0x7D 0x5D``.
"""

from __future__ import annotations

import math
import socket
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

from .bits import CodecError, DecodeResult
from .kinematics import KinematicState

FLAG = 0x7E
ESCAPE = 0x7D

HEARTBEAT = 0
OWNSHIP = 10
TRAFFIC = 20
KNOWN_IDS = (HEARTBEAT, OWNSHIP, TRAFFIC)
TRAFFIC_PAYLOAD_LEN = 27

LATLON_LSB = 180.0 / (1 << 23)
ALT_NA = 0xFFF
HVEL_NA = 0xFFF
VVEL_NA = 0x800


def _crc_table() -> list[int]:
    table = []
    for i in range(256):
        crc = i << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
        table.append(crc & 0xFFFF)
    return table


CRC_TABLE = _crc_table()


def crc16(data: bytes) -> int:
    crc = 0
    for b in data:
        crc = CRC_TABLE[crc >> 8] ^ ((crc << 8) & 0xFFFF) ^ b
    return crc


@dataclass(frozen=True)
class Gdl90Message:
    id: int
    payload: bytes = b""

    @property
    def body(self) -> bytes:
        return bytes([self.id]) + self.payload


def escape(data: bytes) -> bytes:
    out = bytearray()
    for b in data:
        if b in (FLAG, ESCAPE):
            out += bytes([ESCAPE, b ^ 0x20])
        else:
            out.append(b)
    return bytes(out)


def frame_body(body: bytes) -> bytes:
    """Frame raw message bytes (id + payload) with CRC and escaping."""
    crc = crc16(body)
    return bytes([FLAG]) + escape(body + crc.to_bytes(2, "little")) + bytes([FLAG])


def frame(message: Gdl90Message) -> bytes:
    if not 0 <= message.id <= 255:
        raise CodecError("message id must be a byte")
    return frame_body(message.body)


def _unescape(data: bytes) -> tuple[bytes, list[str]]:
    out = bytearray()
    issues: list[str] = []
    it = iter(data)
    for b in it:
        if b == ESCAPE:
            nxt = next(it, None)
            if nxt is None:
                issues.append("bad_escape")
                break
            if nxt not in (0x5E, 0x5D):
                issues.append("bad_escape")
            out.append(nxt ^ 0x20)
        else:
            out.append(b)
    return bytes(out), issues


def deframe(data: bytes, lenient: bool = False) -> DecodeResult:
    """Invert :func:`frame` for exactly one frame. Never raises."""
    issues: list[str] = []
    if len(data) < 2 or data[0] != FLAG:
        return DecodeResult(None, ("missing_start_flag",))
    if data[-1] != FLAG:
        return DecodeResult(None, ("unterminated_frame",))
    inner = data[1:-1]
    if FLAG in inner:
        issues.append("unescaped_flag")
    body, esc_issues = _unescape(inner)
    issues += esc_issues
    if len(body) < 3:
        return DecodeResult(None, tuple(issues + ["too_short"]))
    msg_body, crc = body[:-2], int.from_bytes(body[-2:], "little")
    if crc16(msg_body) != crc:
        issues.append("crc_failed")
    if msg_body[0] not in KNOWN_IDS:
        issues.append("unknown_message_id")
    if not lenient and issues:
        return DecodeResult(None, tuple(issues))
    return DecodeResult(Gdl90Message(msg_body[0], msg_body[1:]), tuple(issues))


def split_stream(data: bytes) -> list[bytes]:
    """Cut a byte stream into flag-delimited candidate frames."""
    frames = []
    start = None
    for i, b in enumerate(data):
        if b != FLAG:
            continue
        if start is not None and i - start > 1:
            frames.append(data[start:i + 1])
            start = None
        else:
            start = i
    return frames


class StreamDeframer:
    """Incremental deframer for socket-style byte streams."""

    def __init__(self, lenient: bool = True, max_frame: int = 4096):
        self.lenient = lenient
        self.max_frame = max_frame
        self._buf = bytearray()
        self._in_frame = False

    def feed(self, chunk: bytes) -> list[DecodeResult]:
        results = []
        for b in chunk:
            if b == FLAG:
                if self._in_frame and self._buf:
                    results.append(deframe(bytes([FLAG]) + bytes(self._buf) + bytes([FLAG]), self.lenient))
                self._buf.clear()
                self._in_frame = True
            elif self._in_frame:
                self._buf.append(b)
                if len(self._buf) > self.max_frame:
                    results.append(DecodeResult(None, ("oversize_frame",)))
                    self._buf.clear()
                    self._in_frame = False
        return results


def write_frames(path: str | Path, messages: Iterable[Gdl90Message | bytes]) -> None:
    with open(path, "wb") as fh:
        send_frames(fh, messages)


def send_frames(sink: BinaryIO | socket.socket, messages: Iterable[Gdl90Message | bytes]) -> None:
    """Write framed messages to a file object or a connected socket."""
    data = b"".join(m if isinstance(m, bytes) else frame(m) for m in messages)
    if isinstance(sink, socket.socket):
        sink.sendall(data)
    else:
        sink.write(data)


def read_frames(path: str | Path, lenient: bool = True) -> list[DecodeResult]:
    return StreamDeframer(lenient).feed(Path(path).read_bytes())


def iter_socket(sock: socket.socket, lenient: bool = True, bufsize: int = 4096) -> Iterator[DecodeResult]:
    deframer = StreamDeframer(lenient)
    while True:
        chunk = sock.recv(bufsize)
        if not chunk:
            return
        yield from deframer.feed(chunk)


# --- heartbeat -----------------------------------------------------------------


@dataclass(frozen=True)
class Heartbeat:
    status1: int = 0x81
    status2: int = 0x01
    timestamp: int = 0  # seconds since 0000Z, 17 bits
    counts: int = 0  # raw 16-bit message count field

    def to_message(self) -> Gdl90Message:
        status2 = (self.status2 & 0x7F) | ((self.timestamp >> 9) & 0x80)
        payload = bytes([self.status1, status2]) + (self.timestamp & 0xFFFF).to_bytes(2, "little")
        return Gdl90Message(HEARTBEAT, payload + self.counts.to_bytes(2, "big"))


def decode_heartbeat(msg: Gdl90Message) -> DecodeResult:
    if msg.id != HEARTBEAT or len(msg.payload) != 6:
        return DecodeResult(None, ("bad_length",))
    p = msg.payload
    ts = int.from_bytes(p[2:4], "little") | ((p[1] & 0x80) << 9)
    return DecodeResult(Heartbeat(p[0], p[1] & 0x7F, ts, int.from_bytes(p[4:6], "big")))


# --- traffic / ownship reports -----------------------------------------------

# byte offsets within id+payload
TRAFFIC_FIELDS = {
    "status": (1, 1),
    "address": (2, 3),
    "lat": (5, 3),
    "lon": (8, 3),
    "altitude_misc": (11, 2),
    "nic_nacp": (13, 1),
    "velocity": (14, 3),
    "track": (17, 1),
    "emitter": (18, 1),
    "callsign": (19, 8),
    "emergency": (27, 1),
}


@dataclass(frozen=True)
class TrafficReport:
    """Traffic (id 20) or ownship (id 10) report at wire resolution."""

    address: int
    lat: float
    lon: float
    altitude: int | None = None
    horizontal_velocity: int | None = None
    vertical_velocity: int | None = None
    track: float = 0.0
    callsign: str = ""
    alert_status: int = 0
    address_type: int = 0
    misc: int = 0b1001  # airborne, true track
    nic: int = 8
    nacp: int = 8
    emitter_category: int = 1
    emergency: int = 0
    message_id: int = TRAFFIC

    def to_message(self, raw: bool = False) -> Gdl90Message:
        if not raw:
            if not 0 <= self.address < 1 << 24:
                raise CodecError("address must be 24-bit")
            if len(self.callsign) > 8:
                raise CodecError("callsign longer than 8 characters")
        lat = math.floor(self.lat / LATLON_LSB) & 0xFFFFFF
        lon = math.floor(self.lon / LATLON_LSB) & 0xFFFFFF
        alt = ALT_NA if self.altitude is None else (self.altitude + 1000) // 25
        hv = HVEL_NA if self.horizontal_velocity is None else self.horizontal_velocity
        vv = VVEL_NA if self.vertical_velocity is None else (self.vertical_velocity // 64) & 0xFFF
        trk = round(self.track * 256 / 360) % 256
        payload = bytearray()
        payload.append(((self.alert_status & 0xF) << 4) | (self.address_type & 0xF))
        payload += (self.address & 0xFFFFFF).to_bytes(3, "big")
        payload += lat.to_bytes(3, "big") + lon.to_bytes(3, "big")
        payload += (((alt & 0xFFF) << 4) | (self.misc & 0xF)).to_bytes(2, "big")
        payload.append(((self.nic & 0xF) << 4) | (self.nacp & 0xF))
        payload += (((hv & 0xFFF) << 12) | vv).to_bytes(3, "big")
        payload.append(trk)
        payload.append(self.emitter_category & 0xFF)
        payload += self.callsign.ljust(8)[:8].encode("ascii", "replace")
        payload.append((self.emergency & 0xF) << 4)
        return Gdl90Message(self.message_id, bytes(payload))


def _signed24(v: int) -> int:
    return v - (1 << 24) if v & 0x800000 else v


def quantize_latlon(value: float) -> float:
    return _signed24(math.floor(value / LATLON_LSB) & 0xFFFFFF) * LATLON_LSB


def report_from_state(
    state: KinematicState, address: int, message_id: int = TRAFFIC, emergency: int = 0
) -> TrafficReport:
    """Snap a kinematic state to wire resolution."""
    alt = int(math.floor((state.altitude + 1000) / 25.0 + 0.5))
    if not 0 <= alt < ALT_NA:
        raise CodecError(f"altitude {state.altitude} ft outside GDL-90 range")
    speed = int(round(state.ground_speed))
    if speed >= HVEL_NA:
        raise CodecError("horizontal velocity out of range")
    lon = (state.longitude + 180.0) % 360.0 - 180.0
    vv = int(round(state.vertical_rate / 64.0)) * 64
    return TrafficReport(
        address=address,
        lat=quantize_latlon(state.latitude),
        lon=quantize_latlon(lon),
        altitude=alt * 25 - 1000,
        horizontal_velocity=speed,
        vertical_velocity=vv,
        track=(round(state.track * 256 / 360) % 256) * 360 / 256,
        callsign=state.callsign.rstrip(),
        emergency=1 if state.squawk_emergency else emergency,
        message_id=message_id,
    )


def encode_traffic_report(state: KinematicState, address: int = 0, message_id: int = TRAFFIC) -> Gdl90Message:
    state.validate()
    return report_from_state(state, address, message_id).to_message()


def decode_traffic_report(msg: Gdl90Message) -> DecodeResult:
    if msg.id not in (OWNSHIP, TRAFFIC):
        return DecodeResult(None, ("unknown_message_id",))
    if len(msg.payload) != TRAFFIC_PAYLOAD_LEN:
        return DecodeResult(None, ("bad_length",))
    p = msg.payload
    issues = []
    lat = _signed24(int.from_bytes(p[4:7], "big")) * LATLON_LSB
    lon = _signed24(int.from_bytes(p[7:10], "big")) * LATLON_LSB
    if abs(lat) > 90:
        issues.append("field_out_of_range:lat")
    am = int.from_bytes(p[10:12], "big")
    alt_raw = am >> 4
    vel = int.from_bytes(p[13:16], "big")
    hv, vv = vel >> 12, vel & 0xFFF
    vv_signed = vv - 0x1000 if vv & 0x800 else vv
    try:
        callsign = p[18:26].decode("ascii").rstrip()
    except UnicodeDecodeError:
        callsign = p[18:26].decode("latin-1").rstrip()
        issues.append("field_out_of_range:callsign")
    report = TrafficReport(
        address=int.from_bytes(p[1:4], "big"),
        lat=lat,
        lon=lon,
        altitude=None if alt_raw == ALT_NA else alt_raw * 25 - 1000,
        horizontal_velocity=None if hv == HVEL_NA else hv,
        vertical_velocity=None if vv == VVEL_NA else vv_signed * 64,
        track=p[16] * 360 / 256,
        callsign=callsign,
        alert_status=p[0] >> 4,
        address_type=p[0] & 0xF,
        misc=am & 0xF,
        nic=p[12] >> 4,
        nacp=p[12] & 0xF,
        emitter_category=p[17],
        emergency=p[26] >> 4,
        message_id=msg.id,
    )
    return DecodeResult(report, tuple(issues))


def decode(data: bytes, lenient: bool = False) -> DecodeResult:
    """Deframe and decode one framed message down to its typed form."""
    res = deframe(data, lenient)
    if res.message is None:
        return res
    msg: Gdl90Message = res.message
    if msg.id == HEARTBEAT:
        inner = decode_heartbeat(msg)
    elif msg.id in (OWNSHIP, TRAFFIC):
        inner = decode_traffic_report(msg)
    else:
        return res
    if inner.message is None:
        return DecodeResult(msg if lenient else None, res.issues + inner.issues)
    return DecodeResult(inner.message, res.issues + inner.issues)
