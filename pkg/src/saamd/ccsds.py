"""CCSDS Space Packet encoding, decoding and DoS test sequences."""

from __future__ import annotations

import random
import re
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Literal, Sequence

from .bits import CodecError, DecodeResult

HEADER_LEN = 6
MAX_PAYLOAD = 65536

TELEMETRY = 0
TELECOMMAND = 1

HEADER_FIELDS = {
    "version": (0, 3),
    "type": (3, 1),
    "sec_hdr_flag": (4, 1),
    "apid": (5, 11),
    "seq_flags": (16, 2),
    "seq_count": (18, 14),
    "length_field": (32, 16),
}


@dataclass(frozen=True)
class SpacePacket:
    apid: int
    payload: bytes
    type: Literal[0, 1] = TELECOMMAND
    seq_count: int = 0
    seq_flags: int = 0b11
    sec_hdr_flag: bool = False
    version: int = 0

    @property
    def length_field(self) -> int:
        return len(self.payload) - 1


def encode_packet(p: SpacePacket, raw: bool = False) -> bytes:
    if not raw:
        if not 1 <= len(p.payload) <= MAX_PAYLOAD:
            raise CodecError(f"payload must be 1-{MAX_PAYLOAD} bytes, got {len(p.payload)}")
        if not 0 <= p.apid < 1 << 11:
            raise CodecError("APID must be 11-bit")
        if not 0 <= p.seq_count < 1 << 14:
            raise CodecError("sequence count must be 14-bit")
        if not 0 <= p.seq_flags < 4 or not 0 <= p.version < 8:
            raise CodecError("sequence flags / version out of range")
    word1 = ((p.version & 7) << 13) | ((p.type & 1) << 12) | (int(p.sec_hdr_flag) << 11) | (p.apid & 0x7FF)
    word2 = ((p.seq_flags & 3) << 14) | (p.seq_count & 0x3FFF)
    return struct.pack(">HHH", word1, word2, (len(p.payload) - 1) & 0xFFFF) + p.payload


def decode_packet(data: bytes, lenient: bool = False) -> DecodeResult:
    """Parse one packet. Never raises; lenient mode keeps diagnosed packets."""
    if len(data) < HEADER_LEN:
        return DecodeResult(None, ("truncated",))
    word1, word2, length = struct.unpack(">HHH", data[:HEADER_LEN])
    issues = []
    version = word1 >> 13
    if version != 0:
        issues.append("bad_version")
    body = data[HEADER_LEN:]
    if len(body) < length + 1:
        issues.append("truncated")
    if len(body) != length + 1:
        issues.append("length_mismatch")
    if not lenient and issues:
        return DecodeResult(None, tuple(issues))
    packet = SpacePacket(
        apid=word1 & 0x7FF,
        payload=bytes(body[: length + 1]),
        type=(word1 >> 12) & 1,
        seq_count=word2 & 0x3FFF,
        seq_flags=word2 >> 14,
        sec_hdr_flag=bool((word1 >> 11) & 1),
        version=version,
    )
    return DecodeResult(packet, tuple(issues))


# --- sequences ------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceEntry:
    delay_ms: float
    packet: SpacePacket | None = None
    raw: bytes | None = None

    @property
    def data(self) -> bytes:
        return encode_packet(self.packet) if self.packet is not None else self.raw or b""

    @property
    def malformed(self) -> bool:
        return self.packet is None


PacketSequence = tuple[SequenceEntry, ...]

MUTATIONS = (
    "replay",
    "seq_jump",
    "seq_reset",
    "seq_wrap",
    "length_mismatch",
    "truncate",
    "bad_version",
    "oversize_flood",
    "apid_sweep",
    "zero_delay_burst",
)

_MUT_RE = re.compile(r"^(?P<name>[a-z_]+)(?:\s*[:x×*]\s*(?P<arg>\d+))?$")


def parse_mutation(text: str) -> tuple[str, int | None]:
    m = _MUT_RE.match(text.strip())
    if not m or m["name"] not in MUTATIONS:
        raise CodecError(f"unknown mutation {text!r}; known: {', '.join(MUTATIONS)}")
    return m["name"], int(m["arg"]) if m["arg"] else None


def build_dos_sequence(
    template: SpacePacket,
    mutations: Sequence[str] = (),
    seed: int = 0,
    interval_ms: float = 100.0,
) -> PacketSequence:
    """Expand a template into a deterministic stress sequence.

    Mutations are applied in order, each appending entries after the
    template. Arguments use ``name:N`` (``replay×3`` is also accepted).
    """
    rng = random.Random(seed)
    entries = [SequenceEntry(0.0, template)]
    if not mutations:
        return tuple(entries)
    entries = []
    seq = template.seq_count
    for item in mutations:
        name, arg = parse_mutation(item)
        if name == "replay":
            entries += [SequenceEntry(interval_ms, template) for _ in range(arg or 2)]
        elif name == "seq_jump":
            jump = arg or rng.randrange(2, 1 << 13)
            seq = (seq + jump) & 0x3FFF
            entries.append(SequenceEntry(interval_ms, replace(template, seq_count=seq)))
        elif name == "seq_reset":
            seq = 0
            entries.append(SequenceEntry(interval_ms, replace(template, seq_count=0)))
        elif name == "seq_wrap":
            for s in (0x3FFE, 0x3FFF, 0x0000):
                entries.append(SequenceEntry(interval_ms, replace(template, seq_count=s)))
        elif name == "length_mismatch":
            data = bytearray(encode_packet(template))
            delta = arg or rng.randrange(1, 64)
            length = (template.length_field + delta) & 0xFFFF
            data[4:6] = length.to_bytes(2, "big")
            entries.append(SequenceEntry(interval_ms, raw=bytes(data)))
        elif name == "truncate":
            data = encode_packet(template)
            cut = arg if arg is not None else rng.randrange(1, HEADER_LEN)
            entries.append(SequenceEntry(interval_ms, raw=data[:cut]))
        elif name == "bad_version":
            entries.append(SequenceEntry(interval_ms, raw=encode_packet(replace(template, version=arg or 7), raw=True)))
        elif name == "oversize_flood":
            big = replace(template, payload=bytes(rng.getrandbits(8) for _ in range(4096)))
            entries += [SequenceEntry(0.0, replace(big, seq_count=(seq + i) & 0x3FFF)) for i in range(arg or 10)]
        elif name == "apid_sweep":
            for apid in range(arg or 16):
                entries.append(SequenceEntry(interval_ms, replace(template, apid=apid)))
        elif name == "zero_delay_burst":
            entries += [SequenceEntry(0.0, replace(template, seq_count=(seq + i) & 0x3FFF)) for i in range(arg or 50)]
    return tuple(entries)


def sequence_offsets_us(sequence: Iterable[SequenceEntry]) -> list[int]:
    t = 0.0
    out = []
    for entry in sequence:
        t += entry.delay_ms
        out.append(int(round(t * 1000)))
    return out


def write_capture(path: str | Path, sequence: Sequence[SequenceEntry]) -> None:
    """Binary capture: ``<u64 LE offset_us><u32 LE length><bytes>`` records."""
    with open(path, "wb") as fh:
        for off, entry in zip(sequence_offsets_us(sequence), sequence):
            data = entry.data
            fh.write(struct.pack("<QI", off, len(data)))
            fh.write(data)


def read_capture(path: str | Path) -> list[tuple[int, bytes]]:
    blob = Path(path).read_bytes()
    out, pos = [], 0
    while pos < len(blob):
        if pos + 12 > len(blob):
            raise CodecError("truncated capture record header")
        off, n = struct.unpack_from("<QI", blob, pos)
        pos += 12
        if pos + n > len(blob):
            raise CodecError("truncated capture record body")
        out.append((off, blob[pos:pos + n]))
        pos += n
    return out
