"""Bit-string helpers, the shared ``Frame`` type and the replay text format.

Bit sequences are plain ``str`` objects made of ``'0'`` and ``'1'``
characters, MSB first. They are immutable, hashable and slice cheaply,
which is all the codecs need.

Replay format, one frame per line::

    [@<microseconds>[#<transmitter>] ]<HEX>[/<nbits>]

``/<nbits>`` is only written when the bit count is not a multiple of four.
Blank lines and lines starting with ``;`` are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping


class CodecError(ValueError):
    """Raised when an encoder is handed values it refuses to encode."""


class ReplayFormatError(ValueError):
    pass


def int_to_bits(value: int, width: int) -> str:
    """Two's complement rendering of ``value`` into ``width`` bits."""
    if width == 0:
        return ""
    return format(value & ((1 << width) - 1), f"0{width}b")


def bits_to_int(bits: str, signed: bool = False) -> int:
    if not bits:
        return 0
    value = int(bits, 2)
    if signed and bits[0] == "1":
        value -= 1 << len(bits)
    return value


def bits_to_bytes(bits: str) -> bytes:
    """Pack bits MSB-first, zero-padding the tail to a byte boundary."""
    pad = (-len(bits)) % 8
    bits = bits + "0" * pad
    if not bits:
        return b""
    return int(bits, 2).to_bytes(len(bits) // 8, "big")


def bytes_to_bits(data: bytes) -> str:
    if not data:
        return ""
    return format(int.from_bytes(data, "big"), f"0{len(data) * 8}b")


def bits_to_hex(bits: str) -> str:
    pad = (-len(bits)) % 4
    bits = bits + "0" * pad
    if not bits:
        return ""
    return format(int(bits, 2), f"0{len(bits) // 4}X")


def hex_to_bits(text: str, nbits: int | None = None) -> str:
    text = text.strip()
    if not re.fullmatch(r"[0-9A-Fa-f]*", text):
        raise ReplayFormatError(f"not a hex string: {text!r}")
    bits = format(int(text, 16), f"0{len(text) * 4}b") if text else ""
    if nbits is not None:
        if nbits > len(bits):
            raise ReplayFormatError(f"bit count {nbits} exceeds hex payload")
        bits = bits[:nbits]
    return bits


def flip_bit(bits: str, index: int) -> str:
    return bits[:index] + ("1" if bits[index] == "0" else "0") + bits[index + 1:]


def set_field(bits: str, offset: int, width: int, value: int | str) -> str:
    """Overwrite ``width`` bits at ``offset`` with an int or a bit string."""
    if isinstance(value, str):
        chunk = value.zfill(width)[-width:]
    else:
        chunk = int_to_bits(value, width)
    return bits[:offset] + chunk + bits[offset + width:]


def apply_overrides(
    bits: str,
    field_map: Mapping[str, tuple[int, int]],
    overrides: Mapping[str, int | str],
) -> str:
    """Write raw values straight into named fields, skipping all validation."""
    for name, value in overrides.items():
        if name not in field_map:
            raise CodecError(f"unknown field {name!r}; known: {sorted(field_map)}")
        offset, width = field_map[name]
        bits = set_field(bits, offset, width, parse_raw_value(value))
    return bits


def parse_raw_value(value: int | str) -> int | str:
    """Accept ints, ``0x``/``0b`` literals and bare bit strings."""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    text = str(value).strip()
    if text.startswith(("0x", "0X")):
        return int(text, 16)
    if text.startswith(("0b", "0B")):
        return text[2:]
    if text and set(text) <= {"0", "1"}:
        return text
    return int(text, 0)


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of a lenient or strict decode.

    ``message`` is ``None`` when nothing usable could be recovered (or when
    strict mode rejected the input). ``issues`` holds diagnosis tags such as
    ``crc_failed`` or ``field_out_of_range:latitude``.
    """

    message: object | None
    issues: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.message is not None and not self.issues


@dataclass(frozen=True)
class Frame:
    """A protocol-tagged bit sequence as emitted by a transmitter."""

    protocol: str
    bits: str
    kind: str = ""
    meta: tuple[tuple[str, object], ...] = field(default=(), compare=False)

    @property
    def hex(self) -> str:
        return bits_to_hex(self.bits)

    def info(self) -> dict[str, object]:
        return dict(self.meta)


@dataclass(frozen=True)
class ReplayRecord:
    timestamp_us: int | None
    bits: str
    transmitter: int = 0


_REPLAY_RE = re.compile(
    r"^(?:@(?P<ts>\d+)(?:#(?P<tx>\d+))?\s+)?(?P<hex>[0-9A-Fa-f]+)(?:/(?P<n>\d+))?$"
)


def format_replay_line(bits: str, timestamp_us: int | None = None, transmitter: int = 0) -> str:
    body = bits_to_hex(bits)
    if len(bits) % 4:
        body += f"/{len(bits)}"
    if timestamp_us is None:
        return body
    prefix = f"@{int(timestamp_us)}"
    if transmitter:
        prefix += f"#{transmitter}"
    return f"{prefix} {body}"


def parse_replay_line(line: str) -> ReplayRecord:
    m = _REPLAY_RE.match(line.strip())
    if not m:
        raise ReplayFormatError(f"malformed replay line: {line.strip()!r}")
    nbits = int(m["n"]) if m["n"] else None
    bits = hex_to_bits(m["hex"], nbits)
    ts = int(m["ts"]) if m["ts"] is not None else None
    return ReplayRecord(ts, bits, int(m["tx"] or 0))


def iter_replay(lines: Iterable[str]) -> Iterator[ReplayRecord]:
    for line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith(";"):
            continue
        yield parse_replay_line(stripped)


def read_replay(path: str | Path) -> list[ReplayRecord]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_replay(fh))


def write_replay(path: str | Path, records: Iterable[ReplayRecord]) -> None:
    lines = [format_replay_line(r.bits, r.timestamp_us, r.transmitter) for r in records]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
