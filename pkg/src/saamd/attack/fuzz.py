"""Seeded black-box mutation fuzzer with a replayable campaign log.

Every iteration draws from its own generator seeded with ``(seed,
iteration)``, so any single case can be rebuilt without replaying the
ones before it. Log records are tab separated::

    <iteration>\\t<operator>\\t<params as JSON>\\t<input hex>
"""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

from .. import adsb, ais, ccsds, epirb, gdl90
from ..bits import DecodeResult, bits_to_bytes, bytes_to_bits, int_to_bits, set_field

OPERATORS = ("bit_flip", "byte_flip", "truncate", "extend", "field", "splice", "repeat")
_NEEDS_DATA = {"bit_flip", "byte_flip", "truncate", "field", "repeat"}


class FuzzError(ValueError):
    pass


@dataclass(frozen=True)
class FuzzCase:
    iteration: int
    operator: str
    params: dict[str, Any]
    data: bytes

    def log_line(self) -> str:
        params = json.dumps(self.params, sort_keys=True, separators=(",", ":"))
        return f"{self.iteration}\t{self.operator}\t{params}\t{self.data.hex()}"


# --- field maps -----------------------------------------------------------------------


def _bit_fields(protocol: str, data: bytes) -> dict[str, tuple[int, int]]:
    """Bit-level field layout of ``data`` for the bit-oriented protocols."""
    bits = bytes_to_bits(data)
    if protocol == "adsb":
        if len(bits) != adsb.FRAME_BITS:
            return dict(adsb.HEADER_FIELDS)
        res = adsb.decode_frame(bits, strict=False)
        return dict(adsb.FIELD_MAPS.get(adsb.message_kind(res.message), adsb.HEADER_FIELDS))
    if protocol == "epirb":
        return epirb.field_map_for(bits)
    if protocol == "ais":
        msg_type = int(bits[:6], 2) if len(bits) >= 6 else 0
        return dict(ais.FIELD_MAPS.get({2: 1, 3: 1}.get(msg_type, msg_type), {"msg_type": (0, 6)}))
    if protocol == "ccsds":
        return dict(ccsds.HEADER_FIELDS)
    raise FuzzError(f"no bit layout for {protocol}")


def _fix_integrity(protocol: str, bits: str) -> str:
    if protocol == "adsb" and len(bits) == adsb.FRAME_BITS:
        return adsb.with_valid_crc(bits)
    if protocol == "epirb" and len(bits) == epirb.LONG_BITS:
        return epirb.with_valid_bch(bits)
    return bits


def _gdl90_fields(data: bytes) -> tuple[bytes, dict[str, tuple[int, int]]] | None:
    res = gdl90.deframe(data, lenient=True)
    if res.message is None:
        return None
    body = res.message.body
    if res.message.id in (gdl90.TRAFFIC, gdl90.OWNSHIP) and len(body) == gdl90.TRAFFIC_PAYLOAD_LEN + 1:
        return body, dict(gdl90.TRAFFIC_FIELDS)
    if len(body) > 1:
        return body, {"payload": (1, len(body) - 1)}
    return None


# --- operators ------------------------------------------------------------------------


def _draw_params(op: str, rng: np.random.Generator, corpus: Sequence[bytes], src: int, protocol: str) -> tuple[str, dict]:
    data = corpus[src]
    n = len(data)
    if op in _NEEDS_DATA and n == 0:
        op = "extend"
    p: dict[str, Any] = {"src": src}
    if op == "bit_flip":
        k = int(rng.integers(1, 9))
        p["bits"] = sorted(int(x) for x in rng.choice(8 * n, size=min(k, 8 * n), replace=False))
    elif op == "byte_flip":
        k = int(rng.integers(1, 5))
        offs = sorted(int(x) for x in rng.choice(n, size=min(k, n), replace=False))
        p["offsets"] = offs
        p["masks"] = [int(x) for x in rng.integers(1, 256, size=len(offs))]
    elif op == "truncate":
        p["length"] = int(rng.integers(0, n))
    elif op == "extend":
        p["data"] = rng.bytes(int(rng.integers(1, 33))).hex()
    elif op == "splice":
        other = int(rng.integers(len(corpus)))
        p.update(other=other, cut_a=int(rng.integers(0, n + 1)), cut_b=int(rng.integers(0, len(corpus[other]) + 1)))
    elif op == "repeat":
        start = int(rng.integers(0, n))
        p.update(start=start, length=int(rng.integers(1, min(16, n - start) + 1)), times=int(rng.integers(1, 65)))
    elif op == "field":
        if protocol == "gdl90":
            found = _gdl90_fields(data)
            if found is None:
                return _draw_params("byte_flip", rng, corpus, src, protocol)
            body, fmap = found
            name = sorted(fmap)[int(rng.integers(len(fmap)))]
            p.update(field=name, value=rng.bytes(fmap[name][1]).hex())
        else:
            fmap = {k: v for k, v in _bit_fields(protocol, data).items() if v[0] + v[1] <= 8 * n}
            if not fmap:
                return _draw_params("bit_flip", rng, corpus, src, protocol)
            name = sorted(fmap)[int(rng.integers(len(fmap)))]
            width = fmap[name][1]
            value = int.from_bytes(rng.bytes((width + 7) // 8), "big") & ((1 << width) - 1)
            p.update(field=name, value=format(value, "x"), fix=bool(rng.integers(0, 2)))
    return op, p


def apply_operator(op: str, params: dict[str, Any], corpus: Sequence[bytes], protocol: str) -> bytes:
    """Pure function of its arguments; this is what makes log replay exact."""
    data = corpus[params["src"]]
    if op == "bit_flip":
        buf = bytearray(data)
        for b in params["bits"]:
            buf[b // 8] ^= 0x80 >> (b % 8)
        return bytes(buf)
    if op == "byte_flip":
        buf = bytearray(data)
        for off, mask in zip(params["offsets"], params["masks"]):
            buf[off] ^= mask
        return bytes(buf)
    if op == "truncate":
        return data[: params["length"]]
    if op == "extend":
        return data + bytes.fromhex(params["data"])
    if op == "splice":
        return data[: params["cut_a"]] + corpus[params["other"]][params["cut_b"]:]
    if op == "repeat":
        s, ln = params["start"], params["length"]
        return data[: s + ln] + data[s: s + ln] * params["times"] + data[s + ln:]
    if op == "field":
        if protocol == "gdl90":
            found = _gdl90_fields(data)
            if found is None:
                raise FuzzError("field mutation needs a decodable GDL-90 frame")
            body, fmap = found
            off, width = fmap[params["field"]]
            body = body[:off] + bytes.fromhex(params["value"]) + body[off + width:]
            return gdl90.frame_body(body)
        fmap = _bit_fields(protocol, data)
        off, width = fmap[params["field"]]
        bits = bytes_to_bits(data)
        bits = set_field(bits, off, width, int_to_bits(int(params["value"], 16), width))
        if params.get("fix"):
            bits = _fix_integrity(protocol, bits)
        return bits_to_bytes(bits)
    raise FuzzError(f"unknown operator {op!r}")


def mutate(corpus: Sequence[bytes], protocol: str, seed: int, iteration: int) -> FuzzCase:
    if not corpus:
        raise FuzzError("fuzz corpus is empty")
    rng = np.random.default_rng([seed, iteration])
    src = int(rng.integers(len(corpus)))
    op = OPERATORS[int(rng.integers(len(OPERATORS)))]
    op, params = _draw_params(op, rng, corpus, src, protocol)
    return FuzzCase(iteration, op, params, apply_operator(op, params, corpus, protocol))


def fuzz(corpus: Sequence[bytes], protocol: str, iterations: int, seed: int, start: int = 0) -> Iterator[FuzzCase]:
    corpus = [bytes(c) for c in corpus]
    if not corpus:
        raise FuzzError("fuzz corpus is empty")
    for i in range(start, start + iterations):
        yield mutate(corpus, protocol, seed, i)


def parse_log_line(line: str) -> tuple[int, str, dict[str, Any], bytes]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise FuzzError(f"malformed fuzz log line: {line!r}")
    return int(parts[0]), parts[1], json.loads(parts[2]), bytes.fromhex(parts[3])


def replay_entry(line: str, corpus: Sequence[bytes], protocol: str) -> bytes:
    """Rebuild an input from its log record and check it against the logged bytes."""
    _, op, params, logged = parse_log_line(line)
    data = apply_operator(op, params, [bytes(c) for c in corpus], protocol)
    if data != logged:
        raise FuzzError("replayed input differs from the logged input")
    return data


# --- campaign against our own lenient decoders ---------------------------------------


def decode_lenient(protocol: str, data: bytes) -> DecodeResult:
    bits = bytes_to_bits(data)
    if protocol == "adsb":
        return adsb.decode_frame(bits, strict=False)
    if protocol == "ais":
        ais.decode_air_frame(bits, strict=False)
        return ais.decode_payload(bits)
    if protocol == "epirb":
        return epirb.decode_beacon(bits, lenient=True)
    if protocol == "gdl90":
        gdl90.StreamDeframer(lenient=True).feed(data)
        return gdl90.decode(data, lenient=True)
    if protocol == "ccsds":
        return ccsds.decode_packet(data, lenient=True)
    raise FuzzError(f"unknown protocol {protocol!r}")


@dataclass
class CampaignResult:
    protocol: str
    executed: int = 0
    crashes: list[tuple[int, str]] = field(default_factory=list)
    slow: list[tuple[int, float]] = field(default_factory=list)
    issues: Counter = field(default_factory=Counter)
    max_seconds: float = 0.0


def run_campaign(
    corpus: Sequence[bytes],
    protocol: str,
    iterations: int,
    seed: int,
    time_limit: float = 0.5,
    target: Callable[[str, bytes], DecodeResult] = decode_lenient,
    log: Callable[[str], Any] | None = None,
) -> CampaignResult:
    """Feed every case to ``target``; exceptions and slow inputs are recorded."""
    out = CampaignResult(protocol)
    for case in fuzz(corpus, protocol, iterations, seed):
        if log is not None:
            log(case.log_line())
        t0 = time.perf_counter()
        try:
            res = target(protocol, case.data)
            out.issues.update(res.issues)
        except Exception as exc:  # a crash is the finding, keep going
            out.crashes.append((case.iteration, f"{type(exc).__name__}: {exc}"))
        dt = time.perf_counter() - t0
        out.max_seconds = max(out.max_seconds, dt)
        if dt > time_limit:
            out.slow.append((case.iteration, dt))
        out.executed += 1
    return out


def default_corpus(protocol: str) -> list[bytes]:
    """Small valid seed corpus per protocol."""
    from ..kinematics import KinematicState

    st = KinematicState(52.25, 3.92, 38000, 450, 90.0, "KLM1023")
    if protocol == "adsb":
        frames = [
            adsb.encode_identification(0x4840D6, "KLM1023"),
            adsb.encode_airborne_position(0x4840D6, st, "even"),
            adsb.encode_airborne_position(0x4840D6, st, "odd"),
            adsb.encode_velocity(0x4840D6, st),
            adsb.encode_emergency(0x4840D6, 1),
        ]
        return [bits_to_bytes(f.raw) for f in frames]
    if protocol == "ais":
        return [
            bits_to_bytes(ais.encode_position_report(244123456, 51.9, 4.1, 12.0, 45.0, 45).to_bits()),
            bits_to_bytes(ais.encode_safety_broadcast(972000001, "MOB ACTIVE").to_bits()),
            bits_to_bytes(ais.encode_class_b(244123457, 51.8, 4.0, 5.0, 10.0, 10).to_bits()),
        ]
    if protocol == "epirb":
        return [
            bits_to_bytes(epirb.encode_beacon(epirb.make_beacon("maritime_mmsi", 316123456, 43.5, -8.25))),
            bits_to_bytes(epirb.encode_beacon(epirb.make_beacon("aviation_icao24", 0xC0FFEE, 10.0, 20.0, 227))),
            bits_to_bytes(
                epirb.encode_beacon(epirb.make_beacon("serial_plb", 1234, -33.9, 151.2, 503, family="standard"))
            ),
        ]
    if protocol == "gdl90":
        return [
            gdl90.frame(gdl90.Heartbeat().to_message()),
            gdl90.frame(gdl90.encode_traffic_report(st, 0x4840D6)),
            gdl90.frame(gdl90.encode_traffic_report(st, 0xABCDEF, gdl90.OWNSHIP)),
        ]
    if protocol == "ccsds":
        return [
            ccsds.encode_packet(ccsds.SpacePacket(0x123, b"\xc0\xff\xee", seq_count=7)),
            ccsds.encode_packet(ccsds.SpacePacket(0x7FF, bytes(range(32)), type=0)),
        ]
    raise FuzzError(f"unknown protocol {protocol!r}")


def iter_log(lines: Iterable[str]) -> Iterator[tuple[int, str, dict[str, Any], bytes]]:
    for line in lines:
        if line.strip() and not line.startswith("#"):
            yield parse_log_line(line)
