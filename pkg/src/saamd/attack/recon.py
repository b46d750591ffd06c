"""Passive listening: decode frames into a deduplicated track inventory."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .. import adsb, ais, ccsds, epirb, gdl90
from ..bits import bits_to_bytes

PAIR_WINDOW_US = 10_000_000  # even/odd frames further apart are not combined


@dataclass
class TrackRow:
    identity: str
    first_seen_us: int
    last_seen_us: int
    last_lat: float | None = None
    last_lon: float | None = None
    last_alt: float | None = None
    label: str = ""
    counts: Counter = field(default_factory=Counter)


@dataclass
class Inventory:
    protocol: str
    rows: dict[str, TrackRow] = field(default_factory=dict)
    history: dict[str, list[tuple[int, float, float]]] = field(default_factory=dict)
    undecoded: int = 0
    issues: Counter = field(default_factory=Counter)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["identity", "label", "first_seen_us", "last_seen_us", "last_lat", "last_lon", "last_alt", "messages"])
        for key in sorted(self.rows):
            r = self.rows[key]
            counts = ";".join(f"{k}={v}" for k, v in sorted(r.counts.items()))
            w.writerow([
                r.identity, r.label, r.first_seen_us, r.last_seen_us,
                "" if r.last_lat is None else f"{r.last_lat:.6f}",
                "" if r.last_lon is None else f"{r.last_lon:.6f}",
                "" if r.last_alt is None else r.last_alt,
                counts,
            ])
        return buf.getvalue()


class _Listener:
    def __init__(self, protocol: str):
        self.inv = Inventory(protocol)
        self._cpr: dict[str, dict[str, tuple[int, adsb.CprPosition]]] = {}

    def _row(self, ident: str, t: int) -> TrackRow:
        row = self.inv.rows.get(ident)
        if row is None:
            row = self.inv.rows[ident] = TrackRow(ident, t, t)
        row.last_seen_us = max(row.last_seen_us, t)
        return row

    def _position(self, row: TrackRow, t: int, lat: float, lon: float) -> None:
        row.last_lat, row.last_lon = lat, lon
        self.inv.history.setdefault(row.identity, []).append((t, lat, lon))

    def feed(self, t: int, bits: str) -> None:
        handler = getattr(self, "_" + self.inv.protocol)
        handler(t, bits)

    def _reject(self, issues: Iterable[str]) -> None:
        self.inv.undecoded += 1
        self.inv.issues.update(issues)

    def _adsb(self, t: int, bits: str) -> None:
        res = adsb.decode_frame(bits, strict=True)
        msg = res.message
        if msg is None:
            return self._reject(res.issues)
        ident = f"{msg.icao24:06X}"
        row = self._row(ident, t)
        kind = adsb.message_kind(msg)
        row.counts[kind] += 1
        if isinstance(msg, adsb.Identification):
            row.label = msg.callsign
        elif isinstance(msg, adsb.AirbornePosition):
            row.last_alt = msg.altitude
            slots = self._cpr.setdefault(ident, {})
            slots[msg.cpr.format] = (t, msg.cpr)
            other = slots.get("odd" if msg.cpr.format == "even" else "even")
            if other and t - other[0] <= PAIR_WINDOW_US:
                even = slots["even"][1]
                odd = slots["odd"][1]
                try:
                    lat, lon = adsb.cpr_decode_global(even, odd, msg.cpr.format)
                except adsb.CprAmbiguityError:
                    self.inv.issues["cpr_ambiguous"] += 1
                else:
                    self._position(row, t, lat, lon)
        elif isinstance(msg, adsb.EmergencyStatus):
            row.label = row.label or f"SQUAWK {msg.squawk}"

    def _ais(self, t: int, bits: str) -> None:
        res = ais.decode_air_frame(bits, strict=True)
        msg = res.message
        if msg is None:
            return self._reject(res.issues)
        row = self._row(str(msg.mmsi), t)
        row.counts[type(msg).__name__] += 1
        if isinstance(msg, ais.SafetyBroadcast):
            row.label = msg.text
        elif msg.lat is not None and msg.lon is not None:
            self._position(row, t, msg.lat, msg.lon)

    def _epirb(self, t: int, bits: str) -> None:
        res = epirb.decode_beacon(bits)
        msg = res.message
        if msg is None:
            return self._reject(res.issues)
        row = self._row(f"{msg.protocol}:{msg.identity}", t)
        row.label = msg.hex_id
        row.counts["self_test" if msg.self_test else "distress"] += 1
        if msg.lat is not None:
            self._position(row, t, msg.lat, msg.lon)

    def _gdl90(self, t: int, bits: str) -> None:
        res = gdl90.decode(bits_to_bytes(bits))
        msg = res.message
        if msg is None:
            return self._reject(res.issues)
        if isinstance(msg, gdl90.TrafficReport):
            row = self._row(f"{msg.address:06X}", t)
            row.label = msg.callsign
            row.last_alt = msg.altitude
            row.counts["ownship" if msg.message_id == gdl90.OWNSHIP else "traffic"] += 1
            self._position(row, t, msg.lat, msg.lon)
        else:
            self._row("link", t).counts[type(msg).__name__] += 1

    def _ccsds(self, t: int, bits: str) -> None:
        res = ccsds.decode_packet(bits_to_bytes(bits))
        msg = res.message
        if msg is None:
            return self._reject(res.issues)
        row = self._row(f"APID {msg.apid:03X}", t)
        row.counts["TC" if msg.type == ccsds.TELECOMMAND else "TM"] += 1


def reconnaissance(protocol: str, entries: Iterable[tuple[int, str]]) -> Inventory:
    """Build the inventory from ``(t_us, bits)`` pairs in time order."""
    listener = _Listener(protocol)
    for t, bits in sorted(entries, key=lambda e: e[0]):
        listener.feed(int(t), bits)
    return listener.inv
