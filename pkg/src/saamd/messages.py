"""Protocol-generic message building, decoding and dumping.

Used by the command line: messages are described as plain mappings
(``{type: identification, icao24: 0x4840D6, callsign: KLM1023}``) so a YAML
file can carry a batch of them for any protocol.
"""

from __future__ import annotations

import dataclasses
from typing import Any, Mapping

from . import adsb, ais, ccsds, epirb, gdl90
from .bits import CodecError, DecodeResult, apply_overrides, bits_to_bytes, bytes_to_bits, hex_to_bits
from .kinematics import KinematicState

PROTOCOLS = ("adsb", "ais", "epirb", "gdl90", "ccsds")


def _state(doc: Mapping[str, Any], **defaults: Any) -> KinematicState:
    keys = {f.name for f in dataclasses.fields(KinematicState)}
    alias = {"lat": "latitude", "lon": "longitude"}
    kw = dict(defaults)
    for k, v in doc.items():
        k = alias.get(k, k)
        if k in keys:
            kw[k] = v
    st = KinematicState(**kw)
    st.validate()
    return st


def _int(v: Any) -> int:
    return int(v, 0) if isinstance(v, str) else int(v)


def build(protocol: str, doc: Mapping[str, Any]) -> str:
    """Encode one described message to its transmitted bits.

    AIS messages come back as payload bits; wrap them with
    :func:`ais.build_air_frame` for the over-the-air form.
    """
    doc = dict(doc)
    if "hex" in doc:
        return hex_to_bits(str(doc["hex"]), doc.get("nbits"))
    kind = doc.pop("type", None)
    if protocol == "adsb":
        icao = _int(doc.get("icao24", 0))
        if kind == "identification":
            return adsb.encode_identification(icao, doc.get("callsign", ""), int(doc.get("category", 0))).raw
        if kind == "position":
            return adsb.encode_airborne_position(icao, _state(doc), doc.get("format", "even")).raw
        if kind == "velocity":
            return adsb.encode_velocity(icao, _state(doc, latitude=0.0, longitude=0.0)).raw
        if kind == "emergency":
            return adsb.encode_emergency(icao, doc.get("emergency", 1), doc.get("squawk")).raw
    elif protocol == "ais":
        mmsi = _int(doc.get("mmsi", 0))
        if kind == "position":
            return ais.encode_position_report(
                mmsi, doc.get("lat"), doc.get("lon"), doc.get("sog"), doc.get("cog"), doc.get("heading")
            ).to_bits()
        if kind == "class_b":
            return ais.encode_class_b(
                mmsi, doc.get("lat"), doc.get("lon"), doc.get("sog"), doc.get("cog"), doc.get("heading")
            ).to_bits()
        if kind == "safety":
            return ais.encode_safety_broadcast(mmsi, doc.get("text", "")).to_bits()
    elif protocol == "epirb":
        if kind in (None, "beacon"):
            msg = epirb.make_beacon(
                doc.get("protocol", "maritime_mmsi"),
                _int(doc.get("identity", 0)),
                doc.get("lat"),
                doc.get("lon"),
                doc.get("country_code"),
                family=doc.get("family", "user"),
            )
            if doc.get("self_test"):
                msg = dataclasses.replace(msg, self_test=True)
            return epirb.encode_beacon(msg)
    elif protocol == "gdl90":
        if kind == "heartbeat":
            hb = gdl90.Heartbeat(timestamp=int(doc.get("timestamp", 0)))
            return bytes_to_bits(gdl90.frame(hb.to_message()))
        if kind in ("traffic", "ownship"):
            mid = gdl90.OWNSHIP if kind == "ownship" else gdl90.TRAFFIC
            rep = gdl90.report_from_state(_state(doc), _int(doc.get("address", 0)), mid, int(doc.get("emergency", 0)))
            return bytes_to_bits(gdl90.frame(rep.to_message()))
    elif protocol == "ccsds":
        if kind in (None, "packet"):
            pkt = ccsds.SpacePacket(
                apid=_int(doc.get("apid", 0)),
                payload=bytes.fromhex(str(doc.get("payload", "00"))),
                type=int(doc.get("packet_type", ccsds.TELECOMMAND)),
                seq_count=int(doc.get("seq_count", 0)),
            )
            return bytes_to_bits(ccsds.encode_packet(pkt))
    else:
        raise CodecError(f"unknown protocol {protocol!r}")
    raise CodecError(f"unknown {protocol} message type {kind!r}")


def override(protocol: str, bits: str, overrides: Mapping[str, Any]) -> str:
    """Raw field overwrite on encoded bits; integrity fields are recomputed."""
    if not overrides:
        return bits
    if protocol == "adsb":
        frame = adsb.ModeSFrame.from_bits(bits)
        return adsb.override_fields(frame, adsb.message_kind(adsb.decode_frame(bits, strict=False).message), overrides).raw
    if protocol == "ais":
        msg_type = int(bits[:6], 2)
        if msg_type not in ais.FIELD_MAPS:
            raise CodecError(f"no field map for AIS type {msg_type}")
        return ais.override_fields(bits, msg_type, overrides)
    if protocol == "epirb":
        out = apply_overrides(bits, epirb.field_map_for(bits), overrides)
        return out if {"bch1", "bch2"} & set(overrides) else epirb.with_valid_bch(out)
    if protocol == "ccsds":
        return apply_overrides(bits, ccsds.HEADER_FIELDS, overrides)
    if protocol == "gdl90":
        res = gdl90.deframe(bits_to_bytes(bits))
        if res.message is None:
            raise CodecError("cannot override fields of an invalid GDL-90 frame")
        body = bytes_to_bits(res.message.body)
        fmap = {k: (8 * off, 8 * n) for k, (off, n) in gdl90.TRAFFIC_FIELDS.items()}
        body = apply_overrides(body, fmap, overrides)
        return bytes_to_bits(gdl90.frame_body(bits_to_bytes(body)))
    raise CodecError(f"unknown protocol {protocol!r}")


def decode(protocol: str, bits: str, strict: bool = True, layer: str = "air") -> DecodeResult:
    """One frame to a message; AIS ``layer`` picks air-frame or payload bits."""
    if protocol == "adsb":
        return adsb.decode_frame(bits, strict=strict)
    if protocol == "ais":
        if layer == "air":
            return ais.decode_air_frame(bits, strict=strict)
        res = ais.decode_payload(bits)
        return DecodeResult(None, res.issues) if strict and res.issues else res
    if protocol == "epirb":
        return epirb.decode_beacon(bits, lenient=not strict)
    if protocol == "gdl90":
        return gdl90.decode(bits_to_bytes(bits), lenient=not strict)
    if protocol == "ccsds":
        return ccsds.decode_packet(bits_to_bytes(bits), lenient=not strict)
    raise CodecError(f"unknown protocol {protocol!r}")


def describe(protocol: str, message: object) -> dict[str, Any]:
    if protocol == "adsb":
        return adsb.describe(message)
    if dataclasses.is_dataclass(message):
        out = {}
        for f in dataclasses.fields(message):
            v = getattr(message, f.name)
            out[f.name] = v.hex() if isinstance(v, bytes) else v
        out["kind"] = type(message).__name__
        if isinstance(message, epirb.BeaconMessage):
            out["hex_id"] = message.hex_id
        return out
    return {"kind": type(message).__name__, "repr": repr(message)}
