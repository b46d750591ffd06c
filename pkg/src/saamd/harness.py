"""Software receiver under test and the loopback verification pipeline.

The receiver model is deliberately small: a per-second token bucket for
processing budget, a bounded track table with LRU or reject-new policy, a
track timeout and a bounded alert queue. It exists to score attacks
comparatively, not to emulate any particular product.

Jamming segments in a schedule corrupt every frame that starts inside them
when the jammer amplitude is at least ``jam_margin`` (signal amplitude is
1.0). Such frames count as integrity failures with the ``jammed`` tag.
"""

from __future__ import annotations

import bisect
import json
import math
from collections import Counter, OrderedDict
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Literal, Mapping, Sequence, Union

import yaml

from . import adsb, ais, ccsds, epirb, gdl90, modem
from .attack.scenario import FrameSchedule, JamSegment
from .bits import DecodeResult, Frame, bits_to_bytes, read_replay
from .kinematics import cpa, local_enu, velocity_en

DEFAULT_TIMEOUT = {"adsb": 60.0, "ais": 360.0, "epirb": 3600.0, "gdl90": 60.0, "ccsds": 3600.0}
SART_PREFIX = "972"  # AIS search-and-rescue transmitters, MOB devices
BIT_PERIOD_US = {"adsb": 1.0, "ais": 1e6 / 9600, "epirb": 1e6 / 400}


class HarnessError(ValueError):
    pass


@dataclass(frozen=True)
class ReceiverModel:
    protocol: str
    name: str = ""
    track_capacity: int = 100
    eviction: Literal["lru", "reject-new"] = "lru"
    per_second_budget: int = 400
    track_timeout: float | None = None
    alert_queue_capacity: int = 20
    alert_service_per_s: float = 1.0
    strictness: Literal["strict", "lenient"] = "strict"
    preamble_tolerance: int = 0
    require_phase: bool = False
    jam_margin: float = 0.5
    dos_drop_ratio: float = 0.5
    dos_eviction_ratio: float = 0.5
    ownship: tuple[float, float, float, float] | None = None  # lat, lon, sog kt, cog deg
    cpa_threshold_m: float = 500.0
    tcpa_limit_s: float = 600.0

    def __post_init__(self) -> None:
        if self.protocol not in DEFAULT_TIMEOUT:
            raise HarnessError(f"unknown protocol {self.protocol!r}")
        for name in ("track_capacity", "per_second_budget", "alert_queue_capacity"):
            if getattr(self, name) <= 0:
                raise HarnessError(f"{name} must be positive")
        if self.eviction not in ("lru", "reject-new"):
            raise HarnessError("eviction must be lru or reject-new")
        if self.strictness not in ("strict", "lenient"):
            raise HarnessError("strictness must be strict or lenient")
        if self.track_timeout is None:
            object.__setattr__(self, "track_timeout", DEFAULT_TIMEOUT[self.protocol])
        if self.track_timeout <= 0 or self.preamble_tolerance < 0:
            raise HarnessError("timeouts and tolerances must be non-negative")
        if self.ownship is not None:
            object.__setattr__(self, "ownship", tuple(float(x) for x in self.ownship))

    @property
    def strict(self) -> bool:
        return self.strictness == "strict"


def model_from_dict(doc: Mapping[str, Any]) -> ReceiverModel:
    known = {f.name for f in fields(ReceiverModel)}
    bad = set(doc) - known
    if bad:
        raise HarnessError(f"unknown receiver model keys: {sorted(bad)}")
    doc = dict(doc)
    own = doc.get("ownship")
    if isinstance(own, Mapping):
        doc["ownship"] = (own["latitude"], own["longitude"], own.get("ground_speed", 0.0), own.get("track", 0.0))
    return ReceiverModel(**doc)


def load_models(path: str | Path) -> list[ReceiverModel]:
    """A YAML mapping (one model) or ``{models: [...]}`` (a fleet)."""
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, Mapping) and "models" in doc:
        base = {k: v for k, v in doc.items() if k != "models"}
        return [model_from_dict({**base, **m}) for m in doc["models"]]
    if not isinstance(doc, Mapping):
        raise HarnessError("model config must be a mapping")
    return [model_from_dict(doc)]


@dataclass(frozen=True)
class HarnessReport:
    model: str
    protocol: str
    input_count: int
    decoded_count: int
    crc_fail_count: int
    messages_dropped: int
    diagnosis: tuple[tuple[str, int], ...]
    tracks_created: int
    tracks_evicted: int
    tracks_expired: int
    tracks_rejected: int
    active_tracks: int
    stale_tracks: int
    alerts_raised: int
    alerts_dropped: int
    verdict: Literal["ok", "degraded", "dos"]

    @property
    def drop_ratio(self) -> float:
        return self.messages_dropped / self.input_count if self.input_count else 0.0

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["diagnosis"] = dict(self.diagnosis)
        d["drop_ratio"] = self.drop_ratio
        return d

    def to_lines(self) -> str:
        out = []
        for k, v in self.to_dict().items():
            if k == "diagnosis":
                out += [f"diagnosis.{tag}={n}" for tag, n in sorted(v.items())]
            else:
                out.append(f"{k}={v}")
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


# --- decoding through the model ------------------------------------------------------------


@dataclass
class _Decoded:
    message: object | None
    issues: tuple[str, ...]
    identity: str | None = None


def _identity(protocol: str, msg: object) -> str | None:
    if protocol == "adsb":
        return f"{msg.icao24:06X}" if hasattr(msg, "icao24") else None
    if protocol == "ais":
        return str(msg.mmsi)
    if protocol == "epirb":
        return f"{msg.protocol}:{msg.identity}"
    if protocol == "gdl90":
        return f"{msg.address:06X}" if isinstance(msg, gdl90.TrafficReport) else None
    if protocol == "ccsds":
        return f"{msg.apid:03X}"
    return None


def decode_with(model: ReceiverModel, bits: str) -> _Decoded:
    """Decode one frame the way ``model`` would; ``message`` None = rejected."""
    p = model.protocol
    if p == "adsb":
        res = adsb.decode_frame(bits, strict=model.strict)
    elif p == "ais":
        rx = ais.receive_air_frame(bits)
        if rx.message is None:
            return _Decoded(None, rx.issues)
        receipt: ais.AirReceipt = rx.message
        if receipt.training_length < model.preamble_tolerance or (model.require_phase and not receipt.training_phase_ok):
            return _Decoded(None, rx.issues + ("preamble_rejected",))
        if model.strict and rx.issues:
            return _Decoded(None, rx.issues)
        app = ais.decode_payload(receipt.message_bits)
        res = DecodeResult(app.message, rx.issues + app.issues)
    elif p == "epirb":
        res = epirb.decode_beacon(bits, lenient=not model.strict)
    elif p == "gdl90":
        res = gdl90.decode(bits_to_bytes(bits), lenient=not model.strict)
    else:
        res = ccsds.decode_packet(bits_to_bytes(bits), lenient=not model.strict)
    if res.message is None or (model.strict and res.issues):
        return _Decoded(None, res.issues)
    return _Decoded(res.message, res.issues, _identity(p, res.message))


def _alert_kind(model: ReceiverModel, msg: object, t_us: int) -> str | None:
    if isinstance(msg, adsb.EmergencyStatus):
        return "emergency" if msg.emergency_state else None
    if isinstance(msg, ais.SafetyBroadcast):
        return "safety"
    if isinstance(msg, epirb.BeaconMessage):
        return None if msg.self_test else "distress"
    if isinstance(msg, gdl90.TrafficReport):
        return "emergency" if msg.emergency else None
    if isinstance(msg, ais.PositionReport) and str(msg.mmsi).startswith(SART_PREFIX):
        return "mob"
    if isinstance(msg, (ais.PositionReport, ais.ClassBPosition)) and model.ownship is not None:
        if msg.lat is None or msg.lon is None:
            return None
        lat0, lon0, sog, cog = model.ownship
        t = t_us / 1e6
        own_v = velocity_en(sog, cog)
        own_e, own_n = own_v[0] * t, own_v[1] * t  # ownship moves in its own tangent plane
        tgt = local_enu(lat0, lon0, msg.lat, msg.lon)
        tgt_v = velocity_en(msg.sog or 0.0, msg.cog or 0.0)
        tcpa, dcpa = cpa((own_e, own_n), own_v, tgt, tgt_v)
        if dcpa <= model.cpa_threshold_m and tcpa <= model.tcpa_limit_s:
            return "collision"
    return None


# --- inputs ------------------------------------------------------------------------------------

HarnessInput = Union[FrameSchedule, Sequence[tuple[int, str]], modem.IqBuffer, str, Path]


def load_input(protocol: str, source: HarnessInput) -> tuple[list[tuple[int, str]], tuple[JamSegment, ...]]:
    """Normalise schedules, pair lists, IQ buffers and files to ``(t_us, bits)``."""
    if isinstance(source, FrameSchedule):
        if source.protocol != protocol:
            raise HarnessError(f"input protocol {source.protocol} does not match model protocol {protocol}")
        return source.pairs(), source.jamming
    if isinstance(source, modem.IqBuffer):
        return [(int(round(t)), b) for t, b in modem.demodulate(protocol, source)], ()
    if isinstance(source, (str, Path)):
        path = Path(source)
        if Path(str(path) + ".meta").exists():
            meta = modem.read_meta(path)
            iq = modem.iq_read(path)
            start = float(meta.get("start_us", 0.0))
            return [(int(round(t)), b) for t, b in modem.demodulate(protocol, iq, start)], ()
        return [(r.timestamp_us or 0, r.bits) for r in read_replay(path)], ()
    return [(int(t), b) for t, b in source], ()


def _jammed(t: int, jamming: Sequence[JamSegment], margin: float) -> bool:
    return any(j.amplitude >= margin and j.t_us <= t < j.t_us + j.duration * 1e6 for j in jamming)


# --- run -----------------------------------------------------------------------------------------


def run(model: ReceiverModel, source: HarnessInput, wall: float | None = None, protocol: str | None = None) -> HarnessReport:
    """Process the input in simulated time and score the outcome.

    ``wall`` is the simulated end time in seconds used for the stale-track
    count (defaults to the last frame time).
    """
    if protocol is not None and protocol != model.protocol:
        raise HarnessError(f"input protocol {protocol} does not match model protocol {model.protocol}")
    pairs, jamming = load_input(model.protocol, source)
    pairs.sort(key=lambda p: p[0])
    timeout_us = model.track_timeout * 1e6
    diag: Counter = Counter()
    tracks: OrderedDict[str, int] = OrderedDict()
    alerted: set[tuple[str, str]] = set()
    decoded = crc_fail = dropped = 0
    created = evicted = expired = rejected = 0
    raised = alerts_dropped = 0
    pending, last_alert_t = 0.0, 0.0
    second, tokens = None, 0
    for t, bits in pairs:
        sec = t // 1_000_000
        if sec != second:
            second, tokens = sec, model.per_second_budget
        if tokens <= 0:
            dropped += 1
            continue
        tokens -= 1
        if jamming and _jammed(t, jamming, model.jam_margin):
            crc_fail += 1
            diag["jammed"] += 1
            continue
        res = decode_with(model, bits)
        diag.update(res.issues)
        if res.message is None:
            crc_fail += 1
            continue
        decoded += 1
        ident = res.identity
        if ident is not None:
            if ident in tracks and t - tracks[ident] > timeout_us:
                del tracks[ident]
                expired += 1
            if ident in tracks:
                tracks[ident] = t
                tracks.move_to_end(ident)
            else:
                if len(tracks) >= model.track_capacity:
                    stale = [k for k, seen in tracks.items() if t - seen > timeout_us]
                    for k in stale:
                        del tracks[k]
                    expired += len(stale)
                if len(tracks) >= model.track_capacity:
                    if model.eviction == "lru":
                        tracks.popitem(last=False)
                        evicted += 1
                    else:
                        rejected += 1
                        ident = None
                if ident is not None:
                    tracks[ident] = t
                    created += 1
        kind = _alert_kind(model, res.message, t)
        key = (res.identity or "", kind or "")
        if kind and key not in alerted:
            alerted.add(key)
            ts = t / 1e6
            pending = max(0.0, pending - (ts - last_alert_t) * model.alert_service_per_s)
            last_alert_t = ts
            if pending + 1 > model.alert_queue_capacity:
                alerts_dropped += 1
            else:
                pending += 1
                raised += 1
    n = len(pairs)
    end_us = wall * 1e6 if wall is not None else (pairs[-1][0] if pairs else 0)
    stale_n = sum(1 for seen in tracks.values() if end_us - seen > timeout_us)
    if (n and dropped / n > model.dos_drop_ratio) or evicted > created * model.dos_eviction_ratio:
        verdict = "dos"
    elif dropped or evicted or rejected or alerts_dropped:
        verdict = "degraded"
    else:
        verdict = "ok"
    return HarnessReport(
        model=model.name or model.protocol,
        protocol=model.protocol,
        input_count=n,
        decoded_count=decoded,
        crc_fail_count=crc_fail,
        messages_dropped=dropped,
        diagnosis=tuple(sorted(diag.items())),
        tracks_created=created,
        tracks_evicted=evicted,
        tracks_expired=expired,
        tracks_rejected=rejected,
        active_tracks=len(tracks) - stale_n,
        stale_tracks=stale_n,
        alerts_raised=raised,
        alerts_dropped=alerts_dropped,
        verdict=verdict,
    )


# --- fleets --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class FleetResult:
    reports: tuple[HarnessReport, ...]

    @property
    def affected(self) -> int:
        return sum(r.verdict != "ok" for r in self.reports)

    @property
    def fraction(self) -> float:
        return self.affected / len(self.reports) if self.reports else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "models": len(self.reports),
            "affected": self.affected,
            "affected_fraction": self.fraction,
            "verdicts": {r.model: r.verdict for r in self.reports},
        }


def fleet_run(models: Sequence[ReceiverModel], source: HarnessInput) -> FleetResult:
    if isinstance(source, (str, Path)) or isinstance(source, modem.IqBuffer):
        protocols = {m.protocol for m in models}
        if len(protocols) != 1:
            raise HarnessError("a fleet sharing one input must share its protocol")
        pairs, jam = load_input(protocols.pop(), source)
        source = FrameSchedule.build(models[0].protocol, [(t, 0, _frame(models[0].protocol, b)) for t, b in pairs], 1, jam)
    return FleetResult(tuple(run(m, source) for m in models))


def _frame(protocol: str, bits: str) -> Frame:
    return Frame(protocol, bits)


# --- preamble sensitivity ------------------------------------------------------------------------


def preamble_sensitivity(model: ReceiverModel, variants: FrameSchedule | Iterable[tuple[str, str]]) -> list[tuple[str, bool]]:
    """Per training-pattern variant: does ``model`` accept the frame?"""
    if model.protocol != "ais":
        raise HarnessError("preamble sensitivity applies to AIS models")
    if isinstance(variants, FrameSchedule):
        items = [(str(e.frame.info().get("pattern", "")), e.frame.bits) for e in variants.entries]
    else:
        items = list(variants)
    return [(pattern, decode_with(model, bits).message is not None) for pattern, bits in items]


# --- loopback ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameDiff:
    index: int
    t_us: int
    reason: Literal["missing", "bits_mismatch", "decode_failed"]
    bit_errors: int = 0


@dataclass(frozen=True)
class LoopbackResult:
    protocol: str
    total: int
    recovered: int
    diffs: tuple[FrameDiff, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return not self.diffs

    @property
    def recovery(self) -> float:
        return self.recovered / self.total if self.total else 1.0

    def to_lines(self) -> str:
        head = f"protocol={self.protocol}\ntotal={self.total}\nrecovered={self.recovered}\npassed={self.passed}\n"
        return head + "".join(f"diff {d.index} @{d.t_us} {d.reason} bit_errors={d.bit_errors}\n" for d in self.diffs)


def _strict_decode(protocol: str, bits: str) -> bool:
    if protocol == "adsb":
        return adsb.decode_frame(bits).message is not None
    if protocol == "ais":
        return ais.decode_air_frame(bits).message is not None
    return epirb.decode_beacon(bits).message is not None


def verify_loopback(
    protocol: str,
    source: FrameSchedule | Sequence[tuple[int, str]],
    snr_db: float | None = None,
    seed: int = 0,
    sample_rate: float | None = None,
    max_gap_us: float = 2000.0,
) -> LoopbackResult:
    """encode → modulate → (noise) → demodulate → decode, frame by frame."""
    if protocol not in modem.PROTOCOL_WAVEFORM:
        raise HarnessError(f"no waveform for {protocol}")
    sent = source.pairs() if isinstance(source, FrameSchedule) else [(int(t), b) for t, b in source]
    sent = sorted(sent, key=lambda p: p[0])
    received: list[tuple[float, str]] = []
    for i, group in enumerate(modem.segments(protocol, sent, max_gap_us)):
        t0, iq = modem.render(protocol, group, sample_rate)
        if snr_db is not None:
            iq = modem.add_awgn(iq, snr_db, seed + i)
        received += modem.demodulate(protocol, iq, t0)
    tol = BIT_PERIOD_US[protocol]
    diffs: list[FrameDiff] = []
    ok = 0
    times = [t for t, _ in received]
    for idx, (t, bits) in enumerate(sent):
        lo = bisect.bisect_left(times, t - tol)
        match = None
        for j in range(lo, len(received)):
            if received[j][0] > t + tol:
                break
            match = received[j]
            if match[1] == bits:
                break
        if match is None:
            diffs.append(FrameDiff(idx, t, "missing"))
            continue
        if match[1] != bits:
            errs = sum(a != b for a, b in zip(match[1], bits)) + abs(len(match[1]) - len(bits))
            diffs.append(FrameDiff(idx, t, "bits_mismatch", errs))
            continue
        ok += 1
        if not _strict_decode(protocol, bits):
            diffs.append(FrameDiff(idx, t, "decode_failed"))
    return LoopbackResult(protocol, len(sent), ok, tuple(diffs))


def summarize_recovery(result: LoopbackResult) -> float:
    return result.recovery if result.total else math.nan
