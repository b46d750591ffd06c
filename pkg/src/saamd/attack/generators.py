"""Frame schedule generators for every catalog attack.

All randomness comes from ``numpy.random.default_rng([seed, salt])`` so
each generator is a pure function of its scenario.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .. import adsb, ais, ccsds, epirb, gdl90
from ..bits import CodecError, Frame, bits_to_bytes, bytes_to_bits, flip_bit, hex_to_bits
from ..kinematics import KinematicState, Trajectory, cpa, local_enu, offset_position, velocity_en
from .fuzz import fuzz
from .scenario import AttackScenario, FrameSchedule, JamSegment, ScenarioError

OffsetFn = Callable[[float], tuple[float, float]]
Item = tuple[float, int, Frame]  # (t_us, tx, frame)

ID_PERIOD_S = 5.0
EMERGENCY_PERIOD_S = 1.0
SART_MMSI = 972000001
DEFAULT_PREAMBLE_SWEEP = tuple("01" * n for n in range(0, 17, 2)) + ("10" * 12,)


def _rng(scenario: AttackScenario, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng([scenario.seed, salt])


def _ticks(rate: float, duration: float, stop: float | None = None) -> list[float]:
    """Emission times ``k / rate`` in seconds, strictly before ``stop``."""
    end = duration if stop is None else min(stop, duration)
    n = math.ceil(end * rate - 1e-9)
    return [k / rate for k in range(max(n, 0))]


def _us(t: float) -> float:
    return t * 1e6


def _meta(**kw: object) -> tuple[tuple[str, object], ...]:
    return tuple(kw.items())


def _distinct(rng: np.random.Generator, n: int, lo: int, hi: int, exclude: Iterable[int] = ()) -> list[int]:
    """``n`` distinct integers in ``[lo, hi)`` in draw order."""
    if n > hi - lo:
        raise ScenarioError("not enough distinct identities in range")
    seen = set(exclude)
    out: list[int] = []
    while len(out) < n:
        for v in rng.integers(lo, hi, size=n - len(out)):
            v = int(v)
            if v not in seen:
                seen.add(v)
                out.append(v)
    return out


def _schedule(scenario: AttackScenario, items: Iterable[Item], jamming: Sequence[JamSegment] = ()) -> FrameSchedule:
    return FrameSchedule.build(scenario.protocol, items, scenario.transmitters, jamming)


# --- per-protocol frame factories ----------------------------------------------------------


def adsb_frame(mf: adsb.ModeSFrame, kind: str, **meta: object) -> Frame:
    return Frame("adsb", mf.raw, kind, _meta(**meta))


def ais_frame(message: ais.AisMessage | str, kind: str, training: str = ais.DEFAULT_TRAINING, **meta: object) -> Frame:
    air = ais.build_air_frame(message, training_bits=training)
    return Frame("ais", air.line_bits, kind, _meta(**meta))


def epirb_frame(msg: epirb.BeaconMessage, **meta: object) -> Frame:
    return Frame("epirb", epirb.encode_beacon(msg), msg.protocol, _meta(lat=msg.lat, lon=msg.lon, **meta))


def gdl90_frame(msg: gdl90.Gdl90Message, kind: str, **meta: object) -> Frame:
    return Frame("gdl90", bytes_to_bits(gdl90.frame(msg)), kind, _meta(**meta))


def ccsds_frame(data: bytes, kind: str = "packet", **meta: object) -> Frame:
    return Frame("ccsds", bytes_to_bits(data), kind, _meta(**meta))


def _ais_report(mmsi: int, st: KinematicState, nav_status: int = 0) -> ais.PositionReport:
    lon = ((st.longitude + 180.0) % 360.0) - 180.0
    return ais.encode_position_report(
        mmsi, st.latitude, lon, min(st.ground_speed, 102.2), st.track, int(round(st.track)) % 360, nav_status
    )


# --- ADS-B ------------------------------------------------------------------------------------


def _adsb_target(
    scenario: AttackScenario,
    icao: int,
    trajectory: Trajectory,
    stop: float | None = None,
    offset_fn: OffsetFn | None = None,
) -> list[Item]:
    """Position (even/odd alternating), velocity and identification frames."""
    rate = scenario.rate
    items: list[Item] = []
    end = scenario.duration if stop is None else min(stop, scenario.duration)
    for k, t in enumerate(_ticks(rate, scenario.duration, stop)):
        st = trajectory.state_at(t)
        true_lat, true_lon = st.latitude, st.longitude
        if offset_fn is not None:
            east, north = offset_fn(t)
            lat, lon = offset_position(st.latitude, st.longitude, east, north)
            st = replace(st, latitude=lat, longitude=lon)
        fmt = "even" if k % 2 == 0 else "odd"
        mf = adsb.encode_airborne_position(icao, st, fmt)
        items.append((_us(t), 0, adsb_frame(
            mf, "position", format=fmt, lat=st.latitude, lon=st.longitude, alt=st.altitude,
            true_lat=true_lat, true_lon=true_lon,
        )))
        tv = t + 0.5 / rate
        if tv < end:
            sv = trajectory.state_at(tv)
            items.append((_us(tv), 0, adsb_frame(adsb.encode_velocity(icao, sv), "velocity")))
    callsign = trajectory.initial.callsign
    for t in _ticks(1 / ID_PERIOD_S, end):
        ti = t + 0.25 / rate
        if ti < end:
            items.append((_us(ti), 0, adsb_frame(adsb.encode_identification(icao, callsign), "identification")))
    return items


def gen_spoof(scenario: AttackScenario) -> FrameSchedule:
    if scenario.protocol == "adsb":
        return _schedule(scenario, _adsb_target(scenario, scenario.identity, scenario.trajectory))
    if scenario.protocol == "ais":
        return _schedule(scenario, _ais_target(scenario, scenario.identity, scenario.trajectory))
    if scenario.protocol == "gdl90":
        return _schedule(scenario, _gdl90_target(scenario))
    if scenario.protocol == "epirb":
        return gen_epirb_spoof(scenario)
    if scenario.protocol == "ccsds":
        return gen_ccsds_spoof(scenario)
    raise ScenarioError(f"spoofing not defined for {scenario.protocol}")


def gen_disappearance(scenario: AttackScenario, vanish_at: float | None = None) -> FrameSchedule:
    vanish = scenario.param("vanish_at", scenario.duration / 2) if vanish_at is None else vanish_at
    return _schedule(scenario, _adsb_target(scenario, scenario.identity, scenario.trajectory, stop=vanish))


def offset_from_params(params: dict) -> OffsetFn:
    e0, n0 = float(params.get("east_m", 0.0)), float(params.get("north_m", 0.0))
    de, dn = float(params.get("drift_east_mps", 0.0)), float(params.get("drift_north_mps", 0.0))
    return lambda t: (e0 + de * t, n0 + dn * t)


def gen_trajectory_modification(scenario: AttackScenario, offset_fn: OffsetFn | None = None) -> FrameSchedule:
    fn = offset_fn or offset_from_params(dict(scenario.params))
    return _schedule(scenario, _adsb_target(scenario, scenario.identity, scenario.trajectory, offset_fn=fn))


def gen_false_emergency(scenario: AttackScenario) -> FrameSchedule:
    if scenario.protocol == "ais":
        return gen_mob(scenario)
    items = _adsb_target(scenario, scenario.identity, scenario.trajectory)
    code = scenario.param("emergency", "general")
    squawk = scenario.param("squawk")
    period = float(scenario.param("emergency_period", EMERGENCY_PERIOD_S))
    for t in _ticks(1 / period, scenario.duration):
        te = t + 0.3137 * period
        if te < scenario.duration:
            mf = adsb.encode_emergency(scenario.identity, code, squawk)
            items.append((_us(te), 0, adsb_frame(mf, "emergency")))
    return _schedule(scenario, items)


def _ghost_positions(rng: np.random.Generator, n: int, lat0: float, lon0: float, radius_m: float) -> list[tuple[float, float]]:
    r = radius_m * np.sqrt(rng.random(n))
    a = rng.random(n) * 2 * math.pi
    return [offset_position(lat0, lon0, float(ri * math.sin(ai)), float(ri * math.cos(ai))) for ri, ai in zip(r, a)]


def gen_flood(scenario: AttackScenario, n_targets: int | None = None) -> FrameSchedule:
    """``n_targets`` ghost identities interleaved at the aggregate scenario rate."""
    n = int(scenario.param("n_targets", 100) if n_targets is None else n_targets)
    if n < 1:
        raise ScenarioError("n_targets must be >= 1")
    rng = _rng(scenario, 1)
    k0 = scenario.kinematics
    radius = float(scenario.param("radius_m", 50_000.0))
    malformed = float(scenario.param("malformed_fraction", 0.0))
    proto = scenario.protocol
    if proto in ("adsb", "gdl90"):
        ids = _distinct(rng, n, 1, 1 << 24)
    elif proto == "ais":
        ids = _distinct(rng, n, 201_000_000, 776_000_000)
    elif proto == "epirb":
        mid = int(scenario.param("country_code", 316))
        ids = _distinct(rng, n, mid * 1_000_000, (mid + 1) * 1_000_000)
    else:
        raise ScenarioError(f"flooding not defined for {proto}")
    spots = _ghost_positions(rng, n, k0.latitude, k0.longitude, radius)
    sent = [0] * n
    items: list[Item] = []
    for i, t in enumerate(_ticks(scenario.rate, scenario.duration)):
        j = i % n
        lat, lon = spots[j]
        st = replace(k0, latitude=lat, longitude=lon, callsign="")
        c = sent[j]
        sent[j] += 1
        if proto == "adsb":
            fmt = "even" if c % 2 == 0 else "odd"
            frame = adsb_frame(adsb.encode_airborne_position(ids[j], st, fmt), "position", format=fmt)
        elif proto == "ais":
            frame = ais_frame(_ais_report(ids[j], st), "position")
        elif proto == "gdl90":
            frame = gdl90_frame(gdl90.encode_traffic_report(st, ids[j]), "traffic")
        else:
            frame = epirb_frame(epirb.make_beacon("maritime_mmsi", ids[j], lat, lon))
        if malformed and rng.random() < malformed:
            frame = Frame(proto, flip_bit(frame.bits, int(rng.integers(len(frame.bits)))), "malformed")
        items.append((_us(t), 0, frame))
    return _schedule(scenario, items)


def gen_jamming(scenario: AttackScenario) -> FrameSchedule:
    """Jamming segment, optionally over a victim target (``params.traffic``)."""
    seg = JamSegment(
        t_us=int(_us(float(scenario.param("start", 0.0)))),
        duration=float(scenario.param("jam_duration", scenario.duration)),
        kind=scenario.param("waveform", "gaussian_noise"),
        amplitude=float(scenario.param("amplitude", 1.0)),
        params=tuple(sorted((k, float(v)) for k, v in (scenario.param("waveform_params") or {}).items())),
    )
    items: list[Item] = []
    if scenario.param("traffic", True):
        if scenario.protocol == "adsb":
            items = _adsb_target(scenario, scenario.identity, scenario.trajectory)
        else:
            items = _ais_target(scenario, scenario.identity, scenario.trajectory)
    return _schedule(scenario, items, [seg])


def _override_kind(protocol: str, overrides: dict, kinds: Iterable[str]) -> set[str]:
    if protocol == "adsb":
        return {k for k in kinds if set(overrides) <= set(adsb.FIELD_MAPS[k])}
    return set()


def gen_invalid_encoding(scenario: AttackScenario) -> FrameSchedule:
    """Apply ``raw_overrides`` through the raw path; integrity fields stay valid."""
    overrides = dict(scenario.raw_overrides)
    if not overrides:
        raise ScenarioError("invalid_encoding needs raw_overrides")
    if scenario.protocol == "ais":
        msg_type = int(scenario.param("msg_type", 1))
        if msg_type not in ais.FIELD_MAPS:
            raise ScenarioError("msg_type must be 1, 14 or 18")
        items = []
        for t in _ticks(scenario.rate, scenario.duration):
            st = scenario.trajectory.state_at(t)
            if msg_type == 14:
                bits = ais.encode_safety_broadcast(scenario.identity, scenario.param("text", "TEST")).to_bits()
            elif msg_type == 18:
                bits = ais.encode_class_b(scenario.identity, st.latitude, st.longitude, st.ground_speed, st.track).to_bits()
            else:
                bits = _ais_report(scenario.identity, st).to_bits()
            bits = ais.override_fields(bits, msg_type, overrides)
            items.append((_us(t), 0, ais_frame(bits, "invalid")))
        return _schedule(scenario, items)
    items = _adsb_target(scenario, scenario.identity, scenario.trajectory)
    kinds = _override_kind("adsb", overrides, {f.kind for _, _, f in items})
    if not kinds:
        raise ScenarioError(f"raw_overrides {sorted(overrides)} match no emitted frame kind")
    out: list[Item] = []
    for t, tx, f in items:
        if f.kind in kinds:
            mf = adsb.override_fields(adsb.ModeSFrame.from_bits(f.bits), f.kind, overrides)
            f = Frame("adsb", mf.raw, f.kind, f.meta + (("overridden", True),))
        out.append((t, tx, f))
    return _schedule(scenario, out)


def gen_crc_attack(scenario: AttackScenario, mode: str | None = None, k: int | None = None) -> FrameSchedule:
    """Modes: ``flip_bits`` (``k`` flips per frame), ``valid_crc_bad_fields``, ``zero_parity``."""
    mode = mode or scenario.param("mode", "flip_bits")
    k = int(scenario.param("k", 1) if k is None else k)
    if mode == "valid_crc_bad_fields":
        overrides = dict(scenario.raw_overrides) or {"tc": 31}
        items = _adsb_target(scenario, scenario.identity, scenario.trajectory)
        out = []
        for t, tx, f in items:
            mf = adsb.override_fields(adsb.ModeSFrame.from_bits(f.bits), f.kind, overrides)
            out.append((t, tx, Frame("adsb", mf.raw, f.kind)))
        return _schedule(scenario, out)
    rng = _rng(scenario, 2)
    out = []
    for t, tx, f in _adsb_target(scenario, scenario.identity, scenario.trajectory):
        bits = f.bits
        if mode == "flip_bits":
            if k:
                for pos in rng.choice(adsb.FRAME_BITS, size=k, replace=False):
                    bits = flip_bit(bits, int(pos))
        elif mode == "zero_parity":
            bits = bits[: adsb.DATA_BITS] + "0" * 24
        else:
            raise ScenarioError(f"unknown CRC attack mode {mode!r}")
        out.append((t, tx, Frame("adsb", bits, f.kind, f.meta)))
    return _schedule(scenario, out)


def gen_coordinated(scenario: AttackScenario) -> FrameSchedule:
    """Partition one target's frames round-robin across transmitters."""
    if scenario.protocol == "adsb":
        base = _adsb_target(scenario, scenario.identity, scenario.trajectory)
    else:
        base = _ais_target(scenario, scenario.identity, scenario.trajectory)
    base.sort(key=lambda it: it[0])
    out = []
    for i, (t, _, f) in enumerate(base):
        tx = i % scenario.transmitters
        out.append((t + scenario.tx_offsets_us[tx], tx, f))
    return _schedule(scenario, out)


def gen_reconnaissance_traffic(scenario: AttackScenario) -> FrameSchedule:
    """Synthetic benign traffic for the listener when no capture is given."""
    n = int(scenario.param("n_targets", 10))
    rng = _rng(scenario, 3)
    ids = _distinct(rng, n, 1, 1 << 24)
    spots = _ghost_positions(rng, n, scenario.kinematics.latitude, scenario.kinematics.longitude, 100_000.0)
    items: list[Item] = []
    for j, (icao, (lat, lon)) in enumerate(zip(ids, spots)):
        state = KinematicState(
            lat, lon, float(rng.integers(20, 400)) * 100, float(rng.integers(150, 500)),
            float(rng.integers(0, 360)), f"TFC{j:04d}",
        )
        phase = float(rng.random()) / scenario.rate
        for t, tx, f in _adsb_target(scenario, icao, Trajectory(state)):
            items.append((t + _us(phase), tx, f))
    return _schedule(scenario, items)


# --- AIS --------------------------------------------------------------------------------------


def _ais_target(scenario: AttackScenario, mmsi: int, trajectory: Trajectory, nav_status: int = 0) -> list[Item]:
    items = []
    for t in _ticks(scenario.rate, scenario.duration):
        st = trajectory.state_at(t)
        msg = _ais_report(mmsi, st, nav_status)
        items.append((_us(t), 0, ais_frame(msg, "position", lat=msg.lat, lon=msg.lon, true_lat=st.latitude, true_lon=st.longitude)))
    return items


def gen_mob(scenario: AttackScenario) -> FrameSchedule:
    mmsi = int(scenario.param("mmsi", SART_MMSI))
    text = scenario.param("text", "MAN OVERBOARD")
    period = float(scenario.param("alert_period", 60.0))
    items = _ais_target(scenario, mmsi, Trajectory(replace(scenario.kinematics, ground_speed=0.0)), nav_status=14)
    for t in _ticks(1 / period, scenario.duration):
        te = t + 0.5 / scenario.rate if t + 0.5 / scenario.rate < scenario.duration else t
        items.append((_us(te), 0, ais_frame(ais.encode_safety_broadcast(mmsi, text), "safety", text=text)))
    return _schedule(scenario, items)


def ownship_from(scenario: AttackScenario) -> KinematicState:
    own = scenario.param("ownship")
    if own:
        return KinematicState(**{**{"latitude": 0.0, "longitude": 0.0}, **own})
    k = scenario.kinematics
    return KinematicState(k.latitude, k.longitude, 0.0, 10.0, 0.0)


def collision_course(
    own: KinematicState,
    miss_m: float,
    tcpa_s: float,
    speed_kt: float,
    course: float,
) -> tuple[KinematicState, float, float]:
    """Target state whose CPA to ``own`` is ``miss_m`` at ``tcpa_s``.

    Returns the target's initial state plus the analytically recomputed
    ``(tcpa, dcpa)`` in the ownship tangent plane.
    """
    ov = velocity_en(own.ground_speed, own.track)
    tv = velocity_en(speed_kt, course)
    rel = (tv[0] - ov[0], tv[1] - ov[1])
    norm = math.hypot(*rel)
    if norm == 0:
        raise ScenarioError("target and ownship velocities are identical")
    perp = (-rel[1] / norm, rel[0] / norm)
    r0 = (miss_m * perp[0] - rel[0] * tcpa_s, miss_m * perp[1] - rel[1] * tcpa_s)
    lat, lon = offset_position(own.latitude, own.longitude, *r0)
    target = KinematicState(lat, lon, 0.0, speed_kt, course % 360.0)
    # re-derive in the ownship plane from the rounded geographic start
    start = local_enu(own.latitude, own.longitude, lat, lon)
    t, d = cpa((0.0, 0.0), ov, start, tv)
    return target, t, d


def gen_collision(scenario: AttackScenario) -> FrameSchedule:
    own = ownship_from(scenario)
    threshold = float(scenario.param("threshold_m", 200.0))
    miss = float(scenario.param("miss_m", threshold / 4))
    tcpa_s = float(scenario.param("tcpa_s", 300.0))
    speed = float(scenario.param("target_speed", scenario.kinematics.ground_speed or 15.0))
    course = float(scenario.param("target_course", (own.track + 90.0) % 360.0))
    target, t, d = collision_course(own, miss, tcpa_s, speed, course)
    if d > threshold:
        raise ScenarioError("constructed geometry misses the CPA threshold")
    items = [
        (ts, tx, Frame(f.protocol, f.bits, f.kind, f.meta + (("cpa_m", d), ("tcpa_s", t))))
        for ts, tx, f in _ais_target(scenario, scenario.identity, Trajectory(target))
    ]
    return _schedule(scenario, items)


def gen_overwhelming_alerts(scenario: AttackScenario) -> FrameSchedule:
    """SART text alerts from many identities plus collision-course targets."""
    rng = _rng(scenario, 4)
    n_alerts = int(scenario.param("n_alerts", 40))
    n_coll = int(scenario.param("n_collision", 10))
    sarts = _distinct(rng, n_alerts, 972_000_000, 972_999_999)
    ships = _distinct(rng, n_coll, 201_000_000, 776_000_000)
    own = ownship_from(scenario)
    text = scenario.param("text", "MAN OVERBOARD")
    frames: list[Frame] = [ais_frame(ais.encode_safety_broadcast(m, text), "safety") for m in sarts]
    for m in ships:
        course = float(rng.uniform(0, 360))
        target, _, _ = collision_course(own, float(rng.uniform(0, 100)), float(rng.uniform(60, 600)), 15.0, course)
        frames.append(ais_frame(_ais_report(m, target), "collision"))
    order = rng.permutation(len(frames))
    items = [(_us(i / scenario.rate), 0, frames[int(j)]) for i, j in enumerate(order)]
    return _schedule(scenario, items)


def gen_visual_disruption(scenario: AttackScenario) -> FrameSchedule:
    """Ring (or grid) of ghost vessels around ownship, optionally rotating."""
    rng = _rng(scenario, 5)
    n = int(scenario.param("n_ghosts", 24))
    radius = float(scenario.param("radius_m", 1852.0))
    pattern = scenario.param("pattern", "ring")
    spin = float(scenario.param("spin_dps", 0.0))
    own = ownship_from(scenario)
    ids = _distinct(rng, n, 201_000_000, 776_000_000)
    if pattern == "ring":
        base = [(radius, 360.0 * j / n) for j in range(n)]
    elif pattern == "grid":
        side = math.ceil(math.sqrt(n))
        step = 2 * radius / max(side - 1, 1)
        pts = [(-radius + step * (j % side), -radius + step * (j // side)) for j in range(n)]
        base = [(math.hypot(x, y), math.degrees(math.atan2(x, y))) for x, y in pts]
    else:
        raise ScenarioError("pattern must be ring or grid")
    items = []
    for i, t in enumerate(_ticks(scenario.rate, scenario.duration)):
        j = i % n
        r, bearing = base[j]
        b = math.radians(bearing + spin * t)
        lat, lon = offset_position(own.latitude, own.longitude, r * math.sin(b), r * math.cos(b))
        st = KinematicState(lat, lon, 0.0, 0.0, (math.degrees(b) + 90.0) % 360.0)
        items.append((_us(t), 0, ais_frame(_ais_report(ids[j], st), "ghost")))
    return _schedule(scenario, items)


ERROR_MODES = ("invert_crc", "omit_stuffing", "truncated", "no_end_flag", "no_start_flag")


def gen_error_handling(scenario: AttackScenario) -> FrameSchedule:
    modes = tuple(scenario.param("modes", ERROR_MODES))
    items = []
    for i, t in enumerate(_ticks(scenario.rate, scenario.duration)):
        mode = modes[i % len(modes)]
        st = scenario.trajectory.state_at(t)
        bits = _ais_report(scenario.identity, st).to_bits()
        if mode == "invert_crc":
            air = ais.build_air_frame(bits, invert_crc=True)
            hdlc = air.hdlc_bits
        elif mode == "omit_stuffing":
            bits = ais.override_fields(bits, 1, {"radio": (1 << 19) - 1})
            hdlc = ais.build_air_frame(bits, omit_stuffing=True).hdlc_bits
        else:
            air = ais.build_air_frame(bits)
            head = air.training + ais.HDLC_FLAG
            if mode == "truncated":
                hdlc = head + air.payload_bits[: len(air.payload_bits) // 2]
            elif mode == "no_end_flag":
                hdlc = head + air.payload_bits + air.buffer_bits
            elif mode == "no_start_flag":
                hdlc = air.training + air.payload_bits + ais.HDLC_FLAG + air.buffer_bits
            else:
                raise ScenarioError(f"unknown error-handling mode {mode!r}")
        items.append((_us(t), 0, Frame("ais", ais.nrzi_encode(hdlc), mode)))
    return _schedule(scenario, items)


def gen_preamble_test(scenario: AttackScenario, sweep: Sequence[str] | None = None) -> FrameSchedule:
    """Identical payload once per training-sequence variant."""
    patterns = tuple(scenario.param("sweep", DEFAULT_PREAMBLE_SWEEP) if sweep is None else sweep)
    for p in patterns:
        if len(p) > 32 or set(p) - {"0", "1"}:
            raise ScenarioError(f"training pattern {p!r} must be 0-32 bits of 0/1")
    msg = _ais_report(scenario.identity, scenario.kinematics)
    spacing = max(1.0 / scenario.rate, 0.05)
    items = [
        (_us(i * spacing), 0, ais_frame(msg, "preamble", training=p, pattern=p))
        for i, p in enumerate(patterns)
    ]
    return _schedule(scenario, items)


# --- GDL-90 -----------------------------------------------------------------------------------


def _gdl90_target(scenario: AttackScenario) -> list[Item]:
    items = []
    for t in _ticks(scenario.rate, scenario.duration):
        st = scenario.trajectory.state_at(t)
        items.append((_us(t), 0, gdl90_frame(gdl90.Heartbeat(timestamp=int(t) % 86400).to_message(), "heartbeat")))
        rep = gdl90.report_from_state(st, scenario.identity)
        items.append((_us(t) + 10_000, 0, gdl90_frame(rep.to_message(), "traffic", lat=rep.lat, lon=rep.lon, alt=rep.altitude)))
    return items


def gen_gdl90_fuzz(scenario: AttackScenario) -> FrameSchedule:
    st = scenario.kinematics
    corpus = [
        gdl90.frame(gdl90.Heartbeat().to_message()),
        gdl90.frame(gdl90.encode_traffic_report(st, scenario.identity)),
        gdl90.frame(gdl90.encode_traffic_report(st, scenario.identity, gdl90.OWNSHIP)),
    ]
    return _fuzz_schedule(scenario, corpus)


def _fuzz_schedule(scenario: AttackScenario, corpus: list[bytes]) -> FrameSchedule:
    times = _ticks(scenario.rate, scenario.duration)
    items = [
        (_us(t), 0, Frame(scenario.protocol, bytes_to_bits(case.data), case.operator, _meta(log=case.log_line())))
        for t, case in zip(times, fuzz(corpus, scenario.protocol, len(times), scenario.seed))
    ]
    return _schedule(scenario, items)


# --- EPIRB ------------------------------------------------------------------------------------

EPIRB_PROTOCOLS = ("maritime_mmsi", "aviation_icao24", "serial_plb")


def _epirb_identity(scenario: AttackScenario, protocol: str) -> int:
    ident = scenario.identity
    if isinstance(ident, dict):
        return int(ident[protocol])
    return int(ident)


def gen_epirb_spoof(scenario: AttackScenario) -> FrameSchedule:
    """One message per selected beacon protocol each period, staggered."""
    protocols = tuple(scenario.param("protocols", EPIRB_PROTOCOLS))
    family = scenario.param("family", "user")
    country = int(scenario.param("country_code", 227))
    self_test = bool(scenario.param("self_test", False))
    period = 1.0 / scenario.rate
    stagger = period / len(protocols)
    if stagger < 0.55:
        raise ScenarioError("beacon bursts would overlap; lower the rate")
    items = []
    for t in _ticks(scenario.rate, scenario.duration):
        for i, proto in enumerate(protocols):
            ts = t + i * min(stagger, 1.0)
            st = scenario.trajectory.state_at(ts)
            cc = None if proto == "maritime_mmsi" else country
            msg = epirb.make_beacon(
                proto, _epirb_identity(scenario, proto), st.latitude, st.longitude, cc,
                family=family, self_test=self_test,
            )
            items.append((_us(ts), 0, epirb_frame(msg, true_lat=st.latitude, true_lon=st.longitude)))
    return _schedule(scenario, items)


def _genuine_beacon(scenario: AttackScenario) -> str:
    proto = scenario.param("protocol", "maritime_mmsi")
    cc = None if proto == "maritime_mmsi" else int(scenario.param("country_code", 227))
    k = scenario.kinematics
    msg = epirb.make_beacon(proto, _epirb_identity(scenario, proto), k.latitude, k.longitude, cc,
                            family=scenario.param("family", "user"))
    return epirb.encode_beacon(msg)


def gen_epirb_replay(scenario: AttackScenario) -> FrameSchedule:
    captured = [hex_to_bits(h, epirb.LONG_BITS) for h in scenario.param("frames", ())] or [_genuine_beacon(scenario)]
    items = [
        (_us(t), 0, Frame("epirb", captured[i % len(captured)], "replay"))
        for i, t in enumerate(_ticks(scenario.rate, scenario.duration))
    ]
    return _schedule(scenario, items)


def gen_epirb_fuzz(scenario: AttackScenario) -> FrameSchedule:
    return _fuzz_schedule(scenario, [bits_to_bytes(_genuine_beacon(scenario))])


# --- CCSDS ------------------------------------------------------------------------------------


def template_packet(scenario: AttackScenario) -> ccsds.SpacePacket:
    p = dict(scenario.param("packet") or {})
    return ccsds.SpacePacket(
        apid=int(p.get("apid", scenario.identity)),
        payload=bytes.fromhex(str(p.get("payload", "C0FFEE"))),
        type=int(p.get("type", ccsds.TELECOMMAND)),
        seq_count=int(p.get("seq_count", 0)),
    )


def _sequence_schedule(scenario: AttackScenario, seq: ccsds.PacketSequence) -> FrameSchedule:
    offsets = ccsds.sequence_offsets_us(seq)
    items = [
        (off, 0, ccsds_frame(e.data, "malformed" if e.malformed else "packet"))
        for off, e in zip(offsets, seq)
    ]
    return _schedule(scenario, items)


def gen_ccsds_replay(scenario: AttackScenario) -> FrameSchedule:
    n = len(_ticks(scenario.rate, scenario.duration))
    seq = ccsds.build_dos_sequence(template_packet(scenario), [f"replay:{n}"], scenario.seed, 1000 / scenario.rate)
    return _sequence_schedule(scenario, seq)


def gen_ccsds_spoof(scenario: AttackScenario) -> FrameSchedule:
    tpl = template_packet(scenario)
    commands = [bytes.fromhex(c) for c in scenario.param("commands", ("01", "02", "03"))]
    items = []
    for i, t in enumerate(_ticks(scenario.rate, scenario.duration)):
        pkt = replace(tpl, payload=commands[i % len(commands)], seq_count=(tpl.seq_count + i) & 0x3FFF)
        items.append((_us(t), 0, ccsds_frame(ccsds.encode_packet(pkt), "telecommand")))
    return _schedule(scenario, items)


DEFAULT_CCSDS_MUTATIONS = ("replay:3", "seq_jump", "seq_reset", "length_mismatch", "truncate", "bad_version", "zero_delay_burst:50")


def gen_ccsds_dos(scenario: AttackScenario) -> FrameSchedule:
    muts = tuple(scenario.param("mutations", DEFAULT_CCSDS_MUTATIONS))
    try:
        seq = ccsds.build_dos_sequence(template_packet(scenario), muts, scenario.seed, 1000 / scenario.rate)
    except CodecError as exc:
        raise ScenarioError(str(exc)) from exc
    return _sequence_schedule(scenario, seq)


def gen_ccsds_fuzz(scenario: AttackScenario) -> FrameSchedule:
    return _fuzz_schedule(scenario, [ccsds.encode_packet(template_packet(scenario))])


# --- dispatch ---------------------------------------------------------------------------------

GENERATORS: dict[tuple[str, str], Callable[[AttackScenario], FrameSchedule]] = {
    ("adsb", "reconnaissance"): gen_reconnaissance_traffic,
    ("adsb", "spoofing"): gen_spoof,
    ("adsb", "flooding"): gen_flood,
    ("adsb", "jamming"): gen_jamming,
    ("adsb", "false_emergency"): gen_false_emergency,
    ("adsb", "disappearance"): gen_disappearance,
    ("adsb", "trajectory_modification"): gen_trajectory_modification,
    ("adsb", "invalid_encoding"): gen_invalid_encoding,
    ("adsb", "dos"): gen_flood,
    ("adsb", "crc_error_handling"): gen_crc_attack,
    ("adsb", "coordinated"): gen_coordinated,
    ("gdl90", "fuzzing"): gen_gdl90_fuzz,
    ("gdl90", "spoofing"): gen_spoof,
    ("gdl90", "flooding"): gen_flood,
    ("ais", "spoofing"): gen_spoof,
    ("ais", "false_alert_mob"): gen_mob,
    ("ais", "false_alert_collision"): gen_collision,
    ("ais", "jamming"): gen_jamming,
    ("ais", "overwhelming_alerts"): gen_overwhelming_alerts,
    ("ais", "visual_disruption"): gen_visual_disruption,
    ("ais", "invalid_encoding"): gen_invalid_encoding,
    ("ais", "dos"): gen_flood,
    ("ais", "coordinated"): gen_coordinated,
    ("ais", "error_handling"): gen_error_handling,
    ("ais", "preamble_test"): gen_preamble_test,
    ("epirb", "replay"): gen_epirb_replay,
    ("epirb", "spoofing"): gen_epirb_spoof,
    ("epirb", "fuzzing"): gen_epirb_fuzz,
    ("epirb", "dos"): gen_flood,
    ("ccsds", "replay"): gen_ccsds_replay,
    ("ccsds", "spoofing"): gen_ccsds_spoof,
    ("ccsds", "fuzzing"): gen_ccsds_fuzz,
    ("ccsds", "dos"): gen_ccsds_dos,
}


def generate(scenario: AttackScenario) -> FrameSchedule:
    try:
        gen = GENERATORS[(scenario.protocol, scenario.attack)]
    except KeyError:  # pragma: no cover - the scenario validates this
        raise ScenarioError(f"no generator for {scenario.protocol}:{scenario.attack}") from None
    try:
        return gen(scenario)
    except CodecError as exc:
        raise ScenarioError(str(exc)) from exc
