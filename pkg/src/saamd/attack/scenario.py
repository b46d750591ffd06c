"""Scenario configuration, the attack catalog and frame schedules."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from ..bits import CodecError, Frame, ReplayRecord, format_replay_line
from ..kinematics import KinematicState, Trajectory

PROTOCOLS = ("adsb", "ais", "epirb", "gdl90", "ccsds")

CATALOG: dict[str, tuple[str, ...]] = {
    "adsb": (
        "reconnaissance",
        "spoofing",
        "flooding",
        "jamming",
        "false_emergency",
        "disappearance",
        "trajectory_modification",
        "invalid_encoding",
        "dos",
        "crc_error_handling",
        "coordinated",
    ),
    "gdl90": ("fuzzing", "spoofing", "flooding"),
    "ais": (
        "spoofing",
        "false_alert_mob",
        "false_alert_collision",
        "jamming",
        "overwhelming_alerts",
        "visual_disruption",
        "invalid_encoding",
        "dos",
        "coordinated",
        "error_handling",
        "preamble_test",
    ),
    "epirb": ("replay", "spoofing", "fuzzing", "dos"),
    "ccsds": ("replay", "spoofing", "fuzzing", "dos"),
}

# The avionics list has twelve entries; GDL-90 fuzzing targets the EFB link.
AVIONICS_ATTACKS = tuple(("adsb", a) for a in CATALOG["adsb"]) + (("gdl90", "fuzzing"),)
MARITIME_ATTACKS = tuple(("ais", a) for a in CATALOG["ais"])

ALIASES = {"flood": "flooding", "spoof": "spoofing", "mob": "false_alert_mob", "collision": "false_alert_collision"}

DEFAULT_RATE = {"adsb": 2.0, "ais": 0.1, "epirb": 0.02, "gdl90": 1.0, "ccsds": 10.0}
FLOOD_RATE = 100.0
ATTACK_RATE = {
    ("adsb", "dos"): 1000.0,
    ("ais", "dos"): 1000.0,
    ("ais", "visual_disruption"): 2.4,
    ("ais", "overwhelming_alerts"): 5.0,
    ("ais", "error_handling"): 1.0,
    ("ais", "invalid_encoding"): 1.0,
    ("ais", "preamble_test"): 1.0,
    ("epirb", "dos"): 1.5,
    ("epirb", "fuzzing"): 1.0,
    ("epirb", "replay"): 0.1,
    ("gdl90", "fuzzing"): 20.0,
}

DEFAULT_IDENTITY: dict[str, Any] = {
    "adsb": 0xA1B2C3,
    "ais": 244123456,
    "gdl90": 0xA1B2C3,
    "ccsds": 0x123,
    "epirb": {"maritime_mmsi": 316123456, "aviation_icao24": 0xC0FFEE, "serial_plb": 12345},
}

DEFAULT_KINEMATICS = {
    "adsb": KinematicState(52.25, 3.92, 38000, 450, 90.0, "SPOOF01"),
    "gdl90": KinematicState(47.45, -122.30, 5500, 120, 180.0, "N123AB"),
    "ais": KinematicState(51.90, 4.10, 0, 12.0, 45.0),
    "epirb": KinematicState(43.50, -8.25, 0, 1.5, 200.0),
    "ccsds": KinematicState(0.0, 0.0),
}

_STATE_KEYS = {f.name for f in fields(KinematicState)}


class ScenarioError(ValueError):
    pass


def valid_pairs() -> list[str]:
    return [f"{p}:{a}" for p in PROTOCOLS for a in CATALOG[p]]


@dataclass(frozen=True)
class AttackScenario:
    """Declarative description of one attack run.

    ``params`` carries attack-specific knobs (``n_targets``, ``vanish_at``,
    ``mode`` ...); everything that influences output is in this object so
    ``(scenario, seed)`` fully determines a run.
    """

    protocol: str
    attack: str
    duration: float = 10.0
    rate: float | None = None
    seed: int = 0
    kinematics: KinematicState | None = None
    turn_rate: float = 0.0
    transmitters: int = 1
    tx_offsets_us: tuple[int, ...] = ()
    raw_overrides: Mapping[str, Any] = field(default_factory=dict)
    identity: Any = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        attack = ALIASES.get(self.attack, self.attack)
        object.__setattr__(self, "attack", attack)
        if self.protocol not in PROTOCOLS:
            raise ScenarioError(f"unknown protocol {self.protocol!r}; valid: {', '.join(PROTOCOLS)}")
        if attack not in CATALOG[self.protocol]:
            raise ScenarioError(
                f"attack {attack!r} is not defined for {self.protocol}; valid pairs: {', '.join(valid_pairs())}"
            )
        if self.rate is None:
            default = ATTACK_RATE.get((self.protocol, attack))
            if default is None:
                default = FLOOD_RATE if attack in ("flooding", "dos") else DEFAULT_RATE[self.protocol]
            object.__setattr__(self, "rate", default)
        if not self.rate > 0:
            raise ScenarioError("rate must be positive")
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if self.transmitters < 1:
            raise ScenarioError("transmitters must be >= 1")
        if not 0 <= self.seed < 1 << 64:
            raise ScenarioError("seed must be a 64-bit unsigned integer")
        offsets = tuple(int(x) for x in self.tx_offsets_us) or (0,) * self.transmitters
        if len(offsets) != self.transmitters:
            raise ScenarioError("tx_offsets_us needs one entry per transmitter")
        object.__setattr__(self, "tx_offsets_us", offsets)
        if self.kinematics is None:
            object.__setattr__(self, "kinematics", DEFAULT_KINEMATICS[self.protocol])
        if self.identity is None:
            object.__setattr__(self, "identity", DEFAULT_IDENTITY[self.protocol])
        try:
            self.kinematics.validate()
        except CodecError as exc:
            raise ScenarioError(f"invalid kinematics: {exc}") from exc

    @property
    def trajectory(self) -> Trajectory:
        return Trajectory(self.kinematics, self.turn_rate)

    def param(self, name: str, default: Any = None) -> Any:
        return self.params.get(name, default)

    def to_dict(self) -> dict[str, Any]:
        k = self.kinematics
        return {
            "protocol": self.protocol,
            "attack": self.attack,
            "duration": self.duration,
            "rate": self.rate,
            "seed": self.seed,
            "kinematics": {f.name: getattr(k, f.name) for f in fields(k)} | {"turn_rate": self.turn_rate},
            "transmitters": self.transmitters,
            "tx_offsets_us": list(self.tx_offsets_us),
            "raw_overrides": dict(self.raw_overrides),
            "identity": self.identity,
            "params": dict(self.params),
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; stable across runs."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_TOP_KEYS = {
    "protocol", "attack", "duration", "rate", "seed", "kinematics", "transmitters",
    "tx_offsets_us", "raw_overrides", "identity", "params", "output",
}


def scenario_from_dict(doc: Mapping[str, Any]) -> AttackScenario:
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown config keys: {sorted(unknown)}")
    for key in ("protocol", "attack"):
        if key not in doc:
            raise ScenarioError(f"config is missing {key!r}")
    kin = dict(doc.get("kinematics") or {})
    turn_rate = float(kin.pop("turn_rate", 0.0))
    bad = set(kin) - _STATE_KEYS
    if bad:
        raise ScenarioError(f"unknown kinematics keys: {sorted(bad)}")
    state = None
    if kin:
        base = DEFAULT_KINEMATICS.get(doc["protocol"], KinematicState(0.0, 0.0))
        state = KinematicState(**({f.name: getattr(base, f.name) for f in fields(base)} | kin))
    return AttackScenario(
        protocol=doc["protocol"],
        attack=doc["attack"],
        duration=float(doc.get("duration", 10.0)),
        rate=None if doc.get("rate") is None else float(doc["rate"]),
        seed=int(doc.get("seed", 0)),
        kinematics=state,
        turn_rate=turn_rate,
        transmitters=int(doc.get("transmitters", 1)),
        tx_offsets_us=tuple(doc.get("tx_offsets_us") or ()),
        raw_overrides=dict(doc.get("raw_overrides") or {}),
        identity=doc.get("identity"),
        params=dict(doc.get("params") or {}),
    )


def load_config(path: str | Path) -> tuple[AttackScenario, dict[str, Any]]:
    """Read a YAML scenario; returns the scenario and its ``output`` section."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario config must be a mapping")
    return scenario_from_dict(doc), dict(doc.get("output") or {})


# --- schedules ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleEntry:
    t_us: int
    tx: int
    frame: Frame


@dataclass(frozen=True)
class JamSegment:
    t_us: int
    duration: float
    kind: str = "gaussian_noise"
    amplitude: float = 1.0
    params: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class FrameSchedule:
    protocol: str
    entries: tuple[ScheduleEntry, ...]
    transmitters: int = 1
    jamming: tuple[JamSegment, ...] = ()

    def __post_init__(self) -> None:
        last = None
        for e in self.entries:
            if last is not None and e.t_us < last:
                raise ScenarioError("schedule timestamps must be non-decreasing")
            if not 0 <= e.tx < self.transmitters:
                raise ScenarioError("transmitter id out of range")
            last = e.t_us

    @classmethod
    def build(
        cls,
        protocol: str,
        items: Iterable[tuple[float, int, Frame]],
        transmitters: int = 1,
        jamming: Iterable[JamSegment] = (),
    ) -> FrameSchedule:
        """Sort ``(t_us, tx, frame)`` items (stable) into a schedule."""
        entries = sorted(
            (ScheduleEntry(int(round(t)), tx, f) for t, tx, f in items),
            key=lambda e: e.t_us,
        )
        return cls(protocol, tuple(entries), transmitters, tuple(jamming))

    def __len__(self) -> int:
        return len(self.entries)

    def pairs(self) -> list[tuple[int, str]]:
        return [(e.t_us, e.frame.bits) for e in self.entries]

    def frames(self, kind: str | None = None) -> list[Frame]:
        return [e.frame for e in self.entries if kind is None or e.frame.kind == kind]

    def for_transmitter(self, tx: int) -> list[ScheduleEntry]:
        return [e for e in self.entries if e.tx == tx]

    def replay_lines(self) -> list[str]:
        return [format_replay_line(e.frame.bits, e.t_us, e.tx) for e in self.entries]

    def records(self) -> list[ReplayRecord]:
        return [ReplayRecord(e.t_us, e.frame.bits, e.tx) for e in self.entries]

    @classmethod
    def from_records(cls, protocol: str, records: Iterable[ReplayRecord]) -> FrameSchedule:
        items = []
        for i, r in enumerate(records):
            t = r.timestamp_us if r.timestamp_us is not None else i * 1000
            items.append((t, r.transmitter, Frame(protocol, r.bits)))
        n_tx = max((tx for _, tx, _ in items), default=0) + 1
        return cls.build(protocol, items, n_tx)
