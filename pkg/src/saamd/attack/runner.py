"""Materialise a scenario on disk: schedule, optional IQ, logs and a manifest.

Everything written is a pure function of the scenario, so two runs of the
same config produce byte-identical directories (the manifest holds no
timestamps or absolute paths).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .. import __version__, modem
from ..fileio import atomic_write, sha256_file
from .recon import reconnaissance
from .scenario import AttackScenario, FrameSchedule
from .generators import generate

TOOL = "saamd"
VERSION = __version__

# Silence longer than this starts a new IQ segment file.
SEGMENT_GAP_US = {"adsb": 200.0, "ais": 2000.0, "epirb": 2000.0}
JAM_IQ_MAX_S = 0.1


@dataclass(frozen=True)
class IqSegment:
    start_us: float
    buffer: modem.IqBuffer
    kind: str = "frames"


def render_iq(
    schedule: FrameSchedule,
    sample_rate: float | None = None,
    seed: int = 0,
    max_gap_us: float | None = None,
    jam_max_s: float = JAM_IQ_MAX_S,
) -> list[IqSegment]:
    """Frame bursts as separate segments, jammer waveforms as their own segments.

    Writing one continuous file for a sparse schedule would be mostly zeros,
    so bursts separated by more than ``max_gap_us`` become separate files
    with their absolute start time in the sidecar. Jammer segments are
    truncated to ``jam_max_s`` seconds.
    """
    p = schedule.protocol
    if p not in modem.PROTOCOL_WAVEFORM:
        raise modem.ModemError(f"{p} has no RF waveform")
    sr = sample_rate or modem.DEFAULT_RATES[modem.PROTOCOL_WAVEFORM[p]]
    gap = SEGMENT_GAP_US[p] if max_gap_us is None else max_gap_us
    out = []
    for group in modem.segments(p, schedule.pairs(), gap):
        t0, buf = modem.render(p, group, sr)
        out.append(IqSegment(t0, buf))
    for i, seg in enumerate(schedule.jamming):
        buf = modem.jam_waveform(seg.kind, min(seg.duration, jam_max_s), sr, seed + i, seg.amplitude, **dict(seg.params))
        out.append(IqSegment(float(seg.t_us), buf, "jam"))
    return out


def render_combined(schedule: FrameSchedule, sample_rate: float | None = None, seed: int = 0) -> tuple[float, modem.IqBuffer]:
    """One buffer covering the whole schedule, jamming summed in."""
    p = schedule.protocol
    sr = sample_rate or modem.DEFAULT_RATES[modem.PROTOCOL_WAVEFORM[p]]
    t0, buf = modem.render(p, schedule.pairs(), sr)
    x = buf.samples.copy()
    for i, seg in enumerate(schedule.jamming):
        jam = modem.jam_waveform(seg.kind, seg.duration, sr, seed + i, seg.amplitude, **dict(seg.params)).samples
        off = int(round((seg.t_us - t0) * sr / 1e6))
        lo, hi = max(off, 0), min(off + len(jam), len(x))
        if hi > lo:
            x[lo:hi] += jam[lo - off:hi - off]
    return t0, modem.IqBuffer(x, sr)


def _schedule_tsv(schedule: FrameSchedule) -> str:
    lines = ["t_us\ttx\tkind\thex\tnbits\tmeta"]
    for e in schedule.entries:
        meta = json.dumps(e.frame.info(), sort_keys=True, default=str)
        lines.append(f"{e.t_us}\t{e.tx}\t{e.frame.kind}\t{e.frame.hex}\t{len(e.frame.bits)}\t{meta}")
    for j in schedule.jamming:
        lines.append(f"{j.t_us}\t-\tjam:{j.kind}\t\t0\t" + json.dumps({"duration": j.duration, "amplitude": j.amplitude}))
    return "\n".join(lines) + "\n"


def write_outputs(
    scenario: AttackScenario,
    out_dir: str | Path,
    iq: bool = False,
    sample_rate: float | None = None,
    iq_format: str = "cf32",
    schedule: FrameSchedule | None = None,
) -> dict[str, Any]:
    """Write all artefacts under ``out_dir`` and return the manifest."""
    out = Path(out_dir)
    schedule = schedule if schedule is not None else generate(scenario)
    written: list[str] = []

    def put(rel: str, data: bytes | str) -> None:
        atomic_write(out / rel, data)
        written.append(rel)

    header = f"; {scenario.protocol}:{scenario.attack} seed={scenario.seed} frames={len(schedule)}\n"
    put("schedule.replay", header + "".join(line + "\n" for line in schedule.replay_lines()))
    put("schedule.tsv", _schedule_tsv(schedule))
    logs = [str(e.frame.info()["log"]) for e in schedule.entries if "log" in e.frame.info()]
    if logs:
        put("fuzz.log", "".join(line + "\n" for line in logs))
    if scenario.attack == "reconnaissance":
        put("inventory.csv", reconnaissance(scenario.protocol, schedule.pairs()).to_csv())
    if iq:
        n_frames = n_jam = 0
        for seg in render_iq(schedule, sample_rate, scenario.seed):
            if seg.kind == "jam":
                rel = f"iq/jam_{n_jam:04d}.{iq_format}"
                n_jam += 1
            else:
                rel = f"iq/segment_{n_frames:04d}.{iq_format}"
                n_frames += 1
            modem.iq_write(seg.buffer, out / rel, iq_format, {"start_us": repr(seg.start_us)})
            written += [rel, rel + ".meta"]
    manifest = {
        "tool": TOOL,
        "version": VERSION,
        "protocol": scenario.protocol,
        "attack": scenario.attack,
        "seed": scenario.seed,
        "config_sha256": scenario.digest(),
        "scenario": scenario.to_dict(),
        "iq": {"enabled": iq, "sample_rate": sample_rate, "format": iq_format},
        "frames": len(schedule),
        "outputs": {rel: sha256_file(out / rel) for rel in sorted(written)},
    }
    atomic_write(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
    return manifest
