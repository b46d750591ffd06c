"""``saamd`` command line.

Exit codes: 0 ok/pass, 1 fail or dos verdict, 2 usage/validation error,
3 I/O error. All outputs are written atomically.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import ais, harness, messages, modem
from .attack.fuzz import FuzzError, default_corpus, fuzz, replay_entry, run_campaign
from .attack.generators import generate
from .attack.runner import write_outputs
from .attack.scenario import FrameSchedule, ScenarioError, load_config, valid_pairs
from .bits import CodecError, ReplayFormatError, bytes_to_bits, format_replay_line, iter_replay
from .fileio import atomic_write
from .gdl90 import split_stream

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def _overrides(items: Sequence[str] | None) -> dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--raw-override expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


# --- encode / decode -------------------------------------------------------------------------


def cmd_encode(args: argparse.Namespace) -> int:
    doc = yaml.safe_load(_read_text(args.input))
    items = doc.get("messages", doc) if isinstance(doc, dict) else doc
    if isinstance(items, dict):
        items = [items]
    if not isinstance(items, list):
        raise UsageError("encode input must be a message mapping or a list of them")
    ov = _overrides(args.raw_override)
    lines = []
    for i, item in enumerate(items):
        bits = messages.override(args.protocol, messages.build(args.protocol, item), ov)
        if args.protocol == "ais":
            if args.format == "nmea":
                lines.append("".join(s.rstrip("\r\n") + "\n" for s in ais.build_aivdm_sentences(bits, sequence_id=i)))
                continue
            if args.layer == "air":
                bits = ais.build_air_frame(bits).line_bits
        t = None if args.step_us is None else i * args.step_us
        lines.append(format_replay_line(bits, t) + "\n")
    _emit(args.output, "".join(lines))
    return EXIT_OK


def _decode_inputs(protocol: str, text: str, layer: str) -> list[tuple[int | None, str]]:
    stripped = [line for line in text.splitlines() if line.strip()]
    if protocol == "ais" and stripped and stripped[0].lstrip().startswith("!"):
        return [(None, bits) for _, bits in ais.parse_aivdm(stripped)]
    return [(r.timestamp_us, r.bits) for r in iter_replay(stripped)]


def cmd_decode(args: argparse.Namespace) -> int:
    layer = args.layer
    if args.protocol == "gdl90" and args.binary:
        blob = sys.stdin.buffer.read() if args.input == "-" else Path(args.input).read_bytes()
        frames = [(None, bytes_to_bits(f)) for f in split_stream(blob)]
    else:
        text = _read_text(args.input)
        if args.protocol == "ais" and text.lstrip().startswith("!"):
            layer = "payload"
        frames = _decode_inputs(args.protocol, text, layer)
    strict = not args.lenient
    out, failed = [], 0
    for t, bits in frames:
        res = messages.decode(args.protocol, bits, strict=strict, layer=layer)
        rec: dict[str, Any] = {"ok": res.message is not None, "issues": list(res.issues)}
        if t is not None:
            rec["t_us"] = t
        if res.message is not None:
            rec["message"] = messages.describe(args.protocol, res.message)
        else:
            failed += 1
        out.append(json.dumps(rec, sort_keys=True, default=str) + "\n")
    _emit(args.output, "".join(out))
    return EXIT_FAIL if failed and strict else EXIT_OK


# --- modem ---------------------------------------------------------------------------------------


def cmd_modulate(args: argparse.Namespace) -> int:
    recs = list(iter_replay(_read_text(args.input).splitlines()))
    if not recs:
        raise UsageError("no frames in input")
    gap = modem.frame_duration_us(args.protocol, max(len(r.bits) for r in recs)) + 100
    entries = [(r.timestamp_us if r.timestamp_us is not None else i * gap, r.bits) for i, r in enumerate(recs)]
    t0, iq = modem.render(args.protocol, entries, args.rate)
    if args.snr is not None:
        iq = modem.add_awgn(iq, args.snr, args.seed)
    modem.iq_write(iq, args.output, args.format, {"start_us": repr(t0), "protocol": args.protocol})
    return EXIT_OK


def cmd_demodulate(args: argparse.Namespace) -> int:
    meta = modem.read_meta(args.input)
    iq = modem.iq_read(args.input)
    frames = modem.demodulate(args.protocol, iq, float(meta.get("start_us", 0.0)))
    _emit(args.output, "".join(format_replay_line(b, round(t)) + "\n" for t, b in frames))
    return EXIT_OK


# --- attack / fuzz -----------------------------------------------------------------------------


def cmd_attack(args: argparse.Namespace) -> int:
    if args.list:
        sys.stdout.write("".join(p + "\n" for p in valid_pairs()))
        return EXIT_OK
    if not args.config or not args.out:
        raise UsageError("attack needs a scenario config and --out")
    scenario, output = load_config(args.config)
    iq = bool(output.get("iq", False)) or args.iq
    rate = args.rate or output.get("sample_rate")
    fmt = args.iq_format or output.get("format", "cf32")
    manifest = write_outputs(scenario, args.out, iq=iq, sample_rate=rate, iq_format=fmt)
    sys.stdout.write(f"{manifest['protocol']}:{manifest['attack']} frames={manifest['frames']} "
                     f"config_sha256={manifest['config_sha256']}\n")
    return EXIT_OK


def _load_corpus(path: str | None, protocol: str) -> list[bytes]:
    if path is None:
        return default_corpus(protocol)
    p = Path(path)
    files = sorted(x for x in p.iterdir() if x.is_file()) if p.is_dir() else [p]
    out = []
    for f in files:
        blob = f.read_bytes()
        try:
            text = blob.decode("ascii").strip()
            out.append(bytes.fromhex(text) if text else b"")
        except (UnicodeDecodeError, ValueError):
            out.append(blob)
    return out


def cmd_fuzz(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus, args.protocol)
    if args.check:
        bad = 0
        with open(args.check, encoding="utf-8") as fh:
            for line in fh:
                if line.strip() and not line.startswith("#"):
                    try:
                        replay_entry(line, corpus, args.protocol)
                    except FuzzError:
                        bad += 1
        sys.stdout.write(f"replay_mismatches={bad}\n")
        return EXIT_FAIL if bad else EXIT_OK
    lines: list[str] = []
    if args.run:
        res = run_campaign(corpus, args.protocol, args.iterations, args.seed, args.time_limit, log=lines.append)
        summary = f"executed={res.executed} crashes={len(res.crashes)} slow={len(res.slow)} max_s={res.max_seconds:.4f}\n"
        status = EXIT_FAIL if res.crashes or res.slow else EXIT_OK
    else:
        lines = [c.log_line() for c in fuzz(corpus, args.protocol, args.iterations, args.seed)]
        summary, status = f"generated={len(lines)}\n", EXIT_OK
    header = f"# protocol={args.protocol} seed={args.seed} iterations={args.iterations}\n"
    _emit(args.output, header + "".join(line + "\n" for line in lines))
    if args.output not in (None, "-"):
        sys.stdout.write(summary)
    return status


# --- harness / verify ----------------------------------------------------------------------------


def _harness_input(path: str, protocol: str) -> Any:
    p = Path(path)
    if p.suffix in (".yaml", ".yml"):
        scenario, _ = load_config(p)
        if scenario.protocol != protocol:
            raise harness.HarnessError(f"scenario protocol {scenario.protocol} does not match model protocol {protocol}")
        return generate(scenario)
    return p


def cmd_harness(args: argparse.Namespace) -> int:
    models = harness.load_models(args.model)
    source = _harness_input(args.input, models[0].protocol)
    if len(models) == 1:
        report = harness.run(models[0], source, args.wall)
        _emit(args.output, report.to_lines())
        if args.summary:
            atomic_write(args.summary, report.to_json())
        return EXIT_FAIL if report.verdict == "dos" else EXIT_OK
    fleet = harness.fleet_run(models, source)
    text = "".join(r.to_lines() + "\n" for r in fleet.reports)
    text += f"fleet.models={len(fleet.reports)}\nfleet.affected={fleet.affected}\nfleet.affected_fraction={fleet.fraction}\n"
    _emit(args.output, text)
    if args.summary:
        atomic_write(args.summary, json.dumps(fleet.to_dict(), sort_keys=True, indent=2) + "\n")
    return EXIT_FAIL if any(r.verdict == "dos" for r in fleet.reports) else EXIT_OK


def _snr(text: str) -> float | None:
    return None if text.lower() in ("none", "off") else float(text)


def cmd_verify(args: argparse.Namespace) -> int:
    p = Path(args.input)
    if p.suffix in (".yaml", ".yml"):
        scenario, _ = load_config(p)
        protocol, source = scenario.protocol, generate(scenario)
    else:
        if not args.protocol:
            raise UsageError("verify on a replay file needs --protocol")
        protocol = args.protocol
        source = FrameSchedule.from_records(protocol, iter_replay(_read_text(args.input).splitlines()))
    result = harness.verify_loopback(protocol, source, args.snr, args.seed, args.rate)
    _emit(args.output, result.to_lines())
    return EXIT_OK if result.passed else EXIT_FAIL


# --- parser --------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saamd", description="Security assessment toolkit for avionics and maritime datalinks.")
    sub = ap.add_subparsers(dest="command", required=True)
    proto = dict(choices=messages.PROTOCOLS, help="protocol")
    rf = dict(choices=tuple(modem.PROTOCOL_WAVEFORM), help="protocol with an RF waveform")

    p = sub.add_parser("encode", help="message descriptions (YAML) to replay lines")
    p.add_argument("protocol", **proto)
    p.add_argument("-i", "--input", default="-")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--raw-override", action="append", metavar="FIELD=VALUE")
    p.add_argument("--layer", choices=("air", "payload"), default="air", help="AIS output layer")
    p.add_argument("--format", choices=("replay", "nmea"), default="replay")
    p.add_argument("--step-us", type=int, default=None, help="timestamp spacing for the replay lines")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="replay lines (or AIVDM / GDL-90 binary) to JSON lines")
    p.add_argument("protocol", **proto)
    p.add_argument("-i", "--input", default="-")
    p.add_argument("-o", "--output", default="-")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", action="store_true", default=True)
    mode.add_argument("--lenient", action="store_true")
    p.add_argument("--layer", choices=("air", "payload"), default="air", help="AIS input layer")
    p.add_argument("--binary", action="store_true", help="GDL-90 input is a raw byte stream")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("modulate", help="replay file to IQ file")
    p.add_argument("protocol", **rf)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--rate", type=float, default=None, help="sample rate (Hz)")
    p.add_argument("--format", choices=("cf32", "cs8"), default="cf32")
    p.add_argument("--snr", type=float, default=None, help="add white noise at this peak SNR (dB)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_modulate)

    p = sub.add_parser("demodulate", help="IQ file (with .meta sidecar) to replay lines")
    p.add_argument("protocol", **rf)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_demodulate)

    p = sub.add_parser("attack", help="generate an attack scenario into a directory")
    p.add_argument("config", nargs="?")
    p.add_argument("-o", "--out")
    p.add_argument("--iq", action="store_true", help="also render IQ segments")
    p.add_argument("--rate", type=float, default=None, help="IQ sample rate (Hz)")
    p.add_argument("--iq-format", choices=("cf32", "cs8"), default=None)
    p.add_argument("--list", action="store_true", help="print valid protocol:attack pairs")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("fuzz", help="mutation fuzzing campaign")
    p.add_argument("protocol", **proto)
    p.add_argument("--corpus", help="file or directory of seed inputs (hex text or binary)")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-", help="campaign log")
    p.add_argument("--run", action="store_true", help="feed each case to the lenient decoder")
    p.add_argument("--time-limit", type=float, default=0.5, help="per-input hang threshold (s)")
    p.add_argument("--check", metavar="LOG", help="replay a log and verify every input regenerates")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("harness", help="score an input against receiver model(s)")
    p.add_argument("model", help="receiver model YAML (single model or models: list)")
    p.add_argument("input", help="scenario YAML, replay file or IQ file")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--summary", help="machine-readable JSON summary path")
    p.add_argument("--wall", type=float, default=None, help="simulated end time (s)")
    p.set_defaults(func=cmd_harness)

    p = sub.add_parser("verify", help="loopback verification through the modem")
    p.add_argument("input", help="scenario YAML or replay file")
    p.add_argument("--protocol", choices=tuple(modem.PROTOCOL_WAVEFORM))
    p.add_argument("--snr", type=_snr, default=30.0, help="peak SNR in dB, or 'none' for noiseless")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, modem.IqFormatError) as exc:
        print(f"saamd: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ScenarioError, CodecError, ReplayFormatError, modem.ModemError, harness.HarnessError,
            FuzzError, ais.NmeaError, yaml.YAMLError, ValueError) as exc:
        print(f"saamd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
