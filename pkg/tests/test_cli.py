from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from saamd.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, EXIT_USAGE, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
KLM_IDENT = "8D4840D6202CC371C32CE0576098"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_encode_decode_round_trip(tmp_path, capsys):
    replay = tmp_path / "m.replay"
    code, _, _ = run(["encode", "adsb", "-i", CONFIGS / "messages_adsb.yaml", "-o", replay, "--step-us", 1000], capsys)
    assert code == EXIT_OK
    lines = replay.read_text().splitlines()
    assert lines[0] == f"@0 {KLM_IDENT}"
    code, out, _ = run(["decode", "adsb", "-i", replay], capsys)
    recs = [json.loads(line) for line in out.splitlines()]
    assert code == EXIT_OK and all(r["ok"] for r in recs)
    assert recs[0]["message"]["callsign"] == "KLM1023"
    assert recs[2]["message"]["squawk"] == "7700"


def test_decode_failure_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.replay"
    bad.write_text(KLM_IDENT[:-1] + "9\n")
    assert run(["decode", "adsb", "-i", bad], capsys)[0] == EXIT_FAIL
    code, out, _ = run(["decode", "adsb", "-i", bad, "--lenient"], capsys)
    assert code == EXIT_OK and "crc" in out


def test_decode_aivdm(tmp_path, capsys):
    path = tmp_path / "a.nmea"
    path.write_text("!AIVDM,1,1,,B,177KQJ5000G?tO`K>RA1wUbN0TKH,0*5C\n")
    code, out, _ = run(["decode", "ais", "-i", path], capsys)
    assert code == EXIT_OK and json.loads(out)["message"]["mmsi"] == 477553000


def test_encode_ais_nmea(tmp_path, capsys):
    doc = tmp_path / "m.yaml"
    doc.write_text("{type: safety, mmsi: 972000001, text: MOB ACTIVE}\n")
    code, out, _ = run(["encode", "ais", "-i", doc, "--format", "nmea"], capsys)
    assert code == EXIT_OK and out.startswith("!AIVDM,1,1,")


def test_raw_override_usage_error(tmp_path, capsys):
    code, _, err = run(["encode", "adsb", "-i", CONFIGS / "messages_adsb.yaml", "--raw-override", "nonsense"], capsys)
    assert code == EXIT_USAGE and "key=value" in err


def test_missing_input_is_io_error(tmp_path, capsys):
    code, _, err = run(["decode", "adsb", "-i", tmp_path / "absent.replay"], capsys)
    assert code == EXIT_IO and "I/O" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["decode", "vdl2"])
    assert exc.value.code == EXIT_USAGE


def test_attack_list(capsys):
    code, out, _ = run(["attack", "--list"], capsys)
    assert code == EXIT_OK and "adsb:spoofing" in out.splitlines()


def test_attack_requires_out(capsys):
    assert run(["attack", CONFIGS / "adsb_spoof.yaml"], capsys)[0] == EXIT_USAGE


def test_attack_outputs_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(["attack", CONFIGS / "adsb_spoof.yaml", "-o", tmp_path / name, "--iq"], capsys)[0] == EXIT_OK
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma == mb
    assert any(k.startswith("iq/") for k in ma["outputs"])
    for rel in ma["outputs"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_bad_scenario_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("protocol: ais\nattack: disappearance\n")
    code, _, err = run(["attack", cfg, "-o", tmp_path / "out"], capsys)
    assert code == EXIT_USAGE and "valid pairs" in err


def test_modulate_demodulate(tmp_path, capsys):
    replay = tmp_path / "m.replay"
    run(["encode", "adsb", "-i", CONFIGS / "messages_adsb.yaml", "-o", replay, "--step-us", 1000], capsys)
    iq = tmp_path / "m.cf32"
    assert run(["modulate", "adsb", "-i", replay, "-o", iq, "--snr", 25], capsys)[0] == EXIT_OK
    code, out, _ = run(["demodulate", "adsb", "-i", iq], capsys)
    assert code == EXIT_OK
    assert out.splitlines() == replay.read_text().splitlines()


def test_fuzz_log_and_check(tmp_path, capsys):
    log = tmp_path / "f.log"
    code, out, _ = run(["fuzz", "gdl90", "--iterations", 200, "--seed", 4, "-o", log, "--run"], capsys)
    assert code == EXIT_OK and "crashes=0" in out
    code, out, _ = run(["fuzz", "gdl90", "--check", log], capsys)
    assert code == EXIT_OK and out == "replay_mismatches=0\n"
    lines = log.read_text().splitlines()
    it, op, params, data = lines[1].split("\t")
    lines[1] = "\t".join([it, op, params, data + "00"])
    log.write_text("\n".join(lines) + "\n")
    code, out, _ = run(["fuzz", "gdl90", "--check", log], capsys)
    assert code == EXIT_FAIL and out == "replay_mismatches=1\n"


def test_fuzz_custom_corpus(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "one.hex").write_text(KLM_IDENT + "\n")
    code, out, _ = run(["fuzz", "adsb", "--corpus", corpus, "--iterations", 5], capsys)
    assert code == EXIT_OK and len(out.splitlines()) == 6


def test_harness_single_model(tmp_path, capsys):
    summary = tmp_path / "s.json"
    code, out, _ = run(["harness", CONFIGS / "receiver_adsb.yaml", CONFIGS / "adsb_spoof.yaml", "--summary", summary],
                       capsys)
    assert code == EXIT_OK and "verdict=ok" in out
    assert json.loads(summary.read_text())["verdict"] == "ok"


def test_harness_dos_exit_code(capsys):
    code, out, _ = run(["harness", CONFIGS / "receiver_adsb.yaml", CONFIGS / "adsb_flood.yaml"], capsys)
    assert code == EXIT_FAIL and "verdict=dos" in out


def test_harness_fleet(tmp_path, capsys):
    summary = tmp_path / "fleet.json"
    code, out, _ = run(["harness", CONFIGS / "fleet_adsb.yaml", CONFIGS / "adsb_flood.yaml", "--summary", summary],
                       capsys)
    doc = json.loads(summary.read_text())
    assert doc["models"] == 3 and doc["affected"] == 2
    assert "fleet.affected=2" in out and code == EXIT_FAIL


def test_harness_collision_alert(capsys):
    code, out, _ = run(["harness", CONFIGS / "receiver_ais.yaml", CONFIGS / "ais_collision.yaml"], capsys)
    assert code == EXIT_OK and "alerts_raised=1" in out


def test_harness_protocol_mismatch(capsys):
    code, _, err = run(["harness", CONFIGS / "receiver_adsb.yaml", CONFIGS / "ais_collision.yaml"], capsys)
    assert code == EXIT_USAGE and "does not match" in err


def test_verify_scenario_and_replay(tmp_path, capsys):
    code, out, _ = run(["verify", CONFIGS / "adsb_spoof.yaml"], capsys)
    assert code == EXIT_OK and "passed=True" in out
    replay = tmp_path / "x.replay"
    replay.write_text(f"@0 {KLM_IDENT}\n")
    assert run(["verify", replay], capsys)[0] == EXIT_USAGE
    code, out, _ = run(["verify", replay, "--protocol", "adsb", "--snr", "none"], capsys)
    assert code == EXIT_OK and "recovered=1" in out


def test_console_entry_points(tmp_path):
    for cmd in (["saamd", "attack", "--list"], [sys.executable, "-m", "saamd", "attack", "--list"]):
        proc = subprocess.run(cmd, capture_output=True, text=True, check=False)
        assert proc.returncode == 0 and "ais:spoofing" in proc.stdout
