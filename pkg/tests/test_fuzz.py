from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

import importlib

fz = importlib.import_module("saamd.attack.fuzz")

PROTOCOLS = ["adsb", "ais", "epirb", "gdl90", "ccsds"]


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_same_seed_same_log(protocol):
    corpus = fz.default_corpus(protocol)
    a = [c.log_line() for c in fz.fuzz(corpus, protocol, 300, seed=11)]
    b = [c.log_line() for c in fz.fuzz(corpus, protocol, 300, seed=11)]
    c = [c.log_line() for c in fz.fuzz(corpus, protocol, 300, seed=12)]
    assert a == b and a != c


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_every_log_line_replays(protocol):
    corpus = fz.default_corpus(protocol)
    for case in fz.fuzz(corpus, protocol, 300, seed=3):
        assert fz.replay_entry(case.log_line(), corpus, protocol) == case.data


def test_resume_from_offset_matches_full_run():
    corpus = fz.default_corpus("ais")
    full = list(fz.fuzz(corpus, "ais", 100, seed=5))
    tail = list(fz.fuzz(corpus, "ais", 50, seed=5, start=50))
    assert full[50:] == tail


def test_tampered_log_detected():
    corpus = fz.default_corpus("adsb")
    line = next(iter(fz.fuzz(corpus, "adsb", 1, seed=0))).log_line()
    it, op, params, data = line.split("\t")
    forged = "\t".join([it, op, params, "00" + data])
    with pytest.raises(fz.FuzzError):
        fz.replay_entry(forged, corpus, "adsb")


def test_malformed_log_line():
    with pytest.raises(fz.FuzzError):
        fz.parse_log_line("1\tbit_flip\t{}")


def test_empty_corpus_rejected():
    with pytest.raises(fz.FuzzError):
        list(fz.fuzz([], "adsb", 10, seed=0))
    with pytest.raises(fz.FuzzError):
        fz.mutate([], "adsb", 0, 0)


def test_unknown_operator():
    with pytest.raises(fz.FuzzError):
        fz.apply_operator("melt", {"src": 0}, [b"\x00"], "adsb")


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_all_operators_exercised(protocol):
    corpus = fz.default_corpus(protocol)
    seen = {c.operator for c in fz.fuzz(corpus, protocol, 500, seed=1)}
    assert seen == set(fz.OPERATORS)


def test_empty_seed_input_falls_back_to_extend():
    cases = list(fz.fuzz([b""], "ccsds", 50, seed=2))
    assert all(c.operator in ("extend", "splice") for c in cases)


def test_iter_log_skips_comments():
    corpus = fz.default_corpus("ccsds")
    lines = ["# header", ""] + [c.log_line() for c in fz.fuzz(corpus, "ccsds", 5, seed=0)]
    assert [entry[0] for entry in fz.iter_log(lines)] == list(range(5))


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_campaign_no_crashes(protocol):
    res = fz.run_campaign(fz.default_corpus(protocol), protocol, 1000, seed=7)
    assert res.executed == 1000
    assert res.crashes == [] and res.slow == []


def test_campaign_records_target_exceptions():
    def brittle(protocol, data):
        if len(data) % 2:
            raise RuntimeError("odd length")
        return fz.decode_lenient(protocol, data)

    res = fz.run_campaign(fz.default_corpus("ccsds"), "ccsds", 200, seed=0, target=brittle)
    assert res.executed == 200 and res.crashes
    assert all("RuntimeError" in msg for _, msg in res.crashes)


def test_campaign_log_callback():
    lines: list[str] = []
    fz.run_campaign(fz.default_corpus("epirb"), "epirb", 20, seed=0, log=lines.append)
    assert len(lines) == 20 and all(len(line.split("\t")) == 4 for line in lines)


@given(st.sampled_from(PROTOCOLS), st.binary(max_size=64))
@settings(max_examples=300)
def test_lenient_decoders_are_total(protocol, data):
    fz.decode_lenient(protocol, data)
