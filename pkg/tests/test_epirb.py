from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from saamd import epirb
from saamd.bits import CodecError, flip_bit

from oracles import bch_oracle, divides_x_n_plus_1, gf2_mod, int_coeffs

bits61 = st.text(alphabet="01", min_size=61, max_size=61)
bits26 = st.text(alphabet="01", min_size=26, max_size=26)
families = st.sampled_from(["user", "standard"])
positions = st.one_of(st.none(), st.tuples(st.floats(-89.5, 89.5), st.floats(-179.5, 179.5)))


@st.composite
def beacons(draw):
    family = draw(families)
    protocol = draw(st.sampled_from(["maritime_mmsi", "aviation_icao24", "serial_plb"]))
    pos = draw(positions)
    lat, lon = pos if pos else (None, None)
    if protocol == "maritime_mmsi":
        mid = draw(st.integers(201, 775))
        identity = mid * 1_000_000 + draw(st.integers(0, 999_999))
        return epirb.make_beacon(protocol, identity, lat, lon, family=family,
                                 beacon_number=draw(st.integers(0, 9)))
    limit = epirb._ID_LIMITS[(family, protocol)]
    kw = {}
    if protocol == "serial_plb":
        kw["certificate"] = draw(st.integers(0, 1023))
    return epirb.make_beacon(protocol, draw(st.integers(0, limit - 1)), lat, lon,
                             country_code=draw(st.integers(0, 1023)), family=family,
                             self_test=draw(st.booleans()), **kw)


def test_generators_are_cyclic_code_generators():
    # BCH(127,106) shortened to (82,61); BCH(63,51) shortened to (38,26).
    assert divides_x_n_plus_1(epirb.BCH1_GENERATOR, 127)
    assert divides_x_n_plus_1(epirb.BCH2_GENERATOR, 63)
    assert epirb.BCH1_GENERATOR.bit_length() - 1 == 21
    assert epirb.BCH2_GENERATOR.bit_length() - 1 == 12


def test_zero_data_zero_check():
    assert epirb.bch_encode("0" * 61, epirb.BCH1_GENERATOR) == "0" * 21
    assert epirb.bch_encode("0" * 26, epirb.BCH2_GENERATOR) == "0" * 12


def test_width_mismatch_rejected():
    with pytest.raises(CodecError):
        epirb.bch_encode("0" * 60, epirb.BCH1_GENERATOR)


@given(bits61)
def test_bch1_matches_oracle(data):
    assert epirb.bch_encode(data, epirb.BCH1_GENERATOR) == bch_oracle(data, epirb.BCH1_GENERATOR)


@given(bits26)
def test_bch2_matches_oracle(data):
    assert epirb.bch_encode(data, epirb.BCH2_GENERATOR) == bch_oracle(data, epirb.BCH2_GENERATOR)


@given(bits61)
def test_codeword_divisible(data):
    word = data + epirb.bch_encode(data, epirb.BCH1_GENERATOR)
    assert not any(gf2_mod([int(b) for b in word], int_coeffs(epirb.BCH1_GENERATOR)))


def test_frame_sync_patterns_are_complements_past_first_bits():
    normal, test = epirb.FRAME_SYNC_NORMAL, epirb.FRAME_SYNC_SELF_TEST
    assert normal == "000101111"
    differing = [i for i in range(9) if normal[i] != test[i]]
    assert differing == list(range(1, 9))


def test_message_layout():
    bits = epirb.encode_beacon(epirb.make_beacon("maritime_mmsi", 230123456, 60.0, 25.0))
    assert len(bits) == 144
    assert bits[:15] == "1" * 15
    assert bits[15:24] == epirb.FRAME_SYNC_NORMAL


def test_mid_230_by_field_slicing():
    bits = epirb.encode_beacon(epirb.make_beacon("maritime_mmsi", 230123456, 60.0, 25.0))
    # PDF-1 begins at bit 25 (1-indexed): format flag, protocol flag, then 10-bit country code.
    assert int(bits[26:36], 2) == 230
    assert epirb.decode_beacon(bits).message.country_code == 230


def test_mid_mismatch_rejected():
    with pytest.raises(CodecError):
        epirb.encode_beacon(epirb.make_beacon("maritime_mmsi", 230123456, country_code=231))


def test_identity_overflow_rejected_unless_raw():
    msg = epirb.make_beacon("aviation_icao24", 1 << 24, country_code=1)
    with pytest.raises(CodecError):
        epirb.encode_beacon(msg)
    assert len(epirb.encode_beacon(msg, raw=True)) == 144


@given(beacons())
def test_round_trip(msg):
    bits = epirb.encode_beacon(msg)
    res = epirb.decode_beacon(bits)
    assert res.issues == ()
    assert res.message == msg


@given(beacons())
def test_both_bch_fields_verify(msg):
    parts = epirb.split_long(epirb.encode_beacon(msg))
    assert bch_oracle(parts["pdf1"], epirb.BCH1_GENERATOR) == parts["bch1"]
    assert bch_oracle(parts["pdf2"], epirb.BCH2_GENERATOR) == parts["bch2"]


@given(beacons(), st.integers(24, 105))
def test_pdf1_flip_detected(msg, index):
    bits = flip_bit(epirb.encode_beacon(msg), index)
    res = epirb.decode_beacon(bits)
    assert res.message is None and "bch1_failed" in res.issues


@given(beacons(), st.integers(106, 143))
def test_pdf2_flip_detected(msg, index):
    res = epirb.decode_beacon(flip_bit(epirb.encode_beacon(msg), index))
    assert res.message is None and "bch2_failed" in res.issues


def test_lenient_returns_fields_with_diagnosis():
    bits = flip_bit(epirb.encode_beacon(epirb.make_beacon("maritime_mmsi", 230123456)), 50)
    res = epirb.decode_beacon(bits, lenient=True)
    assert res.message is not None and "bch1_failed" in res.issues


@given(st.text(alphabet="01", min_size=144, max_size=144))
def test_decode_is_total(bits):
    epirb.decode_beacon(bits, lenient=True)
    epirb.decode_beacon(bits)


def test_short_format_not_supported():
    assert epirb.decode_beacon("0" * 112).issues == ("short_format_unsupported",)


@given(families, st.floats(-89.5, 89.5), st.floats(-179.5, 179.5))
def test_position_within_grid(family, lat, lon):
    qlat, qlon = epirb.quantize_position(lat, lon, family)
    half = epirb.position_resolution(family) / 2 + 1e-9
    assert abs(qlat - lat) <= half and abs(qlon - lon) <= half


def test_self_test_distinguished():
    msg = epirb.make_beacon("serial_plb", 1234, country_code=366, self_test=True)
    bits = epirb.encode_beacon(msg)
    assert bits[15:24] == epirb.FRAME_SYNC_SELF_TEST
    assert epirb.decode_beacon(bits).message.self_test


def test_hex_id_is_15_chars():
    msg = epirb.make_beacon("aviation_icao24", 0x4840D6, 52.0, 4.0, country_code=244)
    assert len(msg.hex_id) == 15
