from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saamd import modem

rng = np.random.default_rng(1234)


def _random_bits(n: int, gen: np.random.Generator = rng) -> str:
    return "".join(gen.choice(["0", "1"], n))


# --- PPM ---------------------------------------------------------------------------------


def test_preamble_indices_at_2msps():
    iq = modem.ppm_modulate("0" * 112, 2e6)
    pre = np.flatnonzero(np.abs(iq.samples[:16]) > 0)
    # 0.5 us pulses at 0, 1.0, 3.5, 4.5 us -> index = offset * 2e6
    assert set(pre) == {int(o * 2) for o in (0, 1.0, 3.5, 4.5)} == {0, 2, 7, 9}


def test_ppm_real_valued_and_bounded():
    iq = modem.ppm_modulate(_random_bits(112), 4e6)
    assert np.all(iq.samples.imag == 0)
    assert np.max(np.abs(iq.samples)) <= iq.peak
    assert len(iq) == 120 * 4


def test_all_ones_energy_in_first_halves():
    x = np.abs(modem.ppm_modulate("1" * 112, 2e6).samples[16:])
    assert np.all(x[0::2] == 1) and np.all(x[1::2] == 0)


def test_rate_below_minimum_rejected():
    with pytest.raises(modem.ModemError):
        modem.ppm_modulate("0" * 112, 1e6)


def test_silence_no_frames():
    assert modem.ppm_demodulate(modem.IqBuffer(np.zeros(4000), 2e6)) == []


@pytest.mark.parametrize("rate", [2e6, 4e6, 8e6])
def test_ppm_loopback_1000_frames(rate):
    gen = np.random.default_rng(int(rate))
    frames = [_random_bits(112, gen) for _ in range(1000)]
    entries = [(i * 200.0, f) for i, f in enumerate(frames)]
    t0, iq = modem.render("adsb", entries, rate)
    got = modem.ppm_demodulate(iq, start_us=t0)
    assert [b for _, b in got] == frames
    assert all(abs(t - e) < 1e-6 for (t, _), (e, _) in zip(got, entries))


def test_two_frames_1ms_apart():
    a, b = _random_bits(112), _random_bits(112)
    _, iq = modem.render("adsb", [(0.0, a), (1000.0, b)])
    got = modem.ppm_demodulate(iq)
    assert [bits for _, bits in got] == [a, b]
    assert abs((got[1][0] - got[0][0]) - 1000.0) <= 1.0


def test_ppm_at_20db():
    gen = np.random.default_rng(5)
    frames = [_random_bits(112, gen) for _ in range(200)]
    _, iq = modem.render("adsb", [(i * 300.0, f) for i, f in enumerate(frames)])
    got = [b for _, b in modem.ppm_demodulate(modem.add_awgn(iq, 20.0, seed=3))]
    assert sum(f in got for f in frames) >= 0.99 * len(frames)


# --- GMSK --------------------------------------------------------------------------------


@pytest.mark.parametrize("rate", [96_000, 192_000])
def test_gmsk_loopback(rate):
    gen = np.random.default_rng(rate)
    for _ in range(20):
        bits = _random_bits(256, gen)
        assert modem.gmsk_demodulate(modem.gmsk_modulate(bits, rate), n_bits=256) == bits


def test_gmsk_constant_envelope_and_rotation():
    iq = modem.gmsk_modulate("0" * 64, 96_000)
    assert np.max(np.abs(np.abs(iq.samples) - 1.0)) < 0.01
    steps = np.angle(iq.samples[1:] * np.conj(iq.samples[:-1]))
    core = steps[40:-40]  # ignore the filter's edge transient
    assert np.all(core < 0)  # monotonic rotation in one direction


@pytest.mark.parametrize("rate", [96_000, 192_000])
def test_gmsk_phase_continuity(rate):
    iq = modem.gmsk_modulate(_random_bits(500), rate)
    steps = np.abs(np.angle(iq.samples[1:] * np.conj(iq.samples[:-1])))
    assert steps.max() < math.pi / 2


def test_gmsk_rate_must_be_integer_multiple():
    with pytest.raises(modem.ModemError):
        modem.gmsk_modulate("0101", 100_000)


# --- biphase -----------------------------------------------------------------------------


def test_biphase_prefix_constant():
    iq = modem.biphase_modulate("1" * 144, 48_000)
    prefix = iq.samples[: int(0.160 * 48_000)]
    assert np.allclose(prefix, prefix[0])


def test_biphase_levels():
    iq = modem.biphase_modulate(_random_bits(144), 48_000)
    phase = np.angle(iq.samples[int(0.160 * 48_000):])
    levels = np.unique(np.round(phase, 6))
    assert len(levels) == 2
    assert all(abs(abs(v) - 1.1) < 0.01 for v in levels)


def test_biphase_loopback():
    for _ in range(10):
        bits = _random_bits(144)
        assert modem.biphase_demodulate(modem.biphase_modulate(bits)) == bits


def test_biphase_odd_samples_per_bit_rejected():
    with pytest.raises(modem.ModemError):
        modem.biphase_modulate("01", 1200)


@given(st.sampled_from(["adsb", "ais", "epirb"]), st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_dispatch_loopback(protocol, seed):
    gen = np.random.default_rng(seed)
    n = {"adsb": 112, "ais": 168, "epirb": 144}[protocol]
    bits = _random_bits(n, gen)
    got = modem.demodulate(protocol, modem.modulate(protocol, bits))
    assert len(got) == 1 and got[0][1][:n] == bits


# --- noise and jamming ---------------------------------------------------------------------


def test_awgn_deterministic_and_scaled():
    iq = modem.IqBuffer(np.zeros(200_000), 2e6)
    a = modem.add_awgn(iq, 10.0, seed=1)
    b = modem.add_awgn(iq, 10.0, seed=1)
    assert np.array_equal(a.samples, b.samples)
    power = np.mean(np.abs(a.samples) ** 2)
    assert power == pytest.approx(0.1, rel=0.02)


def test_cw_at_zero_offset_constant():
    x = modem.jam_waveform("cw_tone", 0.01, 48_000, amplitude=0.5).samples
    assert np.all(x == x[0]) and abs(x[0]) == 0.5


def test_noise_deterministic_and_bounded():
    a = modem.jam_waveform("gaussian_noise", 0.01, 96_000, seed=7, amplitude=0.8)
    b = modem.jam_waveform("gaussian_noise", 0.01, 96_000, seed=7, amplitude=0.8)
    assert np.array_equal(a.samples, b.samples)
    assert np.max(np.abs(a.samples)) <= 0.8 + 1e-12


def test_swept_tone_midpoint_frequency():
    sr, dur, f0, f1 = 96_000, 0.05, -10_000.0, 30_000.0
    x = modem.jam_waveform("swept_tone", dur, sr, f0=f0, f1=f1).samples
    mid = len(x) // 2
    inst = np.angle(x[mid + 1] * np.conj(x[mid])) * sr / (2 * math.pi)
    assert inst == pytest.approx((f0 + f1) / 2, abs=sr / len(x) * 2)
    assert np.max(np.abs(x)) <= 1.0 + 1e-12


def test_unknown_jammer():
    with pytest.raises(modem.ModemError):
        modem.jam_waveform("laser", 0.1, 1000)


# --- files --------------------------------------------------------------------------------


def test_cf32_round_trip_bit_identical(tmp_path):
    x = (rng.normal(size=500) + 1j * rng.normal(size=500)).astype(np.complex64).astype(np.complex128)
    path = tmp_path / "a.cf32"
    modem.iq_write(modem.IqBuffer(x, 2e6, 1090e6), path)
    back = modem.iq_read(path)
    assert np.array_equal(back.samples, x)
    assert back.sample_rate == 2e6 and back.center_freq_label == 1090e6
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    assert raw[0] == np.float32(x[0].real) and raw[1] == np.float32(x[0].imag)


def test_cs8_round_trip(tmp_path):
    x = np.exp(1j * rng.uniform(0, 2 * math.pi, 300))
    path = tmp_path / "a.cs8"
    modem.iq_write(modem.IqBuffer(x, 96_000), path, "cs8")
    back = modem.iq_read(path)
    assert np.max(np.abs(back.samples.real - x.real)) <= 1 / 127
    assert np.max(np.abs(back.samples.imag - x.imag)) <= 1 / 127


def test_empty_buffer(tmp_path):
    path = tmp_path / "e.cf32"
    modem.iq_write(modem.IqBuffer(np.zeros(0), 48_000), path)
    assert path.read_bytes() == b""
    meta = modem.read_meta(path)
    assert meta["format"] == "cf32" and float(meta["sample_rate"]) == 48_000
    assert len(modem.iq_read(path)) == 0


def test_truncated_file_rejected(tmp_path):
    path = tmp_path / "t.cf32"
    modem.iq_write(modem.IqBuffer(np.ones(4), 2e6), path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(modem.IqFormatError):
        modem.iq_read(path)


def test_missing_sidecar(tmp_path):
    path = tmp_path / "x.cf32"
    path.write_bytes(b"")
    with pytest.raises(modem.IqFormatError):
        modem.iq_read(path)


def test_segments_split_on_gap():
    entries = [(0.0, "0" * 112), (150.0, "0" * 112), (5000.0, "0" * 112)]
    groups = modem.segments("adsb", entries, max_gap_us=200)
    assert [len(g) for g in groups] == [2, 1]
