"""Baseband IQ synthesis and recovery.

Waveforms: PPM for 1090ES, GMSK for AIS, biphase-L phase modulation for
406 MHz beacons, plus jamming signals. No RF hardware is touched; IQ files
with a ``.meta`` sidecar are the hand-off point to SDR replay tools.

PPM detector constants were fixed with :func:`calibrate_ppm` at 20 dB SNR
(1000 frames, seed 0): full recovery and zero false alarms in 1 s of noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .fileio import atomic_write

DEFAULT_RATES = {"ppm": 2_000_000, "gmsk": 96_000, "biphase": 48_000}
PROTOCOL_WAVEFORM = {"adsb": "ppm", "ais": "gmsk", "epirb": "biphase"}

PPM_PREAMBLE_CHIPS = (0, 2, 7, 9)  # half-microsecond chips carrying a pulse
PPM_FRAME_US = 120
PPM_SCORE_THRESHOLD = 0.6
PPM_MIN_CONFIDENCE = 0.7
PPM_ABS_FLOOR = 0.05

BIPHASE_INDEX = 1.1  # radians


class ModemError(ValueError):
    pass


@dataclass
class IqBuffer:
    samples: np.ndarray
    sample_rate: float
    center_freq_label: float = 0.0
    peak: float = 1.0

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ModemError("sample rate must be positive")
        self.samples = np.asarray(self.samples, dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _bits_array(bits: str | Sequence[int]) -> np.ndarray:
    if isinstance(bits, str):
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.asarray(bits, dtype=np.uint8)


def _bits_str(arr: np.ndarray) -> str:
    return (arr.astype(np.uint8) + ord("0")).tobytes().decode("ascii")


# --- PPM ---------------------------------------------------------------------


def _ppm_half(sample_rate: float) -> int:
    if sample_rate < 2e6:
        raise ModemError("PPM needs at least 2 Msps")
    half = sample_rate / 2e6
    if half != int(half):
        raise ModemError("PPM sample rate must be a multiple of 2 Msps")
    return int(half)


def ppm_modulate(frame_bits: str, sample_rate: float = 2e6, amplitude: float = 1.0) -> IqBuffer:
    half = _ppm_half(sample_rate)
    chips = np.zeros(16 + 2 * len(frame_bits), dtype=np.float64)
    chips[list(PPM_PREAMBLE_CHIPS)] = 1.0
    b = _bits_array(frame_bits)
    chips[16::2] = b
    chips[17::2] = 1 - b
    return IqBuffer(np.repeat(chips, half) * amplitude, sample_rate, 1090e6, amplitude)


def _chip_sums(mag: np.ndarray, half: int, n_chips: int) -> np.ndarray:
    """``out[k, i]`` = energy of chip ``k`` for a frame starting at sample ``i``."""
    cs = np.concatenate(([0.0], np.cumsum(mag)))
    n_start = len(mag) - n_chips * half + 1
    if n_start <= 0:
        return np.zeros((n_chips, 0))
    idx = np.arange(n_start)
    return np.stack([cs[idx + (k + 1) * half] - cs[idx + k * half] for k in range(n_chips)])


def ppm_demodulate(
    iq: IqBuffer,
    sample_rate: float | None = None,
    n_bits: int = 112,
    start_us: float = 0.0,
) -> list[tuple[float, str]]:
    """Detect preambles and slice bits; returns ``(timestamp_us, bits)``."""
    sr = sample_rate or iq.sample_rate
    half = _ppm_half(sr)
    mag = np.abs(iq.samples)
    n_chips = 16 + 2 * n_bits
    if len(mag) < n_chips * half:
        return []
    pre = _chip_sums(mag, half, 16)
    pulses = pre[list(PPM_PREAMBLE_CHIPS)].sum(axis=0) / (4 * half)
    quiet_idx = [k for k in range(16) if k not in PPM_PREAMBLE_CHIPS]
    quiet = pre[quiet_idx].sum(axis=0) / (12 * half)
    score = (pulses - quiet) / (pulses + quiet + 1e-12)
    floor = max(PPM_ABS_FLOOR, 4.0 * float(np.percentile(mag, 10)))
    n_start = len(mag) - n_chips * half + 1
    score = score[:n_start]
    pulses = pulses[:n_start]
    candidates = np.flatnonzero((score > PPM_SCORE_THRESHOLD) & (pulses > floor))
    cs = np.concatenate(([0.0], np.cumsum(mag)))
    out: list[tuple[float, str]] = []
    next_free = 0
    for i in candidates:
        if i < next_free:
            continue
        # a shifted preamble alias scores lower than the true start just after it
        hi = min(i + 16 * half + 1, n_start)
        i = int(i + np.argmax(score[i:hi]))
        starts = i + (16 + np.arange(2 * n_bits)) * half
        chip = cs[starts + half] - cs[starts]
        a, b = chip[0::2], chip[1::2]
        conf = np.abs(a - b) / (a + b + 1e-12)
        if conf.mean() < PPM_MIN_CONFIDENCE:
            continue
        out.append((start_us + i / (sr / 1e6), _bits_str((a > b).astype(np.uint8))))
        next_free = i + n_chips * half
    return out


# --- GMSK --------------------------------------------------------------------


def _sps(sample_rate: float, bitrate: float) -> int:
    sps = sample_rate / bitrate
    if sps != int(sps) or sps < 2:
        raise ModemError("sample rate must be an integer multiple (>= 2) of the bit rate")
    return int(sps)


def gaussian_taps(bt: float, sps: int, span: int = 4) -> np.ndarray:
    sigma = math.sqrt(math.log(2)) / (2 * math.pi * bt) * sps
    t = np.arange(-span * sps // 2, span * sps // 2 + 1)
    g = np.exp(-0.5 * (t / sigma) ** 2)
    return g / g.sum()


def gmsk_modulate(
    bits: str, sample_rate: float = 96_000, bt: float = 0.4, bitrate: float = 9600
) -> IqBuffer:
    sps = _sps(sample_rate, bitrate)
    nrz = 2.0 * _bits_array(bits) - 1.0
    freq = np.convolve(np.repeat(nrz, sps), gaussian_taps(bt, sps), mode="same")
    phase = np.cumsum(freq) * (math.pi / 2) / sps  # modulation index 0.5
    return IqBuffer(np.exp(1j * phase), sample_rate, 161.975e6)


def _discriminator(x: np.ndarray) -> np.ndarray:
    d = np.empty(len(x))
    if len(x):
        d[0] = np.angle(x[0]) if abs(x[0]) > 0 else 0.0
        d[1:] = np.angle(x[1:] * np.conj(x[:-1]))
    return d


def gmsk_demodulate(
    iq: IqBuffer, sample_rate: float | None = None, bitrate: float = 9600, n_bits: int | None = None
) -> str:
    """Quadrature discriminator with integrate-and-dump bit decisions.

    The bit clock is recovered by picking the window offset (within half a
    bit of the buffer start) that maximises the summed eye opening.
    """
    sr = sample_rate or iq.sample_rate
    sps = _sps(sr, bitrate)
    d = _discriminator(iq.samples)
    n = n_bits if n_bits is not None else int(round(len(d) / sps))
    if n <= 0:
        return ""
    cs = np.concatenate(([0.0], np.cumsum(d)))
    best, best_metric = None, -1.0
    for off in range(-(sps // 2), sps // 2 + 1):
        lo = np.clip(off + np.arange(n) * sps, 0, len(d))
        hi = np.clip(lo + sps, 0, len(d))
        sums = cs[hi] - cs[lo]
        metric = float(np.abs(sums).sum())
        if metric > best_metric + 1e-9:
            best, best_metric = sums, metric
    return _bits_str((best > 0).astype(np.uint8))


# --- biphase-L ------------------------------------------------------------------


def biphase_modulate(
    bits: str,
    sample_rate: float = 48_000,
    bitrate: float = 400,
    carrier_prefix_ms: float = 160.0,
    mod_index: float = BIPHASE_INDEX,
) -> IqBuffer:
    spb = _sps(sample_rate, bitrate)
    if spb % 2:
        raise ModemError("biphase needs an even number of samples per bit")
    prefix = int(round(carrier_prefix_ms * sample_rate / 1000))
    b = _bits_array(bits).astype(np.float64)
    sign = 2 * b - 1  # bit 1: +index then -index
    halves = np.stack([sign, -sign], axis=1).reshape(-1) * mod_index
    phase = np.concatenate([np.zeros(prefix), np.repeat(halves, spb // 2)])
    return IqBuffer(np.exp(1j * phase), sample_rate, 406.028e6)


def biphase_demodulate(
    iq: IqBuffer,
    sample_rate: float | None = None,
    bitrate: float = 400,
    mod_index: float = BIPHASE_INDEX,
    n_bits: int | None = None,
) -> str:
    """Recover bits from one burst that starts with an unmodulated carrier."""
    sr = sample_rate or iq.sample_rate
    spb = _sps(sr, bitrate)
    x = iq.samples
    if len(x) < spb:
        return ""
    ref_len = max(spb, min(len(x) // 8, int(0.02 * sr)))
    ref = np.angle(np.mean(x[:ref_len]))
    phase = np.angle(x * np.exp(-1j * ref))
    # smooth a little so noise does not trigger the start search
    k = max(1, spb // 8)
    smooth = np.convolve(phase, np.ones(k) / k, mode="same")
    moved = np.flatnonzero(np.abs(smooth[ref_len:]) > mod_index / 2)
    if not len(moved):
        return ""
    start = ref_len + int(moved[0]) - k // 2
    start = max(start, 0)
    n = n_bits if n_bits is not None else (len(x) - start) // spb
    half = spb // 2
    bits = []
    for i in range(n):
        lo = start + i * spb
        if lo + spb > len(x):
            break
        first = phase[lo:lo + half].mean()
        second = phase[lo + half:lo + spb].mean()
        bits.append("1" if first > second else "0")
    return "".join(bits)


# --- bursts and noise ----------------------------------------------------------------


def find_bursts(iq: IqBuffer, threshold: float = 0.5, min_gap: int | None = None) -> list[tuple[int, int]]:
    """Sample ranges ``[start, end)`` where the envelope exceeds ``threshold``."""
    mag = np.abs(iq.samples)
    on = mag > threshold * iq.peak
    if not on.any():
        return []
    gap = min_gap if min_gap is not None else max(4, int(iq.sample_rate * 1e-3))
    idx = np.flatnonzero(on)
    breaks = np.flatnonzero(np.diff(idx) > gap)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks] + 1, [idx[-1] + 1]))
    return list(zip(starts.tolist(), ends.tolist()))


def add_awgn(iq: IqBuffer, snr_db: float, seed: int = 0) -> IqBuffer:
    """Complex white noise; SNR is measured against the configured peak power."""
    rng = np.random.default_rng(seed)
    sigma = iq.peak / math.sqrt(10 ** (snr_db / 10)) / math.sqrt(2)
    noise = rng.normal(0, sigma, len(iq)) + 1j * rng.normal(0, sigma, len(iq))
    return IqBuffer(iq.samples + noise, iq.sample_rate, iq.center_freq_label, iq.peak)


# --- jamming ---------------------------------------------------------------------------


def jam_waveform(
    kind: str,
    duration: float,
    sample_rate: float,
    seed: int = 0,
    amplitude: float = 1.0,
    **params: float,
) -> IqBuffer:
    """``gaussian_noise``, ``cw_tone`` (``offset_hz``) or ``swept_tone`` (``f0``, ``f1``)."""
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    if kind == "gaussian_noise":
        rng = np.random.default_rng(seed)
        rms = params.get("rms", amplitude / 2)
        x = (rng.normal(0, 1, n) + 1j * rng.normal(0, 1, n)) * rms / math.sqrt(2)
        mag = np.abs(x)
        over = mag > amplitude
        x[over] *= amplitude / mag[over]
    elif kind == "cw_tone":
        x = amplitude * np.exp(2j * math.pi * params.get("offset_hz", 0.0) * t)
    elif kind == "swept_tone":
        f0 = params.get("f0", -sample_rate / 4)
        f1 = params.get("f1", sample_rate / 4)
        x = amplitude * np.exp(2j * math.pi * (f0 * t + (f1 - f0) * t * t / (2 * duration)))
    else:
        raise ModemError(f"unknown jamming waveform {kind!r}")
    return IqBuffer(x, sample_rate, 0.0, amplitude)


# --- protocol dispatch ---------------------------------------------------------------------


def modulate(protocol: str, bits: str, sample_rate: float | None = None) -> IqBuffer:
    wf = PROTOCOL_WAVEFORM.get(protocol)
    if wf is None:
        raise ModemError(f"no waveform for protocol {protocol!r}")
    sr = sample_rate or DEFAULT_RATES[wf]
    if wf == "ppm":
        return ppm_modulate(bits, sr)
    if wf == "gmsk":
        return gmsk_modulate(bits, sr)
    return biphase_modulate(bits, sr)


def demodulate(protocol: str, iq: IqBuffer, start_us: float = 0.0) -> list[tuple[float, str]]:
    """All frames in a buffer as ``(timestamp_us, bits)``."""
    wf = PROTOCOL_WAVEFORM.get(protocol)
    if wf is None:
        raise ModemError(f"no waveform for protocol {protocol!r}")
    if wf == "ppm":
        return ppm_demodulate(iq, start_us=start_us)
    out = []
    for lo, hi in find_bursts(iq):
        burst = IqBuffer(iq.samples[lo:hi], iq.sample_rate, iq.center_freq_label, iq.peak)
        bits = gmsk_demodulate(burst) if wf == "gmsk" else biphase_demodulate(burst)
        if bits:
            out.append((start_us + lo / iq.sample_rate * 1e6, bits))
    return out


def render(
    protocol: str,
    entries: Sequence[tuple[float, str]],
    sample_rate: float | None = None,
    start_us: float | None = None,
    tail_us: float = 100.0,
) -> tuple[float, IqBuffer]:
    """Sum frames onto one timeline; returns ``(start_us, buffer)``.

    Overlapping frames add up, which models on-air collisions.
    """
    wf = PROTOCOL_WAVEFORM[protocol]
    sr = sample_rate or DEFAULT_RATES[wf]
    if not entries:
        return start_us or 0.0, IqBuffer(np.zeros(0), sr)
    t0 = min(t for t, _ in entries) if start_us is None else start_us
    bursts = [(int(round((t - t0) * sr / 1e6)), modulate(protocol, bits, sr).samples) for t, bits in entries]
    total = max(off + len(s) for off, s in bursts) + int(tail_us * sr / 1e6)
    out = np.zeros(total, dtype=np.complex128)
    for off, s in bursts:
        out[off:off + len(s)] += s
    return t0, IqBuffer(out, sr)


def frame_duration_us(protocol: str, n_bits: int) -> float:
    wf = PROTOCOL_WAVEFORM[protocol]
    if wf == "ppm":
        return 8.0 + n_bits
    if wf == "gmsk":
        return n_bits * 1e6 / 9600
    return 160_000.0 + n_bits * 1e6 / 400


def segments(
    protocol: str, entries: Sequence[tuple[float, str]], max_gap_us: float = 2000.0
) -> list[list[tuple[float, str]]]:
    """Split time-sorted entries wherever the silence exceeds ``max_gap_us``."""
    groups: list[list[tuple[float, str]]] = []
    last_end = -math.inf
    for t, bits in sorted(entries, key=lambda e: e[0]):
        if not groups or t - last_end > max_gap_us:
            groups.append([])
        groups[-1].append((t, bits))
        last_end = max(last_end, t + frame_duration_us(protocol, len(bits)))
    return groups


def calibrate_ppm(
    snr_db: float = 20.0, n_frames: int = 1000, sample_rate: float = 2e6, seed: int = 0
) -> dict[str, float]:
    """Monte-Carlo run used to fix the PPM detector thresholds."""
    rng = np.random.default_rng(seed)
    half = _ppm_half(sample_rate)
    frame_len = (16 + 224) * half
    spacing = frame_len + 200 * half
    frames = ["".join(rng.choice(["0", "1"], 112)) for _ in range(n_frames)]
    x = np.zeros(spacing * n_frames, dtype=np.complex128)
    for k, f in enumerate(frames):
        x[k * spacing:k * spacing + frame_len] = ppm_modulate(f, sample_rate).samples
    noisy = add_awgn(IqBuffer(x, sample_rate), snr_db, seed)
    got = {round(t * sample_rate / 1e6): b for t, b in ppm_demodulate(noisy)}
    hits = sum(got.get(k * spacing) == f for k, f in enumerate(frames))
    noise_only = add_awgn(IqBuffer(np.zeros(int(sample_rate)), sample_rate), snr_db, seed + 1)
    return {"recovery": hits / n_frames, "false_alarms_per_s": float(len(ppm_demodulate(noise_only)))}


# --- files -------------------------------------------------------------------------------


class IqFormatError(ValueError):
    pass


def iq_write(
    buffer: IqBuffer, path: str | Path, format: str = "cf32", extra: dict[str, object] | None = None
) -> None:
    """Write samples plus the ``.meta`` sidecar; ``extra`` adds sidecar keys."""
    path = Path(path)
    x = buffer.samples
    inter = np.empty(2 * len(x), dtype=np.float64)
    inter[0::2], inter[1::2] = x.real, x.imag
    if format == "cf32":
        data = inter.astype("<f4").tobytes()
    elif format == "cs8":
        data = np.clip(np.round(inter * 127), -127, 127).astype(np.int8).tobytes()
    else:
        raise IqFormatError(f"unknown IQ format {format!r}")
    atomic_write(path, data)
    meta = (
        f"sample_rate={buffer.sample_rate!r}\n"
        f"center_freq_label={buffer.center_freq_label!r}\n"
        f"format={format}\n"
    )
    for key, value in sorted((extra or {}).items()):
        meta += f"{key}={value}\n"
    atomic_write(Path(str(path) + ".meta"), meta.encode("utf-8"))


def read_meta(path: str | Path) -> dict[str, str]:
    meta_path = Path(str(path) + ".meta")
    if not meta_path.exists():
        raise IqFormatError(f"missing metadata sidecar {meta_path}")
    out = {}
    for line in meta_path.read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    if "sample_rate" not in out:
        raise IqFormatError("metadata lacks sample_rate")
    return out


def iq_read(path: str | Path, format: str | None = None) -> IqBuffer:
    meta = read_meta(path)
    fmt = format or meta.get("format", "cf32")
    blob = Path(path).read_bytes()
    if fmt == "cf32":
        if len(blob) % 8:
            raise IqFormatError("cf32 file is not a whole number of IQ pairs")
        inter = np.frombuffer(blob, dtype="<f4").astype(np.float64)
    elif fmt == "cs8":
        if len(blob) % 2:
            raise IqFormatError("cs8 file is not a whole number of IQ pairs")
        inter = np.frombuffer(blob, dtype=np.int8).astype(np.float64) / 127.0
    else:
        raise IqFormatError(f"unknown IQ format {fmt!r}")
    return IqBuffer(
        inter[0::2] + 1j * inter[1::2],
        float(meta["sample_rate"]),
        float(meta.get("center_freq_label", 0.0)),
    )
