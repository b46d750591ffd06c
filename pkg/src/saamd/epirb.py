"""First-generation COSPAS-SARSAT 406 MHz beacon messages (long format).

Bit positions below are 1-indexed as in the beacon standard's message tables::

    1-15 bit sync | 16-24 frame sync | 25-85 PDF-1 | 86-106 BCH-1
    107-132 PDF-2 | 133-144 BCH-2

Two protocol families are supported for each beacon kind:

``user``
    user-location protocols; identity in PDF-1, position on a 4 minute grid
    in PDF-2.
``standard``
    standard location protocols; identity plus a 15 minute coarse position
    in PDF-1 and a signed offset (4 second steps) in PDF-2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping

from .bits import CodecError, DecodeResult, apply_overrides, bits_to_int, int_to_bits

LONG_BITS = 144
SHORT_BITS = 112
BIT_SYNC = "1" * 15
FRAME_SYNC_NORMAL = "000101111"
FRAME_SYNC_SELF_TEST = "011010000"

# BCH(82,61) and BCH(38,26) generators, leading term included.
BCH1_GENERATOR = 0b1001101101100111100011
BCH2_GENERATOR = 0b1010100111001

Protocol = Literal["maritime_mmsi", "aviation_icao24", "serial_plb"]
Family = Literal["user", "standard"]

BAUDOT = {
    "A": "111000", "B": "110011", "C": "101110", "D": "110010", "E": "110000",
    "F": "110110", "G": "101011", "H": "100101", "I": "101100", "J": "111010",
    "K": "111110", "L": "101001", "M": "100111", "N": "100110", "O": "100011",
    "P": "101101", "Q": "111101", "R": "101010", "S": "110100", "T": "100001",
    "U": "111100", "V": "101111", "W": "111001", "X": "110111", "Y": "110101",
    "Z": "110001", " ": "100100", "-": "011000", "/": "010111",
    "0": "001101", "1": "011101", "2": "011001", "3": "010000", "4": "001010",
    "5": "000001", "6": "010101", "7": "011100", "8": "001100", "9": "000011",
}
BAUDOT_INV = {v: k for k, v in BAUDOT.items()}

# user protocol codes (bits 37-39) and serial beacon types (bits 40-42)
_USER_CODE = {"maritime_mmsi": "010", "aviation_icao24": "011", "serial_plb": "011"}
_SERIAL_TYPE = {"aviation_icao24": "011", "serial_plb": "110"}
# standard location protocol codes (bits 37-40)
_STD_CODE = {"maritime_mmsi": "0010", "aviation_icao24": "0011", "serial_plb": "0111"}
_STD_CODE_INV = {v: k for k, v in _STD_CODE.items()}


def bch_encode(data_bits: str, generator: int) -> str:
    """Systematic check bits: remainder of ``data * x^deg`` modulo ``generator``."""
    deg = generator.bit_length() - 1
    if generator == BCH1_GENERATOR and len(data_bits) != 61:
        raise CodecError("BCH-1 protects exactly 61 bits")
    if generator == BCH2_GENERATOR and len(data_bits) != 26:
        raise CodecError("BCH-2 protects exactly 26 bits")
    reg = (int(data_bits, 2) if data_bits else 0) << deg
    for shift in range(reg.bit_length() - 1, deg - 1, -1):
        if reg >> shift & 1:
            reg ^= generator << (shift - deg)
    return int_to_bits(reg, deg)


@dataclass(frozen=True)
class BeaconMessage:
    """Decoded content of a long-format beacon message.

    ``identity`` is the full MMSI for maritime beacons (its first three
    digits must equal ``country_code``), the 24-bit aircraft address for
    ELTs, and the serial number for PLBs. Latitude/longitude are held at
    grid resolution; ``None`` means no encoded position.
    """

    protocol: Protocol
    identity: int
    country_code: int
    lat: float | None = None
    lon: float | None = None
    self_test: bool = False
    family: Family = "user"
    beacon_number: int = 0
    certificate: int = 0
    aux_device: int = 1
    position_source: int = 1
    format: Literal["long", "short"] = "long"

    @property
    def hex_id(self) -> str:
        """15-hex-character beacon ID (PDF-1 bits 26-85, zero-padded)."""
        return format(int(encode_beacon(self)[25:85], 2), "015X")


def make_beacon(
    protocol: Protocol,
    identity: int,
    lat: float | None = None,
    lon: float | None = None,
    country_code: int | None = None,
    family: Family = "user",
    **kw,
) -> BeaconMessage:
    """Build a message with its position snapped to the protocol grid."""
    if country_code is None:
        if protocol != "maritime_mmsi":
            raise CodecError("country_code required for non-maritime beacons")
        country_code = identity // 1_000_000
    if (lat is None) != (lon is None):
        raise CodecError("give both latitude and longitude or neither")
    if lat is not None:
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            raise CodecError("position out of range")
        lat, lon = quantize_position(lat, lon, family)
    return BeaconMessage(protocol, identity, country_code, lat, lon, family=family, **kw)


# --- position grids --------------------------------------------------------------


def _user_coord(value: float, deg_bits: int) -> tuple[str, int, int]:
    sign = "1" if value < 0 else "0"
    total_min = round(abs(value) * 15) * 4  # 4-minute steps
    return sign, total_min // 60, (total_min % 60) // 4


def _std_coord(value: float) -> tuple[str, int, int, int, int, int]:
    """Coarse quarter-degree plus signed offset in 4-second steps."""
    sign = "1" if value < 0 else "0"
    a = abs(value)
    quarters = round(a * 4)
    off_s = round((a - quarters / 4) * 3600 / 4) * 4
    off_sign = 1 if off_s >= 0 else 0
    off_s = abs(off_s)
    return sign, quarters // 4, quarters % 4, off_sign, off_s // 60, (off_s % 60) // 4


def quantize_position(lat: float, lon: float, family: Family = "user") -> tuple[float, float]:
    return _decode_position(_position_bits(lat, lon, family), family)


def _position_bits(lat: float | None, lon: float | None, family: Family) -> dict[str, str]:
    """PDF position fragments keyed by field name."""
    if family == "user":
        if lat is None:
            return {"lat": "0" + "1" * 7 + "0000", "lon": "0" + "1" * 8 + "0000"}
        s, d, m = _user_coord(lat, 7)
        t, e, n = _user_coord(lon, 8)
        return {
            "lat": s + int_to_bits(d, 7) + int_to_bits(m, 4),
            "lon": t + int_to_bits(e, 8) + int_to_bits(n, 4),
        }
    if lat is None:
        return {
            "coarse_lat": "0" + "1" * 7 + "00",
            "coarse_lon": "0" + "1" * 8 + "00",
            "lat_offset": "0" + "1" * 9,
            "lon_offset": "0" + "1" * 9,
        }
    s, d, q, os_, om, osec = _std_coord(lat)
    t, e, r, ot, pm, psec = _std_coord(lon)
    return {
        "coarse_lat": s + int_to_bits(d, 7) + int_to_bits(q, 2),
        "coarse_lon": t + int_to_bits(e, 8) + int_to_bits(r, 2),
        "lat_offset": str(os_) + int_to_bits(om, 5) + int_to_bits(osec, 4),
        "lon_offset": str(ot) + int_to_bits(pm, 5) + int_to_bits(psec, 4),
    }


def _decode_position(parts: Mapping[str, str], family: Family) -> tuple[float | None, float | None]:
    if family == "user":
        lat_b, lon_b = parts["lat"], parts["lon"]
        if lat_b[1:8] == "1" * 7:
            return None, None
        lat = int(lat_b[1:8], 2) + int(lat_b[8:12], 2) * 4 / 60
        lon = int(lon_b[1:9], 2) + int(lon_b[9:13], 2) * 4 / 60
    else:
        clat, clon = parts["coarse_lat"], parts["coarse_lon"]
        if clat[1:8] == "1" * 7:
            return None, None

        def offset(bits: str) -> float:
            if bits[1:] == "1" * 9:
                return 0.0
            mag = (int(bits[1:6], 2) * 60 + int(bits[6:10], 2) * 4) / 3600
            return mag if bits[0] == "1" else -mag

        lat = int(clat[1:8], 2) + int(clat[8:10], 2) / 4 + offset(parts["lat_offset"])
        lon = int(clon[1:9], 2) + int(clon[9:11], 2) / 4 + offset(parts["lon_offset"])
    lat = -lat if (parts.get("lat") or parts["coarse_lat"])[0] == "1" else lat
    lon = -lon if (parts.get("lon") or parts["coarse_lon"])[0] == "1" else lon
    return round(lat, 9), round(lon, 9)


def position_resolution(family: Family) -> float:
    """Grid step in degrees."""
    return 4 / 60 if family == "user" else 4 / 3600


# --- layouts ------------------------------------------------------------------

# 0-indexed (offset, width) of named fields in the 144-bit message.
_COMMON = {
    "bit_sync": (0, 15),
    "frame_sync": (15, 9),
    "format_flag": (24, 1),
    "protocol_flag": (25, 1),
    "country_code": (26, 10),
    "bch1": (85, 21),
    "bch2": (132, 12),
}

FIELD_MAPS: dict[tuple[Family, Protocol], dict[str, tuple[int, int]]] = {
    ("user", "maritime_mmsi"): {
        **_COMMON, "protocol_code": (36, 3), "identity": (39, 36), "beacon_number": (75, 6),
        "spare": (81, 2), "aux_device": (83, 2), "position_source": (106, 1),
        "lat": (107, 12), "lon": (119, 13),
    },
    ("user", "aviation_icao24"): {
        **_COMMON, "protocol_code": (36, 3), "beacon_type": (39, 3), "cert_flag": (42, 1),
        "identity": (43, 24), "beacon_number": (67, 6), "certificate": (73, 10),
        "aux_device": (83, 2), "position_source": (106, 1), "lat": (107, 12), "lon": (119, 13),
    },
    ("user", "serial_plb"): {
        **_COMMON, "protocol_code": (36, 3), "beacon_type": (39, 3), "cert_flag": (42, 1),
        "identity": (43, 20), "national": (63, 10), "certificate": (73, 10),
        "aux_device": (83, 2), "position_source": (106, 1), "lat": (107, 12), "lon": (119, 13),
    },
    ("standard", "maritime_mmsi"): {
        **_COMMON, "protocol_code": (36, 4), "identity": (40, 20), "beacon_number": (60, 4),
        "coarse_lat": (64, 10), "coarse_lon": (74, 11), "fixed": (106, 4),
        "position_source": (110, 1), "aux_device": (111, 1),
        "lat_offset": (112, 10), "lon_offset": (122, 10),
    },
    ("standard", "aviation_icao24"): {
        **_COMMON, "protocol_code": (36, 4), "identity": (40, 24),
        "coarse_lat": (64, 10), "coarse_lon": (74, 11), "fixed": (106, 4),
        "position_source": (110, 1), "aux_device": (111, 1),
        "lat_offset": (112, 10), "lon_offset": (122, 10),
    },
    ("standard", "serial_plb"): {
        **_COMMON, "protocol_code": (36, 4), "certificate": (40, 10), "identity": (50, 14),
        "coarse_lat": (64, 10), "coarse_lon": (74, 11), "fixed": (106, 4),
        "position_source": (110, 1), "aux_device": (111, 1),
        "lat_offset": (112, 10), "lon_offset": (122, 10),
    },
}

_ID_LIMITS = {
    ("user", "maritime_mmsi"): 10**9,
    ("user", "aviation_icao24"): 1 << 24,
    ("user", "serial_plb"): 1 << 20,
    ("standard", "maritime_mmsi"): 10**9,
    ("standard", "aviation_icao24"): 1 << 24,
    ("standard", "serial_plb"): 1 << 14,
}


def _baudot_digits(value: int, n: int) -> str:
    return "".join(BAUDOT[c] for c in str(value).zfill(n)[-n:])


def _validate(msg: BeaconMessage) -> None:
    key = (msg.family, msg.protocol)
    if key not in FIELD_MAPS:
        raise CodecError(f"unsupported protocol {msg.protocol!r} / family {msg.family!r}")
    if msg.format != "long":
        raise CodecError("only long-format messages can be encoded")
    if not 0 <= msg.country_code < 1024:
        raise CodecError("country code must fit 10 bits")
    if not 0 <= msg.identity < _ID_LIMITS[key]:
        raise CodecError(f"identity {msg.identity} overflows its field")
    if msg.protocol == "maritime_mmsi" and msg.identity // 1_000_000 != msg.country_code:
        raise CodecError("MMSI MID must equal the country code")
    fmap = FIELD_MAPS[key]
    if "beacon_number" in fmap:
        limit = 10 if key == ("user", "maritime_mmsi") else 1 << fmap["beacon_number"][1]
    else:
        limit = 1
    if not 0 <= msg.beacon_number < limit:
        raise CodecError("beacon number out of range")
    if not 0 <= msg.certificate < (1024 if "certificate" in fmap else 1):
        raise CodecError("certificate number out of range")
    if not 0 <= msg.aux_device < (4 if msg.family == "user" else 2):
        raise CodecError("aux device code out of range")


def encode_beacon(msg: BeaconMessage, raw: bool = False) -> str:
    """Return the 144-bit transmitted message."""
    if not raw:
        _validate(msg)
    fmap = FIELD_MAPS[(msg.family, msg.protocol)]
    bits = ["0"] * LONG_BITS
    values: dict[str, str] = {
        "bit_sync": BIT_SYNC,
        "frame_sync": FRAME_SYNC_SELF_TEST if msg.self_test else FRAME_SYNC_NORMAL,
        "format_flag": "1",
        "protocol_flag": "1" if msg.family == "user" else "0",
        "country_code": int_to_bits(msg.country_code, 10),
        "position_source": str(msg.position_source & 1),
    }
    values.update(_position_bits(msg.lat, msg.lon, msg.family))
    if msg.family == "user":
        values["protocol_code"] = _USER_CODE[msg.protocol]
        values["aux_device"] = int_to_bits(msg.aux_device, 2)
        if msg.protocol == "maritime_mmsi":
            values["identity"] = _baudot_digits(msg.identity % 1_000_000, 6)
            values["beacon_number"] = BAUDOT[str(msg.beacon_number % 10)]
        else:
            values["beacon_type"] = _SERIAL_TYPE[msg.protocol]
            values["cert_flag"] = "1" if msg.certificate else "0"
            values["certificate"] = int_to_bits(msg.certificate, 10)
            width = fmap["identity"][1]
            values["identity"] = int_to_bits(msg.identity, width)
            if msg.protocol == "aviation_icao24":
                values["beacon_number"] = int_to_bits(msg.beacon_number, 6)
    else:
        values["protocol_code"] = _STD_CODE[msg.protocol]
        values["fixed"] = "1101"
        values["aux_device"] = str(msg.aux_device & 1)
        width = fmap["identity"][1]
        ident = msg.identity % 1_000_000 if msg.protocol == "maritime_mmsi" else msg.identity
        values["identity"] = int_to_bits(ident, width)
        if msg.protocol == "maritime_mmsi":
            values["beacon_number"] = int_to_bits(msg.beacon_number, 4)
        if msg.protocol == "serial_plb":
            values["certificate"] = int_to_bits(msg.certificate, 10)
    for name, value in values.items():
        off, width = fmap[name]
        bits[off:off + width] = value.zfill(width)[-width:]
    return with_valid_bch("".join(bits))


def with_valid_bch(bits: str) -> str:
    pdf1 = bits[24:85]
    pdf2 = bits[106:132]
    return bits[:85] + bch_encode(pdf1, BCH1_GENERATOR) + pdf2 + bch_encode(pdf2, BCH2_GENERATOR)


def override_fields(bits: str, family: Family, protocol: Protocol, overrides: Mapping[str, int | str]) -> str:
    """Raw field overwrite; BCH fields are recomputed unless overridden."""
    out = apply_overrides(bits, FIELD_MAPS[(family, protocol)], overrides)
    if "bch1" in overrides or "bch2" in overrides:
        return out
    return with_valid_bch(out)


def split_long(bits: str) -> dict[str, str]:
    return {
        "sync": bits[:15],
        "frame_sync": bits[15:24],
        "pdf1": bits[24:85],
        "bch1": bits[85:106],
        "pdf2": bits[106:132],
        "bch2": bits[132:144],
    }


# --- decode ------------------------------------------------------------------


def _identify(bits: str) -> tuple[Family, Protocol] | None:
    if bits[25] == "1":
        code = bits[36:39]
        if code == "010":
            return "user", "maritime_mmsi"
        if code == "011":
            for proto, btype in _SERIAL_TYPE.items():
                if bits[39:42] == btype:
                    return "user", proto  # type: ignore[return-value]
        return None
    proto = _STD_CODE_INV.get(bits[36:40])
    return ("standard", proto) if proto else None  # type: ignore[return-value]


def field_map_for(bits: str) -> dict[str, tuple[int, int]]:
    """Layout matching the protocol bits of ``bits``; common fields if unknown."""
    kind = _identify(bits) if len(bits) >= 42 else None
    return dict(FIELD_MAPS[kind]) if kind else dict(_COMMON)


def decode_beacon(bits: str, lenient: bool = False) -> DecodeResult:
    """Decode a 144-bit message. Never raises.

    Strict mode rejects frames whose BCH fields fail; lenient mode returns
    whatever fields could be read plus the diagnosis tags.
    """
    if set(bits) - {"0", "1"}:
        return DecodeResult(None, ("bad_length",))
    if len(bits) == SHORT_BITS:
        return DecodeResult(None, ("short_format_unsupported",))
    if len(bits) != LONG_BITS:
        return DecodeResult(None, ("bad_length",))
    issues: list[str] = []
    parts = split_long(bits)
    sync = parts["frame_sync"]
    if parts["sync"] != BIT_SYNC or sync not in (FRAME_SYNC_NORMAL, FRAME_SYNC_SELF_TEST):
        issues.append("bad_frame_sync")
    if bch_encode(parts["pdf1"], BCH1_GENERATOR) != parts["bch1"]:
        issues.append("bch1_failed")
    if bch_encode(parts["pdf2"], BCH2_GENERATOR) != parts["bch2"]:
        issues.append("bch2_failed")
    if bits[24] != "1":
        issues.append("short_format_flag")
    if not lenient and issues:
        return DecodeResult(None, tuple(issues))
    kind = _identify(bits)
    if kind is None:
        return DecodeResult(None, tuple(issues + ["unknown_protocol"]))
    family, protocol = kind
    fmap = FIELD_MAPS[kind]

    def get(name: str) -> str:
        off, width = fmap[name]
        return bits[off:off + width]

    country = bits_to_int(get("country_code"))
    beacon_number = 0
    certificate = 0
    if family == "user" and protocol == "maritime_mmsi":
        ident_bits = get("identity")
        chars = [BAUDOT_INV.get(ident_bits[i:i + 6], "?") for i in range(0, 36, 6)]
        digits = "".join(chars)
        if not digits.isdigit():
            issues.append("field_out_of_range:identity")
            identity = -1
        else:
            identity = country * 1_000_000 + int(digits)
        bn = BAUDOT_INV.get(get("beacon_number"), "?")
        beacon_number = int(bn) if bn.isdigit() else 0
    elif protocol == "maritime_mmsi":
        last6 = bits_to_int(get("identity"))
        if last6 >= 1_000_000:
            issues.append("field_out_of_range:identity")
        identity = country * 1_000_000 + last6
        beacon_number = bits_to_int(get("beacon_number"))
    else:
        identity = bits_to_int(get("identity"))
        if "beacon_number" in fmap:
            beacon_number = bits_to_int(get("beacon_number"))
        if "certificate" in fmap:
            certificate = bits_to_int(get("certificate"))
    if family == "standard" and get("fixed") != "1101":
        issues.append("field_out_of_range:fixed")
    pos_parts = {k: get(k) for k in ("lat", "lon", "coarse_lat", "coarse_lon", "lat_offset", "lon_offset") if k in fmap}
    lat, lon = _decode_position(pos_parts, family)
    if lat is not None and (abs(lat) > 90 or abs(lon) > 180):
        issues.append("field_out_of_range:position")
    aux = bits_to_int(get("aux_device"))
    msg = BeaconMessage(
        protocol=protocol,
        identity=identity,
        country_code=country,
        lat=lat,
        lon=lon,
        self_test=sync == FRAME_SYNC_SELF_TEST,
        family=family,
        beacon_number=beacon_number,
        certificate=certificate,
        aux_device=aux,
        position_source=int(get("position_source")),
    )
    return DecodeResult(msg, tuple(issues))


def dump(msg: BeaconMessage) -> str:
    """Plotter-style one-block text rendering."""
    ident = {
        "maritime_mmsi": f"MMSI {msg.identity:09d}",
        "aviation_icao24": f"ICAO24 {msg.identity:06X}",
        "serial_plb": f"PLB serial {msg.identity}",
    }[msg.protocol]
    pos = "no position" if msg.lat is None else f"{msg.lat:+.4f} {msg.lon:+.4f}"
    mode = "SELF-TEST" if msg.self_test else "normal"
    return (
        f"country {msg.country_code} | {msg.family}-location {msg.protocol} | {ident} | "
        f"{pos} | {mode}"
    )
