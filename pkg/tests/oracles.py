"""Second implementations used to pin the production code.

Each oracle is written differently from the code it checks: coefficient-list
polynomial arithmetic instead of integer shifting, non-reflected CRC over
bit-reversed bytes instead of the reflected register, string concatenation
instead of struct packing.
"""

from __future__ import annotations

from functools import reduce


def gf2_mod(dividend: list[int], divisor: list[int]) -> list[int]:
    """Remainder of GF(2) polynomials given as MSB-first coefficient lists."""
    rem = list(dividend)
    n = len(divisor)
    for i in range(len(rem) - n + 1):
        if rem[i]:
            for j in range(n):
                rem[i + j] ^= divisor[j]
    return rem[-(n - 1):]


def int_coeffs(value: int) -> list[int]:
    return [int(c) for c in bin(value)[2:]]


def crc24_oracle(bits88: str) -> int:
    """Mode S parity: remainder of data * x^24 modulo the 25-bit generator."""
    rem = gf2_mod([int(b) for b in bits88] + [0] * 24, int_coeffs(0x1FFF409))
    return int("".join(map(str, rem)), 2)


def mode_s_remainder(bits112: str) -> int:
    rem = gf2_mod([int(b) for b in bits112], int_coeffs(0x1FFF409))
    return int("".join(map(str, rem)), 2)


def _reflect(value: int, width: int) -> int:
    return int(format(value, f"0{width}b")[::-1], 2)


def crc16_x25_oracle(data: bytes) -> int:
    """CRC-16/X.25 via a left-shifting CCITT register on reflected bytes."""
    crc = 0xFFFF
    for byte in data:
        crc ^= _reflect(byte, 8) << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
    return _reflect(crc, 16) ^ 0xFFFF


def gdl90_table_oracle() -> list[int]:
    """Table built bit-serially per entry, the way the datalink ICD describes."""
    table = []
    for i in range(256):
        reg = [int(b) for b in format(i, "08b")] + [0] * 16
        table.append(int("".join(map(str, gf2_mod(reg, int_coeffs(0x11021)))), 2))
    return table


def gdl90_crc_oracle(data: bytes) -> int:
    # The table-driven GDL-90 routine is plain (unaugmented) division of the
    # message polynomial, so long division reproduces it directly.
    bits = [int(b) for byte in data for b in format(byte, "08b")]
    if len(bits) < 17:
        bits = [0] * (17 - len(bits)) + bits
    return int("".join(map(str, gf2_mod(bits, int_coeffs(0x11021)))), 2)


def bch_oracle(data: str, generator: int) -> str:
    deg = generator.bit_length() - 1
    rem = gf2_mod([int(b) for b in data] + [0] * deg, int_coeffs(generator))
    return "".join(map(str, rem))


def divides_x_n_plus_1(generator: int, n: int) -> bool:
    poly = [1] + [0] * (n - 1) + [1]
    return not any(gf2_mod(poly, int_coeffs(generator)))


def ccsds_header_oracle(version: int, ptype: int, sec: int, apid: int, flags: int, count: int, length: int) -> bytes:
    bits = (
        format(version, "03b") + format(ptype, "01b") + format(sec, "01b") + format(apid, "011b")
        + format(flags, "02b") + format(count, "014b") + format(length, "016b")
    )
    return bytes(int(bits[i:i + 8], 2) for i in range(0, 48, 8))


ARMOR_ALPHABET = "0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVW`abcdefghijklmnopqrstuvw"


def armor_oracle(value: int) -> str:
    return ARMOR_ALPHABET[value]


def nmea_checksum_oracle(body: str) -> str:
    return format(reduce(lambda a, c: a ^ ord(c), body, 0), "02X")


SIXBIT_CHARSET = {i: c for i, c in enumerate("#ABCDEFGHIJKLMNOPQRSTUVWXYZ#####_###############0123456789######")}
SIXBIT_CHARSET[32] = " "


def callsign_oracle(me_bits: str) -> str:
    return "".join(SIXBIT_CHARSET[int(me_bits[8 + 6 * i:14 + 6 * i], 2)] for i in range(8)).rstrip()
