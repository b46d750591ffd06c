"""Desk-scale security testing for avionics and maritime datalinks.

Codecs for ADS-B 1090ES, AIS, 406 MHz distress beacons, GDL-90 and CCSDS
space packets; a baseband modem; an attack scenario engine with a mutation
fuzzer; and a software receiver model to score attacks against.
"""

from __future__ import annotations

__version__ = "0.1.0"
