"""Packet classes, CRC-16 checksumming, and the data-frame wire layout.

Three QoS classes ride a 2-bit type code: 00 emergency (p=1), 01 error-
sensitive (p=2), 10 normal (p=3). Frames are big-endian: 16-bit header,
type byte (high bits zero), 8-bit source and destination, 32-bit timestamp in
milliseconds since simulation start, 16-bit payload length, payload bytes,
16-bit CRC over everything preceding it.

Node identifiers wider than 8 bits wrap modulo 256 on the wire; the in-memory
path keeps full ids and frames are only materialized where byte-level fidelity
matters (corruption detection, wire tests).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum


class PacketClass(IntEnum):
    EMERGENCY = 1
    ERROR_SENSITIVE = 2
    NORMAL = 3

    @property
    def code(self) -> int:
        """2-bit wire code: 00, 01, 10."""
        return self.value - 1


# Traffic-kind tags -> class. Canonical names plus the application examples
# the classes were defined around.
_KIND_TABLE = {
    "emergency": PacketClass.EMERGENCY,
    "cardiac_arrest": PacketClass.EMERGENCY,
    "alert": PacketClass.EMERGENCY,
    "error_sensitive": PacketClass.ERROR_SENSITIVE,
    "medical_image": PacketClass.ERROR_SENSITIVE,
    "diagnostic": PacketClass.ERROR_SENSITIVE,
    "normal": PacketClass.NORMAL,
    "temperature": PacketClass.NORMAL,
    "routine": PacketClass.NORMAL,
}


def classify(payload_kind: str) -> PacketClass:
    """Map a traffic-class tag to its packet class (and thereby its queue)."""
    try:
        return _KIND_TABLE[payload_kind.strip().lower().replace("-", "_").replace(" ", "_")]
    except KeyError:
        raise ValueError("unknown traffic kind %r" % payload_kind) from None


@dataclass
class DataPacket:
    header: int                  # 16-bit packet id + control
    packet_type: PacketClass
    source_id: int
    destination_id: int
    timestamp: float             # seconds since sim start
    payload: bytes = b""
    checksum: int = field(default=0)  # filled by frame_packet / parse_frame


# --- CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection) -------------

def _build_table():
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
        table.append(crc)
    return table


_CRC_TABLE = _build_table()


def compute_checksum(frame: bytes) -> int:
    crc = 0xFFFF
    for byte in frame:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[(crc >> 8) ^ byte]
    return crc


def frame_packet(packet: DataPacket) -> bytes:
    """Serialize to the wire layout, computing and appending the checksum."""
    if len(packet.payload) > 0xFFFF:
        raise ValueError("payload exceeds 16-bit length field")
    body = struct.pack(
        ">HBBBIH",
        packet.header & 0xFFFF,
        packet.packet_type.code,
        packet.source_id & 0xFF,
        packet.destination_id & 0xFF,
        int(round(packet.timestamp * 1000.0)) & 0xFFFFFFFF,
        len(packet.payload),
    ) + packet.payload
    packet.checksum = compute_checksum(body)
    return body + struct.pack(">H", packet.checksum)


def parse_frame(frame: bytes) -> DataPacket:
    """Inverse of frame_packet; does not verify the checksum (see verify_checksum)."""
    if len(frame) < 13:
        raise ValueError("frame shorter than fixed fields")
    header, code, src, dst, ts_ms, length = struct.unpack(">HBBBIH", frame[:11])
    if code not in (0, 1, 2):
        raise ValueError("invalid packet type code %d" % code)
    if len(frame) != 13 + length:
        raise ValueError("frame length mismatch")
    payload = frame[11:11 + length]
    (checksum,) = struct.unpack(">H", frame[11 + length:])
    return DataPacket(
        header=header,
        packet_type=PacketClass(code + 1),
        source_id=src,
        destination_id=dst,
        timestamp=ts_ms / 1000.0,
        payload=payload,
        checksum=checksum,
    )


def verify_checksum(frame: bytes) -> bool:
    """True when the trailing CRC matches the frame body; False means corrupt."""
    if len(frame) < 2:
        raise ValueError("frame too short to carry a checksum")
    (stored,) = struct.unpack(">H", frame[-2:])
    return compute_checksum(frame[:-2]) == stored
