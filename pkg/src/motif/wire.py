"""Binary codec for the palm unit's serial stream.

Message layout (all multi-byte fields little-endian)::

    0xAA 0x55            sync marker
    u8   unit_id         0 = palm, 1-11 = finger joints
    u8   flags           bit 0: tactile grid present
    u32  timestamp_us
    9 x f32              acc xyz (m/s^2), gyro xyz (rad/s), mag xyz (uT)
    36 x u16             tactile grams, row-major 6x6 (only when flagged)
    u16  crc             CRC-16/CCITT-FALSE over everything after the sync

A message is 46 bytes without tactile data and 118 bytes with it.
"""

import binascii
import math
import struct
from dataclasses import dataclass

from .errors import CrcMismatch, IncompleteFrame, InvalidFrame, MalformedFrame

SYNC = b"\xaa\x55"
FLAG_TACTILE = 0x01
MAX_UNIT_ID = 11
TACTILE_ROWS = TACTILE_COLS = 6
TACTILE_CELLS = TACTILE_ROWS * TACTILE_COLS
TACTILE_PITCH_MM = 2.5
TACTILE_TRIGGER_G = 20

_HEADER = struct.Struct("<BBI")
_IMU = struct.Struct("<9f")
_TACTILE = struct.Struct("<36H")
_CRC = struct.Struct("<H")

BASE_LENGTH = len(SYNC) + _HEADER.size + _IMU.size + _CRC.size
TACTILE_LENGTH = BASE_LENGTH + _TACTILE.size


def crc16_ccitt_false(data, crc=0xFFFF):
    """CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no xorout)."""
    return binascii.crc_hqx(data, crc)


def message_length(has_tactile):
    return TACTILE_LENGTH if has_tactile else BASE_LENGTH


@dataclass(frozen=True)
class FrameStreamConfig:
    tick_interval_us: int = 2000
    baud: int = 115200

    def __post_init__(self):
        if self.tick_interval_us <= 0:
            raise InvalidFrame("tick_interval_us must be positive")
        if self.baud <= 0:
            raise InvalidFrame("baud must be positive")


@dataclass(frozen=True)
class SensorFrame:
    """One reading from a single sensing unit.

    Vectors are stored as tuples of floats. They travel as binary32, so a
    frame survives a round trip bit-exactly only when its components are
    already float32-representable.
    """

    unit_id: int
    timestamp_us: int
    acc: tuple
    gyro: tuple
    mag: tuple
    tactile: tuple = None

    def __post_init__(self):
        if not 0 <= self.unit_id <= MAX_UNIT_ID:
            raise InvalidFrame(f"unit_id {self.unit_id} outside [0, {MAX_UNIT_ID}]")
        if not 0 <= self.timestamp_us < 2**32:
            raise InvalidFrame(f"timestamp_us {self.timestamp_us} does not fit in u32")
        for name in ("acc", "gyro", "mag"):
            vec = tuple(float(v) for v in getattr(self, name))
            if len(vec) != 3:
                raise InvalidFrame(f"{name} must have 3 components")
            object.__setattr__(self, name, vec)
        if self.tactile is not None:
            grid = tuple(int(v) for v in self.tactile)
            if len(grid) != TACTILE_CELLS:
                raise InvalidFrame(f"tactile grid must hold {TACTILE_CELLS} values")
            if any(v < 0 or v > 0xFFFF for v in grid):
                raise InvalidFrame("tactile values must be in [0, 65535] grams")
            object.__setattr__(self, "tactile", grid)

    @property
    def has_tactile(self):
        return self.tactile is not None

    @property
    def imu(self):
        return self.acc + self.gyro + self.mag


def encode_frame(frame):
    flags = FLAG_TACTILE if frame.has_tactile else 0
    body = _HEADER.pack(frame.unit_id, flags, frame.timestamp_us) + _IMU.pack(*frame.imu)
    if frame.has_tactile:
        body += _TACTILE.pack(*frame.tactile)
    return SYNC + body + _CRC.pack(crc16_ccitt_false(body))


def decode_frame(data):
    """Decode the first message found in ``data``.

    Returns ``(frame, consumed)`` where ``consumed`` counts any garbage skipped
    before the sync marker plus the message itself.

    Raises IncompleteFrame when the buffer ends before a whole message is
    available; its ``consumed`` is the number of leading bytes that can safely
    be discarded. Raises CrcMismatch (or MalformedFrame for an impossible
    header) with ``consumed`` pointing one byte past the rejected sync marker.
    """
    return _decode_at(bytes(data), 0)


def _decode_at(data, pos):
    # offsets carried in exceptions are relative to pos
    start = data.find(SYNC, pos)
    if start < 0:
        keep = 1 if data.endswith(SYNC[:1]) else 0
        raise IncompleteFrame("no sync marker", consumed=len(data) - keep - pos)
    if len(data) - start < len(SYNC) + 2:
        raise IncompleteFrame("header truncated", consumed=start - pos)

    unit_id, flags = data[start + 2], data[start + 3]
    if flags & ~FLAG_TACTILE or unit_id > MAX_UNIT_ID:
        raise MalformedFrame(
            f"bad header (unit_id={unit_id}, flags={flags:#04x})", consumed=start + 1 - pos
        )
    length = message_length(flags & FLAG_TACTILE)
    if len(data) - start < length:
        raise IncompleteFrame("message truncated", consumed=start - pos)

    end = start + length
    body = data[start + len(SYNC) : end - _CRC.size]
    (crc,) = _CRC.unpack_from(data, end - _CRC.size)
    if crc16_ccitt_false(body) != crc:
        raise CrcMismatch(f"crc mismatch at offset {start}", consumed=start + 1 - pos)

    _, _, timestamp_us = _HEADER.unpack_from(body, 0)
    imu = _IMU.unpack_from(body, _HEADER.size)
    tactile = None
    if flags & FLAG_TACTILE:
        tactile = _TACTILE.unpack_from(body, _HEADER.size + _IMU.size)
    frame = SensorFrame(unit_id, timestamp_us, imu[0:3], imu[3:6], imu[6:9], tactile)
    return frame, end - pos


@dataclass
class StreamResult:
    frames: list
    dropped: int = 0

    def __iter__(self):
        return iter((self.frames, self.dropped))


def decode_stream(data):
    """Decode every recoverable message in a complete buffer.

    Corrupt candidates are skipped one byte past their sync marker and counted
    in ``dropped``; decoding never raises.
    """
    data = bytes(data)
    frames = []
    dropped = 0
    pos = 0
    while pos < len(data):
        try:
            frame, consumed = _decode_at(data, pos)
        except IncompleteFrame as exc:
            # the buffer is final, so a truncated candidate can only be a
            # false sync; look for a later marker
            nxt = data.find(SYNC, pos + exc.consumed + 1)
            if nxt < 0:
                break
            pos = nxt
            continue
        except (CrcMismatch, MalformedFrame) as exc:
            dropped += 1
            pos += exc.consumed
            continue
        frames.append(frame)
        pos += consumed
    return StreamResult(frames, dropped)


def frames_equal(a, b):
    """Bitwise equality, treating NaN payloads as equal to themselves."""
    if (a.unit_id, a.timestamp_us, a.tactile) != (b.unit_id, b.timestamp_us, b.tactile):
        return False
    for x, y in zip(a.imu, b.imu):
        if struct.pack("<f", x) != struct.pack("<f", y) and not (math.isnan(x) and math.isnan(y)):
            return False
    return True
