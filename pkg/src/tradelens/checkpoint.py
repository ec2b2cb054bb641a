"""Versioned binary checkpoint container.

Byte layout (all integers little-endian):

    offset  size  field
    0       4     magic bytes b"CTCK"
    4       2     format version, u16 (current version: 1)
    6       n     payload (see below)
    6+n     4     CRC-32 of the payload bytes, u32

    payload:
        u32 layer_count
        layer_count records, each starting with a u8 kind tag:
            1 conv        u32 out_channels, u32 in_channels,
                          u32 kernel_rows, u32 kernel_cols,
                          f64 x (out*in*rows*cols) weights, row-major,
                          f64 x out_channels biases
            2 leaky_relu  f64 slope
            3 max_pool    u8 pool_rows, u8 pool_cols (both 2)
            4 gap         no body
            5 softmax     no body

Floats are IEEE-754 binary64, little-endian, so a save/load round trip
reproduces parameters bit for bit.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .layers import (
    ConvSpec,
    GapSpec,
    KernelBank,
    LeakyReluSpec,
    MaxPoolSpec,
    SoftmaxSpec,
)
from .network import Network

__all__ = ["save_checkpoint", "load_checkpoint", "FORMAT_VERSION", "MAGIC"]

MAGIC = b"CTCK"
FORMAT_VERSION = 1

_CONV, _LEAKY, _POOL, _GAP, _SOFTMAX = 1, 2, 3, 4, 5


def _encode_payload(net: Network) -> bytes:
    chunks = [struct.pack("<I", len(net.specs))]
    for spec, bank in zip(net.specs, net.banks):
        if isinstance(spec, ConvSpec):
            chunks.append(
                struct.pack(
                    "<BIIII",
                    _CONV,
                    bank.out_channels,
                    bank.in_channels,
                    spec.kernel_rows,
                    spec.kernel_cols,
                )
            )
            chunks.append(np.ascontiguousarray(bank.weights, dtype="<f8").tobytes())
            chunks.append(np.ascontiguousarray(bank.biases, dtype="<f8").tobytes())
        elif isinstance(spec, LeakyReluSpec):
            chunks.append(struct.pack("<Bd", _LEAKY, spec.slope))
        elif isinstance(spec, MaxPoolSpec):
            chunks.append(struct.pack("<BBB", _POOL, spec.pool_rows, spec.pool_cols))
        elif isinstance(spec, GapSpec):
            chunks.append(struct.pack("<B", _GAP))
        else:
            chunks.append(struct.pack("<B", _SOFTMAX))
    return b"".join(chunks)


def save_checkpoint(net: Network, path) -> None:
    payload = _encode_payload(net)
    blob = (
        MAGIC
        + struct.pack("<H", FORMAT_VERSION)
        + payload
        + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    )
    Path(path).write_bytes(blob)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> Network:
    blob = Path(path).read_bytes()
    if len(blob) < 10:
        raise CheckpointError("file too short to be a checkpoint: %s" % path)
    if blob[:4] != MAGIC:
        raise CheckpointError("bad magic bytes, not a checkpoint file: %s" % path)
    (version,) = struct.unpack("<H", blob[4:6])
    if version != FORMAT_VERSION:
        raise CheckpointError(
            "unsupported checkpoint format version %d (this build reads %d)"
            % (version, FORMAT_VERSION)
        )
    payload, (stored_crc,) = blob[6:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise CheckpointError("checksum mismatch, checkpoint is corrupted: %s" % path)

    r = _Reader(payload)
    (layer_count,) = r.unpack("<I")
    specs, banks = [], []
    for _ in range(layer_count):
        (kind,) = r.unpack("<B")
        if kind == _CONV:
            out_c, in_c, kr, kc = r.unpack("<IIII")
            weights = np.frombuffer(r.take(8 * out_c * in_c * kr * kc), dtype="<f8")
            biases = np.frombuffer(r.take(8 * out_c), dtype="<f8")
            specs.append(ConvSpec(out_c, kr, kc))
            banks.append(KernelBank(weights.reshape(out_c, in_c, kr, kc).copy(), biases.copy()))
        elif kind == _LEAKY:
            (slope,) = r.unpack("<d")
            specs.append(LeakyReluSpec(slope))
            banks.append(None)
        elif kind == _POOL:
            pr, pc = r.unpack("<BB")
            specs.append(MaxPoolSpec(pr, pc))
            banks.append(None)
        elif kind == _GAP:
            specs.append(GapSpec())
            banks.append(None)
        elif kind == _SOFTMAX:
            specs.append(SoftmaxSpec())
            banks.append(None)
        else:
            raise CheckpointError("unknown layer kind tag %d" % kind)
    if r.pos != len(payload):
        raise CheckpointError("trailing bytes after the declared layer list")
    return Network(specs, banks)
