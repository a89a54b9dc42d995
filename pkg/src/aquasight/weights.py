"""Binary weights file: magic "AQSW", version, spec text, parameters, checksum.

Layout (all integers little-endian):

    bytes 0..3   magic b"AQSW"
    u32          format version (currently 1)
    u32          spec text length, then that many UTF-8 bytes
                 (canonical NetworkSpec.to_text output)
    u32          parameter record count
    per record:  u32 name length + UTF-8 name
                 u32 ndim, then ndim * u32 dims
                 prod(dims) * float64 raw values
    final 8      checksum: first 8 bytes of SHA-256 over everything before it

The float payload is written byte-for-byte from the in-memory arrays, so a
save/load round trip reproduces every parameter bit-exactly, subnormals and
signed zeros included.  The checksum hex string doubles as the model version
reported by the service.
"""

from __future__ import annotations

import hashlib
import os
import struct
from pathlib import Path

import numpy as np

from aquasight.network import Network, NetworkSpec
from aquasight.tensor import Tensor

MAGIC = b"AQSW"
FORMAT_VERSION = 1
_CHECKSUM_LEN = 8


class WeightsFileError(Exception):
    """Base for all weights file problems."""


class BadMagicError(WeightsFileError):
    pass


class UnsupportedVersionError(WeightsFileError):
    pass


class ChecksumMismatchError(WeightsFileError):
    pass


class TruncatedFileError(WeightsFileError):
    pass


def _checksum(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()[:_CHECKSUM_LEN]


def serialize(net: Network) -> bytes:
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    spec_text = net.spec.to_text().encode("utf-8")
    parts.append(struct.pack("<I", len(spec_text)))
    parts.append(spec_text)
    records = net.sorted_params()
    parts.append(struct.pack("<I", len(records)))
    for name, param in records:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", param.data.ndim))
        parts.append(struct.pack(f"<{param.data.ndim}I", *param.data.shape))
        parts.append(np.ascontiguousarray(param.data, dtype="<f8").tobytes())
    payload = b"".join(parts)
    return payload + _checksum(payload)


def save_weights(net: Network, path) -> str:
    """Write the weights file atomically; returns its checksum as hex.

    The checksum is also stamped on the network so a freshly trained and
    saved model reports the same version the loader would."""
    blob = serialize(net)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
    net.weights_checksum = blob[-_CHECKSUM_LEN:].hex()
    return net.weights_checksum


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise TruncatedFileError(
                f"file ends at byte {len(self.blob)}, needed {self.pos + n}")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def deserialize(blob: bytes) -> tuple[Network, str]:
    """Parse a weights blob; returns (eval-mode network, checksum hex)."""
    if len(blob) < len(MAGIC) + 4 + _CHECKSUM_LEN:
        raise TruncatedFileError(f"only {len(blob)} bytes, not a weights file")
    if blob[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic {blob[:len(MAGIC)]!r}, expected {MAGIC!r}")
    version = struct.unpack("<I", blob[len(MAGIC):len(MAGIC) + 4])[0]
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"format version {version} unsupported (reader supports {FORMAT_VERSION})")
    payload, stored = blob[:-_CHECKSUM_LEN], blob[-_CHECKSUM_LEN:]
    if _checksum(payload) != stored:
        raise ChecksumMismatchError("checksum mismatch, file is corrupt")

    reader = _Reader(payload)
    reader.take(len(MAGIC) + 4)
    spec_text = reader.take(reader.u32()).decode("utf-8")
    spec = NetworkSpec.from_text(spec_text)
    count = reader.u32()
    params: dict[str, Tensor] = {}
    for _ in range(count):
        name = reader.take(reader.u32()).decode("utf-8")
        ndim = reader.u32()
        dims = struct.unpack(f"<{ndim}I", reader.take(4 * ndim))
        size = int(np.prod(dims)) if dims else 1
        raw = reader.take(8 * size)
        data = np.frombuffer(raw, dtype="<f8").reshape(dims).astype(np.float64)
        params[name] = Tensor(data, requires_grad=True)
    if reader.pos != len(payload):
        raise WeightsFileError(f"{len(payload) - reader.pos} trailing bytes after records")

    net = Network(spec, params, mode="eval")
    _check_params_match_spec(net)
    net.weights_checksum = stored.hex()
    return net, stored.hex()


def _check_params_match_spec(net: Network) -> None:
    from aquasight.network import build  # local import to avoid cycle at module load

    expected = build(net.spec, init_seed=0)
    got = {name: p.shape for name, p in net.params.items()}
    want = {name: p.shape for name, p in expected.params.items()}
    if got != want:
        raise WeightsFileError(
            f"parameter records do not match the embedded spec: {got} vs {want}")


def load_network(path) -> Network:
    """Load and verify a weights file; `weights_checksum` is set on the result."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"weights file not found: {path}")
    net, _ = deserialize(path.read_bytes())
    return net
