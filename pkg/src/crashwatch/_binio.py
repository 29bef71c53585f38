"""Header-plus-payload container shared by tensor dumps and net checkpoints.

Layout: 8-byte little-endian header length, UTF-8 JSON header, then a raw
little-endian float64 payload.
"""
import json
import struct

import numpy as np

_LEN = struct.Struct("<Q")


def dumps(header, payload):
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = np.ascontiguousarray(payload, dtype="<f8").tobytes()
    return _LEN.pack(len(head)) + head + body


def loads(blob):
    if len(blob) < _LEN.size:
        raise ValueError("truncated container")
    (n,) = _LEN.unpack_from(blob, 0)
    start = _LEN.size + n
    header = json.loads(blob[_LEN.size:start].decode("utf-8"))
    payload = np.frombuffer(blob[start:], dtype="<f8").astype(np.float64)
    return header, payload


def write(path, header, payload):
    with open(path, "wb") as fh:
        fh.write(dumps(header, payload))


def read(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
