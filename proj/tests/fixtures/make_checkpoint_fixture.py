"""Writes the checkpoint fixtures with a standalone encoder (struct + json only)."""
import json
import struct
import sys
from pathlib import Path

TENSORS = [
    ("layer.W", [2, 3], [0.5, -1.25, 3.0, 1e-3, -7.75, 2.0 ** -20]),
    ("layer.b", [2], [0.0, -0.0625]),
    ("table", [1, 1, 4], [1.0, 2.0, 3.0, 4.0]),
]
METADATA = {"d": 3, "kind": "fixture", "seed": 42, "vocab_hash": "00000000deadbeef", "z": 1}


def encode(dtype):
    out = bytearray(b"NLIGEN01")
    out += struct.pack("<I", len(TENSORS))
    fmt = "<d" if dtype == 1 else "<f"
    for name, dims, values in TENSORS:
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<BB", dtype, len(dims))
        for d in dims:
            out += struct.pack("<I", d)
        for v in values:
            out += struct.pack(fmt, v)
    meta = json.dumps(METADATA, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out += struct.pack("<I", len(meta)) + meta
    return bytes(out)


if __name__ == "__main__":
    here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    (here / "tiny_f64.nlig").write_bytes(encode(1))
    (here / "tiny_f32.nlig").write_bytes(encode(0))
