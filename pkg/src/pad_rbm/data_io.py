"""Datasets (bars-and-stripes, text, IDX) and model files."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidArgumentError, LengthError, ParseError, VersionError
from .model import Dataset, ModelParams
from .perturbation import NoiseSource

MODEL_FORMAT_VERSION = 1
IDX_UBYTE_3D = 0x00000803


def _bars_and_stripes_pattern(d, bits, by_rows):
    col = np.asarray(bits, dtype=np.uint8)
    img = np.repeat(col[:, None], d, axis=1) if by_rows else np.repeat(col[None, :], d, axis=0)
    return img.ravel()


def generate_bars_and_stripes(d: int, src: NoiseSource | None = None, count: int | None = None) -> Dataset:
    """d x d bars-and-stripes images, flattened row-major.

    Without ``src`` all 2**(d+1) - 2 distinct patterns are emitted: row patterns
    in binary order, then column patterns minus the duplicated all-0/all-1.
    With ``src``, ``count`` patterns are drawn (fair orientation, fair bits).
    """
    if int(d) != d or d < 2:
        raise InvalidArgumentError(f"side length must be >= 2, got {d}")
    d = int(d)
    if src is None:
        out, seen = [], set()
        for by_rows in (True, False):
            for code in range(2**d):
                bits = [(code >> (d - 1 - k)) & 1 for k in range(d)]
                x = _bars_and_stripes_pattern(d, bits, by_rows)
                key = x.tobytes()
                if key not in seen:
                    seen.add(key)
                    out.append(x)
        return Dataset(np.stack(out))
    if count is None or count < 1:
        raise InvalidArgumentError("sampled mode needs count >= 1")
    out = []
    for _ in range(int(count)):
        by_rows = src.uniform() < 0.5
        bits = (src.uniform(d) < 0.5).astype(np.uint8)
        out.append(_bars_and_stripes_pattern(d, bits, by_rows))
    return Dataset(np.stack(out))


def load_text_dataset(path) -> Dataset:
    """One example per line, characters '0'/'1'."""
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            raise ParseError(f"{path}: line {lineno}: empty line")
        bad = set(line) - {"0", "1"}
        if bad:
            raise ParseError(f"{path}: line {lineno}: invalid character {sorted(bad)[0]!r}")
        if width is None:
            width = len(line)
        elif len(line) != width:
            raise ParseError(f"{path}: line {lineno}: length {len(line)}, expected {width}")
        rows.append([int(c) for c in line])
    if not rows:
        raise ParseError(f"{path}: empty dataset")
    return Dataset(np.array(rows, dtype=np.uint8))


def format_bits(rows) -> str:
    return "".join("".join("1" if x else "0" for x in row) + "\n" for row in rows)


def save_text_dataset(d: Dataset, path) -> None:
    Path(path).write_text(format_bits(d.examples), encoding="utf-8")


def load_idx_images(path, threshold: int = 128) -> Dataset:
    """IDX unsigned-byte 3-D file; pixel >= threshold becomes 1."""
    if not 0 <= int(threshold) <= 255:
        raise InvalidArgumentError("threshold must be a byte value")
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise LengthError(f"{path}: header truncated ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_UBYTE_3D:
        raise FormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_UBYTE_3D:08x}")
    need = count * rows * cols
    payload = np.frombuffer(raw, dtype=np.uint8, count=-1, offset=16)
    if payload.size < need:
        raise LengthError(f"{path}: payload has {payload.size} bytes, header declares {need}")
    pixels = payload[:need].reshape(count, rows * cols)
    return Dataset((pixels >= threshold).astype(np.uint8))


def save_idx_images(images, path) -> None:
    """Write a (count, rows, cols) uint8 array as IDX."""
    x = np.asarray(images, dtype=np.uint8)
    if x.ndim != 3:
        raise InvalidArgumentError("IDX images must be 3-D")
    Path(path).write_bytes(struct.pack(">IIII", IDX_UBYTE_3D, *x.shape) + x.tobytes())


def model_to_dict(p: ModelParams) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "n": p.n,
        "m": p.m,
        "W": p.W.ravel().tolist(),
        "a": p.a.tolist(),
        "b": p.b.tolist(),
    }


def save_model(p: ModelParams, path) -> None:
    """JSON document; floats use repr so they round-trip exactly."""
    Path(path).write_text(json.dumps(model_to_dict(p), indent=1) + "\n", encoding="utf-8")


def model_from_dict(doc) -> ModelParams:
    if not isinstance(doc, dict):
        raise ParseError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionError(f"unsupported model format_version {version!r}")
    missing = {"n", "m", "W", "a", "b"} - doc.keys()
    if missing:
        raise ParseError(f"model file missing fields {sorted(missing)}")
    n, m = doc["n"], doc["m"]
    if not (isinstance(n, int) and isinstance(m, int) and n >= 1 and m >= 1):
        raise ParseError("n and m must be positive integers")
    for key, size in (("W", n * m), ("a", n), ("b", m)):
        vals = doc[key]
        if not isinstance(vals, list) or len(vals) != size:
            raise ParseError(f"field {key} must be a list of length {size}")
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vals):
            raise ParseError(f"field {key} must contain only numbers")
    try:
        return ModelParams(np.array(doc["W"], dtype=np.float64).reshape(n, m), doc["a"], doc["b"])
    except InvalidArgumentError as exc:
        raise ParseError(str(exc)) from None


def load_model(path) -> ModelParams:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return model_from_dict(doc)
