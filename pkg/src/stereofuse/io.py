"""Float maps (PFM), binary masks (PGM) and JSON run reports."""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FormatError, ShapeError


@dataclass
class FloatMap:
    """Single-channel float32 image with a per-pixel validity mask.

    Invalid pixels hold NaN in ``data`` so that the array alone is enough to
    recover the mask.
    """

    data: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.data.ndim != 2:
            raise ShapeError(f"FloatMap needs a 2-D array, got shape {self.data.shape}")
        if self.valid.shape != self.data.shape:
            raise ShapeError(f"mask shape {self.valid.shape} != data shape {self.data.shape}")
        if not np.all(np.isfinite(self.data[self.valid])):
            raise ValueError("valid pixels must be finite")
        self.data = np.where(self.valid, self.data, np.float32(np.nan)).astype(np.float32)

    @classmethod
    def from_array(cls, array, valid=None) -> "FloatMap":
        array = np.asarray(array)
        finite = np.isfinite(array)
        if valid is None:
            valid = finite
        else:
            valid = np.asarray(valid, dtype=bool) & finite
        return cls(np.where(valid, array, np.nan), valid)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def to_array(self, dtype=np.float64) -> np.ndarray:
        """Values as ``dtype``; invalid pixels are NaN."""
        return self.data.astype(dtype)


def _read_token_line(f) -> bytes:
    line = f.readline()
    if not line:
        raise FormatError("unexpected end of PFM header")
    return line.strip()


def read_float_map(path) -> FloatMap:
    """Read a grayscale ("Pf") PFM file."""
    with open(path, "rb") as f:
        magic = _read_token_line(f)
        if magic == b"PF":
            raise FormatError("color PFM ('PF') is not supported")
        if magic != b"Pf":
            raise FormatError(f"not a PFM file (magic {magic!r})")
        dims = re.match(rb"^(\d+)\s+(\d+)$", _read_token_line(f))
        if dims is None:
            raise FormatError("malformed PFM dimension line")
        width, height = int(dims.group(1)), int(dims.group(2))
        try:
            scale = float(_read_token_line(f))
        except ValueError as exc:
            raise FormatError("malformed PFM scale line") from exc
        if scale == 0.0 or not math.isfinite(scale):
            raise FormatError("PFM scale must be finite and nonzero")
        dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
        count = width * height
        payload = f.read(count * 4)
    if len(payload) < count * 4:
        raise OSError(f"truncated PFM payload in {path}: {len(payload)} of {count * 4} bytes")
    data = np.frombuffer(payload, dtype=dtype, count=count).reshape(height, width)
    data = np.flipud(data).astype(np.float32)
    return FloatMap.from_array(data)


def write_float_map(fmap: FloatMap, path) -> None:
    """Write ``fmap`` as grayscale PFM; invalid pixels become NaN."""
    if fmap.width == 0 or fmap.height == 0:
        raise ShapeError("cannot write an empty float map")
    little = sys.byteorder == "little"
    dtype = np.dtype("<f4") if little else np.dtype(">f4")
    data = np.where(fmap.valid, fmap.data, np.float32(np.nan)).astype(dtype)
    header = f"Pf\n{fmap.width} {fmap.height}\n{-1.0 if little else 1.0}\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(np.flipud(data)).tobytes())


def read_mask(path) -> np.ndarray:
    """Read a binary PGM ("P5") as a boolean mask (nonzero is True)."""
    with open(path, "rb") as f:
        raw = f.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)").match(raw, pos)
        if m is None:
            raise FormatError("malformed PGM header")
        tokens.append(m.group(2))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError(f"not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise FormatError("16-bit PGM is not supported")
    pos += 1  # single whitespace byte after maxval
    body = raw[pos:pos + width * height]
    if len(body) < width * height:
        raise OSError(f"truncated PGM payload in {path}")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width) > 0


def write_mask(mask, path) -> None:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ShapeError("mask must be 2-D")
    height, width = mask.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(np.where(mask, 255, 0).astype(np.uint8).tobytes())


@dataclass
class RunReport:
    metrics: dict[str, float] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        out = {}
        for name in ("config", "metrics", "timings"):
            section = getattr(self, name)
            if section:
                out[name] = section
        return out


def _round_reals(obj):
    if isinstance(obj, dict):
        return {str(k): _round_reals(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_reals(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite value {value!r} to JSON")
        return float(f"{value:.9g}")
    return obj


def dumps_report(report) -> str:
    payload = report.as_dict() if isinstance(report, RunReport) else dict(report)
    return json.dumps(_round_reals(payload), sort_keys=True, indent=2, allow_nan=False)


def write_report(report, path) -> None:
    """Serialize a RunReport (or plain mapping) as sorted, UTF-8 JSON."""
    text = dumps_report(report)
    Path(path).write_text(text + "\n", encoding="utf-8")
