"""Netpbm and PFM image files, plus sRGB encoding.

All writes go to a temporary file in the target directory and are renamed
into place, so readers never see a partial file.
"""
import os
import re
import tempfile
from pathlib import Path

import numpy as np


def srgb_encode(linear):
    c = np.clip(np.asarray(linear, dtype=np.float64), 0.0, 1.0)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * np.power(c, 1.0 / 2.4) - 0.055)


def srgb_decode(encoded):
    c = np.asarray(encoded, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, np.power((c + 0.055) / 1.055, 2.4))


def quantize(x):
    """[0, 1] -> uint8, rounding halves away from zero."""
    v = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)


def to_uint8(img):
    """8-bit display values; float input is treated as linear and sRGB encoded."""
    img = np.asarray(img)
    if img.dtype == np.uint8:
        return img
    return quantize(srgb_encode(img))


def atomic_write(path, data):
    path = Path(path)
    d = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=d, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_ppm(img):
    a = to_uint8(img)
    if a.ndim == 2:
        a = np.repeat(a[..., None], 3, axis=2)
    h, w = a.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(a[..., :3]).tobytes()


def write_image(img, path):
    atomic_write(path, encode_ppm(img))


def write_pgm(mask, path):
    m = np.asarray(mask)
    a = np.where(m, 255, 0).astype(np.uint8) if m.dtype == bool else to_uint8(m)
    h, w = a.shape
    atomic_write(path, f"P5\n{w} {h}\n255\n".encode("ascii") + a.tobytes())


_HEADER = re.compile(rb"\A(P[56])\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+"
                     rb"(?:#[^\n]*\n\s*)*(\d+)\s")


def _read_netpbm(path, magic):
    data = Path(path).read_bytes()
    m = _HEADER.match(data)
    if not m or m.group(1) != magic:
        raise ValueError(f"{path}: not a binary {magic.decode()} file")
    w, h, maxval = int(m.group(2)), int(m.group(3)), int(m.group(4))
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported")
    ch = 3 if magic == b"P6" else 1
    body = data[m.end(): m.end() + w * h * ch]
    if len(body) != w * h * ch:
        raise ValueError(f"{path}: truncated pixel data")
    a = np.frombuffer(body, dtype=np.uint8)
    return a.reshape(h, w, 3) if ch == 3 else a.reshape(h, w)


def read_image(path):
    return _read_netpbm(path, b"P6").copy()


def read_pgm(path):
    return _read_netpbm(path, b"P5").copy()


def read_mask(path):
    return read_pgm(path) >= 128


def write_pfm(depth, path):
    """Single-channel little-endian PFM; rows stored bottom to top."""
    d = np.asarray(depth, dtype="<f4")
    h, w = d.shape
    atomic_write(path, f"Pf\n{w} {h}\n-1.0\n".encode("ascii") + np.ascontiguousarray(d[::-1]).tobytes())


def read_pfm(path):
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0].strip() != b"Pf":
        raise ValueError(f"{path}: not a greyscale PFM")
    w, h = (int(x) for x in parts[1].split())
    scale = float(parts[2])
    dt = "<f4" if scale < 0 else ">f4"
    return np.frombuffer(parts[3], dtype=dt, count=w * h).reshape(h, w)[::-1].astype(np.float64)
