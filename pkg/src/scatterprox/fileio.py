"""PNG and PFM image I/O plus the tab-separated manifest format."""

import os
import sys

import cv2
import numpy as np


def read_png(path):
    """Read an 8- or 16-bit PNG as float64 RGB in [0, 1]."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise OSError(f"cannot read image {path}")
    if img.dtype == np.uint8:
        scale = 255.0
    elif img.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ValueError(f"{path}: unsupported pixel type {img.dtype}")
    if img.ndim == 2:
        img = np.repeat(img[..., None], 3, axis=2)
    elif img.shape[2] == 4:
        img = img[..., :3]
    return img[..., ::-1].astype(np.float64) / scale


def write_png(path, image, bits=8):
    """Write an RGB float image (clipped to [0, 1]) as an 8- or 16-bit PNG."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = 255 if bits == 8 else 65535
    dtype = np.uint8 if bits == 8 else np.uint16
    arr = np.round(np.clip(image, 0.0, 1.0) * maxval).astype(dtype)
    if arr.ndim == 3:
        arr = np.ascontiguousarray(arr[..., ::-1])
    if not cv2.imwrite(str(path), arr):
        raise OSError(f"cannot write image {path}")


def write_pfm(path, data):
    """Write a float map as little-endian PFM (``Pf`` for 2-D, ``PF`` for RGB)."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        tag = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        tag = b"PF"
    else:
        raise ValueError(f"PFM needs shape (H, W) or (H, W, 3), got {data.shape}")
    height, width = data.shape[:2]
    # PFM stores rows bottom to top
    body = np.flipud(data).astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(tag + b"\n" + f"{width} {height}\n".encode() + b"-1.0\n" + body)


def read_pfm(path):
    """Read a PFM file into a float32 array of shape (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag == b"PF":
            channels = 3
        elif tag == b"Pf":
            channels = 1
        else:
            raise ValueError(f"{path}: not a PFM file")
        dims = f.readline().split()
        while not dims:  # tolerate blank lines
            dims = f.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = width * height * channels
        data = np.frombuffer(f.read(4 * count), dtype=endian + "f4")
    if data.size != count:
        raise ValueError(f"{path}: truncated PFM data")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return np.flipud(data.reshape(shape)).astype(np.float32)


def format_record(fields):
    """One manifest line: ``key=value`` pairs separated by tabs, in the given order."""
    parts = []
    for key, value in fields.items():
        if isinstance(value, (float, np.floating)):
            value = repr(float(value))
        elif isinstance(value, (bool, np.bool_)):
            value = int(value)
        elif isinstance(value, (list, tuple)):
            value = ",".join(repr(float(v)) for v in value)
        text = str(value)
        if "\t" in text or "\n" in text:
            raise ValueError(f"manifest value for {key!r} contains a tab or newline")
        parts.append(f"{key}={text}")
    return "\t".join(parts)


def parse_record(line):
    """Inverse of :func:`format_record`; values come back as strings."""
    out = {}
    for part in line.rstrip("\n").split("\t"):
        if part:
            key, _, value = part.partition("=")
            out[key] = value
    return out


def remove_quietly(paths):
    for p in paths:
        try:
            os.remove(p)
        except FileNotFoundError:
            pass
        except OSError as exc:
            print(f"warning: could not remove {p}: {exc}", file=sys.stderr)
