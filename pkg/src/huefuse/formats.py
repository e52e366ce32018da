"""Image file IO: Radiance HDR (RGBE), PFM, and 8-bit PNG.

Radiance and PFM are implemented here byte-for-byte because the rest of the
package depends on their exact decode semantics (shared-exponent quantization
bounds, bottom-up scanline order, typed failure on malformed input). PNG is
plain container plumbing and goes through Pillow.
"""

import struct

import numpy as np
from PIL import Image

RADIANCE_MAGICS = (b"#?RADIANCE", b"#?RGBE")


class FormatError(Exception):
    """Base class for image container errors."""


class DecodeError(FormatError):
    """Malformed or unsupported data while reading an image file."""


def _require_rgb(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3:
        raise ValueError("expected an (H, W, 3) image")
    return img


# ---------------------------------------------------------------------------
# Radiance HDR (RGBE)

def _rgbe_to_float(rgbe):
    """Decode (..., 4) uint8 RGBE to float radiance.

    value = mantissa * 2^(exponent - 128 - 8); a zero exponent means black.
    """
    rgbe = rgbe.astype(np.int32)
    exp = rgbe[..., 3]
    scale = np.ldexp(1.0, exp - 136)
    out = rgbe[..., :3].astype(np.float64) * scale[..., None]
    out[exp == 0] = 0.0
    return out


def _float_to_rgbe(rgb):
    """Encode (..., 3) float radiance to uint8 RGBE with rounded mantissas."""
    rgb = np.asarray(rgb, dtype=np.float64)
    peak = rgb.max(axis=-1)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    live = peak >= 1e-32
    if not np.any(live):
        return out
    frac, exp = np.frexp(peak[live])
    scale = frac * 256.0 / peak[live]
    mant = np.floor(rgb[live] * scale[..., None] + 0.5)
    np.clip(mant, 0, 255, out=mant)
    out[live, :3] = mant.astype(np.uint8)
    out[live, 3] = np.clip(exp + 128, 0, 255).astype(np.uint8)
    return out


def _read_line(f):
    chunk = bytearray()
    while True:
        b = f.read(1)
        if not b:
            raise DecodeError("unexpected end of file in Radiance header")
        if b == b"\n":
            return bytes(chunk)
        chunk.extend(b)
        if len(chunk) > 4096:
            raise DecodeError("unterminated Radiance header line")


def _decode_flat_scanline(f, width, first=None):
    """Read one uncompressed scanline, honoring old-style (1,1,1,n) repeats."""
    row = np.empty((width, 4), dtype=np.uint8)
    i = 0
    prev = None
    pending = first
    while i < width:
        if pending is not None:
            quad = pending
            pending = None
        else:
            quad = f.read(4)
        if len(quad) < 4:
            raise DecodeError("truncated scanline")
        if quad[0] == 1 and quad[1] == 1 and quad[2] == 1:
            if prev is None:
                raise DecodeError("repeat marker with no previous pixel")
            count = quad[3]
            if i + count > width:
                raise DecodeError("repeat run overflows scanline")
            row[i : i + count] = prev
            i += count
        else:
            row[i] = np.frombuffer(quad, dtype=np.uint8)
            prev = row[i].copy()
            i += 1
    return row


def _decode_rle_scanline(f, width):
    """Decode one new-style run-length-encoded scanline body."""
    row = np.empty((width, 4), dtype=np.uint8)
    for comp in range(4):
        pos = 0
        while pos < width:
            head = f.read(1)
            if not head:
                raise DecodeError("truncated scanline")
            n = head[0]
            if n > 128:
                count = n - 128
                value = f.read(1)
                if not value:
                    raise DecodeError("truncated scanline")
                if pos + count > width:
                    raise DecodeError("run overflows scanline")
                row[pos : pos + count, comp] = value[0]
            else:
                count = n
                if count == 0:
                    raise DecodeError("zero-length literal in scanline")
                data = f.read(count)
                if len(data) < count:
                    raise DecodeError("truncated scanline")
                if pos + count > width:
                    raise DecodeError("literal overflows scanline")
                row[pos : pos + count, comp] = np.frombuffer(data, dtype=np.uint8)
            pos += count
    return row


def read_radiance_hdr(path):
    """Read a Radiance .hdr file into an (H, W, 3) float64 radiance array.

    Handles flat and new-style RLE scanlines and normalizes the four
    Y-major orientations to the usual top-down, left-right layout. X-major
    files raise :class:`DecodeError`.
    """
    with open(path, "rb") as f:
        magic = _read_line(f)
        if not any(magic.startswith(m) for m in RADIANCE_MAGICS):
            raise DecodeError(f"not a Radiance file: magic {magic[:16]!r}")
        while True:
            line = _read_line(f)
            if line == b"":
                break
            if line.startswith(b"FORMAT=") and line != b"FORMAT=32-bit_rle_rgbe":
                raise DecodeError(f"unsupported pixel format {line!r}")
        parts = _read_line(f).split()
        if len(parts) != 4:
            raise DecodeError("malformed resolution line")
        try:
            axis0, n0, axis1, n1 = parts[0], int(parts[1]), parts[2], int(parts[3])
        except ValueError as exc:
            raise DecodeError("malformed resolution line") from exc
        if axis0 not in (b"-Y", b"+Y") or axis1 not in (b"-X", b"+X"):
            raise DecodeError(f"unsupported orientation {axis0!r} {axis1!r}")
        height, width = n0, n1
        if height <= 0 or width <= 0:
            raise DecodeError("non-positive image dimensions")

        rows = []
        for _ in range(height):
            quad = f.read(4)
            if len(quad) < 4:
                raise DecodeError("truncated scanline")
            if (
                quad[0] == 2
                and quad[1] == 2
                and (quad[2] << 8 | quad[3]) == width
                and 8 <= width <= 32767
            ):
                rows.append(_decode_rle_scanline(f, width))
            else:
                rows.append(_decode_flat_scanline(f, width, first=quad))
        data = _rgbe_to_float(np.stack(rows))

    if axis0 == b"+Y":
        data = data[::-1]
    if axis1 == b"-X":
        data = data[:, ::-1]
    return np.ascontiguousarray(data)


def _encode_rle_row(row):
    """New-style RLE for one (W, 4) scanline; runs of >= 4 get packed."""
    width = row.shape[0]
    out = bytearray()
    out += bytes((2, 2, width >> 8, width & 0xFF))
    for comp in range(4):
        data = row[:, comp]
        i = 0
        while i < width:
            run = 1
            while i + run < width and run < 127 and data[i + run] == data[i]:
                run += 1
            if run >= 4:
                out.append(128 + run)
                out.append(int(data[i]))
                i += run
            else:
                start = i
                while (
                    i < width
                    and i - start < 128
                    and not (
                        i + 3 < width
                        and data[i] == data[i + 1] == data[i + 2] == data[i + 3]
                    )
                ):
                    i += 1
                out.append(i - start)
                out += data[start:i].tobytes()
    return bytes(out)


def write_radiance_hdr(path, img):
    """Write an (H, W, 3) non-negative radiance array as Radiance .hdr.

    Uses new-style RLE scanlines when the width allows it (8..32767),
    flat scanlines otherwise. Shared-exponent quantization bounds the
    round-trip error of the dominant channel at one part in 256.
    """
    img = _require_rgb(img)
    if not np.all(np.isfinite(img)) or np.any(img < 0):
        raise ValueError("radiance values must be finite and non-negative")
    height, width = img.shape[:2]
    rgbe = _float_to_rgbe(img)
    with open(path, "wb") as f:
        f.write(b"#?RADIANCE\n")
        f.write(b"FORMAT=32-bit_rle_rgbe\n")
        f.write(b"\n")
        f.write(f"-Y {height} +X {width}\n".encode("ascii"))
        if 8 <= width <= 32767:
            for row in rgbe:
                f.write(_encode_rle_row(row))
        else:
            f.write(rgbe.tobytes())


# ---------------------------------------------------------------------------
# PFM

def read_pfm(path):
    """Read a PFM file into (H, W, 3) or (H, W) float64, top-down."""
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header == b"PF":
            channels = 3
        elif header == b"Pf":
            channels = 1
        else:
            raise DecodeError(f"not a PFM file: header {header[:16]!r}")
        dims = f.readline().split()
        if len(dims) != 2:
            raise DecodeError("malformed PFM dimensions line")
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(f.readline().strip())
        except ValueError as exc:
            raise DecodeError("malformed PFM header") from exc
        if width <= 0 or height <= 0 or scale == 0:
            raise DecodeError("malformed PFM header")
        count = width * height * channels
        raw = f.read(count * 4)
        if len(raw) < count * 4:
            raise DecodeError("truncated PFM pixel data")
    endian = "<" if scale < 0 else ">"
    data = np.frombuffer(raw, dtype=endian + "f4").astype(np.float64)
    shape = (height, width, 3) if channels == 3 else (height, width)
    # scanlines are stored bottom-up
    return data.reshape(shape)[::-1].copy()


def write_pfm(path, img):
    """Write float data as little-endian PFM; float32 values round-trip exactly."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[-1] == 3:
        header = b"PF"
    elif img.ndim == 2:
        header = b"Pf"
    else:
        raise ValueError("expected an (H, W, 3) or (H, W) array")
    height, width = img.shape[:2]
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(img[::-1].astype("<f4").tobytes())


# ---------------------------------------------------------------------------
# PNG (8-bit)

def quantize8(img):
    """Map [0, 1] floats to uint8 with round-half-away-from-zero."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def write_png8(path, img):
    """Write a [0, 1] float image as 8-bit RGB PNG."""
    img = _require_rgb(img)
    Image.fromarray(quantize8(img), mode="RGB").save(path, format="PNG")


def read_png8(path):
    """Read an 8-bit PNG into an (H, W, 3) float64 image in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0
