"""Image and volume serialization.

Formats:
  PNG  8/16-bit, 1-4 channels, assumed sRGB-encoded (grayscale included)
       unless loaded raw. Written by a small built-in encoder (fixed zlib
       level, filter 0) so output bytes are reproducible; reading handles
       color types 0/2/4/6 directly and falls back to Pillow for palette or
       interlaced files, which it decodes only at 8 bits.
  PFM  float32, 1 or 3 channels, linear light, bottom-up rows per convention.
  STXV volume container: magic, version, dims, channels, little-endian f32
       payload, x fastest.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .texture import AddressMode, ColorSpace, TextureGrid, linear_to_srgb, srgb_to_linear


class TextureFormatError(Exception):
    """Malformed file; `offset` is the byte position of the first problem."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


# ============================================================
# PNG
# ============================================================

_PNG_SIG = b"\x89PNG\r\n\x1a\n"
# color type -> channel count
_PNG_CHANNELS = {0: 1, 2: 3, 4: 2, 6: 4}
_PNG_COLOR_TYPE = {1: 0, 2: 4, 3: 2, 4: 6}


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    return (struct.pack(">I", len(payload)) + tag + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF))


def _encode_png(quant: np.ndarray, depth: int) -> bytes:
    h, w, c = quant.shape
    ihdr = struct.pack(">IIBBBBB", w, h, depth, _PNG_COLOR_TYPE[c], 0, 0, 0)
    raw = quant.astype(">u2" if depth == 16 else np.uint8)
    scanlines = b"".join(b"\x00" + raw[y].tobytes() for y in range(h))
    return (_PNG_SIG + _png_chunk(b"IHDR", ihdr)
            + _png_chunk(b"IDAT", zlib.compress(scanlines, 6))
            + _png_chunk(b"IEND", b""))


def _paeth(a: np.ndarray, b: np.ndarray, cc: np.ndarray) -> np.ndarray:
    p = a.astype(np.int32) + b.astype(np.int32) - cc.astype(np.int32)
    pa, pb, pc = np.abs(p - a), np.abs(p - b), np.abs(p - cc)
    return np.where((pa <= pb) & (pa <= pc), a, np.where(pb <= pc, b, cc)).astype(np.uint8)


def _unfilter_scanlines(data: bytes, w: int, h: int, bpp: int) -> np.ndarray:
    stride = w * bpp
    out = np.zeros((h, stride), dtype=np.uint8)
    pos = 0
    prev = np.zeros(stride, dtype=np.uint8)
    for y in range(h):
        ftype = data[pos]
        line = np.frombuffer(data, np.uint8, stride, pos + 1).copy()
        pos += 1 + stride
        if ftype == 0:
            cur = line
        elif ftype == 2:  # up
            cur = line + prev
        elif ftype in (1, 3, 4):  # sub / average / paeth need a byte loop
            cur = line
            for x in range(stride):
                left = cur[x - bpp] if x >= bpp else np.uint8(0)
                if ftype == 1:
                    cur[x] = cur[x] + left
                elif ftype == 3:
                    cur[x] = cur[x] + np.uint8((int(left) + int(prev[x])) // 2)
                else:
                    ul = prev[x - bpp] if x >= bpp else np.uint8(0)
                    cur[x] = cur[x] + _paeth(left, prev[x], ul)
        else:
            raise TextureFormatError(f"unknown PNG scanline filter {ftype}")
        out[y] = cur
        prev = cur
    return out


def _decode_png(blob: bytes) -> tuple[np.ndarray, int]:
    """Returns (h, w, c) integer samples and the bit depth."""
    if blob[:8] != _PNG_SIG:
        raise TextureFormatError("not a PNG file", offset=0)
    pos = 8
    ihdr = None
    idat = []
    while pos + 8 <= len(blob):
        length, tag = struct.unpack(">I4s", blob[pos:pos + 8])
        payload = blob[pos + 8:pos + 8 + length]
        if len(payload) != length:
            raise TextureFormatError("truncated PNG chunk", offset=pos)
        if tag == b"IHDR":
            ihdr = struct.unpack(">IIBBBBB", payload)
        elif tag == b"IDAT":
            idat.append(payload)
        elif tag == b"IEND":
            break
        pos += 12 + length
    if ihdr is None:
        raise TextureFormatError("missing IHDR", offset=8)
    w, h, depth, ctype, _comp, _filt, interlace = ihdr
    if ctype == 3 or interlace != 0:
        # palette / Adam7: hand off to Pillow (8-bit only)
        from PIL import Image
        import io
        im = Image.open(io.BytesIO(blob))
        if im.mode == "P":
            im = im.convert("RGBA" if "transparency" in im.info else "RGB")
        arr = np.asarray(im)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return arr.astype(np.uint16), 8
    if ctype not in _PNG_CHANNELS or depth not in (8, 16):
        raise TextureFormatError(f"unsupported PNG layout (depth {depth}, color type {ctype})")
    c = _PNG_CHANNELS[ctype]
    raw = zlib.decompress(b"".join(idat))
    bpp = c * depth // 8
    mat = _unfilter_scanlines(raw, w, h, bpp)
    if depth == 16:
        samples = mat.reshape(h, w * c, 2)
        arr = (samples[..., 0].astype(np.uint16) << 8) | samples[..., 1]
    else:
        arr = mat.astype(np.uint16)
    return arr.reshape(h, w, c), depth


# ============================================================
# PFM
# ============================================================

def _encode_pfm(data: np.ndarray) -> bytes:
    h, w, c = data.shape
    if c not in (1, 3):
        raise ValueError("PFM supports 1 or 3 channels")
    header = f"{'PF' if c == 3 else 'Pf'}\n{w} {h}\n-1.0\n".encode("ascii")
    payload = data[::-1].astype("<f4").tobytes()  # bottom-up rows
    return header + payload


def _decode_pfm(blob: bytes) -> np.ndarray:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(blob):
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    if len(tokens) < 4:
        raise TextureFormatError("truncated PFM header", offset=pos)
    if tokens[0] not in (b"PF", b"Pf"):
        raise TextureFormatError("not a PFM file", offset=0)
    c = 3 if tokens[0] == b"PF" else 1
    try:
        w, h, scale = int(tokens[1]), int(tokens[2]), float(tokens[3])
    except ValueError as exc:
        raise TextureFormatError(f"bad PFM header field: {exc}", offset=len(tokens[0]) + 1)
    pos += 1  # single whitespace terminates the header
    n = w * h * c
    try:
        payload = np.frombuffer(blob, "<f4" if scale < 0 else ">f4", count=-1, offset=pos)
    except ValueError as exc:
        raise TextureFormatError(f"bad PFM payload: {exc}", offset=pos)
    if payload.size < n:
        raise TextureFormatError(f"PFM payload holds {payload.size} floats, expected {n}",
                                 offset=pos)
    data = payload[:n].astype(np.float64).reshape(h, w, c)
    return data[::-1]  # stored bottom-up


# ============================================================
# Image entry points
# ============================================================

def store_image(path: str | Path, tex: TextureGrid, depth: int = 8,
                raw: bool = False) -> None:
    """Write a 2D grid as PNG (sRGB-encoded unless raw) or PFM (linear).

    PNG quantizes to `depth` bits (8 or 16); PFM keeps float32.
    """
    path = Path(path)
    if tex.spatial_ndim != 2:
        raise ValueError("store_image expects a 2D texture")
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        path.write_bytes(_encode_pfm(np.ascontiguousarray(tex.data)))
        return
    if suffix != ".png":
        raise ValueError(f"unsupported image format {suffix!r}")
    if depth not in (8, 16):
        raise ValueError("PNG depth must be 8 or 16")
    data = tex.data
    if not raw and tex.color_space is ColorSpace.LINEAR:
        c = tex.channels
        if c in (2, 4):  # alpha is stored linear
            color = linear_to_srgb(data[..., :c - 1])
            data = np.concatenate([color, data[..., c - 1:]], axis=-1)
        else:
            data = linear_to_srgb(data)
    top = (1 << depth) - 1
    quant = np.clip(np.rint(np.clip(data, 0.0, 1.0) * top), 0, top).astype(np.uint32)
    path.write_bytes(_encode_png(quant, depth))


def load_image(path: str | Path, raw: bool = False,
               address_mode: AddressMode = AddressMode.CLAMP) -> TextureGrid:
    """Read PNG or PFM into a grid; PNG decodes sRGB to linear unless raw."""
    path = Path(path)
    blob = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        return TextureGrid(_decode_pfm(blob), address_mode, ColorSpace.LINEAR)
    arr, depth = _decode_png(blob)
    scaled = arr.astype(np.float64) / ((1 << depth) - 1)
    if raw:
        return TextureGrid(scaled, address_mode, ColorSpace.SRGB_ENCODED)
    # alpha stays linear; color channels decode through the transfer function
    c = scaled.shape[-1]
    if c in (2, 4):
        color = srgb_to_linear(scaled[..., :c - 1])
        linear = np.concatenate([color, scaled[..., c - 1:]], axis=-1)
    else:
        linear = srgb_to_linear(scaled)
    return TextureGrid(linear, address_mode, ColorSpace.LINEAR)


# ============================================================
# STXV volumes
# ============================================================

_STXV_MAGIC = b"STXV"
_STXV_VERSION = 1


def store_volume(path: str | Path, tex: TextureGrid) -> None:
    """Write a 3D grid as STXV (little-endian f32, x fastest)."""
    if tex.spatial_ndim != 3:
        raise ValueError("store_volume expects a 3D texture")
    nx, ny, nz = tex.dims
    header = _STXV_MAGIC + struct.pack("<IIIII", _STXV_VERSION, nx, ny, nz,
                                       tex.channels)
    Path(path).write_bytes(header + tex.data.astype("<f4").tobytes())


def load_volume(path: str | Path,
                address_mode: AddressMode = AddressMode.CLAMP) -> TextureGrid:
    blob = Path(path).read_bytes()
    if blob[:4] != _STXV_MAGIC:
        raise TextureFormatError("not an STXV volume", offset=0)
    if len(blob) < 24:
        raise TextureFormatError("truncated STXV header", offset=len(blob))
    version, nx, ny, nz, channels = struct.unpack("<IIIII", blob[4:24])
    if version != _STXV_VERSION:
        raise TextureFormatError(f"unsupported STXV version {version}", offset=4)
    if min(nx, ny, nz) < 1:
        raise TextureFormatError("STXV dims must be positive", offset=8)
    if not 1 <= channels <= 4:
        raise TextureFormatError(f"STXV channel count {channels} outside 1..4", offset=20)
    n = nx * ny * nz * channels
    payload = np.frombuffer(blob, "<f4", offset=24)
    if payload.size != n:
        raise TextureFormatError(
            f"STXV payload holds {payload.size} floats, expected {n}", offset=24)
    data = payload.astype(np.float64).reshape(nz, ny, nx, channels)
    return TextureGrid(data, address_mode, ColorSpace.LINEAR)
