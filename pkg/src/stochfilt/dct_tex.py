"""Block-compressed texture backend: 8x8 DCT blocks, six coefficients each.

Each 8x8 texel block per channel keeps the six lowest-frequency orthonormal
DCT-II coefficients in zigzag order, quantized to 7 bits (DC) plus five 5-bit
signed ACs, packed into one little-endian u32. Two f32 scale factors per
block-channel (DC range, AC max-abs) ride in a sidecar so dequantization is
local. Texels are decoded on demand; a single-tap stochastic filter therefore
pays one decode per lookup while a deterministic filter pays one per tap.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft

from .texio import TextureFormatError
from .texture import AddressMode, FetchCounter, TextureGrid

BLOCK = 8
# Zigzag (row-freq, col-freq) pairs: DC plus the five lowest ACs.
ZIGZAG6 = ((0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2))
DC_LEVELS = 127   # 7-bit unsigned
AC_LEVELS = 15    # 5-bit two's complement, symmetric range [-15, 15]

_STXD_MAGIC = b"STXD"
_STXD_VERSION = 1


def _basis_table() -> np.ndarray:
    """(6, 8, 8) table of the kept orthonormal DCT-II basis functions."""
    y = np.arange(BLOCK)
    cos = np.cos((2.0 * y[:, None] + 1.0) * np.arange(BLOCK)[None, :]
                 * np.pi / (2.0 * BLOCK))
    scale = np.full(BLOCK, np.sqrt(2.0 / BLOCK))
    scale[0] = np.sqrt(1.0 / BLOCK)
    table = np.empty((len(ZIGZAG6), BLOCK, BLOCK))
    for k, (u, v) in enumerate(ZIGZAG6):
        table[k] = (scale[u] * scale[v]) * np.outer(cos[:, u], cos[:, v])
    return table


BASIS = _basis_table()


@dataclass(eq=False)
class DctBlockTexture:
    """Compressed 2D texture; duck-types the grid fetch interface.

    dc_scale, ac_scale: (bh, bw, channels) float32
    codes: (bh, bw, channels) uint32
    """

    width: int
    height: int
    dc_scale: np.ndarray
    ac_scale: np.ndarray
    codes: np.ndarray
    address_mode: AddressMode = AddressMode.CLAMP

    def __post_init__(self) -> None:
        bh = -(-self.height // BLOCK)
        bw = -(-self.width // BLOCK)
        for name in ("dc_scale", "ac_scale", "codes"):
            arr = getattr(self, name)
            if arr.ndim != 3 or arr.shape[:2] != (bh, bw):
                raise ValueError(f"{name} must have shape (ceil(h/8), ceil(w/8), channels)")
        if self.dc_scale.shape != self.ac_scale.shape or self.dc_scale.shape != self.codes.shape:
            raise ValueError("scale and code arrays must share one shape")
        self.dc_scale = self.dc_scale.astype(np.float32)
        self.ac_scale = self.ac_scale.astype(np.float32)
        self.codes = self.codes.astype(np.uint32)

    @property
    def spatial_ndim(self) -> int:
        return 2

    @property
    def channels(self) -> int:
        return int(self.codes.shape[-1])

    @property
    def dims(self) -> tuple[int, int]:
        return (self.width, self.height)

    @property
    def payload_bytes(self) -> int:
        """Coefficient storage only: one u32 per block-channel."""
        return int(self.codes.size) * 4

    @property
    def sidecar_bytes(self) -> int:
        """Dequantization scales: two f32 per block-channel."""
        return int(self.codes.size) * 8

    def compression_ratio(self) -> float:
        """Coefficient payload vs one byte per texel-channel."""
        return (self.width * self.height * self.channels) / self.payload_bytes

    def remap_coords(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        if coords.shape[-1] != 2:
            raise ValueError("coordinate arity does not match texture rank")
        dims = np.array(self.dims, dtype=np.int64)
        if self.address_mode is AddressMode.WRAP:
            return coords % dims
        return np.clip(coords, 0, dims - 1)

    def fetch(self, coords: np.ndarray,
              counter: FetchCounter | None = None) -> np.ndarray:
        """Decode texels at integer coords (..., 2) -> (..., channels).

        Each requested texel costs one block decode (counter.decode_count).
        """
        c = self.remap_coords(coords)
        x, y = c[..., 0], c[..., 1]
        by, bx = y // BLOCK, x // BLOCK
        iy, ix = y % BLOCK, x % BLOCK
        dc_s = self.dc_scale[by, bx].astype(np.float64)
        ac_s = self.ac_scale[by, bx].astype(np.float64)
        codes = self.codes[by, bx]
        qdc = (codes & np.uint32(0x7F)).astype(np.float64)
        out = (qdc / DC_LEVELS * 2.0 - 1.0) * dc_s * BASIS[0, iy, ix][..., None]
        for k in range(1, len(ZIGZAG6)):
            bits = (codes >> np.uint32(7 + 5 * (k - 1))) & np.uint32(0x1F)
            q = bits.astype(np.int64)
            q = np.where(q >= 16, q - 32, q).astype(np.float64)
            out += (q * ac_s / AC_LEVELS) * BASIS[k, iy, ix][..., None]
        if counter is not None:
            counter.add_decodes(int(np.prod(x.shape, dtype=np.int64)))
        return out


def _pad_to_blocks(img: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    if ph or pw:
        img = np.pad(img, ((0, ph), (0, pw), (0, 0)), mode="edge")
    return img


def compress_dct(tex: TextureGrid) -> DctBlockTexture:
    """Forward 8x8 orthonormal DCT per block and channel, keep the zigzag six,
    quantize against per-block scale factors. Edge blocks clamp-pad."""
    if tex.spatial_ndim != 2:
        raise ValueError("DCT block compression needs a 2D texture")
    img = _pad_to_blocks(tex.data)
    h, w, ch = img.shape
    bh, bw = h // BLOCK, w // BLOCK
    blocks = img.reshape(bh, BLOCK, bw, BLOCK, ch).transpose(0, 2, 4, 1, 3)
    coeffs = scipy.fft.dctn(blocks, axes=(-2, -1), norm="ortho")

    dc_scale = BLOCK * np.abs(blocks).max(axis=(-2, -1))
    kept_ac = np.stack([coeffs[..., u, v] for u, v in ZIGZAG6[1:]], axis=-1)
    ac_scale = np.abs(kept_ac).max(axis=-1)

    dc = coeffs[..., 0, 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        qdc = np.rint((dc + dc_scale) / (2.0 * dc_scale) * DC_LEVELS)
        qac = np.rint(AC_LEVELS * kept_ac / ac_scale[..., None])
    qdc = np.where(dc_scale > 0.0, qdc, 0.0)
    qac = np.where(ac_scale[..., None] > 0.0, qac, 0.0)
    qdc = np.clip(qdc, 0, DC_LEVELS).astype(np.uint32)
    qac = np.clip(qac, -AC_LEVELS, AC_LEVELS).astype(np.int64)

    codes = qdc.copy()
    for k in range(5):
        codes |= (qac[..., k] & 0x1F).astype(np.uint32) << np.uint32(7 + 5 * k)
    return DctBlockTexture(width=tex.dims[0], height=tex.dims[1],
                           dc_scale=dc_scale.astype(np.float32),
                           ac_scale=ac_scale.astype(np.float32),
                           codes=codes, address_mode=tex.address_mode)


def decode_texel(dct: DctBlockTexture, coord,
                 counter: FetchCounter | None = None) -> np.ndarray:
    """One texel's channel vector; one decode."""
    return dct.fetch(np.asarray(coord, dtype=np.int64), counter)


def decode_full(dct: DctBlockTexture) -> TextureGrid:
    """Full decoded image as an ordinary grid (no counting); this is the
    ground truth any filter over the compressed texture converges to."""
    ys, xs = np.meshgrid(np.arange(dct.height), np.arange(dct.width),
                         indexing="ij")
    coords = np.stack([xs, ys], axis=-1)
    vals = dct.fetch(coords)
    return TextureGrid(data=vals, address_mode=dct.address_mode)


def dequantized_coefficients(dct: DctBlockTexture) -> np.ndarray:
    """(bh, bw, channels, 6) dequantized coefficient values."""
    dc_s = dct.dc_scale.astype(np.float64)
    ac_s = dct.ac_scale.astype(np.float64)
    qdc = (dct.codes & np.uint32(0x7F)).astype(np.float64)
    out = np.empty(dct.codes.shape + (len(ZIGZAG6),))
    out[..., 0] = (qdc / DC_LEVELS * 2.0 - 1.0) * dc_s
    for k in range(1, len(ZIGZAG6)):
        bits = (dct.codes >> np.uint32(7 + 5 * (k - 1))) & np.uint32(0x1F)
        q = bits.astype(np.int64)
        q = np.where(q >= 16, q - 32, q).astype(np.float64)
        out[..., k] = q * ac_s / AC_LEVELS
    return out


def reconstruction_bound(dct: DctBlockTexture) -> np.ndarray:
    """(h, w, channels) per-texel quantization error bound relative to the
    unquantized six-term reconstruction: sum_k |basis_k| * half step_k."""
    half_dc = dct.dc_scale.astype(np.float64) / DC_LEVELS
    half_ac = dct.ac_scale.astype(np.float64) / (2 * AC_LEVELS)
    abs_basis = np.abs(BASIS)
    bound = (half_dc[:, :, :, None, None] * abs_basis[0]
             + half_ac[:, :, :, None, None] * abs_basis[1:].sum(axis=0))
    bh, bw, ch = dct.dc_scale.shape
    full = bound.transpose(0, 3, 1, 4, 2).reshape(bh * BLOCK, bw * BLOCK, ch)
    return full[:dct.height, :dct.width]


def filter_over_dct(dct: DctBlockTexture, pts, cfg, estimator: str = "det",
                    xi=None, counter: FetchCounter | None = None
                    ) -> np.ndarray:
    """Run a filter with the compressed texture as backend; decode counts
    land on `counter`."""
    from .det_filters import det_filter_value
    from .stoch import stoch_filter_values
    if estimator == "det":
        return det_filter_value(dct, pts, cfg, counter)
    if estimator == "stoch":
        if xi is None:
            raise ValueError("stochastic filtering needs uniforms")
        return stoch_filter_values(dct, pts, cfg, xi, counter)
    raise ValueError(f"unknown estimator {estimator!r}")


# ============================================================
# STXD container
# ============================================================

def save_dct(path: str | Path, dct: DctBlockTexture) -> None:
    header = _STXD_MAGIC + struct.pack("<IIII", _STXD_VERSION, dct.width,
                                       dct.height, dct.channels)
    record = np.empty(dct.codes.shape + (3,), dtype="<u4")
    record[..., 0] = dct.dc_scale.astype("<f4").view("<u4")
    record[..., 1] = dct.ac_scale.astype("<f4").view("<u4")
    record[..., 2] = dct.codes
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(record.tobytes())


def load_dct(path: str | Path,
             address_mode: AddressMode = AddressMode.CLAMP) -> DctBlockTexture:
    blob = Path(path).read_bytes()
    if blob[:4] != _STXD_MAGIC:
        raise TextureFormatError("bad magic, expected STXD", offset=0)
    if len(blob) < 20:
        raise TextureFormatError("truncated header", offset=len(blob))
    version, w, h, ch = struct.unpack("<IIII", blob[4:20])
    if version != _STXD_VERSION:
        raise TextureFormatError(f"unsupported version {version}", offset=4)
    if w == 0 or h == 0:
        raise TextureFormatError("zero texture dims", offset=8)
    if not 1 <= ch <= 4:
        raise TextureFormatError(f"bad channel count {ch}", offset=16)
    bh = -(-h // BLOCK)
    bw = -(-w // BLOCK)
    expect = bh * bw * ch * 12
    if len(blob) - 20 != expect:
        raise TextureFormatError(
            f"payload is {len(blob) - 20} bytes, expected {expect}", offset=20)
    record = np.frombuffer(blob, dtype="<u4", offset=20).reshape(bh, bw, ch, 3)
    dc = np.ascontiguousarray(record[..., 0]).view("<f4")
    ac = np.ascontiguousarray(record[..., 1]).view("<f4")
    return DctBlockTexture(width=int(w), height=int(h),
                           dc_scale=dc.astype(np.float32),
                           ac_scale=ac.astype(np.float32),
                           codes=record[..., 2].copy(),
                           address_mode=address_mode)
