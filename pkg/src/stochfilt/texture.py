"""Texture containers: 2D/3D grids, address modes, MIP pyramids, fetch counting.

Conventions used throughout the package: texel centers sit at integer raster
coordinates, integer coordinate tuples are x-first ((x, y) or (x, y, z)), and
array storage is numpy C order with x fastest ((h, w, c) or (d, h, w, c)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class AddressMode(Enum):
    CLAMP = "clamp"
    WRAP = "wrap"


class ColorSpace(Enum):
    LINEAR = "linear"
    SRGB_ENCODED = "srgb"


@dataclass
class FetchCounter:
    """Tallies texel reads and compressed-block decodes."""

    count: int = 0
    decode_count: int = 0

    def add(self, n: int = 1) -> None:
        self.count += int(n)

    def add_decodes(self, n: int = 1) -> None:
        self.decode_count += int(n)

    def merge(self, other: "FetchCounter") -> None:
        self.count += other.count
        self.decode_count += other.decode_count


def srgb_to_linear(v: np.ndarray | float, strict: bool = False) -> np.ndarray | float:
    """sRGB-encoded [0, 1] to linear light; out-of-range input clamps."""
    arr = np.asarray(v, dtype=np.float64)
    if strict and (np.any(arr < 0.0) or np.any(arr > 1.0)):
        raise ValueError("sRGB values outside [0, 1]")
    arr = np.clip(arr, 0.0, 1.0)
    out = np.where(arr <= 0.04045, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    return float(out) if np.isscalar(v) else out


def linear_to_srgb(v: np.ndarray | float, strict: bool = False) -> np.ndarray | float:
    arr = np.asarray(v, dtype=np.float64)
    if strict and (np.any(arr < 0.0) or np.any(arr > 1.0)):
        raise ValueError("linear values outside [0, 1]")
    arr = np.clip(arr, 0.0, 1.0)
    out = np.where(arr <= 0.0031308, arr * 12.92, 1.055 * arr ** (1.0 / 2.4) - 0.055)
    return float(out) if np.isscalar(v) else out


@dataclass(eq=False)
class TextureGrid:
    """Dense texel grid, 2D or 3D, 1-4 interleaved channels, finite values.

    `data` is (h, w, c) or (d, h, w, c) float64 in linear light unless the
    color space tag says otherwise.
    """

    data: np.ndarray
    address_mode: AddressMode = AddressMode.CLAMP
    color_space: ColorSpace = ColorSpace.LINEAR

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim not in (3, 4):
            raise ValueError("texture data must be (h, w, c) or (d, h, w, c)")
        if not 1 <= arr.shape[-1] <= 4:
            raise ValueError("channel count must be in 1..4")
        if min(arr.shape[:-1]) < 1:
            raise ValueError("all spatial dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("texture values must be finite")
        self.data = arr
        # fetch() gathers from a flat view; cache it and the stride shape
        self._flat = arr.reshape(-1, arr.shape[-1])

    @property
    def spatial_ndim(self) -> int:
        return self.data.ndim - 1

    @property
    def channels(self) -> int:
        return self.data.shape[-1]

    @property
    def dims(self) -> tuple[int, ...]:
        """Spatial extents, x-first: (w, h) or (w, h, d)."""
        return tuple(int(n) for n in self.data.shape[-2::-1])

    def remap_coords(self, coords: np.ndarray) -> np.ndarray:
        """Apply the address mode; coords are integer, x-first, (..., nd)."""
        coords = np.asarray(coords, dtype=np.int64)
        if coords.shape[-1] != self.spatial_ndim:
            raise ValueError("coordinate arity does not match texture rank")
        dims = np.array(self.dims, dtype=np.int64)
        if self.address_mode is AddressMode.WRAP:
            return coords % dims
        return np.clip(coords, 0, dims - 1)

    def fetch(self, coords: np.ndarray, counter: FetchCounter | None = None) -> np.ndarray:
        """Texel values at integer coords (..., nd) -> (..., channels)."""
        c = self.remap_coords(coords)
        if self.spatial_ndim == 2:
            idx = c[..., 1] * self.dims[0] + c[..., 0]
        else:
            w, h = self.dims[0], self.dims[1]
            idx = (c[..., 2] * h + c[..., 1]) * w + c[..., 0]
        if counter is not None:
            counter.add(int(np.prod(idx.shape, dtype=np.int64)) if idx.ndim else 1)
        return self._flat[idx]

    def to_linear(self) -> "TextureGrid":
        """Decode an sRGB-tagged grid to linear light (no-op when linear)."""
        if self.color_space is ColorSpace.LINEAR:
            return self
        return TextureGrid(srgb_to_linear(self.data), self.address_mode,
                           ColorSpace.LINEAR)


@dataclass(eq=False)
class MipPyramid:
    """Level 0 plus successively ceil-halved box-filtered levels down to 1x1."""

    levels: list[TextureGrid] = field(default_factory=list)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_scale(self, level: int) -> np.ndarray:
        """Per-axis dims ratio of `level` relative to level 0, x-first."""
        d0 = np.array(self.levels[0].dims, dtype=np.float64)
        dl = np.array(self.levels[level].dims, dtype=np.float64)
        return dl / d0

    def to_level(self, coords: np.ndarray, level: int) -> np.ndarray:
        """Map continuous level-0 raster coords into `level` raster coords."""
        scale = self.level_scale(level)
        return (np.asarray(coords, dtype=np.float64) + 0.5) * scale - 0.5


def _downsample(data: np.ndarray) -> np.ndarray:
    """2x box reduction per spatial axis; odd extents edge-pad first."""
    spatial = data.ndim - 1
    pad = [(0, s % 2) for s in data.shape[:spatial]] + [(0, 0)]
    if any(p[1] for p in pad):
        data = np.pad(data, pad, mode="edge")
    for axis in range(spatial):
        n = data.shape[axis] // 2
        if n >= 1:
            shape = data.shape[:axis] + (n, 2) + data.shape[axis + 1:]
            data = data.reshape(shape).mean(axis=axis + 1)
    return data


def build_mip_pyramid(tex: TextureGrid) -> MipPyramid:
    """Box-filtered pyramid; each level ceil-halves every spatial extent."""
    levels = [tex]
    while max(levels[-1].data.shape[:-1]) > 1:
        nxt = _downsample(levels[-1].data)
        levels.append(TextureGrid(nxt, tex.address_mode, tex.color_space))
    return MipPyramid(levels)
