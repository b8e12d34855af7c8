"""Deterministic procedural test textures.

Stand-ins for non-redistributable assets: a high-contrast checker/ramp image
whose values stay inside [0.1, 1] (so steep shading maps like the blackbody
response are well defined across the whole range) and a smooth 64-cubed puff
volume for the volumetric MSE experiment.
"""
from __future__ import annotations

import numpy as np

from .texture import AddressMode, TextureGrid


def checker_ramp_image(n: int = 256, channels: int = 1, cell: int = 16,
                       lo: float = 0.1, hi: float = 1.0,
                       address_mode: AddressMode = AddressMode.CLAMP
                       ) -> TextureGrid:
    """Checkerboard with a diagonal ramp inside each parity class.

    High squares ramp just below `hi`, low squares just above `lo`; contrast
    stays near hi-lo everywhere while no two texels in a class are equal
    along the diagonal.
    """
    if channels not in (1, 3):
        raise ValueError("checker fixture supports 1 or 3 channels")
    y, x = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    check = ((x // cell + y // cell) % 2).astype(np.float64)
    span = hi - lo
    data = np.empty((n, n, channels))
    for c in range(channels):
        ramp = ((x + (c + 1) * y) % n) / max(n - 1, 1)
        high = hi - 0.25 * span * ramp
        low = lo + 0.25 * span * ramp
        data[..., c] = np.where(check > 0.5, high, low)
    return TextureGrid(data=data, address_mode=address_mode)


def binary_checker(n: int = 256, cell: int = 16,
                   address_mode: AddressMode = AddressMode.CLAMP
                   ) -> TextureGrid:
    """Hard 0/1 checkerboard; thresholding fixtures."""
    y, x = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    check = ((x // cell + y // cell) % 2).astype(np.float64)
    return TextureGrid(data=check[:, :, None], address_mode=address_mode)


def puff_volume(n: int = 64,
                address_mode: AddressMode = AddressMode.CLAMP) -> TextureGrid:
    """Radially falling density blob with a mild cosine ripple, in [0, 1]."""
    axis = np.arange(n, dtype=np.float64)
    z, y, x = np.meshgrid(axis, axis, axis, indexing="ij")
    c = (n - 1) / 2.0
    r2 = ((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2) / (n / 2.0) ** 2
    fall = np.clip(1.0 - r2, 0.0, 1.0) ** 2
    ripple = 0.85 + 0.15 * np.cos(0.37 * x) * np.cos(0.29 * y) * np.cos(0.23 * z)
    data = np.clip(fall * ripple, 0.0, 1.0)
    return TextureGrid(data=data[..., None], address_mode=address_mode)


def random_texture(seed: int, dims: tuple[int, ...], channels: int = 1,
                   address_mode: AddressMode = AddressMode.CLAMP
                   ) -> TextureGrid:
    """Uniform [0, 1) noise grid; dims are x-first like TextureGrid.dims."""
    rng = np.random.default_rng(seed)
    shape = tuple(reversed(dims)) + (channels,)
    data = rng.random(shape)
    return TextureGrid(data=data, address_mode=address_mode)
