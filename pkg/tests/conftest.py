"""Shared test fixtures: small deterministic textures and helpers."""
import numpy as np
import pytest

from stochfilt import TextureGrid, random_texture


@pytest.fixture
def tex2d() -> TextureGrid:
    """16x16 single-channel uniform noise, clamp addressing."""
    return random_texture(101, (16, 16), 1)


@pytest.fixture
def tex2d_rgb() -> TextureGrid:
    return random_texture(202, (16, 16), 3)


@pytest.fixture
def tex3d() -> TextureGrid:
    """12x10x8 single-channel uniform noise."""
    return random_texture(303, (12, 10, 8), 1)


@pytest.fixture
def ramp2d() -> TextureGrid:
    """8x8 grid whose texel value equals x + 10*y; interpolating kernels and
    B-splines reproduce affine data exactly, which pins their weights."""
    y, x = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    return TextureGrid(data=(x + 10.0 * y)[..., None].astype(np.float64))
