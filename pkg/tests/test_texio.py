"""Image and volume container round-trips and malformed-file rejection."""
import struct

import numpy as np
import pytest

from stochfilt import (TextureFormatError, TextureGrid, linear_to_srgb,
                       load_image, load_volume, random_texture, store_image,
                       store_volume, srgb_to_linear)


def _quantized_roundtrip_values(channels: int, depth: int) -> np.ndarray:
    """Linear values that survive PNG quantization exactly: start from
    integer codes and decode them, so re-encoding reproduces the codes."""
    maxv = (1 << depth) - 1
    rng = np.random.default_rng(8 * channels + depth)
    codes = rng.integers(0, maxv + 1, size=(6, 5, channels))
    vals = codes.astype(np.float64) / maxv
    out = srgb_to_linear(vals)
    if channels in (2, 4):
        out[..., -1] = vals[..., -1]  # alpha has no transfer curve
    return out


class TestPng:
    @pytest.mark.parametrize("channels", [1, 2, 3, 4])
    @pytest.mark.parametrize("depth", [8, 16])
    def test_roundtrip_is_exact_on_grid_values(self, channels, depth,
                                               tmp_path):
        data = _quantized_roundtrip_values(channels, depth)
        path = tmp_path / "t.png"
        store_image(path, TextureGrid(data=data), depth=depth)
        back = load_image(path)
        step = 1.0 / ((1 << depth) - 1)
        assert np.abs(back.data - data).max() < step * 1e-6

    def test_raw_skips_transfer_curve(self, tmp_path):
        data = np.linspace(0.0, 1.0, 64).reshape(8, 8, 1)
        path = tmp_path / "raw.png"
        store_image(path, TextureGrid(data=data), depth=16, raw=True)
        back = load_image(path, raw=True)
        assert np.abs(back.data - data).max() < 1.0 / 65535

    def test_store_applies_srgb_encode(self, tmp_path):
        """A mid-gray linear value lands at the sRGB code for 0.5-linear,
        not at code 127/128."""
        lin = 0.21404114048223255  # srgb_to_linear(0.5), verified by hand
        data = np.full((4, 4, 1), lin)
        path = tmp_path / "gray.png"
        store_image(path, TextureGrid(data=data), depth=8)
        raw = load_image(path, raw=True)
        assert raw.data.flat[0] == pytest.approx(0.5, abs=1.0 / 255)

    def test_alpha_channel_stays_linear(self, tmp_path):
        data = np.zeros((4, 4, 4))
        data[..., 3] = 0.5
        path = tmp_path / "a.png"
        store_image(path, TextureGrid(data=data), depth=16)
        back = load_image(path)
        assert back.data[..., 3].flat[0] == pytest.approx(0.5, abs=1e-4)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.png"
        path.write_bytes(b"\x89PNG\r\n\x1a\nnot really a png")
        with pytest.raises(TextureFormatError):
            load_image(path)


class TestPfm:
    @pytest.mark.parametrize("channels", [1, 3])
    def test_roundtrip_is_bitwise_on_float32(self, channels, tmp_path):
        tex = random_texture(5, (9, 7), channels)
        path = tmp_path / "t.pfm"
        store_image(path, tex)
        back = load_image(path)
        np.testing.assert_array_equal(back.data,
                                      tex.data.astype(np.float32))

    def test_pfm_is_linear_no_transfer(self, tmp_path):
        data = np.full((2, 2, 1), 0.5)
        path = tmp_path / "t.pfm"
        store_image(path, TextureGrid(data=data))
        back = load_image(path)
        assert back.data.flat[0] == 0.5

    def test_rejects_truncated(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"Pf\n4 4\n-1.0\n\x00\x00")
        with pytest.raises(TextureFormatError):
            load_image(path)


class TestStxv:
    def test_roundtrip_is_bitwise(self, tmp_path):
        tex = random_texture(6, (16, 16, 3), 1)
        path = tmp_path / "v.stxv"
        store_volume(path, tex)
        back = load_volume(path)
        np.testing.assert_array_equal(back.data,
                                      tex.data.astype(np.float32))
        assert back.dims == (16, 16, 3)

    def test_roundtrip_multichannel(self, tmp_path):
        tex = random_texture(7, (4, 5, 6), 2)
        path = tmp_path / "v.stxv"
        store_volume(path, tex)
        assert load_volume(path).dims == (4, 5, 6)

    def test_bad_magic_offset_zero(self, tmp_path):
        path = tmp_path / "bad.stxv"
        path.write_bytes(b"NOPE" + b"\x00" * 24)
        with pytest.raises(TextureFormatError) as err:
            load_volume(path)
        assert err.value.offset == 0

    def test_bad_version_offset_four(self, tmp_path):
        path = tmp_path / "bad.stxv"
        path.write_bytes(b"STXV" + struct.pack("<IIIII", 99, 1, 1, 1, 1)
                         + b"\x00" * 4)
        with pytest.raises(TextureFormatError) as err:
            load_volume(path)
        assert err.value.offset == 4

    def test_bad_channels_offset(self, tmp_path):
        path = tmp_path / "bad.stxv"
        path.write_bytes(b"STXV" + struct.pack("<IIIII", 1, 2, 2, 2, 9))
        with pytest.raises(TextureFormatError) as err:
            load_volume(path)
        assert err.value.offset == 20

    def test_short_payload_offset(self, tmp_path):
        path = tmp_path / "bad.stxv"
        path.write_bytes(b"STXV" + struct.pack("<IIIII", 1, 2, 2, 2, 1)
                         + b"\x00" * 8)
        with pytest.raises(TextureFormatError) as err:
            load_volume(path)
        assert err.value.offset == 24
