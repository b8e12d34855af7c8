"""Counter-based, key-derived uniform random stream.

Every uniform is a pure function of (seed, pixel, sample, dimension, position),
so streams can be replayed or split per pixel / sample / dimension without
carrying generator state across work items.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_U64 = np.uint64
_GAMMA = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
# distinct salts keep the pixel/sample/dimension key axes from aliasing
_PIXEL_SALT = _U64(0xA0761D6478BD642F)
_SAMPLE_SALT = _U64(0xE7037ED1A0B428DB)
_DIM_SALT = _U64(0x8EBC6AF09C88C6E3)


def _finalize(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """splitmix64 finalizer; accepts uint64 scalars or arrays."""
    x = (x ^ (x >> _U64(30))) * _MIX1
    x = (x ^ (x >> _U64(27))) * _MIX2
    return x ^ (x >> _U64(31))


def _to_unit(bits: np.ndarray | np.uint64) -> np.ndarray | np.float64:
    # top 53 bits -> [0, 1)
    return (bits >> _U64(11)) * np.float64(2.0**-53)


@dataclass
class RngStream:
    """Seedable uniform stream keyed by (pixel, sample, dimension).

    `position` is the only mutable state; `derive` returns a fresh stream for
    new key values at position 0.
    """

    seed: int
    pixel: int = 0
    sample: int = 0
    dimension: int = 0
    position: int = 0
    _key: np.uint64 = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        with np.errstate(over="ignore"):
            k = _finalize(_U64(self.seed & 0xFFFFFFFFFFFFFFFF))
            k = _finalize(k ^ (_U64(self.pixel & 0xFFFFFFFFFFFFFFFF) * _PIXEL_SALT))
            k = _finalize(k ^ (_U64(self.sample & 0xFFFFFFFFFFFFFFFF) * _SAMPLE_SALT))
            k = _finalize(k ^ (_U64(self.dimension & 0xFFFFFFFFFFFFFFFF) * _DIM_SALT))
        self._key = k

    def derive(self, *, pixel: int | None = None, sample: int | None = None,
               dimension: int | None = None) -> "RngStream":
        """New stream with replaced keys, starting at position 0."""
        return RngStream(
            seed=self.seed,
            pixel=self.pixel if pixel is None else pixel,
            sample=self.sample if sample is None else sample,
            dimension=self.dimension if dimension is None else dimension,
        )

    def uniforms(self, n: int) -> np.ndarray:
        """Next `n` doubles in [0, 1); advances the stream position."""
        if n < 0:
            raise ValueError("uniform count must be non-negative")
        counters = _U64(self.position) + np.arange(n, dtype=np.uint64)
        self.position += n
        with np.errstate(over="ignore"):
            return _to_unit(_finalize(self._key + counters * _GAMMA))

    def next_uniform(self) -> float:
        return float(self.uniforms(1)[0])


def uniform_grid(seed: int, pixels: np.ndarray, count: int, *,
                 sample: int = 0, dimension: int = 0) -> np.ndarray:
    """(len(pixels), count) uniforms; row i replays
    RngStream(seed, pixel=pixels[i], sample, dimension).uniforms(count)
    bit for bit, without constructing per-pixel streams."""
    pixels = np.asarray(pixels, dtype=np.uint64)
    with np.errstate(over="ignore"):
        k = _finalize(_U64(seed & 0xFFFFFFFFFFFFFFFF))
        k = _finalize(k ^ (pixels * _PIXEL_SALT))
        k = _finalize(k ^ (_U64(sample & 0xFFFFFFFFFFFFFFFF) * _SAMPLE_SALT))
        k = _finalize(k ^ (_U64(dimension & 0xFFFFFFFFFFFFFFFF) * _DIM_SALT))
        counters = np.arange(count, dtype=np.uint64) * _GAMMA
        return _to_unit(_finalize(k[..., None] + counters))
