"""1D reconstruction kernels and discrete tap windows.

All filters in this package are built from these kernels: deterministic paths
contract full tap windows, stochastic paths sample them. Evaluation treats the
support as half-open (exact boundary evaluates to 0) so that tap windows never
double-count a texel; the box kernel keeps its left edge inclusive so every
coordinate has exactly one covering texel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class KernelFamily(Enum):
    BOX = "box"
    TENT = "tent"
    KEYS_CUBIC = "keys-cubic"
    CUBIC_BSPLINE = "cubic-bspline"
    LANCZOS = "lanczos"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its shape parameters.

    `a` is the Keys-cubic sharpness (the -0.5 default reproduces the common
    recommendation), `lobes` the Lanczos window count, `sigma` the Gaussian
    width, and `radius` the Gaussian truncation radius (default 3*sigma).
    """

    family: KernelFamily
    a: float = -0.5
    lobes: int = 2
    sigma: float = 0.5
    radius: float | None = None

    def __post_init__(self) -> None:
        if self.family is KernelFamily.LANCZOS and self.lobes < 1:
            raise ValueError("Lanczos lobe count must be >= 1")
        if self.family is KernelFamily.GAUSSIAN:
            if not self.sigma > 0:
                raise ValueError("Gaussian sigma must be positive")
            if self.radius is not None and not self.radius > 0:
                raise ValueError("Gaussian truncation radius must be positive")

    @property
    def support(self) -> float:
        """Support radius; kernel is zero for |t| >= support."""
        if self.family is KernelFamily.BOX:
            return 0.5
        if self.family is KernelFamily.TENT:
            return 1.0
        if self.family in (KernelFamily.KEYS_CUBIC, KernelFamily.CUBIC_BSPLINE):
            return 2.0
        if self.family is KernelFamily.LANCZOS:
            return float(self.lobes)
        return self.radius if self.radius is not None else 3.0 * self.sigma


BOX = KernelSpec(KernelFamily.BOX)
TENT = KernelSpec(KernelFamily.TENT)
KEYS_CUBIC = KernelSpec(KernelFamily.KEYS_CUBIC)
CUBIC_BSPLINE = KernelSpec(KernelFamily.CUBIC_BSPLINE)


def _keys_cubic(t: np.ndarray, a: float) -> np.ndarray:
    at = np.abs(t)
    inner = (a + 2.0) * at**3 - (a + 3.0) * at**2 + 1.0
    outer = a * at**3 - 5.0 * a * at**2 + 8.0 * a * at - 4.0 * a
    return np.where(at < 1.0, inner, np.where(at < 2.0, outer, 0.0))


def _cubic_bspline(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    inner = (4.0 - 3.0 * t * t * (2.0 - at)) / 6.0
    outer = (2.0 - at) ** 3 / 6.0
    return np.where(at <= 1.0, inner, np.where(at < 2.0, outer, 0.0))


def _sinc(x: np.ndarray) -> np.ndarray:
    # np.sinc is sin(pi x)/(pi x) with sinc(0) = 1
    return np.sinc(x)


def _lanczos(t: np.ndarray, n: int) -> np.ndarray:
    at = np.abs(t)
    return np.where(at < n, _sinc(t) * _sinc(t / n), 0.0)


def _gaussian(t: np.ndarray, sigma: float, radius: float) -> np.ndarray:
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    return np.where(np.abs(t) < radius,
                    norm * np.exp(-0.5 * (t / sigma) ** 2), 0.0)


def kernel_eval(spec: KernelSpec, t: np.ndarray | float) -> np.ndarray | float:
    """Evaluate the kernel at offset(s) `t`; scalar in, scalar out."""
    arr = np.asarray(t, dtype=np.float64)
    fam = spec.family
    if fam is KernelFamily.BOX:
        out = np.where((arr >= -0.5) & (arr < 0.5), 1.0, 0.0)
    elif fam is KernelFamily.TENT:
        out = np.maximum(1.0 - np.abs(arr), 0.0)
    elif fam is KernelFamily.KEYS_CUBIC:
        out = _keys_cubic(arr, spec.a)
    elif fam is KernelFamily.CUBIC_BSPLINE:
        out = _cubic_bspline(arr)
    elif fam is KernelFamily.LANCZOS:
        out = _lanczos(arr, spec.lobes)
    elif fam is KernelFamily.GAUSSIAN:
        out = _gaussian(arr, spec.sigma, spec.support)
    else:  # pragma: no cover
        raise ValueError(f"unknown kernel family {fam}")
    return float(out) if np.isscalar(t) else out


def default_taps(spec: KernelSpec) -> int:
    """Even tap count whose window covers the kernel support."""
    return 2 * max(1, math.ceil(spec.support - 1e-12))


def window_offsets(taps: int) -> np.ndarray:
    """Integer texel offsets, relative to floor(s), of a `taps`-wide window.

    Even counts span -(taps/2 - 1) .. taps/2, which covers the kernel support
    for every frac in [0, 1) when taps comes from `default_taps`.
    """
    if taps < 1:
        raise ValueError("tap count must be >= 1")
    lo = -((taps - 1) // 2)
    return np.arange(lo, lo + taps, dtype=np.int64)


def kernel_window(spec: KernelSpec, frac: np.ndarray | float,
                  taps: int | None = None,
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tap weights for a lookup at fractional position `frac` in [0, 1).

    Returns (offsets, weights, weight_sum) with weights[..., i] =
    K(frac - offsets[i]). Weights are raw kernel values: interpolating and
    partition-of-unity families sum to 1, Lanczos and windowed Gaussian do
    not and callers normalize by the reported sum.
    """
    if taps is None:
        taps = default_taps(spec)
    offsets = window_offsets(taps)
    f = np.asarray(frac, dtype=np.float64)
    w = kernel_eval(spec, f[..., None] - offsets)
    return offsets, w, w.sum(axis=-1)
