"""Deterministic reference filters.

Every filter here is the exact expectation of its stochastic counterpart in
`stoch`: the two sides share kernel windows, normalization, and the EWA weight
LUT, so estimator means can be compared against these values directly.

Point arguments are continuous raster coordinates, x-first, vectorized over
leading axes; EWA derivative vectors are shared across all points of a call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .kernels import (CUBIC_BSPLINE, KernelFamily, KernelSpec, TENT,
                      default_taps, kernel_window, window_offsets)
from .texture import FetchCounter, MipPyramid, TextureGrid

EWA_LUT_SIZE = 1024
# Gaussian falloff over squared ellipse radius, sampled at r^2 in [0, 1)
EWA_LUT = np.exp(-2.0 * np.arange(EWA_LUT_SIZE) / EWA_LUT_SIZE)

FILTER_NAMES_2D = ("bilinear", "bicubic-bspline", "bicubic-keys", "gaussian",
                   "ewa", "trilinear-mip")
FILTER_NAMES_3D = ("trilinear", "tricubic-bspline")
FILTER_NAMES = FILTER_NAMES_2D + FILTER_NAMES_3D


@dataclass(frozen=True)
class FilterConfig:
    """Named filter plus shape parameters, shared by the det/stoch paths."""

    name: str
    sigma: float = 0.5
    keys_a: float = -0.5
    gauss_radius: float | None = None

    def __post_init__(self) -> None:
        if self.name not in FILTER_NAMES:
            raise ValueError(f"unknown filter {self.name!r}; expected one of {FILTER_NAMES}")

    def kernel(self) -> KernelSpec:
        if self.name in ("bilinear", "trilinear"):
            return TENT
        if self.name in ("bicubic-bspline", "tricubic-bspline"):
            return CUBIC_BSPLINE
        if self.name == "bicubic-keys":
            return KernelSpec(KernelFamily.KEYS_CUBIC, a=self.keys_a)
        if self.name == "gaussian":
            spec = KernelSpec(KernelFamily.GAUSSIAN, sigma=self.sigma,
                              radius=self.gauss_radius)
            if spec.support <= 0.5:
                raise ValueError("Gaussian truncation radius must exceed 0.5 texels")
            return spec
        raise ValueError(f"filter {self.name!r} is not a separable kernel filter")


@dataclass(frozen=True)
class FilterQuery2D:
    """Lookup point plus the screen-space derivative vectors EWA and MIP
    selection need; `st` may carry leading batch axes."""

    st: np.ndarray
    dst0: np.ndarray | None = None
    dst1: np.ndarray | None = None
    mip_bias: float = 0.0


@dataclass(frozen=True)
class FilterQuery3D:
    p: np.ndarray
    mip_bias: float = 0.0


def _normalized_kernel(spec: KernelSpec) -> bool:
    return spec.family in (KernelFamily.LANCZOS, KernelFamily.GAUSSIAN)


def _axis_windows(spec: KernelSpec, pts: np.ndarray,
                  ) -> tuple[np.ndarray, np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Per-axis tap windows at each point: (base, offsets, weights, sums)."""
    pts = np.asarray(pts, dtype=np.float64)
    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    nd = pts.shape[-1]
    offsets = window_offsets(default_taps(spec))
    weights = []
    sums = []
    for axis in range(nd):
        _, w, s = kernel_window(spec, frac[..., axis])
        weights.append(w)
        sums.append(s)
    return base, offsets, weights, sums


def separable_filter(tex: TextureGrid, pts: np.ndarray, spec: KernelSpec,
                     counter: FetchCounter | None = None) -> np.ndarray:
    """Full tap-window contraction of a separable kernel filter."""
    base, offsets, weights, sums = _axis_windows(spec, pts)
    nd = base.shape[-1]
    taps = len(offsets)
    acc = None
    coords = np.empty_like(base)
    for tap in np.ndindex(*([taps] * nd)):
        w = weights[0][..., tap[0]]
        for axis in range(1, nd):
            w = w * weights[axis][..., tap[axis]]
        for axis in range(nd):
            coords[..., axis] = base[..., axis] + offsets[tap[axis]]
        vals = tex.fetch(coords, counter)
        acc = w[..., None] * vals if acc is None else acc + w[..., None] * vals
    if _normalized_kernel(spec):
        norm = sums[0]
        for axis in range(1, nd):
            norm = norm * sums[axis]
        acc = acc / norm[..., None]
    return acc


def separable_taps(tex: TextureGrid, pts: np.ndarray, spec: KernelSpec,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Materialized (coords, weights) of the full window, weights summing to 1.

    Shapes: coords (..., M, nd) clamped/wrapped, weights (..., M); signed
    kernels keep their negative lobes.
    """
    base, offsets, weights, sums = _axis_windows(spec, pts)
    nd = base.shape[-1]
    taps = len(offsets)
    grids = np.stack(np.meshgrid(*([offsets] * nd), indexing="ij"),
                     axis=-1).reshape(-1, nd)
    coords = base[..., None, :] + grids  # (..., M, nd)
    if nd == 2:
        w = weights[0][..., :, None] * weights[1][..., None, :]
    elif nd == 3:
        w = (weights[0][..., :, None, None] * weights[1][..., None, :, None]
             * weights[2][..., None, None, :])
    w = w.reshape(w.shape[:-nd] + (taps ** nd,))
    if _normalized_kernel(spec):
        norm = sums[0]
        for axis in range(1, nd):
            norm = norm * sums[axis]
        w = w / norm[..., None]
    return tex.remap_coords(coords), w


def filter_bilinear(tex: TextureGrid, st: np.ndarray,
                    counter: FetchCounter | None = None) -> np.ndarray:
    return separable_filter(tex, st, TENT, counter)


def filter_trilinear(tex: TextureGrid, p: np.ndarray,
                     counter: FetchCounter | None = None) -> np.ndarray:
    return separable_filter(tex, p, TENT, counter)


def filter_bicubic_bspline(tex: TextureGrid, st: np.ndarray,
                           counter: FetchCounter | None = None) -> np.ndarray:
    return separable_filter(tex, st, CUBIC_BSPLINE, counter)


def filter_tricubic_bspline(tex: TextureGrid, p: np.ndarray,
                            counter: FetchCounter | None = None) -> np.ndarray:
    return separable_filter(tex, p, CUBIC_BSPLINE, counter)


def filter_bicubic_keys(tex: TextureGrid, st: np.ndarray, a: float = -0.5,
                        counter: FetchCounter | None = None) -> np.ndarray:
    return separable_filter(tex, st, KernelSpec(KernelFamily.KEYS_CUBIC, a=a), counter)


def filter_gaussian_window(tex: TextureGrid, pts: np.ndarray, sigma: float = 0.5,
                           radius: float | None = None,
                           counter: FetchCounter | None = None) -> np.ndarray:
    """Truncated, window-normalized Gaussian; works for 2D and 3D grids."""
    spec = KernelSpec(KernelFamily.GAUSSIAN, sigma=sigma, radius=radius)
    if spec.support <= 0.5:
        raise ValueError("Gaussian truncation radius must exceed 0.5 texels")
    return separable_filter(tex, pts, spec, counter)


# ============================================================
# Anisotropic footprints: LOD selection and EWA
# ============================================================

def compute_aniso_lod(dims: Iterable[int], grads: Iterable[float],
                      min_lod: float, max_lod: float,
                      max_aniso: float = 64.0) -> tuple[float, np.ndarray]:
    """Anisotropic LOD from UV-space gradients (dudx, dvdx, dudy, dvdy).

    Axis lengths are measured in texel units; when the major/minor ratio
    exceeds `max_aniso` the minor axis is widened to cap the tap count.
    Returns (lod, major axis vector in texel units).
    """
    dims = tuple(dims)
    g = tuple(float(v) for v in grads)
    minor = np.array([dims[0] * g[0], dims[0] * g[1]])
    major = np.array([dims[1] * g[2], dims[1] * g[3]])
    if minor @ minor > major @ major:
        minor, major = major, minor
    min_len = math.sqrt(float(minor @ minor))
    max_len = math.sqrt(float(major @ major))
    if min_len > 0.0 and min_len * max_aniso < max_len:
        min_len *= max_len / (min_len * max_aniso)
    lod = math.log2(min_len) if min_len > 0.0 else -math.inf
    return min(max(lod, min_lod), max_lod), major


def ewa_coefficients(dst0: np.ndarray, dst1: np.ndarray,
                     ) -> tuple[float, float, float]:
    """Normalized ellipse quadratic (A, B, C) with r^2 < 1 inside.

    The +1 padding keeps the ellipse at least a texel wide, so the scan always
    finds a tap.
    """
    dst0 = np.asarray(dst0, dtype=np.float64)
    dst1 = np.asarray(dst1, dtype=np.float64)
    a = dst0[1] ** 2 + dst1[1] ** 2 + 1.0
    b = -2.0 * (dst0[0] * dst0[1] + dst1[0] * dst1[1])
    c = dst0[0] ** 2 + dst1[0] ** 2 + 1.0
    inv_f = 1.0 / (a * c - b * b * 0.25)
    return a * inv_f, b * inv_f, c * inv_f


def _ewa_extents(a: float, b: float, c: float) -> tuple[float, float]:
    det = 4.0 * a * c - b * b
    return 2.0 * math.sqrt(c / det), 2.0 * math.sqrt(a / det)


def _ewa_accumulate(tex: TextureGrid, st: np.ndarray, a: float, b: float,
                    c: float, counter: FetchCounter | None,
                    shade=None) -> np.ndarray:
    """Scan the ellipse bounding box, LUT-weight the in-ellipse taps.

    `shade` maps fetched texel values before averaging (used by the shading
    lab's filter-after reference path).
    """
    st = np.asarray(st, dtype=np.float64)
    base = np.floor(st).astype(np.int64)
    xr, yr = _ewa_extents(a, b, c)
    dis = np.arange(math.floor(-xr), math.ceil(xr) + 2, dtype=np.int64)
    djs = np.arange(math.floor(-yr), math.ceil(yr) + 2, dtype=np.int64)
    acc = None
    wsum = None
    coords = np.empty_like(base)
    for dj in djs:
        tt = (base[..., 1] + dj) - st[..., 1]
        for di in dis:
            ss = (base[..., 0] + di) - st[..., 0]
            r2 = a * ss * ss + b * ss * tt + c * tt * tt
            inside = r2 < 1.0
            if not np.any(inside):
                continue
            idx = np.minimum((r2 * EWA_LUT_SIZE).astype(np.int64), EWA_LUT_SIZE - 1)
            w = np.where(inside, EWA_LUT[idx], 0.0)
            coords[..., 0] = base[..., 0] + di
            coords[..., 1] = base[..., 1] + dj
            vals = tex.fetch(coords, None)
            if counter is not None:
                counter.add(int(np.count_nonzero(inside)))
            if shade is not None:
                vals = shade(vals)
            term = w[..., None] * vals
            acc = term if acc is None else acc + term
            wsum = w if wsum is None else wsum + w
    return acc / wsum[..., None]


def filter_ewa(tex: TextureGrid | MipPyramid, st: np.ndarray,
               dst0: np.ndarray, dst1: np.ndarray,
               counter: FetchCounter | None = None,
               mip_bias: float = 0.0) -> np.ndarray:
    """Elliptical weighted average over a grid or a MIP pyramid.

    Over a pyramid the anisotropic LOD picks the two bracketing levels and
    their EWA results blend linearly, matching the expectation of the
    stochastic level selection. Degenerate zero-length derivative vectors
    fall back to bilinear.
    """
    dst0 = np.asarray(dst0, dtype=np.float64)
    dst1 = np.asarray(dst1, dtype=np.float64)
    degenerate = not (np.any(dst0 != 0.0) or np.any(dst1 != 0.0))
    if isinstance(tex, MipPyramid):
        if degenerate:
            return filter_bilinear(tex.levels[0], st, counter)
        lod, _ = compute_aniso_lod((1, 1), (dst0[0], dst0[1], dst1[0], dst1[1]),
                                   0.0, tex.n_levels - 1.0)
        lod = min(max(lod + mip_bias, 0.0), tex.n_levels - 1.0)
        lo = int(math.floor(lod))
        hi = min(lo + 1, tex.n_levels - 1)
        frac = lod - lo
        parts = []
        for level in (lo, hi):
            scale = tex.level_scale(level)
            a, b, c = ewa_coefficients(dst0 * scale, dst1 * scale)
            parts.append(_ewa_accumulate(tex.levels[level], tex.to_level(st, level),
                                         a, b, c, counter))
        return (1.0 - frac) * parts[0] + frac * parts[1]
    if degenerate:
        return filter_bilinear(tex, st, counter)
    a, b, c = ewa_coefficients(dst0, dst1)
    return _ewa_accumulate(tex, st, a, b, c, counter)


def filter_trilinear_mip(pyr: MipPyramid, st: np.ndarray,
                         dst0: np.ndarray | None = None,
                         dst1: np.ndarray | None = None,
                         counter: FetchCounter | None = None,
                         lod: float | None = None,
                         mip_bias: float = 0.0) -> np.ndarray:
    """Classic trilinear MIP: bilinear at the two bracketing levels, blended.

    One scalar level for all points, from log2 of the larger derivative
    vector unless `lod` is given directly; fetch count is 8 per point.
    """
    if lod is None:
        if dst0 is None or dst1 is None:
            raise ValueError("trilinear MIP needs derivative vectors or an explicit lod")
        axis = max(float(np.hypot(*np.asarray(dst0, dtype=np.float64))),
                   float(np.hypot(*np.asarray(dst1, dtype=np.float64))))
        lod = math.log2(axis) if axis > 0.0 else -math.inf
    lod = min(max(float(lod) + mip_bias, 0.0), pyr.n_levels - 1.0)
    lo = int(math.floor(lod))
    hi = min(lo + 1, pyr.n_levels - 1)
    frac = lod - lo
    v_lo = filter_bilinear(pyr.levels[lo], pyr.to_level(st, lo), counter)
    v_hi = filter_bilinear(pyr.levels[hi], pyr.to_level(st, hi), counter)
    return (1.0 - frac) * v_lo + frac * v_hi


def blend_weighted(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Normalized non-negative blend along the leading value axis."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or weights.shape[0] != values.shape[0]:
        raise ValueError("one weight per value required")
    if np.any(weights < 0.0):
        raise ValueError("blend weights must be non-negative")
    total = weights.sum()
    if not total > 0.0:
        raise ValueError("blend weights must not all be zero")
    return np.tensordot(weights, values, axes=(0, 0)) / total


# ============================================================
# Name-keyed dispatch shared by the CLI and the shading lab
# ============================================================

def det_filter_value(tex: TextureGrid | MipPyramid, pts: np.ndarray,
                     cfg: FilterConfig, counter: FetchCounter | None = None,
                     dst0: np.ndarray | None = None,
                     dst1: np.ndarray | None = None,
                     mip_bias: float = 0.0) -> np.ndarray:
    if cfg.name == "ewa":
        if dst0 is None or dst1 is None:
            raise ValueError("EWA needs derivative vectors")
        return filter_ewa(tex, pts, dst0, dst1, counter, mip_bias)
    if cfg.name == "trilinear-mip":
        if not isinstance(tex, MipPyramid):
            raise ValueError("trilinear-mip needs a MIP pyramid")
        return filter_trilinear_mip(tex, pts, dst0, dst1, counter,
                                    mip_bias=mip_bias)
    if isinstance(tex, MipPyramid):
        tex = tex.levels[0]
    return separable_filter(tex, pts, cfg.kernel(), counter)


def filter_taps(tex: TextureGrid, pts: np.ndarray, cfg: FilterConfig,
                dst0: np.ndarray | None = None,
                dst1: np.ndarray | None = None,
                ) -> tuple[np.ndarray, np.ndarray]:
    """(coords, weights) of the full deterministic window, weights sum to 1."""
    if cfg.name == "ewa":
        raise ValueError("EWA taps are scan-based; use ewa_taps for single points")
    if cfg.name == "trilinear-mip":
        raise ValueError("trilinear-mip taps span levels and are not exposed")
    spec = cfg.kernel()
    return separable_taps(tex, pts, spec)


def ewa_taps(tex: TextureGrid, st: np.ndarray, dst0: np.ndarray,
             dst1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(coords, normalized weights) of the in-ellipse taps at one point."""
    st = np.asarray(st, dtype=np.float64)
    if st.shape != (2,):
        raise ValueError("ewa_taps expects a single (s, t) point")
    a, b, c = ewa_coefficients(dst0, dst1)
    base = np.floor(st).astype(np.int64)
    xr, yr = _ewa_extents(a, b, c)
    coords = []
    weights = []
    for dj in range(math.floor(-yr), math.ceil(yr) + 2):
        for di in range(math.floor(-xr), math.ceil(xr) + 2):
            ss = base[0] + di - st[0]
            tt = base[1] + dj - st[1]
            r2 = a * ss * ss + b * ss * tt + c * tt * tt
            if r2 < 1.0:
                idx = min(int(r2 * EWA_LUT_SIZE), EWA_LUT_SIZE - 1)
                coords.append((base[0] + di, base[1] + dj))
                weights.append(EWA_LUT[idx])
    w = np.array(weights)
    return tex.remap_coords(np.array(coords, dtype=np.int64)), w / w.sum()
