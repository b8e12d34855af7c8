"""Single-lookup stochastic estimators for the deterministic filters.

Each estimator consumes one uniform in [0, 1) and stretches it across every
discrete choice through sample reuse (remapping the accepted or rejected
stretch back to [0, 1)), so a full 2D/3D filter costs a single texel fetch.
Exceptions: the FIS Gaussian needs two uniforms (Box-Muller) and FIS B-spline
sampling needs `degree` uniforms per axis.

Signed kernels (Keys cubic) are positivized: the positive and negative weight
sets are sampled separately and recombined as sum(w+)*t(j+) - sum(w-)*t(j-),
which keeps the estimator unbiased at up to two fetches.

All samplers are vectorized: points of shape (..., nd) broadcast against
uniforms of shape (...), and ties (xi exactly equal to an acceptance
threshold) resolve to the reject branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .det_filters import (FilterConfig, compute_aniso_lod, ewa_coefficients,
                          EWA_LUT, EWA_LUT_SIZE, _ewa_extents)
from .kernels import (CUBIC_BSPLINE, KernelFamily, KernelSpec, kernel_window,
                      window_offsets, default_taps)
from .texture import FetchCounter, MipPyramid, TextureGrid

_ONE_BELOW = float(np.nextafter(1.0, 0.0))


class DiscreteSampleResult(NamedTuple):
    index: int | np.ndarray
    xi_out: float | np.ndarray


@dataclass(frozen=True)
class PositivizedSample:
    """One tap from the positive weight set and, when negative mass exists,
    one from the negative set; weights are the summed set masses."""

    pos: DiscreteSampleResult
    pos_weight: float | np.ndarray
    neg: DiscreteSampleResult | None
    neg_weight: float | np.ndarray


@dataclass(frozen=True)
class Tap:
    coord: tuple[int, ...]
    mip_level: int
    weight: float


@dataclass(frozen=True)
class TapEstimate:
    """Resolved stochastic lookup: the taps taken, the estimate, the fetch
    count actually spent."""

    taps: tuple[Tap, ...]
    value: np.ndarray
    fetches: int


def _reuse(xi: np.ndarray, p: np.ndarray, accepted: np.ndarray) -> np.ndarray:
    """Remap xi back to [0, 1) after an accept/reject decision at p."""
    # divisor forced to 1 on the untaken branch so np.where never divides
    # a large xi by a denormal p it is about to discard
    safe_p = np.where(accepted & (p > 0.0), p, 1.0)
    safe_q = np.where(~accepted & (p < 1.0), 1.0 - p, 1.0)
    out = np.where(accepted, xi / safe_p, (xi - p) / safe_q)
    return np.minimum(out, _ONE_BELOW)


def sample_reuse(xi, p):
    """Accept with probability p, recycling the uniform either way.

    Returns (accepted, xi'); scalar in, scalar out. Degenerate p of 0 or 1
    passes xi through unchanged.
    """
    scalar = np.isscalar(xi) and np.isscalar(p)
    xi_a = np.asarray(xi, dtype=np.float64)
    p_a = np.asarray(p, dtype=np.float64)
    accepted = xi_a < p_a
    out = _reuse(xi_a, p_a, accepted)
    if scalar:
        return bool(accepted), float(out)
    return accepted, out


def _discrete(weights: np.ndarray, xi: np.ndarray,
              ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized CDF inversion over the last weight axis with cell remap."""
    shape = np.broadcast_shapes(weights.shape[:-1], xi.shape)
    w_all = np.broadcast_to(weights, shape + weights.shape[-1:])
    xi_b = np.broadcast_to(xi, shape)
    cum = np.cumsum(w_all, axis=-1)
    total = cum[..., -1]
    if np.any(total <= 0.0):
        raise ValueError("discrete sampling needs positive total weight")
    r = xi_b * total
    idx = np.minimum(np.sum(cum <= r[..., None], axis=-1),
                     weights.shape[-1] - 1)
    lo = np.take_along_axis(cum, idx[..., None], axis=-1)[..., 0]
    w = np.take_along_axis(w_all, idx[..., None], axis=-1)[..., 0]
    lo = lo - w  # cumulative mass before the chosen cell
    xi_out = np.where(w > 0.0, (r - lo) / np.where(w > 0.0, w, 1.0), 0.0)
    return idx, np.minimum(np.maximum(xi_out, 0.0), _ONE_BELOW)


def sample_discrete(weights, xi) -> DiscreteSampleResult:
    """Pick index j with probability w_j / sum(w); weights must be
    non-negative with positive total. The uniform is remapped within the
    chosen cell for reuse."""
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0.0):
        raise ValueError("discrete sampling weights must be non-negative")
    scalar = np.isscalar(xi) and w.ndim == 1
    idx, xi_out = _discrete(w, np.asarray(xi, dtype=np.float64))
    if scalar:
        return DiscreteSampleResult(int(idx), float(xi_out))
    return DiscreteSampleResult(idx, xi_out)


def reservoir_sample(weights: Iterable, xi) -> DiscreteSampleResult:
    """Single-pass weighted pick from a stream; O(1) state.

    The first item is always accepted; item j then replaces the held index
    with probability w_j over the running total, recycling the uniform.
    Distribution matches `sample_discrete` on the materialized stream.
    """
    scalar = np.isscalar(xi)
    xi_a = np.asarray(xi, dtype=np.float64)
    idx = np.zeros(xi_a.shape, dtype=np.int64)
    total = None
    for j, w in enumerate(weights):
        w_a = np.asarray(w, dtype=np.float64)
        if np.any(w_a < 0.0):
            raise ValueError("reservoir weights must be non-negative")
        if total is None:
            total = np.broadcast_to(w_a, xi_a.shape).astype(np.float64).copy()
            continue
        total = total + w_a
        p = np.where(total > 0.0, w_a / np.where(total > 0.0, total, 1.0), 0.0)
        accepted = xi_a < p
        idx = np.where(accepted, j, idx)
        xi_a = _reuse(xi_a, p, accepted)
    if total is None:
        raise ValueError("reservoir stream must not be empty")
    if scalar:
        return DiscreteSampleResult(int(idx), float(xi_a))
    return DiscreteSampleResult(idx, xi_a)


def _positivized_stream(weight_items: list[np.ndarray], xi: np.ndarray,
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Two interleaved reservoirs over a signed weight stream, one xi chain.

    Returns (pos_idx, neg_idx, pos_sum, neg_sum, xi'); neg_idx is -1 where
    the stream held no negative mass.
    """
    shape = xi.shape
    pos_idx = np.full(shape, -1, dtype=np.int64)
    neg_idx = np.full(shape, -1, dtype=np.int64)
    pos_sum = np.zeros(shape)
    neg_sum = np.zeros(shape)
    for j, w in enumerate(weight_items):
        w = np.broadcast_to(np.asarray(w, dtype=np.float64), shape)
        mag = np.abs(w)
        is_neg = w < 0.0
        recv = np.where(is_neg, neg_sum, pos_sum) + mag
        p = np.where(recv > 0.0, mag / np.where(recv > 0.0, recv, 1.0), 0.0)
        accepted = xi < p
        neg_sum = np.where(is_neg, recv, neg_sum)
        pos_sum = np.where(is_neg, pos_sum, recv)
        neg_idx = np.where(is_neg & accepted, j, neg_idx)
        pos_idx = np.where(~is_neg & accepted, j, pos_idx)
        xi = _reuse(xi, p, accepted)
    return pos_idx, neg_idx, pos_sum, neg_sum, xi


def positivized_sample(weights, xi) -> PositivizedSample:
    """Split a signed weight vector by sign and take one tap per side.

    The estimator pos_weight * t[pos] - neg_weight * t[neg] is unbiased for
    the signed weighted sum. `neg` is None when no weight is negative.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("positivized_sample expects a 1D weight vector")
    if not np.any(np.abs(w) > 0.0):
        raise ValueError("positivized sampling needs nonzero weight")
    scalar = np.isscalar(xi)
    xi_a = np.asarray(xi, dtype=np.float64)
    pos_idx, neg_idx, pos_sum, neg_sum, xi_out = _positivized_stream(list(w), xi_a)
    if scalar:
        pos = DiscreteSampleResult(int(pos_idx), float(xi_out))
        neg = None
        if np.any(w < 0.0):
            neg = DiscreteSampleResult(int(neg_idx), float(xi_out))
        return PositivizedSample(pos, float(pos_sum), neg,
                                 float(neg_sum) if neg is not None else 0.0)
    neg = DiscreteSampleResult(neg_idx, xi_out) if np.any(w < 0.0) else None
    return PositivizedSample(DiscreteSampleResult(pos_idx, xi_out), pos_sum,
                             neg, neg_sum)


# ============================================================
# Interpolation estimators
# ============================================================

def stoch_lerp(v0, v1, t, xi):
    """One-endpoint lerp estimate: v0 when xi > t, else v1."""
    v0 = np.asarray(v0, dtype=np.float64)
    v1 = np.asarray(v1, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    return np.where(xi > t, v0, v1)


def _broadcast_pts(pts, xi) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(pts, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    lead = np.broadcast_shapes(pts.shape[:-1], xi.shape)
    pts = np.broadcast_to(pts, lead + pts.shape[-1:])
    xi = np.broadcast_to(xi, lead).copy()
    return pts, xi


def _sample_linear_axes(pts: np.ndarray, xi: np.ndarray,
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Nested per-axis lerp sampling: accept moves to the +1 texel."""
    pts, xi = _broadcast_pts(pts, xi)
    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    coords = base.copy()
    for axis in range(pts.shape[-1]):
        p = frac[..., axis]
        accepted = xi < p
        coords[..., axis] += accepted
        xi = _reuse(xi, p, accepted)
    return coords, xi


def stoch_bilinear(st, xi) -> tuple[np.ndarray, np.ndarray]:
    """Single-tap bilinear: corner (x+i, y+j) with probability w_i * w_j."""
    return _sample_linear_axes(st, xi)


def stoch_trilinear(p, xi) -> tuple[np.ndarray, np.ndarray]:
    return _sample_linear_axes(p, xi)


def _sample_window_axes(spec: KernelSpec, pts: np.ndarray, xi: np.ndarray,
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis discrete sampling of a non-negative kernel window."""
    pts, xi = _broadcast_pts(pts, xi)
    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    offsets = window_offsets(default_taps(spec))
    coords = base.copy()
    for axis in range(pts.shape[-1]):
        _, w, _ = kernel_window(spec, frac[..., axis])
        idx, xi = _discrete(w, xi)
        coords[..., axis] += offsets[idx]
    return coords, xi


def stoch_bicubic_bspline(st, xi) -> tuple[np.ndarray, np.ndarray]:
    """Single-tap bicubic B-spline: 4x4 window sampled one axis at a time."""
    return _sample_window_axes(CUBIC_BSPLINE, st, xi)


def stoch_tricubic_bspline(p, xi) -> tuple[np.ndarray, np.ndarray]:
    return _sample_window_axes(CUBIC_BSPLINE, p, xi)


def stoch_gaussian_window(pts, xi, sigma: float = 0.5,
                          radius: float | None = None,
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Single-tap truncated Gaussian window (2D or 3D), same window as
    `filter_gaussian_window`."""
    spec = KernelSpec(KernelFamily.GAUSSIAN, sigma=sigma, radius=radius)
    if spec.support <= 0.5:
        raise ValueError("Gaussian truncation radius must exceed 0.5 texels")
    return _sample_window_axes(spec, pts, xi)


@dataclass(frozen=True)
class KeysCubicSample:
    """Vectorized positivized bicubic tap pair; neg_* entries are meaningful
    only where neg_weight > 0 (neg coords then duplicate the positive tap so
    gathers stay in range)."""

    pos_coords: np.ndarray
    neg_coords: np.ndarray
    pos_weight: np.ndarray
    neg_weight: np.ndarray
    xi_out: np.ndarray


def stoch_bicubic_keys(st, xi, a: float = -0.5) -> KeysCubicSample:
    """Positivized Keys bicubic: one tap per weight sign over the 4x4 window.

    Estimate = pos_weight * t(pos) - neg_weight * t(neg); expectation equals
    the deterministic Keys filter.
    """
    pts, xi = _broadcast_pts(st, xi)
    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    spec = KernelSpec(KernelFamily.KEYS_CUBIC, a=a)
    offsets = window_offsets(4)
    _, wx, _ = kernel_window(spec, frac[..., 0])
    _, wy, _ = kernel_window(spec, frac[..., 1])
    items = [wy[..., j] * wx[..., i] for j in range(4) for i in range(4)]
    pos_idx, neg_idx, pos_sum, neg_sum, xi = _positivized_stream(items, xi)
    # stream index j*4+i back to window offsets
    def to_coords(flat_idx: np.ndarray) -> np.ndarray:
        safe = np.maximum(flat_idx, 0)
        out = base.copy()
        out[..., 0] += offsets[safe % 4]
        out[..., 1] += offsets[safe // 4]
        return out

    pos_coords = to_coords(pos_idx)
    neg_coords = np.where((neg_idx >= 0)[..., None], to_coords(neg_idx), pos_coords)
    return KeysCubicSample(pos_coords, neg_coords, pos_sum, neg_sum, xi)


def keys_estimate(tex: TextureGrid, st, xi, a: float = -0.5,
                  counter: FetchCounter | None = None) -> np.ndarray:
    """Fetch and combine the positivized Keys taps; 1-2 fetches per point."""
    s = stoch_bicubic_keys(st, xi, a)
    vals = s.pos_weight[..., None] * tex.fetch(s.pos_coords, None)
    has_neg = s.neg_weight > 0.0
    if counter is not None:
        counter.add(s.pos_weight.size + int(np.count_nonzero(has_neg)))
    if np.any(has_neg):
        vals = vals - (s.neg_weight * has_neg)[..., None] * tex.fetch(s.neg_coords, None)
    return vals


# ============================================================
# MIP level and EWA
# ============================================================

def stoch_mip_level(lod, xi, n_levels: int):
    """Round-to-nearest of lod + xi - 0.5, clamped; expectation over xi blends
    the two bracketing levels linearly."""
    lod = np.asarray(lod, dtype=np.float64)
    xi_a = np.asarray(xi, dtype=np.float64)
    level = np.floor(lod + xi_a).astype(np.int64)
    level = np.clip(level, 0, n_levels - 1)
    if np.isscalar(xi) and lod.ndim == 0:
        return int(level)
    return level


def _stoch_level_pick(lod: float, xi: np.ndarray, n_levels: int,
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Level selection plus xi remap so the chain can continue."""
    lo = math.floor(lod)
    f = lod - lo
    take_lo = xi < (1.0 - f)
    level = np.where(take_lo, lo, lo + 1)
    level = np.clip(level, 0, n_levels - 1)
    xi = _reuse(xi, np.asarray(1.0 - f), take_lo)
    return level.astype(np.int64), xi


def _ewa_reservoir(st: np.ndarray, a: float, b: float, c: float,
                   xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reservoir over the in-ellipse LUT weights; one tap, one uniform."""
    base = np.floor(st).astype(np.int64)
    xr, yr = _ewa_extents(a, b, c)
    total = np.zeros(xi.shape)
    sel = base.copy()
    for dj in range(math.floor(-yr), math.ceil(yr) + 2):
        tt = (base[..., 1] + dj) - st[..., 1]
        for di in range(math.floor(-xr), math.ceil(xr) + 2):
            ss = (base[..., 0] + di) - st[..., 0]
            r2 = a * ss * ss + b * ss * tt + c * tt * tt
            inside = r2 < 1.0
            if not np.any(inside):
                continue
            idx = np.minimum((r2 * EWA_LUT_SIZE).astype(np.int64), EWA_LUT_SIZE - 1)
            w = np.where(inside, EWA_LUT[idx], 0.0)
            total = total + w
            p = np.where(total > 0.0, w / np.where(total > 0.0, total, 1.0), 0.0)
            accepted = xi < p
            sel[..., 0] = np.where(accepted, base[..., 0] + di, sel[..., 0])
            sel[..., 1] = np.where(accepted, base[..., 1] + dj, sel[..., 1])
            xi = _reuse(xi, p, accepted)
    return sel, xi


def stoch_ewa_sample(tex: TextureGrid | MipPyramid, st, dst0, dst1, xi,
                     mip_bias: float = 0.0,
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One EWA tap: stochastic MIP level from the LOD fraction, then a
    reservoir over that level's in-ellipse weights.

    Returns (coords in level raster space, levels, xi'); levels are all zero
    over a plain grid.
    """
    dst0 = np.asarray(dst0, dtype=np.float64)
    dst1 = np.asarray(dst1, dtype=np.float64)
    if np.ndim(xi) == 0 and np.asarray(st).ndim == 1:
        coords, levels, xi_out = stoch_ewa_sample(
            tex, np.asarray(st)[None, :], dst0, dst1,
            np.asarray(xi, dtype=np.float64)[None], mip_bias)
        return coords[0], int(levels[0]), float(xi_out[0])
    pts, xi = _broadcast_pts(st, xi)
    degenerate = not (np.any(dst0 != 0.0) or np.any(dst1 != 0.0))
    if degenerate:
        if isinstance(tex, MipPyramid):
            tex = tex.levels[0]
        coords, xi = stoch_bilinear(pts, xi)
        return coords, np.zeros(coords.shape[:-1], dtype=np.int64), xi
    if isinstance(tex, MipPyramid):
        lod, _ = compute_aniso_lod((1, 1), (dst0[0], dst0[1], dst1[0], dst1[1]),
                                   0.0, tex.n_levels - 1.0)
        lod = min(max(lod + mip_bias, 0.0), tex.n_levels - 1.0)
        levels, xi = _stoch_level_pick(lod, xi, tex.n_levels)
        coords = np.zeros(pts.shape, dtype=np.int64)
        for level in np.unique(levels):
            m = levels == level
            scale = tex.level_scale(int(level))
            a, b, c = ewa_coefficients(dst0 * scale, dst1 * scale)
            sub, sub_xi = _ewa_reservoir(tex.to_level(pts[m], int(level)),
                                         a, b, c, xi[m])
            coords[m] = sub
            xi[m] = sub_xi
        return coords, levels, xi
    a, b, c = ewa_coefficients(dst0, dst1)
    coords, xi = _ewa_reservoir(pts, a, b, c, xi)
    return coords, np.zeros(coords.shape[:-1], dtype=np.int64), xi


def stoch_ewa_value(tex: TextureGrid | MipPyramid, st, dst0, dst1, xi,
                    counter: FetchCounter | None = None,
                    mip_bias: float = 0.0) -> np.ndarray:
    if np.ndim(xi) == 0 and np.asarray(st).ndim == 1:
        return stoch_ewa_value(tex, np.asarray(st)[None, :], dst0, dst1,
                               np.asarray(xi, dtype=np.float64)[None],
                               counter, mip_bias)[0]
    coords, levels, _ = stoch_ewa_sample(tex, st, dst0, dst1, xi, mip_bias)
    if isinstance(tex, MipPyramid):
        out = np.zeros(coords.shape[:-1] + (tex.levels[0].channels,))
        for level in np.unique(levels):
            m = levels == level
            out[m] = tex.levels[int(level)].fetch(coords[m], counter)
        return out
    return tex.fetch(coords, counter)


# ============================================================
# Filter importance sampling
# ============================================================

def fis_gaussian(st, sigma: float, xi1, xi2) -> np.ndarray:
    """Gaussian splat position via Box-Muller, then nearest texel.

    The realized filter is the sigma Gaussian convolved with the texel box.
    """
    st = np.asarray(st, dtype=np.float64)
    xi1 = np.asarray(xi1, dtype=np.float64)
    xi2 = np.asarray(xi2, dtype=np.float64)
    # uniforms live in [0, 1): 1 - xi1 keeps the log argument positive
    mag = sigma * np.sqrt(-2.0 * np.log1p(-xi1))
    ang = 2.0 * math.pi * xi2
    offset = np.stack([mag * np.cos(ang), mag * np.sin(ang)], axis=-1)
    return np.floor(st + offset + 0.5).astype(np.int64)


def fis_bspline(st, degree: int, xis) -> np.ndarray:
    """Degree-n B-spline filter by Irwin-Hall offset sampling.

    `xis` holds `degree` uniforms per axis, shape (..., nd, degree); offset =
    sum(xi_k) - degree/2 per axis, then nearest texel. The realized filter is
    the degree-n B-spline (n=1 tent, n=3 the cubic B-spline).
    """
    if degree < 1:
        raise ValueError("B-spline degree must be >= 1")
    st = np.asarray(st, dtype=np.float64)
    xis = np.asarray(xis, dtype=np.float64)
    nd = st.shape[-1]
    if xis.shape[-2:] != (nd, degree):
        raise ValueError(f"xis must have shape (..., {nd}, {degree})")
    offset = xis.sum(axis=-1) - degree / 2.0
    return np.floor(st + offset + 0.5).astype(np.int64)


def stoch_blend(weights, xi) -> DiscreteSampleResult:
    """Pick one blend branch with probability proportional to its weight, so
    only that branch needs evaluating."""
    return sample_discrete(weights, xi)


# ============================================================
# Name-keyed dispatch mirroring det_filters.det_filter_value
# ============================================================

def uniform_shape(cfg: FilterConfig, estimator: str, nd: int) -> tuple[int, ...]:
    """Trailing shape of the uniform block one estimate consumes."""
    if estimator == "fis":
        if cfg.name == "gaussian":
            return (2,)
        if cfg.name in ("bilinear", "trilinear"):
            return (nd, 1)
        if cfg.name in ("bicubic-bspline", "tricubic-bspline"):
            return (nd, 3)
        raise ValueError(f"filter {cfg.name!r} has no FIS estimator")
    return ()


def stoch_filter_values(tex: TextureGrid | MipPyramid, pts, cfg: FilterConfig,
                        xi, counter: FetchCounter | None = None,
                        estimator: str = "stoch",
                        dst0: np.ndarray | None = None,
                        dst1: np.ndarray | None = None,
                        mip_bias: float = 0.0) -> np.ndarray:
    """Vectorized stochastic estimates for the named filter.

    `xi` must carry the trailing shape `uniform_shape(cfg, estimator, nd)`
    beyond the broadcast lead; plain estimators take a bare (...,) block.
    """
    grid = tex.levels[0] if isinstance(tex, MipPyramid) else tex
    nd = grid.spatial_ndim
    xi = np.asarray(xi, dtype=np.float64)
    if estimator == "fis":
        tail = uniform_shape(cfg, "fis", nd)
        if xi.shape[-len(tail):] != tail:
            raise ValueError(f"FIS {cfg.name} needs uniforms shaped (..., {tail})")
        if cfg.name == "gaussian":
            coords = fis_gaussian(pts, cfg.sigma, xi[..., 0], xi[..., 1])
        else:
            degree = tail[-1]
            coords = fis_bspline(pts, degree, xi)
        return grid.fetch(coords, counter)
    if estimator != "stoch":
        raise ValueError(f"unknown estimator {estimator!r}")
    if cfg.name in ("bilinear", "trilinear"):
        coords, _ = _sample_linear_axes(pts, xi)
        return grid.fetch(coords, counter)
    if cfg.name in ("bicubic-bspline", "tricubic-bspline"):
        coords, _ = _sample_window_axes(CUBIC_BSPLINE, pts, xi)
        return grid.fetch(coords, counter)
    if cfg.name == "gaussian":
        coords, _ = stoch_gaussian_window(pts, xi, cfg.sigma, cfg.gauss_radius)
        return grid.fetch(coords, counter)
    if cfg.name == "bicubic-keys":
        return keys_estimate(grid, pts, xi, cfg.keys_a, counter)
    if cfg.name == "ewa":
        if dst0 is None or dst1 is None:
            raise ValueError("EWA needs derivative vectors")
        return stoch_ewa_value(tex, pts, dst0, dst1, xi, counter, mip_bias)
    if cfg.name == "trilinear-mip":
        if not isinstance(tex, MipPyramid):
            raise ValueError("trilinear-mip needs a MIP pyramid")
        if dst0 is None or dst1 is None:
            raise ValueError("trilinear-mip needs derivative vectors")
        axis = max(float(np.hypot(*np.asarray(dst0, dtype=np.float64))),
                   float(np.hypot(*np.asarray(dst1, dtype=np.float64))))
        lod = math.log2(axis) if axis > 0.0 else -math.inf
        lod = min(max(lod + mip_bias, 0.0), tex.n_levels - 1.0)
        pts_b, xi_b = _broadcast_pts(pts, xi)
        levels, xi_b = _stoch_level_pick(lod, xi_b, tex.n_levels)
        out = np.zeros(pts_b.shape[:-1] + (grid.channels,))
        for level in np.unique(levels):
            m = levels == level
            coords, _ = _sample_linear_axes(tex.to_level(pts_b[m], int(level)),
                                            xi_b[m])
            out[m] = tex.levels[int(level)].fetch(coords, counter)
        return out
    raise ValueError(f"unknown filter {cfg.name!r}")


def tap_estimate(tex: TextureGrid | MipPyramid, cfg: FilterConfig, pt, xi,
                 counter: FetchCounter | None = None,
                 dst0: np.ndarray | None = None,
                 dst1: np.ndarray | None = None) -> TapEstimate:
    """Single-point stochastic lookup with full tap bookkeeping."""
    grid = tex.levels[0] if isinstance(tex, MipPyramid) else tex
    pt = np.asarray(pt, dtype=np.float64)
    if pt.ndim != 1:
        raise ValueError("tap_estimate takes a single point")
    local = FetchCounter()
    xi_v = np.asarray([xi], dtype=np.float64)
    if cfg.name == "bicubic-keys":
        s = stoch_bicubic_keys(pt[None, :], xi_v, cfg.keys_a)
        value = keys_estimate(grid, pt[None, :], xi_v, cfg.keys_a, local)[0]
        taps = [Tap(tuple(int(v) for v in s.pos_coords[0]), 0,
                    float(s.pos_weight[0]))]
        if s.neg_weight[0] > 0.0:
            taps.append(Tap(tuple(int(v) for v in s.neg_coords[0]), 0,
                            -float(s.neg_weight[0])))
    elif cfg.name == "ewa":
        coords, level, _ = stoch_ewa_sample(tex, pt, dst0, dst1, float(xi))
        src = tex.levels[level] if isinstance(tex, MipPyramid) else tex
        value = src.fetch(coords, local)
        taps = [Tap(tuple(int(v) for v in coords), int(level), 1.0)]
    else:
        if cfg.name in ("bilinear", "trilinear"):
            coords, _ = _sample_linear_axes(pt[None, :], xi_v)
        elif cfg.name in ("bicubic-bspline", "tricubic-bspline"):
            coords, _ = _sample_window_axes(CUBIC_BSPLINE, pt[None, :], xi_v)
        elif cfg.name == "gaussian":
            coords, _ = stoch_gaussian_window(pt[None, :], xi_v, cfg.sigma,
                                              cfg.gauss_radius)
        else:
            raise ValueError(f"tap_estimate does not support {cfg.name!r}")
        value = grid.fetch(coords[0], local)
        taps = [Tap(tuple(int(v) for v in coords[0]), 0, 1.0)]
    if counter is not None:
        counter.merge(local)
    return TapEstimate(tuple(taps), value, local.count)
