"""Filtering-order laboratory.

Shading in real pipelines applies a nonlinear map g to texel parameters;
filtering texture inputs first and shading the average (filter-before) only
matches the ground truth of averaging shaded texels (filter-after) when g is
affine. The maps here are scalar stand-ins for such shading nonlinearities,
and the lab measures the divergence plus how fast single-tap stochastic
estimates recover the filter-after reference.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .det_filters import (FilterConfig, det_filter_value, ewa_taps,
                          filter_taps)
from .rng import RngStream
from .stoch import keys_estimate, stoch_filter_values, uniform_shape
from .texture import FetchCounter, TextureGrid


# ============================================================
# Shading maps (scalar, applied per channel)
# ============================================================

@dataclass(frozen=True)
class Identity:
    def __call__(self, x):
        return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class Power:
    k: float = 2.0

    def __call__(self, x):
        return np.asarray(x, dtype=np.float64) ** self.k


@dataclass(frozen=True)
class Exp:
    scale: float = 1.0

    def __call__(self, x):
        return np.exp(self.scale * np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class PlanckLike:
    """1 / (exp(c/t) - 1): blackbody-style emission response to temperature.

    With the default c the output spans more than three decades over
    t in [0.1, 1]. Non-positive input maps to the t -> 0+ limit of 0.
    """

    c: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        safe = np.where(x > 0.0, x, 1.0)
        out = 1.0 / np.expm1(self.c / safe)
        return np.where(x > 0.0, out, 0.0)


@dataclass(frozen=True)
class Threshold:
    """Hard step: 1 where x > theta, else 0."""

    theta: float = 0.5

    def __call__(self, x):
        return np.where(np.asarray(x, dtype=np.float64) > self.theta, 1.0, 0.0)


@dataclass(frozen=True)
class MetalnessMix:
    """Lerp between a diffuse and a specular response by metalness."""

    diffuse: float = 0.04
    specular: float = 1.0

    def __call__(self, x):
        m = np.asarray(x, dtype=np.float64)
        return self.diffuse + (self.specular - self.diffuse) * m


ShadingMap = Identity | Power | Exp | PlanckLike | Threshold | MetalnessMix


def parse_map(text: str) -> ShadingMap:
    """Map grammar: identity | power:k | exp:s | planck:c | threshold:t."""
    name, _, arg = text.partition(":")
    try:
        if name == "identity":
            return Identity()
        if name == "power":
            return Power(float(arg)) if arg else Power()
        if name == "exp":
            return Exp(float(arg)) if arg else Exp()
        if name == "planck":
            return PlanckLike(float(arg)) if arg else PlanckLike()
        if name == "threshold":
            return Threshold(float(arg)) if arg else Threshold()
    except ValueError as exc:
        raise ValueError(f"bad shading map parameter in {text!r}: {exc}")
    raise ValueError(f"unknown shading map {text!r}")


# ============================================================
# Filtering orders
# ============================================================

def shade_filter_before(tex: TextureGrid, pts, cfg: FilterConfig,
                        g: ShadingMap, counter: FetchCounter | None = None,
                        dst0=None, dst1=None) -> np.ndarray:
    """g applied to the filtered texture value (the cheap, wrong order)."""
    return g(det_filter_value(tex, pts, cfg, counter, dst0=dst0, dst1=dst1))


def shade_filter_after_ref(tex: TextureGrid, pts, cfg: FilterConfig,
                           g: ShadingMap, counter: FetchCounter | None = None,
                           dst0=None, dst1=None) -> np.ndarray:
    """Reference filter-after: the full tap window of g(texel), normalized
    weights (signed for Keys)."""
    if cfg.name == "ewa":
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim == 1:
            coords, w = ewa_taps(tex, pts, dst0, dst1)
            vals = g(tex.fetch(coords, counter))
            return np.tensordot(w, vals, axes=(0, 0))
        return np.stack([shade_filter_after_ref(tex, p, cfg, g, counter,
                                                dst0, dst1) for p in pts])
    coords, w = filter_taps(tex, pts, cfg)
    vals = g(tex.fetch(coords, counter))
    return (w[..., None] * vals).sum(axis=-2)


def shade_filter_after_stoch(tex: TextureGrid, pts, cfg: FilterConfig,
                             g: ShadingMap, xi,
                             counter: FetchCounter | None = None,
                             dst0=None, dst1=None) -> np.ndarray:
    """Single-tap filter-after: g at the sampled texel; positivized filters
    shade both taps and recombine with their signed set weights."""
    if cfg.name == "bicubic-keys":
        return keys_estimate(_Shaded(tex, g), pts, xi, cfg.keys_a, counter)
    return stoch_filter_values(_Shaded(tex, g), pts, cfg, xi, counter,
                               dst0=dst0, dst1=dst1)


class _Shaded:
    """Texture view that shades every fetched texel; keeps stochastic
    samplers oblivious to the map."""

    def __init__(self, tex: TextureGrid, g: ShadingMap):
        self._tex = tex
        self._g = g

    def __getattr__(self, name):
        return getattr(self._tex, name)

    def fetch(self, coords, counter=None):
        return self._g(self._tex.fetch(coords, counter))


# ============================================================
# Divergence report
# ============================================================

def order_divergence_report(tex: TextureGrid, cfg: FilterConfig,
                            g: ShadingMap, queries: np.ndarray,
                            rng: RngStream, spp: int,
                            dst0=None, dst1=None) -> list[dict]:
    """Per-query filter-before vs filter-after comparison rows.

    Channels are averaged so each row carries scalars; `after_stoch_sem` is
    the standard error of the spp-sample stochastic mean.
    """
    queries = np.asarray(queries, dtype=np.float64)
    nd = queries.shape[-1]
    rows = []
    for qi, pt in enumerate(queries):
        before = float(np.mean(shade_filter_before(tex, pt, cfg, g,
                                                   dst0=dst0, dst1=dst1)))
        after_ref = float(np.mean(shade_filter_after_ref(tex, pt, cfg, g,
                                                         dst0=dst0, dst1=dst1)))
        tail = uniform_shape(cfg, "stoch", nd)
        stream = rng.derive(pixel=qi, dimension=0)
        count = spp * int(np.prod(tail, dtype=np.int64)) if tail else spp
        xi = stream.uniforms(count).reshape((spp,) + tail)
        est = shade_filter_after_stoch(tex, np.broadcast_to(pt, (spp, nd)),
                                       cfg, g, xi, dst0=dst0, dst1=dst1)
        est = est.mean(axis=-1)  # channel average per sample
        mean = float(est.mean())
        sem = float(est.std(ddof=1) / math.sqrt(spp)) if spp > 1 else 0.0
        rows.append({
            "query_u": float(pt[0]),
            "query_v": float(pt[1] if nd > 1 else 0.0),
            "before": before,
            "after_ref": after_ref,
            "after_stoch_mean": mean,
            "after_stoch_sem": sem,
            "abs_diff": abs(before - after_ref),
        })
    return rows


def write_report_csv(path: str | Path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("no report rows to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v
                             for k, v in row.items()})
