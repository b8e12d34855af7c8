"""Shading maps and the filter-before vs filter-after order experiment.

Key facts under test: affine maps commute with any normalized filter, convex
maps obey Jensen's inequality against non-negative filter weights, and
nonlinear maps drive a real gap between the two orders that the single-tap
estimator reproduces in expectation.
"""
import csv
import math

import numpy as np
import pytest

from stochfilt import (Exp, FilterConfig, Identity, MetalnessMix, PlanckLike,
                       Power, RngStream, Threshold,
                       binary_checker, det_filter_value, ewa_taps,
                       order_divergence_report, parse_map,
                       shade_filter_after_ref, shade_filter_after_stoch,
                       shade_filter_before, write_report_csv)


def strat(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


class TestMaps:
    def test_pointwise_values(self):
        assert Power(2.0)(3.0) == 9.0
        assert Exp(1.0)(0.0) == 1.0
        assert MetalnessMix()(0.0) == pytest.approx(0.04)
        assert MetalnessMix()(1.0) == pytest.approx(1.0)
        assert Identity()(0.375) == 0.375

    def test_planck_value_and_zero_limit(self):
        """1 / (e - 1) at t = 1, c = 1; non-positive input clamps to 0."""
        g = PlanckLike(c=1.0)
        assert g(1.0) == pytest.approx(1.0 / (math.e - 1.0), abs=1e-15)
        assert g(0.0) == 0.0
        assert g(-2.0) == 0.0

    def test_planck_monotone_and_wide_range(self):
        """Strictly increasing over (0, 1] and spanning over three decades
        across t in [0.1, 1]."""
        g = PlanckLike(c=1.0)
        t = np.linspace(0.1, 1.0, 128)
        y = g(t)
        assert np.all(np.diff(y) > 0)
        assert y[-1] / y[0] > 1e3

    def test_threshold_is_strict(self):
        g = Threshold(theta=0.5)
        assert g(0.5) == 0.0
        assert g(np.nextafter(0.5, 1.0)) == 1.0

    def test_maps_vectorize(self):
        x = np.linspace(0, 1, 7).reshape(7, 1)
        for g in (Identity(), Power(), Exp(), PlanckLike(), Threshold(),
                  MetalnessMix()):
            assert g(x).shape == (7, 1)


class TestParseMap:
    @pytest.mark.parametrize("text,expect", [
        ("identity", Identity()),
        ("power:3", Power(3.0)),
        ("power", Power()),
        ("exp:0.5", Exp(0.5)),
        ("planck:2", PlanckLike(2.0)),
        ("threshold:0.25", Threshold(0.25)),
    ])
    def test_grammar(self, text, expect):
        assert parse_map(text) == expect

    @pytest.mark.parametrize("text", ["gamma", "power:abc", "", "planck:x"])
    def test_rejects_malformed(self, text):
        with pytest.raises(ValueError):
            parse_map(text)


class TestOrderIdentities:
    @pytest.mark.parametrize("fname", ["bilinear", "bicubic-bspline",
                                       "bicubic-keys", "gaussian"])
    @pytest.mark.parametrize("g", [Identity(), MetalnessMix()])
    def test_affine_maps_commute(self, fname, g, tex2d):
        """Affine g and weights summing to one: g(sum w t) = sum w g(t),
        so the two orders agree to rounding."""
        cfg = FilterConfig(name=fname)
        pts = np.array([[5.3, 8.7], [2.2, 12.9], [9.5, 3.5]])
        before = shade_filter_before(tex2d, pts, cfg, g)
        after = shade_filter_after_ref(tex2d, pts, cfg, g)
        np.testing.assert_allclose(before, after, atol=1e-9)

    @pytest.mark.parametrize("fname", ["bilinear", "bicubic-bspline",
                                       "gaussian"])
    @pytest.mark.parametrize("g", [Power(2.0), Exp(1.0)])
    def test_jensen_inequality(self, fname, g, tex2d):
        """Convex g against non-negative normalized weights: the average of
        g dominates g of the average."""
        cfg = FilterConfig(name=fname)
        pts = np.array([[5.3, 8.7], [2.2, 12.9], [9.5, 3.5], [1.1, 1.6]])
        before = shade_filter_before(tex2d, pts, cfg, g)
        after = shade_filter_after_ref(tex2d, pts, cfg, g)
        assert np.all(after >= before - 1e-12)

    def test_threshold_diverges_on_edges(self):
        """On a binary checker a query straddling a cell boundary averages
        to mid-gray: threshold-after gives the covered fraction, while
        threshold-before snaps to 0 or 1."""
        tex = binary_checker(16, cell=4)
        g = Threshold(theta=0.5)
        cfg = FilterConfig(name="bilinear")
        pt = np.array([3.5, 1.5])  # between a 0-cell and a 1-cell
        before = shade_filter_before(tex, pt, cfg, g)
        after = shade_filter_after_ref(tex, pt, cfg, g)
        assert float(np.abs(before - after).max()) > 0.25

    def test_ewa_after_ref_matches_tap_average(self, tex2d):
        g = Power(2.0)
        cfg = FilterConfig(name="ewa")
        pt = np.array([7.3, 8.1])
        dst0, dst1 = np.array([2.0, 0.3]), np.array([-0.2, 1.7])
        coords, w = ewa_taps(tex2d, pt, dst0, dst1)
        expect = (w[:, None] * g(tex2d.fetch(coords))).sum(axis=0)
        got = shade_filter_after_ref(tex2d, pt, cfg, g, dst0=dst0, dst1=dst1)
        np.testing.assert_allclose(got, expect, atol=1e-12)
        ident = shade_filter_after_ref(tex2d, pt, cfg, Identity(),
                                       dst0=dst0, dst1=dst1)
        det = det_filter_value(tex2d, pt, cfg, dst0=dst0, dst1=dst1)
        np.testing.assert_allclose(ident, det, atol=1e-12)


class TestStochOrder:
    def test_single_tap_threshold_stays_binary(self, tex2d):
        """One fetch per estimate means g sees raw texels: outputs are
        exactly 0 or 1 regardless of the query position."""
        g = Threshold(theta=0.5)
        cfg = FilterConfig(name="bilinear")
        pts = np.broadcast_to(np.array([5.3, 8.7]), (256, 2))
        vals = shade_filter_after_stoch(tex2d, pts, cfg, g, strat(256))
        assert set(np.unique(vals).tolist()) <= {0.0, 1.0}

    def test_stoch_mean_tracks_after_ref(self, tex2d):
        g = Power(2.0)
        cfg = FilterConfig(name="bicubic-bspline")
        pt = np.array([5.3, 8.6])
        n = 40000
        vals = shade_filter_after_stoch(tex2d, np.broadcast_to(pt, (n, 2)),
                                        cfg, g, strat(n))
        ref = shade_filter_after_ref(tex2d, pt, cfg, g)
        np.testing.assert_allclose(vals.mean(axis=0), ref, atol=5e-3)

    def test_keys_stoch_mean_tracks_after_ref(self, tex2d):
        """Positivized pair shades both taps; expectation is the signed
        g-weighted window."""
        g = Power(2.0)
        cfg = FilterConfig(name="bicubic-keys")
        pt = np.array([5.4, 8.2])
        n = 40000
        vals = shade_filter_after_stoch(tex2d, np.broadcast_to(pt, (n, 2)),
                                        cfg, g, strat(n))
        ref = shade_filter_after_ref(tex2d, pt, cfg, g)
        np.testing.assert_allclose(vals.mean(axis=0), ref, atol=1e-2)


class TestReport:
    def test_row_shape_and_consistency(self, tex2d):
        rows = order_divergence_report(
            tex2d, FilterConfig(name="bilinear"), Power(2.0),
            np.array([[5.3, 8.7], [2.2, 12.9]]), RngStream(7), spp=64)
        assert len(rows) == 2
        for row, pt in zip(rows, [(5.3, 8.7), (2.2, 12.9)]):
            assert set(row) == {"query_u", "query_v", "before", "after_ref",
                                "after_stoch_mean", "after_stoch_sem",
                                "abs_diff"}
            assert (row["query_u"], row["query_v"]) == pt
            assert row["abs_diff"] == pytest.approx(
                abs(row["before"] - row["after_ref"]), abs=1e-15)
            assert row["after_stoch_sem"] > 0.0

    def test_stoch_mean_within_sem_of_ref(self, tex2d):
        rows = order_divergence_report(
            tex2d, FilterConfig(name="bilinear"), Power(2.0),
            np.array([[5.3, 8.7]]), RngStream(11), spp=4096)
        row = rows[0]
        err = abs(row["after_stoch_mean"] - row["after_ref"])
        assert err < 5.0 * row["after_stoch_sem"]

    def test_csv_round_trip(self, tex2d, tmp_path):
        rows = order_divergence_report(
            tex2d, FilterConfig(name="bilinear"), Identity(),
            np.array([[5.3, 8.7]]), RngStream(3), spp=16)
        path = tmp_path / "report.csv"
        write_report_csv(path, rows)
        with open(path, newline="") as fh:
            back = list(csv.DictReader(fh))
        assert len(back) == 1
        for key, val in rows[0].items():
            assert float(back[0][key]) == val

    def test_empty_report_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_report_csv(tmp_path / "empty.csv", [])
