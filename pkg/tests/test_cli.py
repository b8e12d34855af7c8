"""Experiment CLI: exit codes, config round-trips, file outputs, determinism.

All invocations go through `main(argv)` in-process so exit codes are the
integers scripts would see.
"""
import csv
import json

import numpy as np
import pytest

from stochfilt import (TextureGrid, checker_ramp_image, load_image,
                       puff_volume, store_image, store_volume)
from stochfilt.cli import ExperimentConfig, main


@pytest.fixture()
def small_png(tmp_path):
    path = tmp_path / "in.png"
    store_image(path, checker_ramp_image(32, channels=3, cell=8))
    return str(path)


@pytest.fixture()
def small_pfm(tmp_path):
    path = tmp_path / "in.pfm"
    store_image(path, checker_ramp_image(16, cell=4))
    return str(path)


@pytest.fixture()
def small_stxv(tmp_path):
    path = tmp_path / "in.stxv"
    store_volume(path, puff_volume(8))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestExitCodes:
    def test_successful_resample_returns_zero(self, small_png, tmp_path):
        code = main(["resample", "--input", small_png, "--scale", "1.5",
                     "--output", str(tmp_path / "out.png")])
        assert code == 0

    def test_unknown_filter_is_usage_error(self, small_png):
        assert main(["resample", "--input", small_png,
                     "--filter", "sharpen-9000"]) == 2

    def test_unknown_estimator_is_usage_error(self, small_png):
        assert main(["resample", "--input", small_png,
                     "--estimator", "qmc"]) == 2

    def test_fis_needs_supported_filter(self, small_png):
        assert main(["resample", "--input", small_png, "--estimator", "fis",
                     "--filter", "bicubic-keys"]) == 2

    @pytest.mark.parametrize("flag,value", [("--spp", "0"),
                                            ("--scale", "0"),
                                            ("--reps", "-1"),
                                            ("--queries", "0")])
    def test_nonpositive_counts_rejected(self, small_png, flag, value):
        assert main(["converge", "--input", small_png, "--estimator",
                     "stoch", flag, value]) == 2

    def test_unknown_subcommand(self):
        assert main(["transmogrify"]) == 2

    def test_missing_subcommand(self):
        assert main([]) == 2

    def test_missing_input_file_is_io_error(self, tmp_path):
        assert main(["resample", "--input",
                     str(tmp_path / "nope.png")]) == 3

    def test_garbage_input_is_io_error(self, tmp_path):
        path = tmp_path / "garbage.png"
        path.write_bytes(b"not an image at all")
        assert main(["resample", "--input", str(path)]) == 3

    def test_converge_requires_stochastic_estimator(self, small_png):
        assert main(["converge", "--input", small_png]) == 2

    def test_converge_rejects_footprint_filters(self, small_png):
        assert main(["converge", "--input", small_png, "--estimator",
                     "stoch", "--filter", "ewa"]) == 2

    def test_volume_rejects_2d_filter(self, small_stxv):
        assert main(["volume", "--input", small_stxv,
                     "--filter", "bilinear", "--spp", "2",
                     "--ref-spp", "2"]) == 2


class TestConfig:
    def test_dump_config_round_trips(self, capsys):
        code = main(["resample", "--filter", "gaussian", "--sigma", "0.7",
                     "--spp", "32", "--seed", "9", "--scale", "1.25",
                     "--dump-config"])
        assert code == 0
        text = capsys.readouterr().out
        cfg = ExperimentConfig.from_json(text)
        assert cfg == ExperimentConfig(command="resample", filter="gaussian",
                                       sigma=0.7, spp=32, seed=9, scale=1.25)
        # JSON is stable: dumping the parsed config reproduces the text
        assert cfg.to_json() == text.strip()

    def test_from_json_rejects_unknown_fields(self):
        blob = json.dumps({"command": "resample", "turbo": True})
        with pytest.raises(ValueError):
            ExperimentConfig.from_json(blob)

    def test_from_json_requires_command(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_json("{}")


class TestResample:
    def test_det_identity_scale_reproduces_input(self, small_pfm, tmp_path):
        """Scale 1 pixel centers land on texel centers; bilinear is
        interpolating, so the float32 output equals the input bitwise."""
        out = tmp_path / "out.pfm"
        assert main(["resample", "--input", small_pfm, "--scale", "1",
                     "--output", str(out)]) == 0
        a = load_image(small_pfm, raw=True)
        b = load_image(out, raw=True)
        np.testing.assert_array_equal(a.data, b.data)

    def test_det_csv_row(self, small_png, tmp_path):
        stats = tmp_path / "stats.csv"
        main(["resample", "--input", small_png, "--scale", "1.5",
              "--filter", "bicubic-bspline", "--csv", str(stats)])
        rows = read_csv(stats)
        assert len(rows) == 1
        row = rows[0]
        assert row["filter"] == "bicubic-bspline"
        assert row["estimator"] == "det"
        assert float(row["mse_vs_det"]) == 0.0
        assert int(row["fetches"]) == 48 * 48 * 16

    def test_stoch_csv_accounts_one_fetch_per_sample(self, small_png,
                                                     tmp_path):
        stats = tmp_path / "stats.csv"
        main(["resample", "--input", small_png, "--scale", "1.5",
              "--estimator", "stoch", "--spp", "4", "--csv", str(stats)])
        row = read_csv(stats)[0]
        assert int(row["fetches"]) == 48 * 48 * 4
        assert float(row["mse_vs_det"]) > 0.0
        assert float(row["mean_variance"]) > 0.0

    def test_output_dimensions_follow_scale(self, small_png, tmp_path):
        out = tmp_path / "up.png"
        main(["resample", "--input", small_png, "--scale", "2",
              "--output", str(out)])
        assert load_image(out).dims == (64, 64)


class TestDeterminism:
    def test_same_seed_same_bytes(self, small_png, tmp_path):
        outs = []
        for tag in ("a", "b"):
            img = tmp_path / f"{tag}.png"
            stats = tmp_path / f"{tag}.csv"
            assert main(["resample", "--input", small_png, "--scale", "1.5",
                         "--estimator", "stoch", "--spp", "4", "--seed", "7",
                         "--output", str(img), "--csv", str(stats)]) == 0
            outs.append((img.read_bytes(), stats.read_text()))
        assert outs[0] == outs[1]

    def test_different_seed_differs(self, small_png, tmp_path):
        images = []
        for seed in ("7", "8"):
            img = tmp_path / f"s{seed}.png"
            main(["resample", "--input", small_png, "--scale", "1.5",
                  "--estimator", "stoch", "--spp", "4", "--seed", seed,
                  "--output", str(img)])
            images.append(img.read_bytes())
        assert images[0] != images[1]


class TestConverge:
    def test_ladder_rows_and_det_baseline(self, small_png, tmp_path):
        stats = tmp_path / "conv.csv"
        assert main(["converge", "--input", small_png, "--estimator",
                     "stoch", "--spp", "16", "--queries", "4", "--reps", "2",
                     "--seed", "3", "--csv", str(stats)]) == 0
        rows = read_csv(stats)
        det = [r for r in rows if r["estimator"] == "det"]
        sto = [r for r in rows if r["estimator"] == "stoch"]
        assert [int(r["n"]) for r in det] == [1, 4, 16]
        assert [int(r["n"]) for r in sto] == [1, 4, 16]
        assert all(float(r["abs_error"]) == 0.0 for r in det)
        assert all(float(r["abs_error"]) > 0.0 for r in sto)
        errs = [float(r["abs_error"]) for r in sto]
        assert errs[-1] < errs[0]

    def test_fis_estimator_runs(self, small_png, tmp_path):
        stats = tmp_path / "conv_fis.csv"
        assert main(["converge", "--input", small_png, "--estimator", "fis",
                     "--filter", "bicubic-bspline", "--spp", "4",
                     "--queries", "2", "--reps", "2",
                     "--csv", str(stats)]) == 0
        rows = read_csv(stats)
        assert any(r["estimator"] == "fis" for r in rows)


class TestOrder:
    def test_report_grid_and_divergence(self, small_png, tmp_path):
        stats = tmp_path / "order.csv"
        assert main(["order", "--input", small_png, "--map", "threshold:0.5",
                     "--queries", "3", "--spp", "64",
                     "--csv", str(stats)]) == 0
        rows = read_csv(stats)
        assert len(rows) == 9
        assert set(rows[0]) == {"query_u", "query_v", "before", "after_ref",
                                "after_stoch_mean", "after_stoch_sem",
                                "abs_diff"}
        assert any(float(r["abs_diff"]) > 0.0 for r in rows)

    def test_bad_map_is_usage_error(self, small_png):
        assert main(["order", "--input", small_png,
                     "--map", "gamma:2"]) == 2


class TestVolume:
    def test_rows_and_fetch_budget(self, small_stxv, tmp_path):
        stats = tmp_path / "vol.csv"
        assert main(["volume", "--input", small_stxv, "--filter",
                     "trilinear", "--estimator", "stoch", "--spp", "2",
                     "--ref-spp", "4", "--csv", str(stats)]) == 0
        rows = read_csv(stats)
        by_est = {r["estimator"]: r for r in rows}
        assert set(by_est) == {"det", "stoch", "reference"}
        pixels = 32 * 32
        assert int(by_est["det"]["fetches"]) == pixels * 2 * 8
        assert int(by_est["stoch"]["fetches"]) == pixels * 2
        assert int(by_est["reference"]["fetches"]) == pixels * 4 * 8
        assert float(by_est["reference"]["mse"]) == 0.0


class TestDct:
    def test_metrics_csv(self, tmp_path):
        src = tmp_path / "in64.png"
        store_image(src, checker_ramp_image(64, channels=3))
        stats = tmp_path / "dct.csv"
        packed = tmp_path / "out.stxd"
        assert main(["dct", "--input", str(src), "--output", str(packed),
                     "--csv", str(stats)]) == 0
        metrics = {r["metric"]: float(r["value"]) for r in read_csv(stats)}
        assert metrics["compression_ratio"] == 16.0
        assert metrics["payload_bytes"] == 8 * 8 * 3 * 4
        assert metrics["det_bilinear_decodes"] == 4.0
        assert metrics["stoch_bilinear_decodes"] == 1.0
        assert metrics["det_bicubic_decodes"] == 16.0
        assert metrics["stoch_bicubic_decodes"] == 1.0
        assert 0.0 < metrics["psnr_db"] <= 999.0
        assert packed.stat().st_size == 20 + 8 * 8 * 3 * 12
