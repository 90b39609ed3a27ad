"""Reconstruction metrics, density estimates, CSV reports, PNG output."""

import struct
import zlib

import numpy as np
import pytest

from tactile_derender.errors import ToolkitError
from tactile_derender.evalkit.kde import (BANDWIDTH_FLOOR, KdeCurve, kde,
                                          scott_bandwidth)
from tactile_derender.evalkit.metrics import (PSNR_CAP_DB, SSIM_SIGMA,
                                              SSIM_WINDOW, image_metrics,
                                              ssim_map)
from tactile_derender.evalkit.png import (colormap, save_curve_png,
                                          save_depth_png, save_panel_png,
                                          write_png)
from tactile_derender.evalkit.report import (aggregate_report, read_csv,
                                             write_csv)
from tactile_derender.geometry.depth import DepthImage


class TestSsim:

    def test_matches_per_window_loop(self, rng):
        a = rng.uniform(0.0, 0.2, (16, 16))
        b = a + rng.normal(0.0, 0.01, (16, 16))
        r = 0.2
        got = ssim_map(a, b, r)

        n = SSIM_WINDOW
        off = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
        g = np.exp(-(off * off) / (2.0 * SSIM_SIGMA ** 2))
        w = np.outer(g, g)
        w /= w.sum()
        c1, c2 = (0.01 * r) ** 2, (0.03 * r) ** 2
        want = np.empty((16 - n + 1, 16 - n + 1))
        for i in range(want.shape[0]):
            for j in range(want.shape[1]):
                pa = a[i:i + n, j:j + n]
                pb = b[i:i + n, j:j + n]
                mu_a, mu_b = (w * pa).sum(), (w * pb).sum()
                va = (w * pa * pa).sum() - mu_a ** 2
                vb = (w * pb * pb).sum() - mu_b ** 2
                cov = (w * pa * pb).sum() - mu_a * mu_b
                want[i, j] = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)
                              / ((mu_a ** 2 + mu_b ** 2 + c1)
                                 * (va + vb + c2)))
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_identical_images_score_one(self, rng):
        a = rng.uniform(0.0, 0.2, (16, 16))
        np.testing.assert_allclose(ssim_map(a, a, 0.2), 1.0, atol=1e-12)

    def test_degrades_with_noise(self, rng):
        t = rng.uniform(0.0, 0.2, (32, 32))
        scores = [image_metrics(t + rng.normal(0.0, s, t.shape), t, 0.2).ssim
                  for s in (0.001, 0.01, 0.05)]
        assert scores[0] > scores[1] > scores[2]


class TestImageMetrics:

    def test_l1_and_psnr_of_constant_offset(self):
        t = np.full((16, 16), 0.1)
        m = image_metrics(t + 0.001, t, 0.2)
        assert m.l1_mm == pytest.approx(1.0)
        # mse is exactly the squared offset
        assert m.psnr_db == pytest.approx(20.0 * np.log10(0.2 / 0.001))

    def test_psnr_saturates(self, rng):
        t = DepthImage(rng.uniform(0.05, 0.15, (16, 16)))
        m = image_metrics(t, t, 0.2)
        assert m.psnr_db == PSNR_CAP_DB
        assert m.ssim == pytest.approx(1.0)
        assert m.l1_mm == 0.0

    def test_psnr_monotone_in_noise(self, rng):
        t = rng.uniform(0.0, 0.2, (16, 16))
        vals = [image_metrics(t + rng.normal(0.0, s, t.shape), t, 0.2).psnr_db
                for s in (0.001, 0.01, 0.05)]
        assert vals[0] > vals[1] > vals[2]

    def test_validation(self):
        ok = np.zeros((16, 16))
        with pytest.raises(ToolkitError) as e:
            image_metrics(ok, np.zeros((8, 16)), 0.2)
        assert e.value.category == "dimension-mismatch"
        with pytest.raises(ToolkitError) as e:
            image_metrics(ok, ok, 0.0)
        assert e.value.category == "bad-config"
        with pytest.raises(ToolkitError) as e:
            image_metrics(np.zeros((8, 8)), np.zeros((8, 8)), 0.2)
        assert e.value.category == "dimension-mismatch"
        with pytest.raises(ToolkitError) as e:
            image_metrics(np.zeros((2, 2, 2)), ok, 0.2)
        assert e.value.category == "dimension-mismatch"


class TestKde:

    def test_matches_brute_force(self, rng):
        x = rng.normal(2.0, 0.5, 40)
        h = 0.3
        curve = kde(x, bandwidth=h)
        want = np.zeros_like(curve.grid)
        for xi in x:  # deliberately different summation order
            want += np.exp(-0.5 * ((curve.grid - xi) / h) ** 2)
        want /= x.shape[0] * h * np.sqrt(2.0 * np.pi)
        np.testing.assert_allclose(curve.density, want, atol=1e-12)
        assert curve.bandwidth == h

    def test_integral_near_unit(self, rng):
        curve = kde(rng.normal(0.0, 1.0, 200))
        # the grid spans 3 bandwidths past the extremes, so the clipped
        # tail mass is under half a percent
        assert 0.995 <= curve.integral() <= 1.005

    def test_scott_rule(self, rng):
        x = rng.normal(5.0, 2.0, 100)
        assert scott_bandwidth(x) == pytest.approx(
            float(np.std(x)) * 100 ** (-0.2))
        # constant samples fall back to a relative width, then the floor
        assert scott_bandwidth(np.full(5, 4.0)) == pytest.approx(0.04)
        assert scott_bandwidth(np.zeros(5)) == BANDWIDTH_FLOOR

    def test_constant_samples_still_integrate(self):
        curve = kde(np.full(5, 4.0))
        assert 0.98 <= curve.integral() <= 1.02

    def test_validation(self):
        with pytest.raises(ToolkitError) as e:
            kde(np.array([]))
        assert e.value.category == "empty-dataset"
        with pytest.raises(ToolkitError) as e:
            kde(np.array([1.0, np.nan]))
        assert e.value.category == "bad-kde"
        with pytest.raises(ToolkitError) as e:
            kde(np.array([1.0, 2.0]), bandwidth=0.0)
        assert e.value.category == "bad-kde"

    def test_curve_validation(self):
        good = kde(np.array([0.0, 1.0, 2.0]), bandwidth=0.5)

        def expect_bad(grid, dens):
            with pytest.raises(ToolkitError) as e:
                KdeCurve(grid=grid, density=dens, bandwidth=0.5)
            assert e.value.category == "bad-kde"

        expect_bad(good.grid[::-1], good.density)
        expect_bad(good.grid, -good.density)
        expect_bad(good.grid, good.density * 2.0)  # mass 2
        expect_bad(good.grid[:-1], good.density)


class TestReport:

    def test_roundtrip_and_crlf(self, tmp_path):
        path = tmp_path / "r.csv"
        header = ["sample", "err_mm", "note"]
        rows = [["s1", 1.25, "ok"], ["s2", None, "skipped"]]
        write_csv(path, header, rows)
        raw = path.read_bytes()
        assert b"\r\n" in raw and b"s1,1.25,ok" in raw
        got_header, got_rows = read_csv(path)
        assert got_header == header
        assert got_rows == [["s1", "1.25", "ok"], ["s2", "", "skipped"]]

    def test_width_errors_name_the_line(self, tmp_path):
        path = tmp_path / "w.csv"
        with pytest.raises(ToolkitError) as e:
            write_csv(path, ["a", "b"], [["1", "2"], ["only-one"]])
        assert e.value.category == "bad-csv" and "row 3" in str(e.value)
        path.write_text("a,b\r\n1,2\r\n3\r\n")
        with pytest.raises(ToolkitError) as e:
            read_csv(path)
        assert e.value.category == "bad-csv" and "line 3" in str(e.value)
        empty = tmp_path / "e.csv"
        empty.write_text("")
        with pytest.raises(ToolkitError) as e:
            read_csv(empty)
        assert e.value.category == "bad-csv"

    def test_aggregate_statistics_and_exclusions(self):
        header = ["obj", "err"]
        rows = [["cube", "1.0"], ["cube", "3.0"], ["cube", "n/a"],
                ["ball", "2.0"], ["ball", ""]]
        out = aggregate_report(header, rows, "obj", ["err"])
        assert out["cube"]["err"]["mean"] == pytest.approx(2.0)
        assert out["cube"]["err"]["std"] == pytest.approx(1.0)  # population
        assert out["cube"]["err"]["n"] == 2
        assert out["cube"]["err"]["excluded"] == 1
        assert out["ball"]["err"] == {"mean": 2.0, "std": 0.0, "n": 1,
                                      "excluded": 1}

    def test_aggregate_errors(self):
        with pytest.raises(ToolkitError) as e:
            aggregate_report(["a"], [], "missing", [])
        assert e.value.category == "bad-csv"
        with pytest.raises(ToolkitError) as e:
            aggregate_report(["g", "v"], [["x", "1.0"], ["x", "oops"]],
                             "g", ["v"])
        assert e.value.category == "bad-csv" and "line 3" in str(e.value)


class TestPng:

    def test_bytes_are_valid_and_deterministic(self, tmp_path, rng):
        rgb = colormap(rng.uniform(0.0, 1.0, (5, 7)))
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        write_png(p1, rgb)
        write_png(p2, rgb)
        raw = p1.read_bytes()
        assert raw == p2.read_bytes()
        assert raw[:8] == b"\x89PNG\r\n\x1a\n"
        w, h = struct.unpack(">II", raw[16:24])
        assert (w, h) == (7, 5)
        # decode the image data: no filtering, one 0x00 byte per scanline
        idat_len = struct.unpack(">I", raw[33:37])[0]
        assert raw[37:41] == b"IDAT"
        scan = zlib.decompress(raw[41:41 + idat_len])
        want = b"".join(b"\x00" + rgb[y].tobytes() for y in range(5))
        assert scan == want

    def test_write_validation(self, tmp_path):
        for bad in (np.zeros((4, 4, 3)), np.zeros((4, 4), dtype=np.uint8),
                    np.zeros((4, 4, 4), dtype=np.uint8)):
            with pytest.raises(ToolkitError) as e:
                write_png(tmp_path / "x.png", bad)
            assert e.value.category == "bad-image"

    def test_depth_and_panel_output(self, tmp_path, rng):
        img = DepthImage(np.where(rng.uniform(size=(8, 8)) > 0.3,
                                  rng.uniform(0.05, 0.15, (8, 8)), 0.0))
        save_depth_png(tmp_path / "d.png", img)
        assert (tmp_path / "d.png").stat().st_size > 0
        save_panel_png(tmp_path / "p.png", [img, img, img])
        pw = struct.unpack(">II",
                           (tmp_path / "p.png").read_bytes()[16:24])[0]
        assert pw == 3 * 8 + 2 * 2  # three tiles, two 2px gutters
        with pytest.raises(ToolkitError) as e:
            save_panel_png(tmp_path / "q.png", [])
        assert e.value.category == "bad-image"

    def test_curve_output(self, tmp_path):
        x = np.linspace(0.0, 1.0, 50)
        save_curve_png(tmp_path / "c.png", x, np.sin(x))
        assert (tmp_path / "c.png").stat().st_size > 0
        with pytest.raises(ToolkitError) as e:
            save_curve_png(tmp_path / "cc.png", x, x[:-1])
        assert e.value.category == "bad-image"
