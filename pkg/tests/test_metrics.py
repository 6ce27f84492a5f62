import numpy as np
import pytest

from cloudcolor import SpatialIndex, cmd, cpsnr, evaluate
from cloudcolor.errors import EmptyCloud
from cloudcolor.metrics import PSNR_CLAMP_DB

from conftest import make_cloud, random_cloud
from oracles import knn_scan


class TestCmd:
    def test_identity_is_zero(self, rng):
        cloud = random_cloud(rng, 100)
        other = make_cloud(rng.uniform(0, 1, (100, 3)), cloud.colors)
        assert cmd(cloud, other) == 0.0

    def test_uniform_shift(self, rng):
        base = rng.integers(0, 250, (80, 3))
        a = make_cloud(rng.uniform(0, 1, (80, 3)), base)
        b = make_cloud(rng.uniform(0, 1, (80, 3)), base + 3)
        assert cmd(b, a) == pytest.approx(3.0, abs=1e-12)

    def test_two_point_hand_arithmetic(self):
        a = make_cloud([[0, 0, 0], [1, 1, 1]], [[10, 0, 200], [20, 0, 100]])
        b = make_cloud([[0, 0, 0], [1, 1, 1]], [[40, 10, 130], [10, 30, 150]])
        # channel means: a = (15, 0, 150); b = (25, 20, 140)
        assert cmd(b, a) == pytest.approx((10 + 20 + 10) / 3.0, abs=1e-12)

    def test_permutation_invariant(self, rng):
        a = random_cloud(rng, 120)
        b = random_cloud(rng, 90)
        perm_a = make_cloud(a.positions[::-1], a.colors[::-1])
        assert cmd(b, perm_a) == cmd(b, a)

    def test_empty_rejected(self, rng):
        empty = make_cloud(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))
        with pytest.raises(EmptyCloud):
            cmd(empty, random_cloud(rng, 5))


class TestCpsnr:
    def test_exact_match_hits_clamp(self, rng):
        cloud = random_cloud(rng, 50)
        assert cpsnr(cloud, cloud) == PSNR_CLAMP_DB

    def test_one_level_error_everywhere(self, rng):
        positions = rng.uniform(0, 1, (60, 3))
        base = rng.integers(1, 255, (60, 3))
        source = make_cloud(positions, base)
        corrected = make_cloud(positions, base + 1)
        # CMSE = 1 per point -> PSNR = 10 log10(255^2) everywhere
        assert cpsnr(corrected, source) == pytest.approx(48.1308036086791, abs=1e-9)

    def test_random_scene_matches_direct_recomputation(self, rng):
        source = random_cloud(rng, 80)
        corrected = random_cloud(rng, 50)
        got = cpsnr(corrected, source)
        acc = 0.0
        for ti in range(50):
            oi, _ = knn_scan(source.positions, corrected.positions[ti], 1)
            diff = corrected.colors[ti].astype(float) - source.colors[oi[0]].astype(float)
            cmse = float(np.sum(diff * diff)) / 3.0
            acc += PSNR_CLAMP_DB if cmse == 0 else 10.0 * np.log10(255.0 ** 2 / cmse)
        assert got == pytest.approx(acc / 50.0, abs=1e-9)

    def test_growing_error_strictly_decreases(self, rng):
        positions = rng.uniform(0, 1, (40, 3))
        base = rng.integers(50, 200, (40, 3))
        source = make_cloud(positions, base)
        prev = None
        for err in (1, 3, 9, 27):
            corrected = make_cloud(positions, base + err)
            val = cpsnr(corrected, source)
            if prev is not None:
                assert val < prev
            prev = val

    def test_pooled_mode(self, rng):
        positions = rng.uniform(0, 1, (30, 3))
        base = rng.integers(1, 200, (30, 3))
        source = make_cloud(positions, base)
        corrected = make_cloud(positions, base + 2)
        # every CMSE = 4 -> pooled equals per-point value
        assert cpsnr(corrected, source, pooled=True) == pytest.approx(
            10 * np.log10(255.0 ** 2 / 4.0), abs=1e-9)
        assert cpsnr(source, source, pooled=True) == PSNR_CLAMP_DB


class TestEvaluate:
    def test_report_fields(self, rng):
        source = random_cloud(rng, 70)
        corrected = random_cloud(rng, 40)
        rep = evaluate(corrected, source, SpatialIndex(source))
        assert rep.count == 40
        assert rep.cmd == cmd(corrected, source)
        assert rep.cpsnr == cpsnr(corrected, source)
        assert rep.corrected_channel_means == tuple(
            corrected.colors.astype(float).mean(axis=0))
