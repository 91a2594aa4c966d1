"""Metric tests: parameter validation, exactness against enumeration, the
metric axioms, and windowed track distances."""

import numpy as np
import pytest

from msglmb.metrics import OspaParams, ospa, ospa2
from support import brute_force_ospa


DEFAULT = OspaParams(cutoff=2.0, order=1.0)


def _random_set(rng, max_points, dim=2, spread=4.0):
    n = int(rng.integers(0, max_points + 1))
    return rng.uniform(-spread, spread, size=(n, dim))


class TestParams:
    def test_defaults(self):
        p = OspaParams()
        assert (p.cutoff, p.order, p.window) == (100.0, 1.0, 10)

    @pytest.mark.parametrize("kwargs", [
        {"cutoff": 0.0},
        {"cutoff": -1.0},
        {"order": 0.5},
        {"window": 0},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            OspaParams(**kwargs)


class TestOspa:
    def test_both_empty(self):
        assert ospa(np.empty((0, 2)), np.empty((0, 2)), DEFAULT) == 0.0

    def test_one_empty_gives_cutoff(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert ospa(pts, np.empty((0, 2)), DEFAULT) == DEFAULT.cutoff
        assert ospa(np.empty((0, 2)), pts, DEFAULT) == DEFAULT.cutoff

    def test_identical_sets_zero(self):
        pts = np.array([[3.0, -1.0], [0.5, 2.0]])
        assert ospa(pts, pts, DEFAULT) == pytest.approx(0.0, abs=1e-12)

    def test_single_pair_is_clamped_distance(self):
        a = np.array([[0.0, 0.0]])
        b = np.array([[0.6, 0.8]])
        assert ospa(a, b, DEFAULT) == pytest.approx(1.0, abs=1e-12)
        far = np.array([[30.0, 40.0]])
        assert ospa(a, far, DEFAULT) == pytest.approx(DEFAULT.cutoff, abs=1e-12)

    def test_cardinality_penalty_hand_case(self):
        """One perfect match plus one unmatched point: (0 + c) / 2."""
        x = np.array([[1.0, 1.0]])
        y = np.array([[1.0, 1.0], [50.0, 50.0]])
        assert ospa(x, y, DEFAULT) == pytest.approx(DEFAULT.cutoff / 2, abs=1e-12)

    def test_never_exceeds_cutoff(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            d = ospa(_random_set(rng, 5, spread=50.0),
                     _random_set(rng, 5, spread=50.0), DEFAULT)
            assert 0.0 <= d <= DEFAULT.cutoff + 1e-12

    @pytest.mark.parametrize("order", [1.0, 2.0])
    def test_matches_permutation_enumeration(self, order):
        params = OspaParams(cutoff=2.0, order=order)
        rng = np.random.default_rng(11)
        for _ in range(300):
            x = _random_set(rng, 6)
            y = _random_set(rng, 6)
            expect = brute_force_ospa(list(x), list(y), params.cutoff, order)
            assert ospa(x, y, params) == pytest.approx(expect, abs=1e-10)

    def test_symmetry(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            x = _random_set(rng, 6)
            y = _random_set(rng, 6)
            assert ospa(x, y, DEFAULT) == pytest.approx(
                ospa(y, x, DEFAULT), abs=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(29)
        for _ in range(300):
            x = _random_set(rng, 5)
            y = _random_set(rng, 5)
            z = _random_set(rng, 5)
            dxy = ospa(x, y, DEFAULT)
            dyz = ospa(y, z, DEFAULT)
            dxz = ospa(x, z, DEFAULT)
            assert dxz <= dxy + dyz + 1e-10


def _track(start, positions):
    return {start + i: np.asarray(p, dtype=float)
            for i, p in enumerate(positions)}


class TestOspa2:
    def test_both_empty(self):
        assert ospa2([], [], DEFAULT, at_scan=5) == 0.0

    def test_one_side_empty_gives_cutoff(self):
        tx = [_track(1, [[0.0], [1.0]])]
        assert ospa2(tx, [], DEFAULT, at_scan=2) == DEFAULT.cutoff
        assert ospa2([], tx, DEFAULT, at_scan=2) == DEFAULT.cutoff

    def test_identical_tracks_zero(self):
        tx = [_track(1, [[0.0], [1.0], [2.0]])]
        assert ospa2(tx, tx, DEFAULT, at_scan=3) == pytest.approx(0.0, abs=1e-12)

    def test_window_one_reduces_to_point_ospa(self):
        """With a length-one window only the current scan's positions count."""
        params = OspaParams(cutoff=2.0, order=1.0, window=1)
        rng = np.random.default_rng(41)
        for _ in range(50):
            nx = int(rng.integers(0, 4))
            ny = int(rng.integers(0, 4))
            tx = [_track(3, [rng.uniform(-4, 4, 2)]) for _ in range(nx)]
            ty = [_track(3, [rng.uniform(-4, 4, 2)]) for _ in range(ny)]
            x = np.array([t[3] for t in tx]) if nx else np.empty((0, 2))
            y = np.array([t[3] for t in ty]) if ny else np.empty((0, 2))
            assert ospa2(tx, ty, params, at_scan=3) == pytest.approx(
                ospa(x, y, params), abs=1e-12)

    def test_existence_mismatch_costs_cutoff_per_scan(self):
        """Track pairs overlap on one of two scans; the missing scan
        contributes the full cutoff to the pair cost."""
        tx = [_track(1, [[0.0], [0.0]])]
        ty = [_track(2, [[0.0]])]
        expect = (DEFAULT.cutoff + 0.0) / 2
        assert ospa2(tx, ty, DEFAULT, at_scan=2) == pytest.approx(
            expect, abs=1e-12)

    def test_tracks_outside_window_ignored(self):
        """A truth track that died before the window opens adds nothing."""
        params = OspaParams(cutoff=2.0, order=1.0, window=2)
        old = _track(1, [[9.0]])
        live = _track(4, [[1.0], [1.0]])
        assert ospa2([old, live], [live], params, at_scan=5) == pytest.approx(
            0.0, abs=1e-12)
        assert ospa2([old], [live], params, at_scan=5) == params.cutoff

    def test_window_clipped_at_first_scan(self):
        """at_scan below the window length averages over scans from one."""
        params = OspaParams(cutoff=2.0, order=1.0, window=10)
        tx = [_track(1, [[0.0], [0.0]])]
        ty = [_track(1, [[1.0], [0.5]])]
        assert ospa2(tx, ty, params, at_scan=2) == pytest.approx(0.75, abs=1e-12)

    def test_hand_window_average(self):
        """Two tracks per side over a two-scan window, mismatched pairing
        forced by the assignment."""
        params = OspaParams(cutoff=5.0, order=1.0, window=2)
        tx = [_track(1, [[0.0], [0.0]]), _track(1, [[10.0], [10.0]])]
        ty = [_track(1, [[1.0], [1.0]]), _track(1, [[10.0], [12.0]])]
        pair_a = (1.0 + 1.0) / 2
        pair_b = (0.0 + 2.0) / 2
        assert ospa2(tx, ty, params, at_scan=2) == pytest.approx(
            (pair_a + pair_b) / 2, abs=1e-12)

    def test_bounded_and_symmetric(self):
        rng = np.random.default_rng(53)
        params = OspaParams(cutoff=3.0, order=1.0, window=4)
        for _ in range(60):
            def make_side():
                out = []
                for _ in range(int(rng.integers(0, 4))):
                    start = int(rng.integers(1, 6))
                    length = int(rng.integers(1, 5))
                    out.append(_track(start, rng.uniform(-4, 4, (length, 2))))
                return out

            tx, ty = make_side(), make_side()
            at = int(rng.integers(1, 9))
            d = ospa2(tx, ty, params, at)
            assert 0.0 <= d <= params.cutoff + 1e-12
            assert d == pytest.approx(ospa2(ty, tx, params, at), abs=1e-12)
