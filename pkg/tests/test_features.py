import numpy as np
import pytest

from swayrank import (
    PhaseSchedule,
    TimeWindow,
    Trajectory,
    barycenter_path,
    basic_summary,
    extended_summary,
    interval_mean,
    read_trajectory,
    reference_point,
    slope_fit,
    summary_dict,
    sway_series,
    write_trajectory,
)
from swayrank.errors import DataFormatError, EmptyWindow, SlopeDegenerate

from oracles import summary_reference, ols_slope

DT = 0.025
N70 = 2800  # 70 s at 0.025 s


def constant_trajectory(value=(1.0, 2.0), n=N70):
    xy = np.tile(np.asarray(value, dtype=float), (n, 1))
    return Trajectory.regular(left=xy, right=xy.copy(), dt=DT)


def random_trajectory(rng, n=N70, scale=3.0):
    base = rng.normal(scale=scale, size=(n, 2))
    gap = rng.normal(scale=0.5, size=(n, 2))
    return Trajectory.regular(left=base - gap, right=base + gap, dt=DT)


class TestTrajectory:
    def test_regular_grid_hits_window_boundaries_exactly(self):
        traj = constant_trajectory()
        assert traj.t[0] == DT
        for k, expected in [(400, 10.0), (600, 15.0), (2000, 50.0), (2200, 55.0)]:
            assert traj.t[k - 1] == expected

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            Trajectory(t=np.array([]), left=np.zeros((0, 2)), right=np.zeros((0, 2)))
        with pytest.raises(ValueError):
            Trajectory(t=np.array([1.0, 1.0]), left=np.zeros((2, 2)), right=np.zeros((2, 2)))
        with pytest.raises(ValueError):
            Trajectory(t=np.array([1.0, np.inf]), left=np.zeros((2, 2)), right=np.zeros((2, 2)))

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            PhaseSchedule(phase2_start=50, phase2_end=15)


class TestBarycenter:
    def test_identical_feet(self):
        traj = constant_trajectory((1.0, 2.0))
        bpath = barycenter_path(traj)
        assert np.all(bpath == np.array([1.0, 2.0]))

    def test_midpoint(self):
        n = 8
        traj = Trajectory.regular(left=np.zeros((n, 2)), right=np.tile([2.0, 4.0], (n, 1)))
        assert np.all(barycenter_path(traj) == np.array([1.0, 2.0]))

    def test_matches_per_sample_recomputation(self):
        rng = np.random.default_rng(11)
        traj = random_trajectory(rng)
        bpath = barycenter_path(traj)
        for k in range(0, traj.n, 97):
            assert bpath[k, 0] == (traj.left[k, 0] + traj.right[k, 0]) / 2.0
            assert bpath[k, 1] == (traj.left[k, 1] + traj.right[k, 1]) / 2.0


class TestReferencePoint:
    def test_constant_path(self):
        traj = constant_trajectory((1.0, 2.0))
        b = reference_point(barycenter_path(traj), traj.t, PhaseSchedule())
        assert np.all(b == np.array([1.0, 2.0]))

    def test_odd_count_median(self):
        t = np.array([1.0, 2.0, 3.0])
        bpath = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        b = reference_point(bpath, t, PhaseSchedule())
        assert b[0] == 2.0

    def test_even_count_median_is_midpoint(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        bpath = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]])
        b = reference_point(bpath, t, PhaseSchedule())
        assert b[0] == 2.5

    def test_first_phase_only(self):
        # samples after phase2_start must not affect the reference
        t = np.array([1.0, 14.0, 16.0])
        bpath = np.array([[1.0, 1.0], [3.0, 3.0], [1000.0, 1000.0]])
        b = reference_point(bpath, t, PhaseSchedule())
        assert np.all(b == np.array([2.0, 2.0]))

    def test_empty_window(self):
        t = np.array([20.0, 30.0])
        bpath = np.zeros((2, 2))
        with pytest.raises(EmptyWindow):
            reference_point(bpath, t, PhaseSchedule())

    def test_time_reversal_of_first_phase(self):
        rng = np.random.default_rng(5)
        traj = random_trajectory(rng, n=600)
        bpath = barycenter_path(traj)
        b = reference_point(bpath, traj.t, PhaseSchedule())
        b_rev = reference_point(bpath[::-1], traj.t, PhaseSchedule())
        assert np.all(b == b_rev)


class TestSwaySeries:
    def test_zero_at_reference(self):
        bpath = np.tile([2.0, 3.0], (10, 1))
        c = sway_series(bpath, np.array([2.0, 3.0]))
        assert np.all(c == 0.0)

    def test_three_four_five(self):
        bpath = np.tile([4.0, 5.0], (10, 1))
        c = sway_series(bpath, np.array([1.0, 1.0]))
        assert np.all(c == 5.0)

    def test_matches_euclidean_recomputation(self):
        rng = np.random.default_rng(12)
        bpath = rng.normal(size=(500, 2))
        b = rng.normal(size=2)
        c = sway_series(bpath, b)
        for k in range(0, 500, 41):
            expected = np.sqrt((bpath[k, 0] - b[0]) ** 2 + (bpath[k, 1] - b[1]) ** 2)
            assert c[k] == pytest.approx(expected, rel=1e-15)


class TestIntervalMean:
    def test_constant(self):
        t = np.linspace(10.0, 14.0, 50)
        assert interval_mean(t, np.full(50, 7.5), TimeWindow(10, 15)) == 7.5

    def test_dt_grid_sample_count(self):
        # [10,15[ at dt = 0.025 holds exactly 200 samples, so the arithmetic
        # mean of a constant-1 series equals 1 and matches the (dt/5)*sum form
        traj = constant_trajectory(n=N70)
        window = TimeWindow(10.0, 15.0)
        mask = window.mask(traj.t)
        assert int(mask.sum()) == 200
        assert interval_mean(traj.t, np.ones(traj.n), window) == 1.0

    def test_small_window(self):
        t = np.array([1.0, 2.0, 3.0, 50.0])
        vals = np.array([1.0, 2.0, 3.0, 100.0])
        assert interval_mean(t, vals, TimeWindow(0.0, 10.0)) == 2.0

    def test_endpoint_conventions(self):
        t = np.array([15.0])
        vals = np.array([1.0])
        with pytest.raises(EmptyWindow):
            interval_mean(t, vals, TimeWindow(10, 15, True, False))  # 15 excluded
        with pytest.raises(EmptyWindow):
            interval_mean(t, vals, TimeWindow(15, 20, False, True))  # open left
        assert interval_mean(t, vals, TimeWindow(15, 20, True, False)) == 1.0


class TestSlopeFit:
    def test_exact_line(self):
        t = np.linspace(10.0, 14.9, 60)
        x = np.linspace(-1.0, 2.0, 60)
        bpath = np.column_stack([x, 2.0 * x + 1.0])
        assert slope_fit(bpath, t, TimeWindow(10, 15)) == pytest.approx(2.0, abs=1e-12)

    def test_vertical_line_degenerate(self):
        t = np.linspace(10.0, 14.9, 60)
        bpath = np.column_stack([np.full(60, 3.0), np.linspace(0, 1, 60)])
        with pytest.raises(SlopeDegenerate):
            slope_fit(bpath, t, TimeWindow(10, 15))

    def test_all_zero_abscissa_degenerate(self):
        t = np.linspace(10.0, 14.9, 60)
        bpath = np.column_stack([np.zeros(60), np.linspace(0, 1, 60)])
        with pytest.raises(SlopeDegenerate):
            slope_fit(bpath, t, TimeWindow(10, 15))

    def test_matches_cov_var_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            n = int(rng.integers(5, 80))
            t = np.sort(rng.uniform(10.0, 14.99, size=n))
            t += np.arange(n) * 1e-9  # keep strictly increasing
            bpath = rng.normal(size=(n, 2)) * rng.uniform(0.5, 4.0)
            v = slope_fit(bpath, t, TimeWindow(10, 15))
            expected = ols_slope(list(bpath[:, 0]), list(bpath[:, 1]))
            assert v == pytest.approx(expected, rel=1e-10)


class TestBasicSummary:
    def test_constant_trajectory_is_zero(self):
        summary = basic_summary(constant_trajectory())
        assert np.all(summary.y == 0.0)
        assert np.all(summary.means == 0.0)

    def test_piecewise_sway_levels(self):
        # C = 1 on [10,15[, 2 on ]15,20], 3 on [45,50[, 5 on ]50,55]
        traj = constant_trajectory((0.0, 0.0))
        t = traj.t
        radius = np.zeros(traj.n)
        radius[(t >= 10) & (t < 15)] = 1.0
        radius[(t > 15) & (t <= 20)] = 2.0
        radius[(t >= 45) & (t < 50)] = 3.0
        radius[(t > 50) & (t <= 55)] = 5.0
        # alternate +x / -x so the first-phase median stays at the origin
        sign = np.where(np.arange(traj.n) % 2 == 0, 1.0, -1.0)
        xy = np.column_stack([radius * sign, np.zeros(traj.n)])
        traj = Trajectory.regular(left=xy, right=xy.copy(), dt=DT)
        summary = basic_summary(traj)
        assert summary.means == pytest.approx([1.0, 2.0, 3.0, 5.0], abs=1e-12)
        assert summary.y == pytest.approx([1.0, 1.0, 2.0], abs=1e-12)

    def test_telescoping_identities(self):
        rng = np.random.default_rng(14)
        summary = basic_summary(random_trajectory(rng))
        c1m, c1p, c2m, c2p = summary.means
        y1, y2, y3 = summary.y
        assert y1 + y2 == pytest.approx(c2m - c1m, rel=1e-12, abs=1e-12)
        assert y1 + y2 + y3 == pytest.approx(c2p - c1m, rel=1e-12, abs=1e-12)

    def test_translation_invariance(self):
        rng = np.random.default_rng(15)
        traj = random_trajectory(rng)
        shifted = Trajectory.regular(
            left=traj.left + np.array([10.0, -4.0]),
            right=traj.right + np.array([10.0, -4.0]),
            dt=DT,
        )
        s0 = basic_summary(traj)
        s1 = basic_summary(shifted)
        assert s0.y == pytest.approx(s1.y, rel=1e-9, abs=1e-12)

    def test_scaling_about_reference_scales_summary(self):
        rng = np.random.default_rng(16)
        traj = random_trajectory(rng)
        bpath = barycenter_path(traj)
        b = reference_point(bpath, traj.t, PhaseSchedule())
        lam = 3.5
        scaled = Trajectory.regular(
            left=b + lam * (traj.left - b), right=b + lam * (traj.right - b), dt=DT
        )
        s0 = basic_summary(traj)
        s1 = basic_summary(scaled)
        assert s1.y == pytest.approx(lam * s0.y, rel=1e-9)

    def test_pure_function(self):
        rng = np.random.default_rng(17)
        traj = random_trajectory(rng)
        a = basic_summary(traj)
        b = basic_summary(traj)
        assert np.all(a.y == b.y) and np.all(a.means == b.means)


class TestExtendedSummary:
    def test_constant_trajectory_degenerate_slopes(self):
        with pytest.raises(SlopeDegenerate):
            extended_summary(constant_trajectory())

    def test_line_with_piecewise_distances(self):
        # barycenter alternates between two points of y = 3x equidistant from
        # the reference, at per-phase distances 1/2/3/5; slopes are exactly 3
        traj = constant_trajectory()
        t = traj.t
        direction = np.array([1.0, 3.0]) / np.sqrt(10.0)
        radius = np.zeros(traj.n)
        radius[(t >= 10) & (t < 15)] = 1.0
        radius[(t >= 15) & (t <= 20)] = 2.0
        radius[(t > 20) & (t < 45)] = 2.0
        radius[(t >= 45) & (t < 50)] = 3.0
        radius[(t >= 50) & (t <= 55)] = 5.0
        radius[t > 55] = 1.0
        sign = np.where(np.arange(traj.n) % 2 == 0, 1.0, -1.0)
        xy = (radius * sign)[:, None] * direction[None, :]
        traj = Trajectory.regular(left=xy, right=xy.copy(), dt=DT)
        ext = extended_summary(traj)
        assert ext.y == pytest.approx([1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 3.0], abs=1e-9)

    def test_first_components_equal_basic(self):
        rng = np.random.default_rng(18)
        traj = random_trajectory(rng)
        assert np.all(extended_summary(traj).y[:3] == basic_summary(traj).y)


class TestAgainstBruteForce:
    def test_randomized_trajectories_match_oracle(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            traj = random_trajectory(rng)
            ext = extended_summary(traj)
            ref = summary_reference(
                [float(v) for v in traj.t],
                traj.left.tolist(),
                traj.right.tolist(),
            )
            np.testing.assert_allclose(ext.y, ref["extended"], rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(ext.means, ref["means"], rtol=1e-10, atol=1e-12)


class TestTrajectoryIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(20)
        traj = random_trajectory(rng, n=150)
        path = tmp_path / "traj.csv"
        write_trajectory(path, traj)
        back = read_trajectory(path)
        assert np.all(back.t == traj.t)
        assert np.all(back.left == traj.left)
        assert np.all(back.right == traj.right)

    def test_header_is_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,lx,ly,rx,ry\n1,0,0,0,0\n")
        with pytest.raises(DataFormatError):
            read_trajectory(path)

    def test_unsorted_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,lx,ly,rx,ry\n2.0,0,0,0,0\n1.0,0,0,0,0\n")
        with pytest.raises(DataFormatError):
            read_trajectory(path)

    def test_bad_value_has_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,lx,ly,rx,ry\n1.0,0,0,0,oops\n")
        with pytest.raises(DataFormatError, match=":2:"):
            read_trajectory(path)

    def test_trim_start(self, tmp_path):
        traj = constant_trajectory(n=100)
        path = tmp_path / "traj.csv"
        write_trajectory(path, traj)
        trimmed = read_trajectory(path, trim_start=1.0)
        assert trimmed.t[0] >= 1.0
        assert trimmed.n < traj.n

    def test_summary_dict_schema(self):
        rng = np.random.default_rng(21)
        traj = random_trajectory(rng)
        out = summary_dict(traj)
        assert set(out) == {"basic", "extended", "means"}
        assert len(out["basic"]) == 3
        assert len(out["extended"]) == 8
        assert len(out["means"]) == 4
        assert out["extended"][:3] == out["basic"]
