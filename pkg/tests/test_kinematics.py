import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drawmark import kinematics as km
from drawmark.errors import EmptyTrainingError, TooFewSamplesError
from drawmark.model import Trace

TEMPLATE = np.stack([np.linspace(0, 100, 20), np.zeros(20)], axis=1)


def trace_from_xy(t, x, y, template=TEMPLATE):
    return Trace(np.column_stack([t, x, y]), template, duration_limit=60.0)


def uniform_t(n, dt=0.01):
    return np.arange(n) * dt


class TestDerivatives:
    def test_uniform_straight_line(self):
        t = uniform_t(20)
        trace = trace_from_xy(t, 50.0 * t, np.zeros_like(t))
        d = km.derivatives(trace)
        assert np.allclose(d.velocity[:, 0], 50.0)
        assert np.allclose(d.velocity[:, 1], 0.0)
        assert np.allclose(d.acceleration, 0.0, atol=1e-9)
        assert np.allclose(d.jerk, 0.0, atol=1e-7)
        assert len(d.speed) == 18 and len(d.accel_mag) == 16 and len(d.jerk_mag) == 14

    def test_quadratic_constant_acceleration(self):
        t = uniform_t(20)
        trace = trace_from_xy(t, 0.5 * 30.0 * t**2, np.zeros_like(t))
        d = km.derivatives(trace)
        assert np.allclose(d.velocity[:, 0], 30.0 * d.t_vel)
        assert np.allclose(d.acceleration[:, 0], 30.0)

    def test_randomized_cubic_vs_analytic(self, rng):
        # On a uniform grid the 3-point stencil applied to a cubic equals the
        # analytic derivative plus its exact truncation term h^2/6 * f''';
        # the propagated velocity estimate is then a quadratic in t, so the
        # acceleration and jerk estimates are exact.
        dt = 0.02
        t = uniform_t(30, dt=dt)
        cx = rng.uniform(-5, 5, 4)  # cubic..constant coefficients
        cy = rng.uniform(-5, 5, 4)
        x = np.polyval(cx, t)
        y = np.polyval(cy, t)
        d = km.derivatives(trace_from_xy(t, x, y))
        for comp, c in ((0, cx), (1, cy)):
            vel_true = np.polyval(np.polyder(c), d.t_vel) + dt**2 * c[0]
            assert np.max(np.abs(d.velocity[:, comp] - vel_true)) < 1e-9
            acc_true = np.polyval(np.polyder(c, 2), d.t_acc)
            assert np.max(np.abs(d.acceleration[:, comp] - acc_true)) < 1e-8
            assert np.max(np.abs(d.jerk[:, comp] - 6 * c[0])) < 1e-6

    def test_quadratic_exact_on_nonuniform_grid(self, rng):
        t = np.sort(rng.uniform(0, 1, 25))
        t += np.arange(25) * 1e-3  # enforce strict spacing
        x = 2.0 * t**2 - 3.0 * t + 1.0
        trace = trace_from_xy(t, x, np.zeros_like(t))
        d = km.derivatives(trace)
        assert np.allclose(d.velocity[:, 0], 4.0 * d.t_vel - 3.0, atol=1e-9)

    def test_too_few_samples(self):
        t = uniform_t(6)
        with pytest.raises(TooFewSamplesError):
            km.derivatives(trace_from_xy(t, t, t))


class TestStandardFeatures:
    def test_straight_line_at_100(self):
        t = uniform_t(30)
        trace = trace_from_xy(t, 100.0 * t, np.zeros_like(t))
        fv = km.standard_features(trace)
        assert np.allclose(
            fv.values, [100, 100, 0, 0, 0, 0, 0, 0, 0], atol=1e-6
        )
        assert fv.names == km.STANDARD_FEATURE_NAMES

    def test_mirror_symmetry(self, rng):
        t = uniform_t(40)
        x = 30 * t + np.cumsum(rng.normal(0, 0.1, 40))
        y = 10 * np.sin(4 * t)
        a = km.standard_features(trace_from_xy(t, x, y))
        b = km.standard_features(trace_from_xy(t, x, -y))
        assert np.allclose(a.values, b.values)

    def test_matches_bruteforce_loop(self, rng):
        t = uniform_t(40)
        x = 40 * t + 5 * np.sin(3 * t)
        y = 20 * np.cos(2 * t)
        fv = km.standard_features(trace_from_xy(t, x, y))

        # independent per-sample loop with the same stencil
        def diff1(ts, fs):
            out = []
            for i in range(1, len(ts) - 1):
                h1, h2 = ts[i] - ts[i - 1], ts[i + 1] - ts[i]
                out.append(
                    (h1**2 * (fs[i + 1] - fs[i]) + h2**2 * (fs[i] - fs[i - 1]))
                    / (h1 * h2 * (h1 + h2))
                )
            return np.array(out)

        vx, vy = diff1(t, x), diff1(t, y)
        ax, ay = diff1(t[1:-1], vx), diff1(t[1:-1], vy)
        jx, jy = diff1(t[2:-2], ax), diff1(t[2:-2], ay)
        expected = [
            np.mean(np.hypot(vx, vy)), np.mean(np.abs(vx)), np.mean(np.abs(vy)),
            np.mean(np.hypot(ax, ay)), np.mean(np.abs(ax)), np.mean(np.abs(ay)),
            np.mean(np.hypot(jx, jy)), np.mean(np.abs(jx)), np.mean(np.abs(jy)),
        ]
        assert np.allclose(fv.values, expected, rtol=1e-12)


class TestExtendedFeatures:
    def test_trace_equal_to_template(self):
        template = np.stack([np.linspace(0, 100, 12), np.linspace(0, 30, 12)], 1)
        t = uniform_t(12)
        trace = Trace(np.column_stack([t, template]), template, 60.0)
        fv = km.extended_features(trace)
        assert fv.values[9] == 0.0   # dtw cost
        assert fv.values[10] == 0.0  # mean distance
        assert fv.values[11] == 1.0  # fraction matched

    def test_half_coverage_fraction(self):
        template = np.stack([np.linspace(0, 100, 24), np.zeros(24)], 1)
        t = uniform_t(12)
        trace = Trace(np.column_stack([t, template[:12]]), template, 60.0)
        fv = km.extended_features(trace)
        assert fv.values[11] == pytest.approx(0.5, abs=0.01)

    def test_prefix_is_standard(self, rng):
        t = uniform_t(30)
        trace = trace_from_xy(t, 40 * t, 10 * np.sin(3 * t))
        assert np.allclose(
            km.extended_features(trace).values[:9],
            km.standard_features(trace).values,
        )


def octagon_trace(n_per_side=8, speed=50.0):
    """Constant-speed octagon visiting all 8 direction bins at their centers
    (22.5 deg offset keeps samples away from bin edges)."""
    directions = np.deg2rad(np.arange(8) * 45.0 + 22.5)
    dt = 0.01
    pts = [np.zeros(2)]
    for d in directions:
        step = speed * dt * np.array([np.cos(d), np.sin(d)])
        for _ in range(n_per_side):
            pts.append(pts[-1] + step)
    xy = np.array(pts)
    t = uniform_t(len(xy))
    return trace_from_xy(t, xy[:, 0], xy[:, 1])


class TestAngularFeatures:
    def test_pure_x_motion_populates_first_bin_only(self):
        t = uniform_t(30)
        fv = km.angular_features(trace_from_xy(t, 100 * t, np.zeros_like(t)))
        binned = fv.values[:24]
        assert binned[0] == pytest.approx(100.0, rel=1e-9)  # bin0 speed
        assert np.allclose(binned[1:24], 0.0, atol=1e-6)    # 21 zeros + bin0 a/j

    def test_rotation_permutes_bin_blocks(self, rng):
        trace = octagon_trace()
        base = km.angular_features(trace).values[:24].reshape(8, 3)
        xy = trace.xy @ np.array([[0.0, 1.0], [-1.0, 0.0]])  # rotate +90 deg
        rotated = km.angular_features(
            trace_from_xy(trace.t, xy[:, 0], xy[:, 1])
        ).values[:24].reshape(8, 3)
        assert np.allclose(np.roll(base, 2, axis=0), rotated, atol=1e-6)

    def test_octagon_equal_bin_speeds(self):
        fv = km.angular_features(octagon_trace())
        speeds = fv.values[:24].reshape(8, 3)[:, 0]
        assert np.all(speeds > 0)
        assert np.ptp(speeds) / speeds.mean() < 0.25  # corners blur bins a bit

    def test_suffix_equals_extended(self, rng):
        trace = octagon_trace()
        assert np.array_equal(
            km.angular_features(trace).values[24:],
            km.extended_features(trace).values,
        )

    def test_dimensions(self):
        trace = octagon_trace()
        assert km.angular_features(trace).values.shape == (36,)
        assert len(km.FeatureSet.ANGULAR.feature_names) == 36
        assert km.FeatureSet.STANDARD.dimension == 9
        assert km.FeatureSet.EXTENDED.dimension == 12


class TestPreprocess:
    def test_normal_draws_standardized(self, rng):
        X = rng.standard_normal((1000, 5)) * [1, 2, 3, 4, 5] + [10, 0, -3, 1, 2]
        train, applied = km.preprocess_features(X, X)
        assert np.array_equal(train, applied)
        assert np.all(np.abs(train.mean(axis=0)) < 0.1)
        assert np.all(np.abs(train.std(axis=0) - 1.0) < 0.1)

    def test_outlier_clipped_to_three(self, rng):
        X = rng.standard_normal((500, 1))
        outlier = np.array([[X.mean() + 10 * X.std()]])
        _, applied = km.preprocess_features(X, outlier)
        assert applied[0, 0] == pytest.approx(3.0)

    def test_constant_feature_zero(self):
        X = np.column_stack([np.ones(20), np.arange(20.0)])
        train, _ = km.preprocess_features(X, X)
        assert np.all(train[:, 0] == 0.0)
        assert np.all(np.isfinite(train))

    def test_empty_training_rejected(self):
        with pytest.raises(EmptyTrainingError):
            km.preprocess_features(np.empty((0, 3)), np.zeros((2, 3)))

    def test_output_bounded(self, rng):
        X = rng.standard_normal((200, 4)) ** 3  # heavy tails
        train, applied = km.preprocess_features(X, rng.standard_normal((50, 4)) * 10)
        assert np.all(np.abs(train) <= 3.0 + 1e-12)
        assert np.all(np.abs(applied) <= 3.0 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    dx=st.floats(-500, 500),
    dy=st.floats(-500, 500),
    dt=st.floats(0, 100),
    scale=st.floats(0.1, 10),
)
def test_invariances(seed, dx, dy, dt, scale):
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.uniform(0.005, 0.02, 25))
    x = np.cumsum(rng.normal(1.0, 0.3, 25))
    y = np.cumsum(rng.normal(-0.5, 0.3, 25))
    base = km.standard_features(trace_from_xy(t, x, y)).values

    shifted = km.standard_features(trace_from_xy(t + dt, x + dx, y + dy)).values
    assert np.allclose(base, shifted, rtol=1e-6, atol=1e-6)

    scaled = km.standard_features(trace_from_xy(t, scale * x, scale * y)).values
    assert np.allclose(scale * base, scaled, rtol=1e-9)
