import numpy as np
import pytest
from scipy import signal as sp_signal

from drawmark import spoc
from drawmark.errors import (
    BandOutOfRangeError,
    DegenerateTargetError,
    DimensionMismatchError,
    KTooLargeError,
    SegmentTooLongError,
    TooFewSamplesError,
)
from drawmark.model import NeuralEpoch
from drawmark.synth import SourceSpec, generate_planted_epochs

FS = 300.0
ALPHA = spoc.BAND_BY_NAME["alpha"]
BETA = spoc.BAND_BY_NAME["beta"]
GAMMA = spoc.BAND_BY_NAME["gamma"]


def sinusoid(freq, n=3000, fs=FS, amp=1.0):
    t = np.arange(n) / fs
    return amp * np.sin(2 * np.pi * freq * t)


class TestBandpass:
    def test_passband_preserves_amplitude(self):
        x = sinusoid(10.0)[None, :]
        y = spoc.bandpass_array(x, ALPHA, FS)
        # compare RMS over the interior to dodge edge transients
        sl = slice(300, -300)
        ratio = np.sqrt(np.mean(y[0, sl] ** 2) / np.mean(x[0, sl] ** 2))
        assert ratio > 0.95

    def test_stopband_rejects(self):
        x = sinusoid(10.0)[None, :]
        y = spoc.bandpass_array(x, GAMMA, FS)
        ratio = np.sqrt(np.mean(y**2) / np.mean(x**2))
        assert ratio < 0.05

    def test_white_noise_variance_matches_filter_response(self, rng):
        # Parseval oracle: zero-phase filtering squares the magnitude
        # response, so output variance = mean over frequency of |H|^4
        x = rng.standard_normal((1, 9000))
        for band in (spoc.BAND_BY_NAME["theta"], BETA):
            y = spoc.bandpass_array(x, band, FS)
            sos = spoc.band_sos(band, FS)
            freqs, h = sp_signal.sosfreqz(sos, worN=8192, fs=FS)
            expected = np.mean(np.abs(h) ** 4)
            measured = y.var() / x.var()
            assert abs(measured - expected) / expected < 0.2

    def test_band_above_nyquist_rejected(self):
        with pytest.raises(BandOutOfRangeError):
            spoc.bandpass_array(np.zeros((1, 100)), spoc.FrequencyBand("x", 50, 200), FS)

    def test_epoch_roundtrip_keeps_metadata(self):
        ep = NeuralEpoch(np.random.default_rng(0).standard_normal((2, 600)), FS,
                         ("a", "b"))
        out = spoc.bandpass(ep, ALPHA)
        assert out.channel_names == ("a", "b")
        assert out.sample_rate == FS


class TestEpochCov:
    def test_unit_variance_channel(self, rng):
        x = rng.standard_normal((1, 20000))
        c = spoc.epoch_cov(x)
        assert c.shape == (1, 1)
        assert abs(c[0, 0] - 1.0) < 0.05

    def test_duplicated_channel_rank_one(self, rng):
        row = rng.standard_normal(500)
        c = spoc.epoch_cov(np.vstack([row, row]))
        assert np.allclose(c[0, 0], c[0, 1])
        assert np.allclose(c, c.T)
        assert np.linalg.matrix_rank(c, tol=1e-10) == 1

    def test_fixed_matrix_hand_computation(self):
        x = np.array([[1.0, 2.0, 3.0, 4.0], [0.0, 2.0, 2.0, 0.0], [1.0, 1.0, 0.0, 2.0]])
        c = spoc.epoch_cov(x)
        expected = np.zeros((3, 3))
        xc = x - x.mean(axis=1, keepdims=True)
        for i in range(3):
            for j in range(3):
                expected[i, j] = np.dot(xc[i], xc[j]) / 4
        assert np.allclose(c, expected, rtol=1e-12)

    def test_psd_eigenvalues(self, rng):
        x = rng.standard_normal((6, 100))
        eigvals = np.linalg.eigvalsh(spoc.epoch_cov(x))
        assert np.all(eigvals >= -1e-10)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamplesError):
            spoc.epoch_cov(np.zeros((2, 1)))


def _band_filtered_planted(seed=0, n_epochs=200, n_channels=8, gain=0.8, snr=3.0,
                           gain_condition=0.0, conditions=None):
    epochs, z, truth = generate_planted_epochs(
        n_epochs,
        n_channels,
        sources=(SourceSpec(band="beta", gain_score=gain,
                            gain_condition=gain_condition),),
        snr=snr,
        seed=seed,
        conditions=conditions,
    )
    filtered = spoc.bandpass_array(epochs, BETA, FS)
    return filtered, z, truth


def _cosine(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


class TestFitSpoc:
    def test_planted_mixing_recovered(self):
        filtered, z, truth = _band_filtered_planted(seed=3)
        comps = spoc.fit_spoc(filtered, z, k=1, band=BETA)
        assert abs(_cosine(comps[0].pattern, truth.mixing[0])) >= 0.95

    def test_constant_target_rejected(self, rng):
        epochs = rng.standard_normal((10, 3, 300))
        with pytest.raises(DegenerateTargetError):
            spoc.fit_spoc(epochs, np.zeros(10), k=1)

    def test_k_too_large(self, rng):
        epochs = rng.standard_normal((10, 3, 300))
        with pytest.raises(KTooLargeError):
            spoc.fit_spoc(epochs, rng.standard_normal(10), k=4)

    def test_two_opposite_sources_opposite_eigen_signs(self):
        epochs, z, truth = generate_planted_epochs(
            300,
            8,
            sources=(
                SourceSpec(band="beta", gain_score=0.8),
                SourceSpec(band="beta", gain_score=-0.8),
            ),
            snr=3.0,
            seed=11,
        )
        filtered = spoc.bandpass_array(epochs, BETA, FS)
        comps = spoc.fit_spoc(filtered, z, k=2, band=BETA)
        lams = sorted(c.eigenvalue for c in comps)
        assert lams[0] < 0 < lams[1]
        patterns = np.array([c.pattern for c in comps])
        cos = np.abs(patterns @ truth.mixing.T / (
            np.linalg.norm(patterns, axis=1)[:, None]
            * np.linalg.norm(truth.mixing, axis=1)[None, :]
        ))
        # each planted column is recovered by one of the two leading comps
        assert cos.max(axis=0).min() >= 0.9

    def test_filter_normalization_and_lambda(self):
        filtered, z, truth = _band_filtered_planted(seed=5, n_epochs=150)
        covs = np.stack([spoc.epoch_cov(e) for e in filtered])
        comps = spoc.spoc_from_covariances(covs, z, 3, BETA)
        c_mean = covs.mean(axis=0)
        c_stab = c_mean + spoc.EIGEN_STABILIZER * (np.trace(c_mean) / 8) * np.eye(8)
        zs = (z - z.mean()) / z.std()
        for comp in comps:
            assert comp.filter @ c_stab @ comp.filter == pytest.approx(1.0, abs=1e-9)
            powers = np.einsum("i,eij,j->e", comp.filter, covs, comp.filter)
            lam = np.mean(zs * powers)
            assert comp.eigenvalue == pytest.approx(lam, rel=1e-6)

    def test_scale_invariance_of_selection(self):
        # scaling every epoch by c scales C_e and C_z by c^2; directions are
        # unchanged, and with the w' C w = 1 normalization the reported
        # eigenvalue (= covariance of unit-mean projected power with z) is
        # scale-free too; the projected-power ordering is preserved
        filtered, z, _ = _band_filtered_planted(seed=7, n_epochs=120)
        a = spoc.fit_spoc(filtered, z, k=2, band=BETA)
        b = spoc.fit_spoc(filtered * 5.0, z, k=2, band=BETA)
        for ca, cb in zip(a, b):
            assert abs(_cosine(ca.filter, cb.filter)) == pytest.approx(1.0, abs=1e-6)
            assert cb.eigenvalue == pytest.approx(ca.eigenvalue, rel=1e-6)
        powers_a = [spoc.spoc_power(a[0], e) for e in filtered[:20]]
        powers_b = [spoc.spoc_power(b[0], 5.0 * e) for e in filtered[:20]]
        assert np.array_equal(np.argsort(powers_a), np.argsort(powers_b))

    def test_negated_target_negates_eigenvalues(self):
        filtered, z, _ = _band_filtered_planted(seed=9, n_epochs=120)
        a = spoc.fit_spoc(filtered, z, k=2, band=BETA)
        b = spoc.fit_spoc(filtered, -z, k=2, band=BETA)
        for ca, cb in zip(a, b):
            assert cb.eigenvalue == pytest.approx(-ca.eigenvalue, rel=1e-9)
            assert abs(_cosine(ca.filter, cb.filter)) == pytest.approx(1.0, abs=1e-9)

    def test_two_channel_grid_search_oracle(self, rng):
        # brute-force maximization of |cov(w' C_e w, z)| under w' C w = 1
        # over directions theta in [0, pi) at 0.1 degree resolution
        for trial in range(5):
            epochs, z, _ = generate_planted_epochs(
                120, 2, sources=(SourceSpec(band="beta", gain_score=0.7),),
                snr=2.0, seed=100 + trial,
            )
            filtered = spoc.bandpass_array(epochs, BETA, FS)
            covs = np.stack([spoc.epoch_cov(e) for e in filtered])
            comp = spoc.spoc_from_covariances(covs, z, 1, BETA)[0]

            zs = (z - z.mean()) / z.std()
            c_mean = covs.mean(axis=0)
            thetas = np.deg2rad(np.arange(0.0, 180.0, 0.1))
            best_obj, best_theta = -np.inf, None
            for theta in thetas:
                w = np.array([np.cos(theta), np.sin(theta)])
                w = w / np.sqrt(w @ c_mean @ w)
                powers = np.einsum("i,eij,j->e", w, covs, w)
                obj = abs(np.mean(zs * powers))
                if obj > best_obj:
                    best_obj, best_theta = obj, theta

            got = np.arctan2(comp.filter[1], comp.filter[0]) % np.pi
            diff = abs(np.rad2deg((got - best_theta + np.pi / 2) % np.pi - np.pi / 2))
            assert diff <= 0.5


class TestSpocPower:
    def test_training_average_gives_zero_log_power(self):
        filtered, z, _ = _band_filtered_planted(seed=13, n_epochs=100)
        covs = np.stack([spoc.epoch_cov(e) for e in filtered])
        comp = spoc.spoc_from_covariances(covs, z, 1, BETA)[0]
        c_stab = covs.mean(axis=0)
        c_stab = c_stab + spoc.EIGEN_STABILIZER * (np.trace(c_stab) / 8) * np.eye(8)
        # an epoch whose covariance equals the training average has unit
        # projected power, i.e. log power 0
        power = float(np.log(comp.filter @ c_stab @ comp.filter))
        assert power == pytest.approx(0.0, abs=1e-9)

    def test_amplitude_doubling_adds_log4(self, rng):
        filtered, z, _ = _band_filtered_planted(seed=17, n_epochs=60)
        comp = spoc.fit_spoc(filtered, z, k=1, band=BETA)[0]
        p1 = spoc.spoc_power(comp, filtered[4])
        p2 = spoc.spoc_power(comp, 2.0 * filtered[4])
        assert p2 - p1 == pytest.approx(np.log(4.0), rel=1e-9)

    def test_matches_double_loop(self, rng):
        filtered, z, _ = _band_filtered_planted(seed=19, n_epochs=60)
        comp = spoc.fit_spoc(filtered, z, k=1, band=BETA)[0]
        epoch = filtered[10]
        c = spoc.epoch_cov(epoch)
        n = 8
        quad = sum(
            comp.filter[i] * c[i, j] * comp.filter[j]
            for i in range(n)
            for j in range(n)
        )
        assert spoc.spoc_power(comp, epoch) == pytest.approx(np.log(quad), rel=1e-10)

    def test_dimension_mismatch(self, rng):
        filtered, z, _ = _band_filtered_planted(seed=23, n_epochs=60)
        comp = spoc.fit_spoc(filtered, z, k=1, band=BETA)[0]
        with pytest.raises(DimensionMismatchError):
            spoc.spoc_power(comp, rng.standard_normal((3, 100)))


class TestPatterns:
    def test_eigenvectors_of_c(self, rng):
        a = rng.standard_normal((4, 4))
        c = a @ a.T + 0.5 * np.eye(4)
        eigvals, eigvecs = np.linalg.eigh(c)
        pats = spoc.patterns(eigvecs, c)
        # patterns of orthonormal eigenvector filters point along the filters
        for k in range(4):
            assert abs(_cosine(pats[:, k], eigvecs[:, k])) == pytest.approx(1.0)

    def test_identity_covariance(self, rng):
        w = rng.standard_normal((5, 2))
        pats = spoc.patterns(w, np.eye(5))
        expected = w @ np.linalg.inv(w.T @ w)
        assert np.allclose(pats, expected)

    def test_metric_roundtrip(self, rng):
        filtered, z, _ = _band_filtered_planted(seed=29, n_epochs=80)
        covs = np.stack([spoc.epoch_cov(e) for e in filtered])
        comps = spoc.spoc_from_covariances(covs, z, 4, BETA)
        W = np.stack([c.filter for c in comps], axis=1)
        c_mean = covs.mean(axis=0)
        gram = W.T @ c_mean @ W
        assert np.linalg.norm(gram @ np.linalg.inv(gram) - np.eye(4)) < 1e-8


class TestEcogBandPowers:
    def test_sinusoid_dominates_its_band(self):
        data = np.vstack([sinusoid(20.0, amp=40.0), 0.05 * np.random.default_rng(0).standard_normal(3000)])
        data = np.vstack([data, 0.05 * np.random.default_rng(1).standard_normal((2, 3000))])
        feats = spoc.ecog_band_powers(data, sample_rate=FS)
        per_band = feats.reshape(5, 4)
        beta_idx = 2  # canonical order: theta, alpha, beta, gamma, gamma_high
        ch0 = per_band[:, 0]
        assert np.argmax(ch0) == beta_idx
        # a 20 Hz tone leaks ~8.5 nats below its in-band power through the
        # adjacent bands' 4th-order Butterworth skirts
        assert ch0[beta_idx] - np.max(np.delete(ch0, beta_idx)) > 6.0

    def test_feature_length(self, rng):
        feats = spoc.ecog_band_powers(rng.standard_normal((4, 900)), sample_rate=FS)
        assert feats.shape == (20,)

    def test_white_noise_band_ordering(self, rng):
        feats = spoc.ecog_band_powers(rng.standard_normal((2, 60000)), sample_rate=FS)
        per_band = feats.reshape(5, 2).mean(axis=1)
        widths = np.array([4.0, 4.0, 18.0, 15.0, 35.0])
        # wider bands collect proportionally more white-noise power
        assert np.argmax(per_band) == np.argmax(widths)
        order = np.argsort(per_band)
        assert set(order[-2:]) == {2, 4}  # beta and gamma_high widest


class TestWelchPsd:
    def test_white_noise_flat_and_parseval(self, rng):
        x = rng.standard_normal((1, 30000))
        freqs, psd = spoc.welch_psd(x, segment_length=1024, sample_rate=FS)
        integral = np.trapezoid(psd[0], freqs)
        assert abs(integral - 1.0) < 0.1
        low = psd[0][(freqs > 10) & (freqs < 60)].mean()
        high = psd[0][(freqs > 80) & (freqs < 140)].mean()
        assert abs(low / high - 1.0) < 0.2

    def test_sinusoid_peak(self):
        x = sinusoid(25.0, n=9000)[None, :]
        freqs, psd = spoc.welch_psd(x, segment_length=1500, sample_rate=FS)
        assert abs(freqs[np.argmax(psd[0])] - 25.0) < 0.5

    def test_two_tone_power_ratio(self):
        x = (sinusoid(20.0, n=30000, amp=2.0) + sinusoid(70.0, n=30000, amp=1.0))[None, :]
        freqs, psd = spoc.welch_psd(x, segment_length=3000, sample_rate=FS)
        df = freqs[1] - freqs[0]
        p20 = psd[0][np.abs(freqs - 20) < 2].sum() * df
        p70 = psd[0][np.abs(freqs - 70) < 2].sum() * df
        assert abs(p20 / p70 - 4.0) < 0.4

    def test_segment_too_long(self, rng):
        with pytest.raises(SegmentTooLongError):
            spoc.welch_psd(rng.standard_normal((1, 100)), segment_length=200,
                           sample_rate=FS)


class TestMarkerSerialization:
    def test_roundtrip(self, tmp_path, rng):
        filtered, z, _ = _band_filtered_planted(seed=31, n_epochs=60)
        covs = np.stack([spoc.epoch_cov(e) for e in filtered])
        comps = spoc.spoc_from_covariances(covs, z, 2, BETA)
        covs = covs[:, None]  # add the band axis
        bank = spoc.MarkerFeatureBank(
            "spoc", (BETA,), FS, 8,
            filters=np.stack([[c.filter for c in comps]]),
            patterns=np.stack([[c.pattern for c in comps]]),
            eigenvalues=np.array([[c.eigenvalue for c in comps]]),
        )
        feats = bank.features_from_covariances(covs)
        marker = spoc.FittedMarker(
            bank=bank,
            feature_mean=feats.mean(axis=0),
            feature_std=feats.std(axis=0),
            selected=(1, 0),
            ridge_weights=np.array([0.5, -0.2]),
            ridge_bias=0.1,
            ridge_alpha=1.0,
        )
        path = tmp_path / "marker.json"
        marker.save(path)
        loaded = spoc.FittedMarker.load(path)
        epochs, _, _ = generate_planted_epochs(5, 8, seed=99)
        assert np.allclose(marker.predict(epochs), loaded.predict(epochs), atol=0)
        assert loaded.bank.feature_labels == bank.feature_labels
        assert loaded.selected == (1, 0)
