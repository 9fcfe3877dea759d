import numpy as np
import pytest

from drawmark import synth
from drawmark.errors import InvalidSpecError
from drawmark.io import sessions_equal
from drawmark.kinematics import FeatureSet, feature_matrix
from drawmark.model import DbsCondition, Modality
from drawmark.spoc import BAND_BY_NAME, bandpass_array


def small_spec(seed=0, **kw):
    defaults = dict(seed=seed, n_blocks=4, trials_per_block=4)
    defaults.update(kw)
    return synth.SynthSpec(**defaults)


class TestSpecValidation:
    def test_bad_specs_rejected(self):
        with pytest.raises(InvalidSpecError):
            synth.SynthSpec(seed=0, n_blocks=1).validate()
        with pytest.raises(InvalidSpecError):
            synth.SynthSpec(seed=0, trials_per_block=13).validate()
        with pytest.raises(InvalidSpecError):
            synth.SynthSpec(seed=0, neural=synth.NeuralSpec(snr=-1.0)).validate()
        with pytest.raises(InvalidSpecError):
            synth.SynthSpec(
                seed=0, neural=synth.NeuralSpec(sources=(synth.SourceSpec(band="delta"),))
            ).validate()
        with pytest.raises(InvalidSpecError):
            synth.SynthSpec(
                seed=0,
                neural=synth.NeuralSpec(
                    n_channels=4, sources=(synth.SourceSpec(mixing=(1.0, 0.0)),)
                ),
            ).validate()


class TestDeterminism:
    def test_identical_seed_identical_session(self):
        spec = small_spec(seed=42, neural=synth.NeuralSpec(n_channels=3))
        s1, t1 = synth.generate_session(spec)
        s2, t2 = synth.generate_session(spec)
        assert sessions_equal(s1, s2)
        assert np.array_equal(t1.comodulation, t2.comodulation)
        assert np.array_equal(t1.mixing, t2.mixing)

    def test_different_seed_differs(self):
        s1, _ = synth.generate_session(small_spec(seed=1))
        s2, _ = synth.generate_session(small_spec(seed=2))
        assert not sessions_equal(s1, s2)


class TestSessionStructure:
    def test_blocks_alternate_starting_off(self):
        session, truth = synth.generate_session(small_spec())
        conditions = [b.condition for b in session.blocks]
        assert conditions == [
            DbsCondition.OFF, DbsCondition.ON, DbsCondition.OFF, DbsCondition.ON
        ]
        assert truth.conditions.sum() == 8  # half the trials

    def test_trial_counts_and_template(self):
        session, _ = synth.generate_session(small_spec())
        assert all(len(b.trials) == 4 for b in session.blocks)
        template = session.blocks[0].trials[0].trace.template
        for block in session.blocks:
            for trial in block.trials:
                assert np.array_equal(trial.trace.template, template)
                assert trial.trace.duration_limit == 8.0

    def test_traces_follow_template_fraction(self):
        # OFF trials cover roughly base_speed * limit of arc length
        session, truth = synth.generate_session(small_spec(seed=3))
        template = session.blocks[0].trials[0].trace.template
        arc = np.concatenate(
            [[0.0], np.cumsum(np.linalg.norm(np.diff(template, axis=0), axis=1))]
        )
        for block in session.blocks:
            for trial in block.trials:
                trace_span = trial.trace.t[-1]
                assert trace_span <= 8.0 + 0.1

    def test_ecog_modality_propagates(self):
        spec = small_spec(
            seed=5,
            neural=synth.NeuralSpec(n_channels=4, modality=Modality.ECOG),
        )
        session, _ = synth.generate_session(spec)
        assert session.modality is Modality.ECOG
        assert session.blocks[0].trials[0].neural.modality is Modality.ECOG
        assert session.blocks[0].trials[0].neural.n_channels == 4


class TestKinematicEffect:
    def test_speed_shift_separates_speed_feature(self):
        spec = synth.SynthSpec(
            seed=11, n_blocks=6, trials_per_block=8,
            kinematic=synth.KinematicEffect(speed_on=1.5),
        )
        session, truth = synth.generate_session(spec)
        feats = feature_matrix(
            [tr.trace for _, tr in session.valid_trials()], FeatureSet.STANDARD
        )
        speed = feats[:, 0]
        on = truth.conditions
        assert speed[on].mean() / speed[~on].mean() > 1.3

    def test_effect_size_monotone_in_shift(self):
        from drawmark.evaluation import behavioral_decode

        mean_aucs = []
        for shift in (1.0, 1.2, 1.5):
            aucs = []
            for seed in range(8):
                spec = synth.SynthSpec(
                    seed=seed, n_blocks=6, trials_per_block=8,
                    kinematic=synth.KinematicEffect(speed_on=shift),
                )
                session, _ = synth.generate_session(spec)
                aucs.append(behavioral_decode(session).mean_auc)
            mean_aucs.append(np.mean(aucs))
        assert mean_aucs[0] < mean_aucs[1] < mean_aucs[2]


class TestPlantedEpochs:
    def test_snr_honored(self):
        # Monte-Carlo check of planted source power / noise power per channel
        epochs, z, truth = synth.generate_planted_epochs(
            300, 8, snr=3.0, seed=21, epoch_duration=2.0
        )
        m = truth.mixing[0]
        g = truth.variance_factors[0]
        signal_power = g.mean() * (m**2).sum() / 8
        measured_ratio = signal_power / truth.noise_std**2
        assert abs(measured_ratio - 3.0) / 3.0 < 0.1

        # and the realized per-channel variance decomposes accordingly
        total_var = epochs.var(axis=(0, 2)).mean()
        expected = signal_power + truth.noise_std**2
        assert abs(total_var - expected) / expected < 0.1

    def test_variance_tracks_factor(self):
        epochs, z, truth = synth.generate_planted_epochs(
            200, 4, sources=(synth.SourceSpec(band="beta", gain_score=0.9),),
            snr=50.0, seed=23,
        )
        band = BAND_BY_NAME["beta"]
        filtered = bandpass_array(epochs, band, 300.0)
        m = truth.mixing[0]
        proj = np.einsum("c,ect->et", m, filtered)
        power = proj.var(axis=1)
        r = np.corrcoef(power, truth.variance_factors[0])[0, 1]
        assert r > 0.95

    def test_zero_gains_give_no_signal(self):
        epochs, z, truth = synth.generate_planted_epochs(
            100, 4, sources=(synth.SourceSpec(gain_score=0.0, gain_condition=0.0),),
            snr=3.0, seed=27,
        )
        assert np.allclose(truth.variance_factors, 1.0)

    def test_variance_factor_floor(self):
        epochs, z, truth = synth.generate_planted_epochs(
            500, 2, sources=(synth.SourceSpec(gain_score=3.0),), snr=3.0, seed=29
        )
        assert truth.variance_factors.min() == pytest.approx(
            synth.MIN_VARIANCE_FACTOR
        )


class TestComodulationTargets:
    def test_copydraw_comodulation_correlates_with_scores(self):
        spec = synth.SynthSpec(
            seed=31, n_blocks=6, trials_per_block=8,
            kinematic=synth.KinematicEffect(speed_on=1.5),
            neural=synth.NeuralSpec(n_channels=4),
        )
        _, truth = synth.generate_session(spec)
        z = truth.comodulation
        scores = truth.copydraw_scores
        assert abs(np.corrcoef(z, (scores - scores.mean()) / scores.std())[0, 1]) > 0.999

    def test_orthogonalized_comodulation_uncorrelated_with_condition(self):
        spec = synth.SynthSpec(
            seed=33, n_blocks=8, trials_per_block=10,
            neural=synth.NeuralSpec(n_channels=4, orthogonalize_condition=True),
        )
        _, truth = synth.generate_session(spec)
        z = truth.comodulation
        on = truth.conditions
        assert abs(z[on].mean() - z[~on].mean()) < 1e-9


class TestBruteForceDtw:
    def test_identical_lists(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        cost, n_c, path = synth.brute_force_dtw(pts, pts)
        assert cost == 0.0 and n_c == 3
