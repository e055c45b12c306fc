import math

import numpy as np
import pytest

from auralize import metrics
from auralize.errors import AnalysisError

FS = 44100.0


def exp_noise(T, seconds=1.5, seed=0):
    """Noise with an exponential amplitude envelope: -60 dB at t = T."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(FS * seconds)) / FS
    return rng.standard_normal(len(t)) * np.exp(-6.9078 * t / T)


class TestDecayTimes:
    def test_synthetic_exponential_t30_within_2_percent(self):
        ir = exp_noise(0.5)
        for c in (500.0, 1000.0, 2000.0, 4000.0, 8000.0):
            curve = metrics.schroeder_decay(ir, c, FS)
            assert metrics.t30(curve) == pytest.approx(0.5, rel=0.02)

    def test_low_bands_unbiased_across_realizations(self):
        # narrowband frames have few degrees of freedom; single realizations
        # fluctuate several percent, but the estimator is unbiased
        vals = [
            metrics.t30(metrics.schroeder_decay(exp_noise(0.5, seed=s), 125.0, FS))
            for s in range(5)
        ]
        assert np.mean(vals) == pytest.approx(0.5, rel=0.03)

    def test_edt_matches_t30_for_single_slope(self):
        # the 0..-10 dB region is short, so single narrowband realizations
        # fluctuate ~10%; the estimator itself is unbiased
        vals = [
            metrics.edt(metrics.schroeder_decay(exp_noise(0.5, seed=s), 1000.0, FS))
            for s in range(20)
        ]
        assert np.mean(vals) == pytest.approx(0.5, rel=0.03)
        curve = metrics.schroeder_decay(exp_noise(0.5), 8000.0, FS)
        assert metrics.edt(curve) == pytest.approx(0.5, rel=0.05)

    def test_two_slope_decay_has_edt_below_t30(self):
        t = np.arange(int(FS * 2.0)) / FS
        rng = np.random.default_rng(1)
        env = np.where(
            t < 0.15,
            np.exp(-6.9078 * t / 0.3),
            np.exp(-6.9078 * 0.15 / 0.3) * np.exp(-6.9078 * (t - 0.15) / 1.0),
        )
        ir = rng.standard_normal(len(t)) * env
        curve = metrics.schroeder_decay(ir, 1000.0, FS)
        assert metrics.edt(curve) < metrics.t30(curve)

    def test_constant_signal_raises_range_error(self):
        curve = metrics.schroeder_decay(np.ones(4000), 1000.0, FS)
        with pytest.raises(AnalysisError):
            metrics.t30(curve)

    def test_silent_band_raises(self):
        with pytest.raises(AnalysisError):
            metrics.schroeder_decay(np.zeros(4000), 1000.0, FS)

    def test_histogram_decay_is_exact(self):
        # deterministic energy histogram: the dB curve is exactly linear
        T = 0.5
        bw = 1e-3
        t = (np.arange(800) + 0.5) * bw
        energies = np.exp(-13.8156 * t / T)
        curve = metrics.schroeder_from_energy(energies, bw)
        assert metrics.t30(curve) == pytest.approx(T, rel=1e-3)


class TestDrr:
    def _brir(self, direct_db_over_tail):
        rng = np.random.default_rng(2)
        x = np.zeros((2, int(FS * 0.4)))
        span = int(round(4.5e-3 * FS))
        onset = 300
        x[:, onset:onset + 50] = rng.normal(size=(2, 50))
        e_direct = float((x**2).sum())
        tail = rng.normal(size=(2, x.shape[1] - onset - span - 100))
        tail *= math.sqrt(e_direct / 10 ** (direct_db_over_tail / 10.0)
                          / float((tail**2).sum()))
        x[:, onset + span + 100:] = tail
        return x

    @pytest.mark.parametrize("target", [3.57, -7.57, -8.44, 0.0])
    def test_known_ratio_recovered(self, target):
        assert metrics.drr(self._brir(target), sample_rate=FS) == pytest.approx(
            target, abs=1e-6
        )

    def test_silent_signal_raises(self):
        with pytest.raises(AnalysisError):
            metrics.drr(np.zeros((2, 1000)))

    def test_no_tail_raises(self):
        x = np.zeros((2, 1000))
        x[:, 10] = 1.0
        with pytest.raises(AnalysisError):
            metrics.drr(x, sample_rate=FS)


class TestIacc:
    def test_diotic_is_one(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(22050)
        m = metrics.iacc(np.stack([x, x]), FS)
        assert m.values.min() == pytest.approx(1.0, abs=1e-9)

    def test_inverted_channel_is_one(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(22050)
        m = metrics.iacc(np.stack([x, -x]), FS)
        assert m.values.min() == pytest.approx(1.0, abs=1e-9)

    def test_decorrelated_mean_below_0_3(self):
        rng = np.random.default_rng(5)
        br = rng.standard_normal((2, 44100))
        m = metrics.iacc(br, FS)
        assert m.values.mean() < 0.3

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(6)
        m = metrics.iacc(rng.standard_normal((2, 11025)), FS)
        assert m.values.min() >= 0.0
        assert m.values.max() <= 1.0

    def test_raw_estimator_keeps_noise_floor(self):
        rng = np.random.default_rng(7)
        br = rng.standard_normal((2, 22050))
        raw = metrics.iacc(br, FS, noise_floor_correction=False)
        corrected = metrics.iacc(br, FS)
        assert raw.values.mean() > corrected.values.mean()
        assert raw.values.mean() > 0.3  # narrowband small-sample bias

    def test_shapes_consistent(self):
        rng = np.random.default_rng(8)
        m = metrics.iacc(rng.standard_normal((2, 22050)), FS, frame_ms=20.0)
        assert m.values.shape == m.frame_energy.shape
        assert m.values.shape[1] == 36
        assert len(m.frame_times) == m.values.shape[0]

    def test_mono_rejected(self):
        with pytest.raises(AnalysisError):
            metrics.iacc(np.zeros(1000), FS)

    def test_short_signal_rejected(self):
        with pytest.raises(AnalysisError):
            metrics.iacc(np.zeros((2, 100)), FS)


class TestAswLev:
    def _matrix(self, values, energy=None):
        n, c = values.shape
        return metrics.IaccMatrix(
            frame_length_ms=20.0,
            channel_freqs=np.linspace(50, 16000, c),
            values=values,
            frame_energy=np.ones((n, c)) if energy is None else energy,
            frame_times=np.arange(n) * 0.01,
        )

    def test_diotic_asw_is_zero_exactly(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(22050)
        m = metrics.iacc(np.stack([x, x]), FS)
        asw, _ = metrics.asw_lev(m, metrics.direct_weight(m))
        assert asw == 0.0

    def test_decorrelated_asw_above_0_8(self):
        rng = np.random.default_rng(10)
        m = metrics.iacc(rng.standard_normal((2, 44100)), FS)
        asw, _ = metrics.asw_lev(m, metrics.direct_weight(m))
        assert asw > 0.8

    def test_formulas(self):
        # hand-checked on a 2x1 matrix
        values = np.array([[0.5], [1.0]])
        p = np.array([[1.0], [0.5]])
        m = self._matrix(values)
        w = metrics.DirectWeight(p)
        asw, lev = metrics.asw_lev(m, w)
        denom = 1.5
        assert asw == pytest.approx(1 - (0.5**4 * 1.0 + 1.0 * 0.5) / denom)
        assert lev == pytest.approx(1 - (0.5**4 * 0.0 + 1.0 * 0.5) / denom)

    def test_zero_weights_rejected(self):
        m = self._matrix(np.ones((3, 2)))
        with pytest.raises(AnalysisError):
            metrics.asw_lev(m, metrics.DirectWeight(np.zeros((3, 2))))

    def test_weight_shape_mismatch_rejected(self):
        m = self._matrix(np.ones((3, 2)))
        with pytest.raises(AnalysisError):
            metrics.asw_lev(m, metrics.DirectWeight(np.ones((2, 2))))


class TestDirectWeight:
    def test_onset_frame_has_full_weight(self):
        rng = np.random.default_rng(11)
        br = np.zeros((2, 44100))
        br[:, 2000:4000] = rng.normal(size=(2, 2000))
        br[:, 4000:] = 0.05 * rng.normal(size=(2, 40100))
        m = metrics.iacc(br, FS)
        w = metrics.direct_weight(m)
        assert w.values.max() == pytest.approx(1.0)
        assert w.values.min() >= 0.0
        # weights decay away from the onset
        late = w.values[-5:, :].mean()
        onset_region = w.values.max(axis=0).mean()
        assert late < onset_region

    def test_custom_strategy(self):
        rng = np.random.default_rng(12)
        m = metrics.iacc(rng.standard_normal((2, 22050)), FS)
        w = metrics.direct_weight(m, strategy=lambda mat: np.ones_like(mat.values))
        assert np.all(w.values == 1.0)

    def test_bad_strategy_shape_rejected(self):
        rng = np.random.default_rng(13)
        m = metrics.iacc(rng.standard_normal((2, 22050)), FS)
        with pytest.raises(AnalysisError):
            metrics.direct_weight(m, strategy=lambda mat: np.ones(3))


class TestJndFlags:
    def _report(self, asw=0.5, lev=0.5, t30_1k=0.5):
        r = metrics.MetricsReport(asw=asw, lev=lev)
        r.t30 = {1000.0: t30_1k}
        return r

    def test_fires_iff_above_jnd(self):
        a = self._report()
        assert not metrics.jnd_flags(a, self._report(asw=0.5 + 0.074))["asw"]
        assert metrics.jnd_flags(a, self._report(asw=0.5 + 0.076))["asw"]
        assert not metrics.jnd_flags(a, self._report(lev=0.5 - 0.074))["lev"]
        assert metrics.jnd_flags(a, self._report(lev=0.5 - 0.076))["lev"]

    def test_t30_flag_at_5_percent(self):
        a = self._report()
        assert not metrics.jnd_flags(a, self._report(t30_1k=0.5 * 1.049))["t30"]
        assert metrics.jnd_flags(a, self._report(t30_1k=0.5 * 1.051))["t30"]


class TestSpectra:
    def test_identical_inputs_differ_by_zero_exactly(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal(44100)
        s = metrics.lta_spectrum(x, FS)
        assert metrics.spectral_difference(s, s) == 0.0

    def test_known_level_offset(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal(44100)
        a = metrics.lta_spectrum(x, FS)
        b = metrics.lta_spectrum(2.0 * x, FS)
        # 6.02 dB broadband gain appears in every ERB band
        assert metrics.spectral_difference(a, b) == pytest.approx(
            20 * math.log10(2.0), abs=1e-6
        )

    def test_lowpass_increases_difference(self):
        from scipy import signal

        rng = np.random.default_rng(16)
        x = rng.standard_normal(44100)
        sos = signal.butter(8, 2500.0 / (FS / 2), output="sos")
        y = signal.sosfiltfilt(sos, x)
        a = metrics.lta_spectrum(x, FS)
        b = metrics.lta_spectrum(y, FS)
        assert metrics.spectral_difference(a, b) > 3.0

    def test_short_signal_rejected(self):
        with pytest.raises(AnalysisError):
            metrics.lta_spectrum(np.zeros(1000), FS)

    def test_mismatched_grids_rejected(self):
        rng = np.random.default_rng(17)
        a = metrics.lta_spectrum(rng.standard_normal(44100), FS)
        b = metrics.lta_spectrum(rng.standard_normal(44100), 48000.0)
        with pytest.raises(AnalysisError):
            metrics.spectral_difference(a, b)
