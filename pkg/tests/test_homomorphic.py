import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rfm_ace import (
    BandSelection,
    Cepstrum,
    InvalidArgumentError,
    LifterSpec,
    SpectralMap,
    lifter,
    local_power_spectra,
    real_cepstrum,
    reconstruct_spectrum,
    select_band,
    smooth_spectral_map,
)
from rfm_ace.phantom import pulse_sigma

L = 64


def even(x):
    """Symmetrize a length-L vector so x[i] == x[(L - i) % L]."""
    return 0.5 * (x + np.roll(x[::-1], 1))


def map_of(rows, fs=50e6):
    rows = np.atleast_2d(rows)
    return SpectralMap(rows, 0.01 + 1e-3 * np.arange(len(rows)), fs, rows.shape[1], 16, "hann", 1)


def gaussian_log_spectrum(n, amplitude_db=30.0, fs=50e6, f0=5e6, sigma=None):
    absf = np.abs(np.fft.fftfreq(n, 1 / fs))
    sigma = sigma or pulse_sigma(__import__("rfm_ace").ScanConfig())
    return amplitude_db / 10 * np.log(10) * np.exp(-((absf - f0) ** 2) / (2 * sigma**2))


positive_even_rows = arrays(np.float64, L, elements=st.floats(1e-3, 1e3)).map(even)


class TestRealCepstrum:
    def test_constant(self):
        c = real_cepstrum(np.full(L, 7.0)).values
        assert c[0] == pytest.approx(np.log(7.0), rel=1e-14)
        assert np.max(np.abs(c[1:])) < 1e-14

    def test_single_cosine(self):
        m = 5
        i = np.arange(L)
        c = real_cepstrum(np.exp(np.cos(2 * np.pi * m * i / L))).values
        expected = np.zeros(L)
        expected[m] = expected[L - m] = 0.5
        np.testing.assert_allclose(c, expected, atol=1e-14)

    @given(positive_even_rows, st.floats(1e-6, 1e6))
    def test_gain_moves_only_quefrency_zero(self, row, g):
        a = real_cepstrum(row).values
        b = real_cepstrum(g * row).values
        assert b[0] - a[0] == pytest.approx(np.log(g), abs=1e-9)
        np.testing.assert_allclose(b[1:], a[1:], atol=1e-9)

    def test_rejects_odd_row(self):
        row = np.ones(L)
        row[3] = 2.0
        with pytest.raises(InvalidArgumentError):
            real_cepstrum(row)

    @pytest.mark.parametrize("row", [np.zeros(L), -np.ones(L), np.full(L, np.nan)])
    def test_rejects_bad_rows(self, row):
        with pytest.raises(InvalidArgumentError):
            real_cepstrum(row)

    def test_clamp_floor(self):
        row = np.ones(L)
        row[10] = row[L - 10] = 0.0
        c = real_cepstrum(row, floor_rel=1e-6)
        assert np.all(np.isfinite(c.values))
        assert reconstruct_spectrum(c)[10] == pytest.approx(1e-6, rel=1e-9)


class TestLifter:
    def test_full_pass_identity(self):
        c = real_cepstrum(even(np.random.default_rng(0).uniform(0.5, 2, L)))
        assert np.array_equal(lifter(c, LifterSpec(L // 2)).values, c.values)

    @given(positive_even_rows, st.integers(1, L // 2))
    def test_idempotent(self, row, n):
        spec = LifterSpec(n)
        once = lifter(real_cepstrum(row), spec)
        assert np.array_equal(lifter(once, spec).values, once.values)

    @given(positive_even_rows, st.integers(1, L // 2 - 1))
    def test_keeps_exactly_the_low_quefrencies(self, row, n):
        c = real_cepstrum(row)
        out = lifter(c, LifterSpec(n)).values
        kept = np.zeros(L, bool)
        kept[: n + 1] = kept[L - n :] = True
        assert np.array_equal(out[kept], c.values[kept])
        assert not out[~kept].any()

    def test_high_cosine_removed(self):
        i = np.arange(L)
        c = real_cepstrum(3.0 * np.exp(np.cos(2 * np.pi * 9 * i / L)))
        out = reconstruct_spectrum(lifter(c, LifterSpec(4)))
        np.testing.assert_allclose(out, 3.0, rtol=1e-13)

    def test_cutoff_validation(self):
        with pytest.raises(InvalidArgumentError):
            LifterSpec(0)
        with pytest.raises(InvalidArgumentError):
            lifter(real_cepstrum(np.ones(L)), LifterSpec(L // 2 + 1))

    def test_default_cutoff(self):
        assert LifterSpec.default_for(128).cutoff == 8
        assert LifterSpec.default_for(256).cutoff == 16
        assert LifterSpec.default_for(32).cutoff == 4


class TestReconstruct:
    def test_constant_cepstrum(self):
        v = np.zeros(L)
        v[0] = 1.25
        np.testing.assert_allclose(reconstruct_spectrum(Cepstrum(v)), np.exp(1.25), rtol=1e-15)

    @given(positive_even_rows)
    def test_round_trip(self, row):
        back = reconstruct_spectrum(real_cepstrum(row))
        np.testing.assert_allclose(back, row, rtol=1e-9)

    @given(positive_even_rows, st.integers(1, L // 2))
    def test_positive_and_even(self, row, n):
        out = reconstruct_spectrum(lifter(real_cepstrum(row), LifterSpec(n)))
        assert np.all(out > 0)
        np.testing.assert_allclose(out, np.roll(out[::-1], 1), rtol=1e-9)

    def test_rejects_odd_cepstrum(self):
        with pytest.raises(InvalidArgumentError):
            Cepstrum(np.arange(8.0))

    def test_gaussian_times_ripple(self):
        n = 256
        G = gaussian_log_spectrum(n)
        band = G >= G.max() - 1.5 * np.log(10)
        i = np.arange(n)
        spec = LifterSpec.default_for(n)
        for m in range(spec.cutoff + 1, n // 2 + 1):
            out = reconstruct_spectrum(lifter(real_cepstrum(np.exp(G + np.cos(2 * np.pi * m * i / n))), spec))
            assert np.max(np.abs(out[band] / np.exp(G[band]) - 1)) <= 0.05


class TestSmoothSpectralMap:
    def test_full_pass_is_identity(self):
        rows = np.array([even(np.random.default_rng(k).uniform(0.1, 10, L)) for k in range(4)])
        out = smooth_spectral_map(map_of(rows), LifterSpec(L // 2)).power
        np.testing.assert_allclose(out, rows, rtol=1e-9)

    def test_constant_map_unchanged(self):
        out = smooth_spectral_map(map_of(np.full((3, L), 2.5)), LifterSpec(4)).power
        np.testing.assert_allclose(out, 2.5, rtol=1e-14)

    def test_power_of_two_gain_exact(self):
        rows = np.array([even(np.random.default_rng(k).uniform(0.1, 10, L)) for k in range(4)])
        a = smooth_spectral_map(map_of(rows), LifterSpec(6)).power
        b = smooth_spectral_map(map_of(8.0 * rows), LifterSpec(6)).power
        assert np.array_equal(b, 8.0 * a)

    @given(st.floats(1e-4, 1e4))
    def test_gain_equivariance(self, g):
        rows = np.array([even(np.random.default_rng(k).uniform(0.1, 10, L)) for k in range(3)])
        a = smooth_spectral_map(map_of(rows), LifterSpec(6)).power
        b = smooth_spectral_map(map_of(g * rows), LifterSpec(6)).power
        np.testing.assert_allclose(b, g * a, rtol=1e-12)

    @given(
        arrays(np.float64, 5, elements=st.floats(-1, 1)),
        arrays(np.float64, 4, elements=st.floats(-1, 1)),
    )
    def test_separable_oracle(self, low, high):
        # log X^2 uses quefrencies 0..4, log E^2 uses 9..12: the lifter at 4 separates them exactly
        i = np.arange(L)
        logx = sum(a * np.cos(2 * np.pi * q * i / L) for q, a in enumerate(low))
        loge = sum(a * np.cos(2 * np.pi * q * i / L) for q, a in zip(range(9, 13), high))
        out = smooth_spectral_map(map_of(np.exp(logx + loge)), LifterSpec(4)).power[0]
        np.testing.assert_allclose(out, np.exp(logx), rtol=1e-2)

    def test_meta_records_lifter(self):
        out = smooth_spectral_map(map_of(np.ones((2, L))), LifterSpec(5))
        assert out.meta["lifter"]["lifter_cutoff"] == 5

    def test_error_names_depth_window(self):
        rows = np.ones((3, L))
        rows[1] = 0.0
        with pytest.raises(InvalidArgumentError, match="depth window 1"):
            smooth_spectral_map(map_of(rows), LifterSpec(4))


class TestBandSmoothing:
    def test_speckle_ripple_reduced_every_row(self, default_frame):
        smap = local_power_spectra(default_frame, 256, 64)
        band = select_band(smap)
        bins = band.bins
        x = smap.freqs[bins]

        def ripple(power):
            logp = np.log(power[:, bins])
            fit = np.polynomial.polynomial.polyfit(x, logp.T, 2)
            return np.std(logp - np.polynomial.polynomial.polyval(x, fit), axis=1)

        smoothed = smooth_spectral_map(smap, trend_band=band)
        assert np.all(ripple(smoothed.power) < ripple(smap.power))

    def test_quadratic_log_spectrum_is_kept(self):
        n = 128
        absf = np.abs(np.fft.fftfreq(n, 1 / 50e6))
        logp = -((absf - 5e6) / 2e6) ** 2 - 3e-7 * absf
        smap = map_of(np.exp(logp), fs=50e6)
        band = BandSelection(8, 20, 15.0)
        out = smooth_spectral_map(smap, LifterSpec(8), trend_band=band).power[0]
        np.testing.assert_allclose(out[band.bins], np.exp(logp[band.bins]), rtol=1e-10)

    def test_out_of_band_untouched(self, default_frame):
        smap = local_power_spectra(default_frame, 256, 64)
        band = select_band(smap)
        out = smooth_spectral_map(smap, trend_band=band).power
        outside = np.ones(256, bool)
        outside[band.bins] = outside[(256 - band.bins) % 256] = False
        assert np.array_equal(out[:, outside], smap.power[:, outside])

    def test_band_too_wide(self):
        with pytest.raises(InvalidArgumentError):
            smooth_spectral_map(map_of(np.ones((1, L))), LifterSpec(4), trend_band=BandSelection(0, L, 15.0))
