import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import butterworth_bandpass_power, naive_dft, tone_amplitude

from thermovital.dsp import (
    HR_BAND,
    RR_BAND,
    FrequencyBand,
    Spectrum,
    TimeSeries,
    bandpass,
    butter_bandpass_gain,
    dominant_frequency,
    fft_magnitude,
    nyquist_check,
    padded_length,
    require_nyquist,
    zero_pad,
)
from thermovital.errors import BandError, BandResolutionError, LengthError

FS = 15.0


def tone(f, seconds, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return amp * np.sin(2 * np.pi * f * t + phase)


# --------------------------------------------------------------------------
# Nyquist guard
# --------------------------------------------------------------------------


def test_nyquist_hr_at_camera_rate():
    res = nyquist_check(HR_BAND, 15)
    assert res.ok
    assert res.required == pytest.approx(5.34)
    assert res.margin == pytest.approx(9.66)


def test_nyquist_boundary_is_allowed():
    assert nyquist_check(RR_BAND, 1.34).ok


def test_nyquist_violation():
    res = nyquist_check(HR_BAND, 5.0)
    assert not res
    with pytest.raises(BandError, match="5.34"):
        require_nyquist(HR_BAND, 5.0)


def test_band_invariants():
    with pytest.raises(BandError):
        FrequencyBand(0.0, 1.0)
    with pytest.raises(BandError):
        FrequencyBand(2.0, 1.0)


# --------------------------------------------------------------------------
# band-pass
# --------------------------------------------------------------------------


def test_dc_rejection():
    y = bandpass(TimeSeries(np.full(300, 5000.0), FS), HR_BAND).samples
    assert np.max(np.abs(y[50:-50])) < 1e-6 * 5000


def test_passband_and_stopband_amplitudes():
    inside = bandpass(TimeSeries(tone(2.0, 20), FS), HR_BAND).samples
    outside = bandpass(TimeSeries(tone(5.0, 20), FS), HR_BAND).samples
    assert tone_amplitude(inside[60:-60], 2.0, FS) >= 0.9
    assert tone_amplitude(outside[60:-60], 5.0, FS) <= 0.1


def test_analytic_gain_matches_oracle():
    f = np.linspace(0.01, 7.49, 500)
    ours = butter_bandpass_gain(f, HR_BAND, FS) ** 2
    assert np.allclose(ours, butterworth_bandpass_power(f, 1.67, 2.67, FS), atol=1e-12)


def test_filter_is_zero_phase():
    # a symmetric pulse stays centred after forward-backward filtering
    n = 601
    t = (np.arange(n) - 300) / FS
    x = np.exp(-0.5 * (t / 0.3) ** 2) * np.cos(2 * np.pi * 2.2 * t)
    y = bandpass(TimeSeries(x, FS), HR_BAND).samples
    assert np.argmax(np.abs(y)) == 300
    assert np.allclose(y, y[::-1], atol=1e-6 * np.abs(y).max())


def test_filter_operates_along_last_axis():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 200))
    both = bandpass(TimeSeries(x, FS), HR_BAND).samples
    for i in range(3):
        assert np.allclose(both[i], bandpass(TimeSeries(x[i], FS), HR_BAND).samples)


def test_short_series_rejected():
    with pytest.raises(LengthError):
        bandpass(TimeSeries(np.ones(11), FS), HR_BAND)


# --------------------------------------------------------------------------
# zero padding and FFT
# --------------------------------------------------------------------------


def test_padded_length_and_bin_width():
    assert padded_length(300) == 4096
    spec = fft_magnitude(zero_pad(TimeSeries(np.zeros(300), FS), padded_length(300)))
    assert spec.bin_width == pytest.approx(15 / 4096)
    assert float(spec.bin_width) == pytest.approx(0.003662, abs=5e-7)
    assert spec.magnitudes.shape == (2049,)


def test_zero_pad_identity_and_errors():
    x = TimeSeries(np.arange(5.0), FS)
    assert zero_pad(x, 5) is x
    assert zero_pad(x, 8).samples.tolist() == [0, 1, 2, 3, 4, 0, 0, 0]
    with pytest.raises(ValueError):
        zero_pad(x, 4)


def test_padding_keeps_in_bin_peak():
    n = 300
    k = 40  # exactly on a pre-pad bin
    x = np.sin(2 * np.pi * k * np.arange(n) / n)
    before = int(np.argmax(np.abs(naive_dft(x))[: n // 2 + 1]))
    spec = fft_magnitude(zero_pad(TimeSeries(x, FS), padded_length(n)))
    after_hz = np.argmax(spec.magnitudes) * FS / spec.padded_length
    assert before == k
    assert abs(after_hz - k * FS / n) <= FS / n


def test_all_zero_series():
    assert np.all(fft_magnitude(TimeSeries(np.zeros(16), FS)).magnitudes == 0)


def test_impulse_is_flat():
    x = np.zeros(32)
    x[0] = 1.0
    assert np.allclose(fft_magnitude(TimeSeries(x, FS)).magnitudes, 1.0)


def test_naive_dft_oracle_64():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(64)
    ref = np.abs(naive_dft(x))[:33]
    got = fft_magnitude(TimeSeries(x, FS)).magnitudes
    assert np.max(np.abs(got - ref)) <= 1e-9 * np.max(ref)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(2, 257), elements=st.floats(-1e3, 1e3)))
def test_parseval(x):
    n = x.size
    m = fft_magnitude(TimeSeries(x, FS)).magnitudes
    # rebuild the two-sided energy from the one-sided half
    weights = np.full(m.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    assert np.sum(weights * m**2) / n == pytest.approx(np.sum(x**2), rel=1e-9, abs=1e-6)


def test_bins_map_to_frequency():
    spec = Spectrum(np.zeros(2049), FS, 4096)
    assert spec.frequencies[546] == pytest.approx(546 * 15 / 4096)
    bins = spec.band_bins(HR_BAND)
    assert spec.frequencies[bins[0]] >= 1.67 > spec.frequencies[bins[0] - 1]
    assert spec.frequencies[bins[-1]] <= 2.67 < spec.frequencies[bins[-1] + 1]


def test_spectrum_csv(tmp_path):
    spec = fft_magnitude(TimeSeries(np.arange(8.0), 8.0))
    spec.to_csv(tmp_path / "s.csv")
    rows = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
    assert rows.shape == (5, 2)
    assert rows[:, 0].tolist() == [0, 1, 2, 3, 4]


# --------------------------------------------------------------------------
# dominant frequency
# --------------------------------------------------------------------------


def _pipeline_spectrum(x, band):
    y = bandpass(TimeSeries(x, FS), band)
    return fft_magnitude(zero_pad(y, padded_length(len(y))))


def test_pure_sinusoid_peak():
    spec = _pipeline_spectrum(tone(2.0, 20), HR_BAND)
    assert dominant_frequency(spec, HR_BAND).frequency == pytest.approx(2.0, abs=float(spec.bin_width))


def test_out_of_band_component_ignored():
    x = tone(0.4, 30) + tone(2.0, 30, amp=0.5)
    spec = _pipeline_spectrum(x, RR_BAND)
    assert dominant_frequency(spec, RR_BAND).frequency == pytest.approx(0.4, abs=float(spec.bin_width))


def test_noise_prominence_stays_low():
    # seeded distribution: the in-band maximum of filtered white noise sits a
    # few times above the in-band mean, mostly under the 3.0 threshold
    rng = np.random.default_rng(2024)
    prom = np.array([
        dominant_frequency(_pipeline_spectrum(rng.standard_normal(300), HR_BAND), HR_BAND).prominence
        for _ in range(100)
    ])
    assert np.median(prom) < 3.0
    assert np.mean(prom < 3.0) >= 0.9
    assert prom.min() > 1.0


def test_tie_goes_to_lower_frequency():
    mags = np.zeros(2049)
    spec = Spectrum(mags, FS, 4096)
    bins = spec.band_bins(HR_BAND)
    mags[bins[10]] = mags[bins[20]] = 1.0
    assert dominant_frequency(spec, HR_BAND).bin == bins[10]


def test_all_zero_band_has_zero_prominence():
    peak = dominant_frequency(Spectrum(np.zeros(2049), FS, 4096), HR_BAND)
    assert peak.prominence == 0.0


def test_band_with_no_bins():
    spec = Spectrum(np.zeros(5), FS, 8)  # bins 1.875 Hz apart
    with pytest.raises(BandResolutionError):
        dominant_frequency(spec, FrequencyBand(2.0, 3.5))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3))
def test_peak_is_scale_invariant(seed, c):
    x = np.random.default_rng(seed).standard_normal(300)
    a = dominant_frequency(_pipeline_spectrum(x, HR_BAND), HR_BAND)
    b = dominant_frequency(_pipeline_spectrum(c * x, HR_BAND), HR_BAND)
    assert a.bin == b.bin
    assert a.prominence == pytest.approx(b.prominence, rel=1e-9)
