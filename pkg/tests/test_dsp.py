import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inmsrl import dsp

from oracles import direct_dft

SR = 44100


def sine(freq, seconds=0.5, amp=0.8, sr=SR):
    t = np.arange(int(seconds * sr)) / sr
    return amp * np.sin(2 * np.pi * freq * t)


# -----------------------------
# stft
# -----------------------------

def test_stft_zero_input_gives_zero_spectrogram():
    s = dsp.stft(np.zeros(SR // 4), window=2048, hop=512)
    assert s.bins == 1025
    assert np.all(s.values == 0)


def test_stft_pure_sine_peaks_at_expected_bin():
    # oracle: direct DFT of the first Hann-windowed frame
    k = 8
    x = sine(k * SR / 2048)
    frame = x[:2048] * (0.5 - 0.5 * np.cos(2 * np.pi * np.arange(2048) / 2048))
    oracle_bin = int(np.argmax(np.abs(direct_dft(frame))))
    assert oracle_bin == k

    s = dsp.stft(x, window=2048, hop=512)
    assert np.all(np.argmax(s.magnitude(), axis=1) == k)


def test_stft_constant_input_peaks_at_dc():
    x = np.ones(SR // 4)
    frame = x[:2048] * (0.5 - 0.5 * np.cos(2 * np.pi * np.arange(2048) / 2048))
    assert int(np.argmax(np.abs(direct_dft(frame)))) == 0

    s = dsp.stft(x, window=2048, hop=512)
    assert np.all(np.argmax(s.magnitude(), axis=1) == 0)


def test_stft_matches_direct_dft_per_frame():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 4096)
    s = dsp.stft(x, window=1024, hop=256)
    win = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(1024) / 1024)
    for m in (0, 3, s.frames - 1):
        frame = x[m * 256 : m * 256 + 1024] * win
        np.testing.assert_allclose(s.values[m], direct_dft(frame), atol=1e-8)


def test_stft_rejects_short_input_and_bad_geometry():
    with pytest.raises(ValueError):
        dsp.stft(np.zeros(100), window=2048, hop=512)
    with pytest.raises(ValueError):
        dsp.stft(np.zeros(SR), window=1000, hop=512)  # not a power of two
    with pytest.raises(ValueError):
        dsp.stft(np.zeros(SR), window=1024, hop=2048)  # hop > window


def test_stft_frame_count_floor_rule():
    x = np.zeros(2048 + 512 * 3 + 100)  # partial tail frame is dropped
    assert dsp.stft(x, window=2048, hop=512).frames == 4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_stft_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, 8000)
    y = rng.uniform(-1, 1, 8000)
    lhs = dsp.stft(a * x + b * y, window=1024, hop=512).values
    rhs = a * dsp.stft(x, window=1024, hop=512).values + b * dsp.stft(
        y, window=1024, hop=512
    ).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * max(1.0, abs(a) + abs(b)))


# -----------------------------
# istft
# -----------------------------

def _interior_rms_rel(x, y, window):
    lo, hi = window, min(len(x), len(y)) - window
    diff = x[lo:hi] - y[lo:hi]
    return np.sqrt(np.mean(diff**2)) / np.sqrt(np.mean(x[lo:hi] ** 2))


def test_istft_round_trip_interior():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, SR)
    for window, hop in [(2048, 512), (2048, 1024), (1024, 256)]:
        y = dsp.istft(dsp.stft(x, window=window, hop=hop)).samples
        assert _interior_rms_rel(x, y, window) < 1e-6


def test_istft_zero_spectrogram_is_zero():
    s = dsp.stft(np.zeros(SR // 4))
    w = dsp.istft(s)
    assert np.all(w.samples == 0)


def test_istft_half_magnitude_halves_amplitude():
    x = sine(440.0, seconds=1.0, amp=0.8)
    s = dsp.stft(x, window=2048, hop=512)
    halved = dsp.ComplexSpectrogram(0.5 * s.values, window=2048, hop=512)
    y = dsp.istft(halved).samples
    interior = slice(2048, len(y) - 2048)
    peak = np.max(np.abs(y[interior]))
    assert abs(peak - 0.4) / 0.4 < 0.01


def test_istft_rejects_non_cola_hop():
    s = dsp.stft(np.zeros(SR // 4), window=2048, hop=512)
    bad = dsp.ComplexSpectrogram(s.values, window=2048, hop=2048)
    with pytest.raises(ValueError):
        dsp.istft(bad)


# -----------------------------
# log mel
# -----------------------------

def test_log_mel_zero_input_hits_floor():
    out = dsp.log_mel(np.zeros((7, 1025)), n_mels=32)
    np.testing.assert_allclose(out, np.log(1e-6))


def test_log_mel_impulse_lights_at_most_two_adjacent_bands():
    # oracle: per-bin filterbank support from an independent construction of
    # the triangles (each bin sits between two adjacent band centers)
    n_mels, n_bins = 40, 1025
    fb = dsp.mel_filterbank(n_mels, n_bins, SR)
    support_per_bin = (fb > 0).sum(axis=0)
    assert support_per_bin.max() <= 2

    for b in (3, 100, 700):
        mag = np.zeros((5, n_bins))
        mag[:, b] = 1.0
        out = dsp.log_mel(mag, n_mels=n_mels)
        above = (out[0] > np.log(1e-6) + 1e-9).sum()
        assert above <= 2
        bands = np.where(out[0] > np.log(1e-6) + 1e-9)[0]
        if len(bands) == 2:
            assert bands[1] - bands[0] == 1


def test_log_mel_monotone_in_magnitude():
    rng = np.random.default_rng(2)
    mag = rng.uniform(0.01, 1.0, (9, 513))
    a = dsp.log_mel(mag, n_mels=24)
    b = dsp.log_mel(2 * mag, n_mels=24)
    assert np.all(b > a)


def test_log_mel_rejects_too_many_bands():
    with pytest.raises(ValueError):
        dsp.log_mel(np.zeros((3, 16)), n_mels=17)


# -----------------------------
# hadamard separation
# -----------------------------

def test_hadamard_identity_zero_and_half_masks():
    rng = np.random.default_rng(3)
    mix = rng.uniform(0, 2, (11, 33))
    np.testing.assert_array_equal(dsp.hadamard_separate(mix, np.ones_like(mix)), mix)
    assert np.all(dsp.hadamard_separate(mix, np.zeros_like(mix)) == 0)
    np.testing.assert_allclose(
        dsp.hadamard_separate(mix, np.full_like(mix, 0.5)), 0.5 * mix
    )


def test_hadamard_never_amplifies():
    rng = np.random.default_rng(4)
    mix = rng.uniform(0, 5, (20, 40))
    mask = rng.uniform(0, 1, (20, 40))
    assert np.all(dsp.hadamard_separate(mix, mask) <= mix)


def test_hadamard_rejects_bad_inputs():
    with pytest.raises(ValueError):
        dsp.hadamard_separate(np.zeros((3, 4)), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        dsp.hadamard_separate(np.zeros((3, 4)), np.full((3, 4), 1.5))


# -----------------------------
# global SDR
# -----------------------------

def test_sdr_identity_is_infinite():
    x = sine(220.0)
    assert dsp.global_sdr(x, x) == float("inf")


def test_sdr_zero_estimate_is_zero_db():
    x = sine(220.0)
    assert abs(dsp.global_sdr(np.zeros_like(x), x)) < 1e-9


def test_sdr_twenty_db_case():
    # noise with power ref_power / 100 -> 10 log10(100) = 20 dB
    rng = np.random.default_rng(5)
    ref = sine(330.0, seconds=2.0)
    noise = rng.standard_normal(len(ref))
    noise *= np.sqrt(np.sum(ref**2) / 100.0 / np.sum(noise**2))
    assert abs(dsp.global_sdr(ref + noise, ref) - 20.0) < 0.01


def test_sdr_decreases_with_noise_power():
    rng = np.random.default_rng(6)
    ref = sine(110.0)
    noise = rng.standard_normal(len(ref))
    values = [dsp.global_sdr(ref + g * noise, ref) for g in (0.001, 0.01, 0.05, 0.2, 1.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_sdr_rejects_zero_reference():
    with pytest.raises(ValueError):
        dsp.global_sdr(np.zeros(100), np.zeros(100))


# -----------------------------
# wav io
# -----------------------------

def test_wav_round_trip_and_segment_reads(tmp_path):
    x = dsp.Waveform(sine(440.0, seconds=0.3))
    path = tmp_path / "t.wav"
    dsp.save_wav(path, x)
    back = dsp.load_wav(path, expect_rate=SR)
    assert len(back) == len(x)
    # half an LSB of rounding plus the 32767/32768 encode scale
    assert np.max(np.abs(back.samples - x.samples)) < 1.0 / 16000

    seg = dsp.load_wav_segment(path, 1000, 2000)
    np.testing.assert_allclose(seg, back.samples[1000:3000])
    assert dsp.wav_num_samples(path) == len(x)
    with pytest.raises(ValueError):
        dsp.load_wav_segment(path, len(x) - 10, 100)


def test_stereo_wav_is_averaged(tmp_path):
    from scipy.io import wavfile

    left = sine(440.0, seconds=0.1)
    right = sine(880.0, seconds=0.1)
    stereo = np.stack([left, right], axis=1).astype(np.float32)
    path = tmp_path / "st.wav"
    wavfile.write(path, SR, stereo)
    mono = dsp.load_wav(path)
    np.testing.assert_allclose(mono.samples, (left + right) / 2, atol=1e-6)
