import numpy as np
import pytest

from models.audio_models import AudioClip
from models.feature_models import FramingConfig, CompressionConfig, MfccConfig, EnergyMap
from services.feature_service import (
    analytic_envelope, frame_energy, log_compress, normalize_resize, cochleagram_energy,
    compute_cochleagram, mel_frequency, mel_center_frequencies, mel_filterbank_energies,
    cepstral_coefficients, temporal_deltas, mfcc_matrix, compute_mfcc_image, fft_size
)
from services.filterbank_service import erb_rate
from utils.error_handlers import DomainError, SampleRateMismatchError, ConfigError


def test_envelope_of_pure_cosine_is_flat():
    n = np.arange(1000)
    envelope = analytic_envelope(np.cos(2 * np.pi * 10 * n / 1000))
    np.testing.assert_allclose(envelope, 1.0, atol=1e-10)


def test_envelope_tracks_slow_modulation():
    n = np.arange(4000)
    modulation = 1.0 + 0.5 * np.cos(2 * np.pi * 4 * n / 4000)
    envelope = analytic_envelope(modulation * np.cos(2 * np.pi * 400 * n / 4000))
    np.testing.assert_allclose(envelope, modulation, atol=1e-8)


def test_envelope_works_row_wise_and_rejects_empty():
    rows = np.vstack([np.cos(2 * np.pi * 5 * np.arange(200) / 200)] * 3)
    assert analytic_envelope(rows).shape == (3, 200)
    with pytest.raises(DomainError):
        analytic_envelope(np.zeros(0))


def test_frame_energy_of_constant_rows():
    framing = FramingConfig()
    energy = frame_energy(np.ones((2, 16000)), framing, 16000)
    assert energy.num_frames == (16000 - 400) // 160 + 1
    assert energy.frame_rate == pytest.approx(100.0)
    np.testing.assert_allclose(energy.values, 1.0, atol=1e-12)


def test_frame_energy_needs_a_full_window():
    with pytest.raises(DomainError):
        frame_energy(np.ones((1, 100)), FramingConfig(), 16000)


def test_framing_shorter_than_one_sample():
    framing = FramingConfig(window_len=2e-5, hop=2e-5)
    with pytest.raises(ConfigError):
        framing.validate(16000)
    with pytest.raises(ConfigError):
        frame_energy(np.ones((1, 100)), framing, 16000)
    assert framing.validate(100000).hop_samples(100000) == 2


def test_log_compress_values():
    compressed = log_compress(EnergyMap(values=np.array([[0.0, 1.0]])), CompressionConfig(alpha=1000.0))
    np.testing.assert_allclose(compressed.values, [[0.0, np.log10(1001.0)]])
    with pytest.raises(DomainError):
        log_compress(np.array([[-1.0]]), CompressionConfig())


def test_normalize_resize_keeps_range_and_corners():
    values = np.arange(12, dtype=float).reshape(3, 4)
    resized = normalize_resize(values, 7, 9)
    assert resized.shape == (7, 9)
    assert resized[0, 0] == pytest.approx(0.0)
    assert resized[-1, -1] == pytest.approx(1.0)
    assert resized.min() >= 0.0 and resized.max() <= 1.0


def test_normalize_resize_constant_map_is_zero():
    np.testing.assert_array_equal(normalize_resize(np.full((4, 5), 3.0), 8, 8), 0.0)


def test_tonotopy_of_probe_tones(default_bank, tone):
    fcs = default_bank.center_frequencies
    for freq in np.geomspace(100.0, 6000.0, 10):
        energy = cochleagram_energy(tone(freq), default_bank, FramingConfig(), CompressionConfig())
        row = int(np.argmax(energy.values[:, 10:].mean(axis=1)))
        nearest_hz = int(np.argmin(np.abs(fcs - freq)))
        nearest_erb = int(np.argmin(np.abs(erb_rate(fcs) - erb_rate(freq))))
        assert row in (nearest_hz, nearest_erb), freq


def test_cochleagram_image_layout(small_bank, tone):
    image = compute_cochleagram(tone(1000.0), small_bank, FramingConfig(), CompressionConfig(), (32, 48))
    assert image.pixels.shape == (32, 48, 3)
    assert image.frontend == 'gammatone'
    assert image.pixels.min() >= 0.0 and image.pixels.max() <= 1.0
    np.testing.assert_array_equal(image.pixels[:, :, 0], image.pixels[:, :, 2])
    assert image.as_chw().shape == (3, 32, 48)


def test_silence_cochleagram_is_black(small_bank):
    clip = AudioClip(samples=np.zeros(8000), sample_rate=16000)
    image = compute_cochleagram(clip, small_bank, FramingConfig(), CompressionConfig(), (32, 32))
    np.testing.assert_array_equal(image.pixels, 0.0)


def test_cochleagram_rejects_other_sample_rates(small_bank):
    clip = AudioClip(samples=np.zeros(4410), sample_rate=44100)
    with pytest.raises(SampleRateMismatchError):
        compute_cochleagram(clip, small_bank, FramingConfig(), CompressionConfig())


def test_cochleagram_hash_changes_with_alpha(small_bank, tone):
    clip = tone(500.0)
    a = compute_cochleagram(clip, small_bank, FramingConfig(), CompressionConfig(alpha=10.0), (32, 32))
    b = compute_cochleagram(clip, small_bank, FramingConfig(), CompressionConfig(alpha=100.0), (32, 32))
    assert a.config_hash != b.config_hash


def test_mel_centres_follow_htk_scale():
    centres = mel_center_frequencies(64, 50.0, 8000.0)
    expected_mels = np.linspace(mel_frequency(50.0), mel_frequency(8000.0), 66)[1:-1]
    np.testing.assert_allclose(mel_frequency(centres), expected_mels, rtol=1e-6)


def test_fft_size_is_next_power_of_two():
    assert fft_size(400) == 512
    assert fft_size(512) == 512


def test_mel_filter_peaks_at_its_centre(tone):
    centres = mel_center_frequencies(64, 50.0, 8000.0)
    clip = tone(float(centres[50]))
    energies = mel_filterbank_energies(clip, FramingConfig(), 64, 50.0, 8000.0)
    assert int(np.argmax(energies.values.mean(axis=1))) == 50


def test_mel_energies_reject_f_max_above_nyquist(tone):
    with pytest.raises(DomainError):
        mel_filterbank_energies(tone(440.0), FramingConfig(), 64, 50.0, 9000.0)


def test_cepstrum_of_flat_spectrum_is_c0_only():
    coefficients = cepstral_coefficients(np.full((64, 5), 2.0), 20)
    assert coefficients.shape == (20, 5)
    np.testing.assert_allclose(coefficients[0], 2.0 * np.sqrt(64))
    np.testing.assert_allclose(coefficients[1:], 0.0, atol=1e-12)


def test_deltas_of_linear_ramp():
    ramp = np.tile(np.arange(6, dtype=float) * 0.5, (3, 1))
    np.testing.assert_allclose(temporal_deltas(ramp), 0.5)
    with pytest.raises(DomainError):
        temporal_deltas(np.zeros((3, 2)))


def test_mfcc_matrix_stacks_three_blocks(tone):
    matrix = mfcc_matrix(tone(300.0), FramingConfig(), MfccConfig())
    assert matrix.shape[0] == 60


def test_mfcc_image(tone):
    image = compute_mfcc_image(tone(300.0), FramingConfig(), MfccConfig(), (32, 32))
    assert image.frontend == 'mfcc'
    assert image.pixels.shape == (32, 32, 3)
    assert image.pixels.min() >= 0.0 and image.pixels.max() <= 1.0
