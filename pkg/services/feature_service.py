"""
Feature extraction: gammatone cochleagram and the MFCC baseline front-end
"""

import json
import hashlib
from typing import Tuple, Union
import numpy as np
import librosa
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as sps
from scipy import ndimage
from scipy.fft import dct

from models.audio_models import AudioClip
from models.filterbank_models import Filterbank
from models.feature_models import (
    FramingConfig, CompressionConfig, MfccConfig, EnergyMap, FeatureImage,
    FRONTEND_GAMMATONE, FRONTEND_MFCC
)
from services.filterbank_service import apply_filterbank
from utils.error_handlers import DomainError, SampleRateMismatchError
from utils.logging_config import get_logger

logger = get_logger('features')

DEFAULT_IMAGE_SIZE = (224, 224)
IMAGE_CHANNELS = 3


def _provenance_hash(**sections) -> str:
    return hashlib.md5(json.dumps(sections, sort_keys=True, default=list).encode()).hexdigest()


def analytic_envelope(channel: np.ndarray) -> np.ndarray:
    """
    Magnitude of the analytic signal along the last axis.

    scipy's hilbert builds the analytic signal with the DFT method: negative
    bins zeroed, positive bins doubled, DC and Nyquist kept.
    """
    x = np.asarray(channel, dtype=np.float64)
    if x.size == 0 or x.shape[-1] == 0:
        raise DomainError("Cannot take the envelope of an empty channel")
    return np.abs(sps.hilbert(x, axis=-1))


def _normalized_window(framing: FramingConfig, length: int) -> np.ndarray:
    window = sps.get_window(framing.window_shape, length, fftbins=True)
    return window / window.sum()


def frame_energy(envelope_rows: np.ndarray, framing: FramingConfig, sample_rate: int) -> EnergyMap:
    """Window-weighted mean of each envelope row over every frame"""
    framing.validate()
    rows = np.atleast_2d(np.asarray(envelope_rows, dtype=np.float64))
    win = framing.window_samples(sample_rate)
    hop = framing.hop_samples(sample_rate)
    if rows.shape[1] < win:
        raise DomainError(
            f"Rows of {rows.shape[1]} samples are shorter than one {win}-sample window",
            details={'length': rows.shape[1], 'window': win}
        )
    frames = sliding_window_view(rows, win, axis=1)[:, ::hop, :]
    values = frames @ _normalized_window(framing, win)
    return EnergyMap(values=values, frame_rate=sample_rate / float(hop))


def log_compress(energy: Union[EnergyMap, np.ndarray], config: CompressionConfig) -> EnergyMap:
    """Y = log10(1 + alpha * E)"""
    config.validate()
    if isinstance(energy, EnergyMap):
        values, frame_rate = energy.values, energy.frame_rate
    else:
        values, frame_rate = np.asarray(energy, dtype=np.float64), 100.0
    if np.any(values < 0):
        raise DomainError("Energy map contains negative entries", details={'min': float(values.min())})
    return EnergyMap(values=np.log1p(config.alpha * values) / np.log(10.0), frame_rate=frame_rate)


def normalize_resize(compressed: Union[EnergyMap, np.ndarray], height: int, width: int) -> np.ndarray:
    """Min-max normalize to [0, 1], then bilinear resize on a corner-aligned grid"""
    values = compressed.values if isinstance(compressed, EnergyMap) else np.asarray(compressed, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise DomainError(f"Expected a non-empty 2-D map, got shape {values.shape}")
    if height < 1 or width < 1:
        raise DomainError(f"Output size must be positive, got {height}x{width}")

    lo, hi = values.min(), values.max()
    if hi > lo:
        unit = (values - lo) / (hi - lo)
    else:
        unit = np.zeros_like(values)

    rows = np.linspace(0.0, values.shape[0] - 1, height)
    cols = np.linspace(0.0, values.shape[1] - 1, width)
    grid_r, grid_c = np.meshgrid(rows, cols, indexing='ij')
    resized = ndimage.map_coordinates(unit, [grid_r, grid_c], order=1, mode='nearest')
    return np.clip(resized, 0.0, 1.0)


def _to_image(plane: np.ndarray) -> np.ndarray:
    return np.repeat(plane[:, :, np.newaxis], IMAGE_CHANNELS, axis=2)


def _check_rate(clip: AudioClip, expected: int):
    if clip.sample_rate != expected:
        raise SampleRateMismatchError(
            f"Clip '{clip.source}' is sampled at {clip.sample_rate} Hz but the front-end expects "
            f"{expected} Hz; resample it first",
            details={'clip_rate': clip.sample_rate, 'expected_rate': expected}
        )


def cochleagram_energy(clip: AudioClip, bank: Filterbank, framing: FramingConfig,
                       compression: CompressionConfig) -> EnergyMap:
    """Compressed channel energies before normalization and resize"""
    _check_rate(clip, bank.sample_rate)
    bands = apply_filterbank(clip.samples, bank)
    envelopes = analytic_envelope(bands)
    energy = frame_energy(envelopes, framing, bank.sample_rate)
    return log_compress(energy, compression)


def compute_cochleagram(clip: AudioClip, bank: Filterbank, framing: FramingConfig,
                        compression: CompressionConfig,
                        out_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE,
                        config_hash: str = None) -> FeatureImage:
    compressed = cochleagram_energy(clip, bank, framing, compression)
    plane = normalize_resize(compressed, out_size[0], out_size[1])
    config_hash = config_hash or _provenance_hash(
        filterbank=bank.config.to_dict(), framing=framing.to_dict(),
        compression=compression.to_dict(), out_size=list(out_size)
    )
    logger.debug(
        f"COCHLEAGRAM_COMPUTED - Source: {clip.source} - Channels: {compressed.num_channels} - "
        f"Frames: {compressed.num_frames} - Size: {out_size[0]}x{out_size[1]}"
    )
    return FeatureImage(pixels=_to_image(plane), frontend=FRONTEND_GAMMATONE,
                        config_hash=config_hash, source_file=clip.source or None)


def mel_frequency(f):
    """HTK mel scale: 2595 log10(1 + f / 700)"""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def fft_size(window_samples: int) -> int:
    return int(2 ** np.ceil(np.log2(max(window_samples, 2))))


def mel_center_frequencies(num_mel: int, f_min: float, f_max: float) -> np.ndarray:
    """Centre of each triangular filter, uniformly spaced in mel"""
    return librosa.mel_frequencies(n_mels=num_mel + 2, fmin=f_min, fmax=f_max, htk=True)[1:-1]


def mel_filterbank_energies(clip: AudioClip, framing: FramingConfig, num_mel: int,
                            f_min: float, f_max: float) -> EnergyMap:
    """Triangular mel-weighted magnitude spectrum of every Hann-windowed frame"""
    framing.validate()
    if num_mel < 2:
        raise DomainError(f"num_mel must be at least 2, got {num_mel}")
    if f_max > clip.sample_rate / 2:
        raise DomainError(f"f_max={f_max} Hz exceeds Nyquist for {clip.sample_rate} Hz audio")
    if not 0 <= f_min < f_max:
        raise DomainError(f"Require 0 <= f_min < f_max, got {f_min}, {f_max}")

    win = framing.window_samples(clip.sample_rate)
    hop = framing.hop_samples(clip.sample_rate)
    x = np.asarray(clip.samples, dtype=np.float64)
    if x.shape[0] < win:
        raise DomainError(f"Clip of {x.shape[0]} samples is shorter than one {win}-sample window")

    nfft = fft_size(win)
    window = sps.get_window(framing.window_shape, win, fftbins=True)
    frames = sliding_window_view(x, win)[::hop] * window
    magnitude = np.abs(np.fft.rfft(frames, n=nfft, axis=1))
    weights = librosa.filters.mel(sr=clip.sample_rate, n_fft=nfft, n_mels=num_mel,
                                  fmin=f_min, fmax=f_max, htk=True, norm=None)
    values = weights.astype(np.float64) @ magnitude.T
    return EnergyMap(values=values, frame_rate=clip.sample_rate / float(hop))


def cepstral_coefficients(log_energies: np.ndarray, num_coefficients: int) -> np.ndarray:
    """Orthonormal DCT-II along frequency, first num_coefficients rows"""
    return dct(log_energies, type=2, norm='ortho', axis=0)[:num_coefficients]


def temporal_deltas(coefficients: np.ndarray) -> np.ndarray:
    """Central differences along time, one-sided at the edges"""
    if coefficients.shape[1] < 3:
        raise DomainError(f"Deltas need at least 3 frames, got {coefficients.shape[1]}")
    return np.gradient(coefficients, axis=1)


def mfcc_matrix(clip: AudioClip, framing: FramingConfig, config: MfccConfig) -> np.ndarray:
    """Static coefficients stacked with first and second differences"""
    config.validate()
    energies = mel_filterbank_energies(clip, framing, config.num_mel, config.f_min, config.f_max)
    if energies.num_frames < 3:
        raise DomainError(f"MFCC deltas need at least 3 frames, got {energies.num_frames}")
    log_mel = np.log(np.maximum(energies.values, config.log_floor))
    static = cepstral_coefficients(log_mel, config.num_coefficients)
    delta = temporal_deltas(static)
    delta2 = temporal_deltas(delta)
    return np.vstack([static, delta, delta2])


def compute_mfcc_image(clip: AudioClip, framing: FramingConfig, config: MfccConfig = None,
                       out_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE,
                       config_hash: str = None) -> FeatureImage:
    config = config or MfccConfig()
    features = mfcc_matrix(clip, framing, config)
    plane = normalize_resize(features, out_size[0], out_size[1])
    config_hash = config_hash or _provenance_hash(
        framing=framing.to_dict(), mfcc=config.to_dict(), out_size=list(out_size)
    )
    logger.debug(
        f"MFCC_COMPUTED - Source: {clip.source} - Rows: {features.shape[0]} - "
        f"Frames: {features.shape[1]} - Size: {out_size[0]}x{out_size[1]}"
    )
    return FeatureImage(pixels=_to_image(plane), frontend=FRONTEND_MFCC,
                        config_hash=config_hash, source_file=clip.source or None)
