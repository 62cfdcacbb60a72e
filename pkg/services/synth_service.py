"""
Synthetic vessel-like recordings: harmonic propulsion lines, propeller AM,
broadband cavitation and ambient noise (1/f, or white for the
noise-only class) mixed at a drawn SNR
"""

from typing import Dict, Any, Optional, Sequence, Tuple, Union
import numpy as np
from scipy import signal as sps

from models.audio_models import AudioClip, VesselClassProfile, AMBIENT_WHITE
from utils.error_handlers import DomainError
from utils.logging_config import get_logger

logger = get_logger('synth')

PEAK_LEVEL = 0.9
CAVITATION_FILTER_ORDER = 4

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


def _uniform(rng: np.random.Generator, interval: Tuple[float, float]) -> float:
    lo, hi = interval
    return float(lo) if hi <= lo else float(rng.uniform(lo, hi))


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def harmonic_series(f0: float, num_harmonics: int, decay: float, t: np.ndarray,
                    sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    """Sum of decaying harmonics with random phases; harmonics at or above Nyquist are skipped"""
    out = np.zeros_like(t)
    for h in range(1, num_harmonics + 1):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        if h * f0 >= sample_rate / 2.0:
            continue
        out += decay ** (h - 1) * np.sin(2.0 * np.pi * h * f0 * t + phase)
    return out


def white_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    white = rng.standard_normal(n)
    rms = _rms(white)
    return white / rms if rms > 0 else white


def band_noise(n: int, band: Optional[Tuple[float, float]], sample_rate: int,
               rng: np.random.Generator) -> np.ndarray:
    """Zero-phase Butterworth band-passed white noise, unit RMS; no band means the full spectrum"""
    if band is None:
        return white_noise(n, rng)
    white = rng.standard_normal(n)
    lo, hi = band
    nyquist = sample_rate / 2.0
    lo = max(lo, 1.0)
    hi = min(hi, 0.999 * nyquist)
    sos = sps.butter(CAVITATION_FILTER_ORDER, [lo, hi], btype='bandpass', fs=sample_rate, output='sos')
    shaped = sps.sosfiltfilt(sos, white)
    rms = _rms(shaped)
    return shaped / rms if rms > 0 else shaped


def pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """1/f power spectrum noise shaped in the frequency domain, unit RMS"""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    bins = np.arange(spectrum.shape[0], dtype=np.float64)
    bins[0] = 1.0
    spectrum /= np.sqrt(bins)
    spectrum[0] = 0.0
    shaped = np.fft.irfft(spectrum, n=n)
    rms = _rms(shaped)
    return shaped / rms if rms > 0 else shaped


def synth_components(profile: VesselClassProfile, duration: float, sample_rate: int, seed: SeedLike,
                     f0: Optional[float] = None, snr: Optional[float] = None
                     ) -> Tuple[np.ndarray, np.ndarray, Dict[str, Any]]:
    """
    Signal and noise parts of one recording, before peak normalization.

    The noise is scaled so 10*log10(P_signal / P_noise) equals the drawn SNR.
    Returns (signal, noise, params) where params records every random draw.
    """
    if duration <= 0:
        raise DomainError(f"Duration must be positive, got {duration}")
    profile.validate(sample_rate)

    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n, dtype=np.float64) / sample_rate

    f0 = _uniform(rng, profile.f0_range) if f0 is None else float(f0)
    am_rate = _uniform(rng, profile.am_rate_range)
    drawn_snr = _uniform(rng, profile.snr_range)
    snr = drawn_snr if snr is None else float(snr)

    if profile.num_harmonics > 0:
        tonal = harmonic_series(f0, profile.num_harmonics, profile.harmonic_decay, t, sample_rate, rng)
        tonal /= _rms(tonal)
        tonal *= 1.0 + profile.am_depth * np.sin(2.0 * np.pi * am_rate * t)
    else:
        tonal = np.zeros(n)

    cavitation = profile.broadband_level * band_noise(n, profile.broadband_band, sample_rate, rng)
    signal = tonal + cavitation

    noise = white_noise(n, rng) if profile.ambient_noise == AMBIENT_WHITE else pink_noise(n, rng)
    noise *= _rms(signal) / (10.0 ** (snr / 20.0))

    params = {
        'f0': f0 if profile.num_harmonics > 0 else None,
        'am_rate': am_rate if profile.num_harmonics > 0 else None,
        'snr': snr
    }
    return signal, noise, params


def mix_components(signal: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Sum and scale so the absolute peak is PEAK_LEVEL"""
    mixture = signal + noise
    peak = float(np.max(np.abs(mixture)))
    if peak > 0:
        mixture *= PEAK_LEVEL / peak
    return mixture


def synth_vessel(profile: VesselClassProfile, duration: float, sample_rate: int, seed: SeedLike,
                 f0: Optional[float] = None, snr: Optional[float] = None, source: str = '') -> AudioClip:
    """Mixed, peak-normalized recording for one class profile"""
    signal, noise, params = synth_components(profile, duration, sample_rate, seed, f0=f0, snr=snr)
    clip = AudioClip(samples=mix_components(signal, noise), sample_rate=sample_rate, label=profile.class_id,
                     source=source or f"synth:{profile.name}")
    logger.debug(
        f"VESSEL_SYNTHESIZED - Class: {profile.name} - F0: {params['f0']} - "
        f"SNR: {params['snr']:.2f} dB - Samples: {clip.num_samples}"
    )
    return clip


def measured_snr(signal: np.ndarray, noise: np.ndarray) -> float:
    return float(10.0 * np.log10(np.mean(signal ** 2) / np.mean(noise ** 2)))
