"""
Audio ingestion: WAV read/write, polyphase resampling, fixed-window segmentation
"""

import os
import struct
from math import gcd
from typing import List
import numpy as np
from scipy import signal as sps
from scipy.io import wavfile

from models.audio_models import AudioClip
from utils.error_handlers import (
    DomainError, MalformedWavError, UnsupportedCodecError, EmptyAudioError, MissingAudioError
)
from utils.logging_config import get_logger

logger = get_logger('audio')

PCM16_SCALE = 32768.0
RESAMPLE_KAISER_BETA = 8.6
RESAMPLE_HALF_LENGTH = 32

# scipy reports codec problems with these phrases; anything else is a damaged file
_CODEC_MESSAGES = ('Unknown wave file format', 'Unsupported bit depth', 'not understood')


def _check_riff_header(path: str):
    with open(path, 'rb') as fh:
        header = fh.read(12)
    if len(header) < 12 or header[0:4] not in (b'RIFF', b'RIFX') or header[8:12] != b'WAVE':
        raise MalformedWavError(f"{path} does not start with a RIFF/WAVE header", details={'path': path})


def read_wav(path: str, label: int = None) -> AudioClip:
    """Parse PCM16 or float32 WAV, mixing channels down to mono"""
    if not os.path.isfile(path):
        raise MissingAudioError(f"Audio file not found: {path}", details={'path': path})
    _check_riff_header(path)

    try:
        sample_rate, data = wavfile.read(path)
    except ValueError as e:
        if any(phrase in str(e) for phrase in _CODEC_MESSAGES):
            raise UnsupportedCodecError(f"{path}: {e}", details={'path': path})
        raise MalformedWavError(f"{path}: {e}", details={'path': path})
    except (EOFError, struct.error, IndexError) as e:
        raise MalformedWavError(f"{path}: truncated or damaged file ({e})", details={'path': path})

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = _checked_float_samples(data.astype(np.float64), path)
    else:
        raise UnsupportedCodecError(
            f"{path}: only PCM 16-bit and float 32-bit are supported, got {data.dtype}",
            details={'path': path, 'dtype': str(data.dtype)}
        )

    if samples.shape[0] == 0:
        raise EmptyAudioError(f"{path} contains no audio frames", details={'path': path})
    if samples.ndim == 2:
        samples = samples.mean(axis=1)

    logger.debug(f"WAV_READ - Path: {path} - Rate: {sample_rate} - Frames: {samples.shape[0]}")
    return AudioClip(samples=samples, sample_rate=int(sample_rate), label=label, source=path)


def _checked_float_samples(samples: np.ndarray, path: str) -> np.ndarray:
    if not np.all(np.isfinite(samples)):
        raise MalformedWavError(f"{path} contains NaN or infinite samples", details={'path': path})
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak > 1.0:
        logger.warning(f"WAV_CLIPPED - Path: {path} - Peak: {peak:.4f} - Float samples clipped to [-1, 1]")
        samples = np.clip(samples, -1.0, 1.0)
    return samples


def write_wav(clip: AudioClip, path: str, float32: bool = False) -> str:
    """Write mono PCM16 (default) or float32"""
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    if float32:
        data = clip.samples.astype(np.float32)
    else:
        data = np.clip(np.round(clip.samples * PCM16_SCALE), -32768, 32767).astype(np.int16)
    wavfile.write(path, clip.sample_rate, data)
    return path


def resample(clip: AudioClip, target: int) -> AudioClip:
    """Windowed-sinc polyphase resampling; the clip itself when rates already match"""
    if target <= 0:
        raise DomainError(f"Target sample rate must be positive, got {target}")
    if clip.sample_rate == target:
        return clip

    divisor = gcd(int(clip.sample_rate), int(target))
    up, down = int(target) // divisor, int(clip.sample_rate) // divisor
    samples = sps.resample_poly(clip.samples, up, down, window=_kaiser_taps(up, down))
    logger.debug(f"RESAMPLED - Source: {clip.source} - From: {clip.sample_rate} - To: {target}")
    return clip.with_samples(samples, sample_rate=int(target))


def _kaiser_taps(up: int, down: int) -> np.ndarray:
    """Anti-aliasing low-pass prototype; resample_poly applies the gain of `up`"""
    max_rate = max(up, down)
    half = RESAMPLE_HALF_LENGTH * max_rate
    return sps.firwin(2 * half + 1, 1.0 / max_rate, window=('kaiser', RESAMPLE_KAISER_BETA))


def segment(clip: AudioClip, window: float, hop: float = None) -> List[AudioClip]:
    """Fixed windows, trailing partial window dropped, labels kept"""
    if window <= 0:
        raise DomainError(f"Segment window must be positive, got {window}")
    hop = window if hop is None else hop
    if hop <= 0:
        raise DomainError(f"Segment hop must be positive, got {hop}")

    win = int(round(window * clip.sample_rate))
    step = int(round(hop * clip.sample_rate))
    segments = []
    for i, start in enumerate(range(0, clip.num_samples - win + 1, step)):
        segments.append(AudioClip(
            samples=clip.samples[start:start + win].copy(),
            sample_rate=clip.sample_rate,
            label=clip.label,
            source=f"{clip.source}#{i}" if clip.source else f"#{i}"
        ))
    return segments
