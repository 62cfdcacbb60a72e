"""
ERB-scaled gammatone filterbank: design, application and inspection
"""

import csv
from typing import List, Tuple, Union
import numpy as np
from scipy import signal as sps
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from models.filterbank_models import GammatoneSpec, FilterbankConfig, Filterbank
from utils.error_handlers import DomainError, AliasingError, ConfigError, ShapeError
from utils.logging_config import get_logger

logger = get_logger('filterbank')

ERB_OFFSET_HZ = 24.7
ERB_SLOPE = 4.37e-3
ERB_RATE_SCALE = 21.4

ArrayLike = Union[float, np.ndarray]


def _non_negative(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} must be non-negative, got {value}")
    return arr


def _scalar_or_array(arr: np.ndarray, value: ArrayLike) -> ArrayLike:
    return float(arr) if np.ndim(value) == 0 else arr


def erb_bandwidth(fc: ArrayLike) -> ArrayLike:
    """Equivalent rectangular bandwidth in Hz at centre frequency fc"""
    arr = _non_negative('fc', fc)
    return _scalar_or_array(ERB_OFFSET_HZ * (ERB_SLOPE * arr + 1.0), fc)


def erb_rate(f: ArrayLike) -> ArrayLike:
    """Number of ERBs below frequency f"""
    arr = _non_negative('f', f)
    return _scalar_or_array(ERB_RATE_SCALE * np.log10(ERB_SLOPE * arr + 1.0), f)


def inverse_erb_rate(e: ArrayLike) -> ArrayLike:
    arr = _non_negative('ERB number', e)
    return _scalar_or_array((10.0 ** (arr / ERB_RATE_SCALE) - 1.0) / ERB_SLOPE, e)


def center_frequencies(config: FilterbankConfig) -> np.ndarray:
    """num_filters centres uniformly spaced in ERB-rate, endpoints inclusive"""
    config.validate()
    if config.num_filters == 1:
        return np.array([float(config.f_min)])
    rates = np.linspace(erb_rate(config.f_min), erb_rate(config.f_max), config.num_filters)
    freqs = inverse_erb_rate(rates)
    # Pin the endpoints exactly; the inverse roundtrip is only accurate to rounding
    freqs[0], freqs[-1] = config.f_min, config.f_max
    return freqs


def gammatone_impulse_response(spec: GammatoneSpec, sample_rate: float, length: int) -> np.ndarray:
    """
    Sampled gammatone impulse response, before normalization:
    a * t^(n-1) * exp(-2 pi b t) * cos(2 pi fc t + phase), t = k / sample_rate
    """
    spec.validate()
    if length < 1:
        raise DomainError(f"Impulse response length must be at least 1, got {length}")
    if 2.0 * spec.fc > sample_rate:
        raise AliasingError(
            f"Centre frequency {spec.fc} Hz lies above Nyquist for sample rate {sample_rate} Hz",
            details={'fc': spec.fc, 'sample_rate': sample_rate}
        )
    t = np.arange(length, dtype=np.float64) / sample_rate
    envelope = t ** (spec.order - 1) * np.exp(-2.0 * np.pi * spec.b * t)
    return spec.amplitude * envelope * np.cos(2.0 * np.pi * spec.fc * t + spec.phase)


def _dtft_magnitude(kernel: np.ndarray, freq: float, sample_rate: float) -> float:
    n = np.arange(kernel.shape[0])
    return float(np.abs(np.dot(kernel, np.exp(-2j * np.pi * freq * n / sample_rate))))


def peak_response(kernel: np.ndarray, sample_rate: float) -> Tuple[float, float]:
    """
    Frequency and value of the maximum of the continuous DTFT magnitude.

    Coarse FFT grid search followed by bounded scalar refinement around the best bin.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    nfft = max(16 * kernel.shape[0], 1 << 14)
    spectrum = np.abs(np.fft.rfft(kernel, n=nfft))
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sample_rate)
    best = int(np.argmax(spectrum))
    if spectrum[best] == 0.0:
        return 0.0, 0.0

    step = freqs[1] - freqs[0]
    lo = max(0.0, freqs[best] - step)
    hi = min(sample_rate / 2.0, freqs[best] + step)
    result = minimize_scalar(
        lambda f: -_dtft_magnitude(kernel, f, sample_rate),
        bounds=(lo, hi), method='bounded', options={'xatol': step * 1e-6}
    )
    if -result.fun >= spectrum[best]:
        return float(result.x), float(-result.fun)
    return float(freqs[best]), float(spectrum[best])


def minimum_fir_length(config: FilterbankConfig) -> int:
    """Samples needed to hold 3x the envelope-peak time of the lowest filter"""
    b_min = config.bandwidth_factor * erb_bandwidth(config.f_min)
    seconds = 3.0 * (config.order - 1) / (2.0 * np.pi * b_min)
    return int(np.ceil(seconds * config.sample_rate))


def build_filterbank(config: FilterbankConfig = None) -> Filterbank:
    """Design the bank: ERB-spaced centres, b = 1.019 ERB(fc), peak-normalized FIR kernels"""
    config = (config or FilterbankConfig()).validate()

    required = minimum_fir_length(config)
    if config.fir_length < required:
        raise ConfigError(
            f"fir_length={config.fir_length} is too short: the lowest filter ({config.f_min} Hz, "
            f"order {config.order}) needs at least {required} samples at {config.sample_rate} Hz "
            f"to hold its envelope peak and decay",
            details={'fir_length': config.fir_length, 'required': required}
        )

    specs, kernels = [], []
    for fc in center_frequencies(config):
        spec = GammatoneSpec(
            fc=float(fc),
            order=config.order,
            b=float(config.bandwidth_factor * erb_bandwidth(fc))
        ).validate()
        response = gammatone_impulse_response(spec, config.sample_rate, config.fir_length)
        _, peak = peak_response(response, config.sample_rate)
        if peak <= 0:
            raise ConfigError(f"Filter at {fc:.1f} Hz has an all-zero response")
        specs.append(spec)
        kernels.append(response / peak)

    bank = Filterbank(specs=tuple(specs), kernels=np.vstack(kernels), config=config)
    logger.info(
        f"FILTERBANK_BUILT - Filters: {bank.num_filters} - Range: {config.f_min}-{config.f_max} Hz - "
        f"FIR: {config.fir_length} - Order: {config.order}"
    )
    return bank


def apply_filterbank(signal: np.ndarray, bank: Filterbank) -> np.ndarray:
    """
    Filter the signal through every kernel with FFT block convolution.

    Returns channel-major (num_filters, len(signal)); output[t] uses the taps
    ending at input[t] (causal "same" alignment).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"Signal must be one-dimensional, got shape {x.shape}")
    if x.shape[0] == 0:
        raise DomainError("Cannot filter an empty signal")
    full = sps.oaconvolve(bank.kernels, x[np.newaxis, :], mode='full', axes=1)
    return full[:, :x.shape[0]]


def frequency_response(kernel: np.ndarray, n_points: int) -> np.ndarray:
    """|DFT| of the zero-padded kernel at n_points bins spanning [0, fs/2]"""
    kernel = np.asarray(kernel, dtype=np.float64)
    if n_points < kernel.shape[0]:
        raise DomainError(f"n_points={n_points} is shorter than the kernel ({kernel.shape[0]} taps)")
    if n_points == 1:
        return np.abs(np.array([kernel.sum()]))
    return np.abs(np.fft.rfft(kernel, n=2 * (n_points - 1)))


def measured_erb(kernel: np.ndarray, sample_rate: float, n_points: int = 1 << 15) -> float:
    """Equivalent rectangular bandwidth of a kernel: integral of |H|^2 over max |H|^2"""
    response = frequency_response(kernel, max(n_points, len(kernel)))
    power = response ** 2
    df = (sample_rate / 2.0) / (len(response) - 1)
    return float(trapezoid(power, dx=df) / power.max())


def is_alias_free(fc: float, sample_rate: float) -> bool:
    """Whether a channel's passband stays clear of Nyquist"""
    return fc + 2.0 * erb_bandwidth(fc) <= sample_rate / 2.0


def export_kernels_csv(bank: Filterbank, path: str):
    """One row per filter: index, fc, then the FIR taps"""
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh)
        writer.writerow(['index', 'fc'] + [f'tap_{k}' for k in range(bank.kernels.shape[1])])
        for i, (spec, kernel) in enumerate(zip(bank.specs, bank.kernels)):
            writer.writerow([i, repr(spec.fc)] + [repr(float(v)) for v in kernel])
    logger.info(f"FILTERBANK_EXPORTED - Path: {path} - Filters: {bank.num_filters}")


def export_metadata_csv(bank: Filterbank, path: str) -> List[dict]:
    rows = bank.metadata_rows()
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.DictWriter(fh, fieldnames=['index', 'fc', 'b', 'order', 'erb'])
        writer.writeheader()
        writer.writerows(rows)
    return rows
