"""
FeatureImage persistence: raw float32 tensor + JSON sidecar, PGM and PNG renders
"""

import os
import json
from typing import Dict, Any, Optional
import numpy as np

from models.feature_models import FeatureImage, FRONTENDS
from utils.error_handlers import FeatureFileError
from utils.logging_config import get_logger

logger = get_logger('features')

TENSOR_SUFFIX = '.f32'
SIDECAR_SUFFIX = '.json'
SIDECAR_KEYS = ('height', 'width', 'channels', 'frontend', 'config_hash', 'source_file')


def _base(path: str) -> str:
    for suffix in (TENSOR_SUFFIX, SIDECAR_SUFFIX):
        if path.endswith(suffix):
            return path[:-len(suffix)]
    return path


def sidecar_path(path: str) -> str:
    return _base(path) + SIDECAR_SUFFIX


def tensor_path(path: str) -> str:
    return _base(path) + TENSOR_SUFFIX


def save_feature_image(image: FeatureImage, path: str, extra: Optional[Dict[str, Any]] = None) -> str:
    """
    Write <base>.f32 (little-endian float32, channel-last) and <base>.json.

    `extra` is merged into the sidecar, e.g. the effective run config or a
    resampling note.
    """
    base = _base(path)
    os.makedirs(os.path.dirname(base) or '.', exist_ok=True)
    sidecar = image.sidecar()
    if extra:
        sidecar.update(extra)

    image.pixels.astype('<f4').tofile(base + TENSOR_SUFFIX)
    # Sidecar last: its presence marks a complete feature file
    with open(base + SIDECAR_SUFFIX, 'w', encoding='utf-8') as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
    logger.debug(f"FEATURE_SAVED - Path: {base} - Frontend: {image.frontend}")
    return base + TENSOR_SUFFIX


def read_sidecar(path: str) -> Dict[str, Any]:
    target = sidecar_path(path)
    try:
        with open(target, 'r', encoding='utf-8') as fh:
            sidecar = json.load(fh)
    except FileNotFoundError:
        raise FeatureFileError(f"Missing sidecar {target}", details={'path': target})
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise FeatureFileError(f"Corrupted sidecar {target}: {e}", details={'path': target})
    if not isinstance(sidecar, dict):
        raise FeatureFileError(f"Corrupted sidecar {target}: not a JSON object", details={'path': target})
    missing = [key for key in SIDECAR_KEYS if key not in sidecar]
    if missing:
        raise FeatureFileError(f"Sidecar {target} lacks keys: {', '.join(missing)}", details={'path': target})
    try:
        for key in ('height', 'width', 'channels'):
            if int(sidecar[key]) < 1:
                raise ValueError(key)
    except (TypeError, ValueError):
        raise FeatureFileError(f"Sidecar {target} has invalid dimensions", details={'path': target})
    if sidecar['frontend'] not in FRONTENDS:
        raise FeatureFileError(f"Sidecar {target} names unknown frontend '{sidecar['frontend']}'")
    return sidecar


def load_feature_image(path: str) -> FeatureImage:
    sidecar = read_sidecar(path)
    target = tensor_path(path)
    shape = (int(sidecar['height']), int(sidecar['width']), int(sidecar['channels']))
    try:
        data = np.fromfile(target, dtype='<f4')
    except OSError as e:
        raise FeatureFileError(f"Cannot read feature tensor {target}: {e}", details={'path': target})
    if data.size != int(np.prod(shape)):
        raise FeatureFileError(
            f"Feature tensor {target} holds {data.size} values, sidecar expects {int(np.prod(shape))}",
            details={'path': target}
        )
    return FeatureImage(
        pixels=data.reshape(shape).astype(np.float64),
        frontend=sidecar['frontend'],
        config_hash=sidecar['config_hash'],
        source_file=sidecar['source_file']
    )


def to_gray8(image: FeatureImage) -> np.ndarray:
    """Channel 0 quantized to 8 bits"""
    return np.round(np.clip(image.pixels[:, :, 0], 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(image: FeatureImage, path: str) -> str:
    """Binary greymap (P5), row 0 at the top"""
    gray = to_gray8(image)
    header = f"P5\n{gray.shape[1]} {gray.shape[0]}\n255\n".encode('ascii')
    with open(path, 'wb') as fh:
        fh.write(header)
        fh.write(gray.tobytes())
    return path


def write_pgm_array(values: np.ndarray, path: str) -> str:
    """Render any [0, 1] matrix as an 8-bit greymap"""
    plane = np.asarray(values, dtype=np.float64)
    return write_pgm(FeatureImage(pixels=plane[:, :, np.newaxis]), path)


def read_pgm(path: str) -> np.ndarray:
    with open(path, 'rb') as fh:
        data = fh.read()
    parts = data.split(b'\n', 3)
    if len(parts) < 4 or parts[0] != b'P5':
        raise FeatureFileError(f"{path} is not a binary PGM file")
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)


def write_png(image: FeatureImage, path: str) -> str:
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    plt.imsave(path, to_gray8(image), cmap='gray', vmin=0, vmax=255)
    return path


def export_image(feature_path: str, out_path: str) -> str:
    """Render a stored feature file as PGM or PNG, picked by extension"""
    image = load_feature_image(feature_path)
    if out_path.lower().endswith('.png'):
        return write_png(image, out_path)
    return write_pgm(image, out_path)
