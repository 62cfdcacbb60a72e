import os
import json
import hashlib
from typing import List, Optional
from utils.logging_config import get_logger

# Get specialized logger
logger = get_logger('feature_cache')

CACHE_DIR_NAME = '.cache'


def log_cache_operation(operation: str, key: str, hit: bool = None, outputs: int = None):
    """Log cache operations in the shared register"""
    log_parts = [
        f"CACHE_OP - Operation: {operation}",
        f"Key: {key}"
    ]
    if hit is not None:
        log_parts.append(f"Hit: {hit}")
    if outputs is not None:
        log_parts.append(f"Outputs: {outputs}")
    logger.debug(" - ".join(log_parts))


class FeatureCache:
    """
    On-disk index of extracted feature files, keyed by source file and
    feature-config hash, so reruns skip work already done
    """

    def __init__(self, features_dir: str):
        self.features_dir = features_dir
        self.index_dir = os.path.join(features_dir, CACHE_DIR_NAME)
        os.makedirs(self.index_dir, exist_ok=True)

    @staticmethod
    def generate_key(source: str, config_hash: str) -> str:
        """Generate a unique cache key for one source under one config"""
        key_string = f"{os.path.normpath(source)}:{json.dumps({'config_hash': config_hash}, sort_keys=True)}"
        return hashlib.md5(key_string.encode()).hexdigest()

    def _index_path(self, key: str) -> str:
        return os.path.join(self.index_dir, f"{key}.json")

    def get(self, source: str, config_hash: str) -> Optional[List[str]]:
        """Outputs recorded for this source, if every one is still on disk with a matching hash"""
        key = self.generate_key(source, config_hash)
        try:
            with open(self._index_path(key), 'r', encoding='utf-8') as fh:
                record = json.load(fh)
        except FileNotFoundError:
            logger.debug(f"CACHE_MISS - Key: {key} - Reason: Not found")
            log_cache_operation('GET', key, hit=False)
            return None
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"CACHE_ERROR - GET - Key: {key} - Error: {e}")
            log_cache_operation('GET', key, hit=False)
            return None

        outputs = [os.path.join(self.features_dir, p) for p in record.get('outputs', [])]
        if record.get('config_hash') != config_hash or not all(self._output_valid(p, config_hash) for p in outputs):
            logger.debug(f"CACHE_MISS - Key: {key} - Reason: Stale outputs")
            log_cache_operation('GET', key, hit=False)
            return None

        log_cache_operation('GET', key, hit=True, outputs=len(outputs))
        return outputs

    def set(self, source: str, config_hash: str, outputs: List[str]) -> bool:
        """Record the outputs produced for a source"""
        key = self.generate_key(source, config_hash)
        record = {'source': source, 'config_hash': config_hash, 'outputs': [os.path.relpath(p, self.features_dir) for p in outputs]}
        try:
            with open(self._index_path(key), 'w', encoding='utf-8') as fh:
                json.dump(record, fh, sort_keys=True)
        except OSError as e:
            logger.error(f"CACHE_ERROR - SET - Key: {key} - Error: {e}")
            return False
        log_cache_operation('SET', key, outputs=len(outputs))
        return True

    @staticmethod
    def _output_valid(path: str, config_hash: str) -> bool:
        base = path[:-len('.f32')] if path.endswith('.f32') else path
        try:
            with open(base + '.json', 'r', encoding='utf-8') as fh:
                sidecar = json.load(fh)
        except (OSError, json.JSONDecodeError):
            return False
        return os.path.isfile(base + '.f32') and sidecar.get('config_hash') == config_hash
