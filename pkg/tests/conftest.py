import os

# Quiet logging and no log files before anything imports Config
os.environ['APP_ENV'] = 'testing'
os.environ['LOG_TO_FILE'] = 'false'

import numpy as np
import pytest

from models.audio_models import AudioClip
from models.cnn_models import LayerSpec, CONV, RELU, MAXPOOL, GLOBAL_AVG_POOL, FULLY_CONNECTED, SOFTMAX
from models.filterbank_models import FilterbankConfig
from services.cnn_model import build_model
from services.filterbank_service import build_filterbank
from utils.env_logging import setup_environment_logging

setup_environment_logging()

SAMPLE_RATE = 16000


def make_tone(freq, duration=0.5, sample_rate=SAMPLE_RATE, amplitude=0.5, label=None):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return AudioClip(samples=amplitude * np.sin(2 * np.pi * freq * t), sample_rate=sample_rate,
                     label=label, source=f'tone_{freq}')


def tiny_layers(in_channels=3, num_classes=5):
    return [
        LayerSpec(CONV, in_channels, 4, kernel_size=3, stride=1, padding=1),
        LayerSpec(RELU),
        LayerSpec(MAXPOOL, kernel_size=2, stride=2),
        LayerSpec(CONV, 4, 6, kernel_size=3, stride=1, padding=1),
        LayerSpec(RELU),
        LayerSpec(GLOBAL_AVG_POOL),
        LayerSpec(FULLY_CONNECTED, 6, num_classes),
        LayerSpec(SOFTMAX),
    ]


@pytest.fixture(scope='session')
def default_bank():
    return build_filterbank(FilterbankConfig())


@pytest.fixture(scope='session')
def small_bank():
    return build_filterbank(FilterbankConfig(num_filters=16, f_min=100.0, f_max=6000.0, fir_length=1024))


@pytest.fixture
def tone():
    return make_tone


@pytest.fixture
def tiny_model():
    return build_model(tiny_layers(), (3, 8, 8), seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
