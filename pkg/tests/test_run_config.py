import json
import pytest

from models.run_config import RunConfig, DatasetConfig
from utils.error_handlers import ConfigError


def test_defaults_validate():
    config = RunConfig().validate()
    assert config.frontend == 'gammatone'
    assert config.image_size == (64, 64)


def test_json_roundtrip():
    config = RunConfig().with_overrides(seed=4, frontend='mfcc', **{'train.epochs': 3})
    assert RunConfig.from_json_text(json.dumps(config.to_dict())) == config


def test_partial_document_keeps_defaults():
    config = RunConfig.from_dict({'train': {'epochs': 2}, 'image_size': [48, 40]})
    assert config.train.epochs == 2
    assert config.train.batch_size == RunConfig().train.batch_size
    assert config.image_size == (48, 40)


def test_unknown_top_level_key():
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_dict({'frontnd': 'mfcc'})
    assert 'frontnd' in excinfo.value.message
    assert excinfo.value.exit_code == 2


def test_unknown_section_key():
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_dict({'train': {'learnig_rate': 0.1}})
    assert excinfo.value.details['section'] == 'train'


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_json_text('{\n  "seed": 1,\n  "frontend" "mfcc"\n}')
    assert excinfo.value.details == {'line': 3, 'column': 14}
    assert 'line 3' in excinfo.value.message


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_json_file(str(tmp_path / 'absent.json'))


@pytest.mark.parametrize('document', [
    {'frontend': 'spectrogram'},
    {'image_size': [16, 64]},
    {'dataset': {'split_fractions': [0.5, 0.5, 0.5]}},
    {'dataset': {'snr_min': 5.0}},
    {'train': 'fast'},
    [1, 2, 3],
    {'seed': 'abc'},
    {'seed': None},
    {'image_size': ['wide', 64]},
    {'image_size': 64},
    {'dataset': {'split_fractions': ['a', 'b', 'c']}},
    {'framing': {'window_len': 1e-5, 'hop': 1e-5}},
])
def test_invalid_documents(document):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(document)


def test_overrides_skip_none_and_address_sections():
    config = RunConfig().with_overrides(seed=None, **{'dataset.per_class': 10, 'train.batch_size': None})
    assert config.seed == 0
    assert config.dataset.per_class == 10
    assert config.train.batch_size == RunConfig().train.batch_size


def test_overrides_are_validated():
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(**{'dataset.per_class': 0})


def test_feature_hash_tracks_feature_settings_only():
    base = RunConfig()
    assert base.feature_hash() == RunConfig().feature_hash()
    assert base.with_overrides(**{'train.epochs': 1}).feature_hash() == base.feature_hash()
    assert base.with_overrides(seed=9).feature_hash() == base.feature_hash()
    assert base.with_overrides(frontend='mfcc').feature_hash() != base.feature_hash()
    assert base.with_overrides(image_size=(32, 32)).feature_hash() != base.feature_hash()
    assert base.with_overrides(**{'filterbank.num_filters': 32}).feature_hash() != base.feature_hash()


def test_dataset_split_fractions_from_list():
    config = DatasetConfig.from_dict({'split_fractions': [0.6, 0.2, 0.2]})
    assert config.split_fractions == (0.6, 0.2, 0.2)
    assert config.to_dict()['split_fractions'] == [0.6, 0.2, 0.2]
