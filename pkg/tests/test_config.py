from __future__ import annotations

import json

import pytest

from situwatch.config import ServiceConfig, config_from_dict, load_config
from situwatch.errors import InvalidConfigError
from situwatch.similarity import SimilarityMethod


def write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestConfigFile:
    def test_full_document(self, tmp_path):
        path = write_config(
            tmp_path,
            {
                "host": "0.0.0.0",
                "port": 9000,
                "tcp_port": 9001,
                "data_dir": "/tmp/situwatch",
                "channels": [
                    {"channel_id": "hr", "kind": "heart-rate", "unit": "bpm", "weight": 2.0},
                    {"channel_id": "eda", "weight": 1.0},
                ],
                "window": {"duration": 600, "n_samples": 60},
                "stride": 30,
                "retention": 3600,
                "policy": {"theta_on": 90, "theta_off": 60, "min_consecutive": 3},
                "similarity": {"method": "euclid", "tau": 2.0},
            },
        )
        config = load_config(path)
        assert config.port == 9000
        assert config.tcp_port == 9001
        assert [c.channel_id for c in config.channels] == ["hr", "eda"]
        assert config.channels[0].weight == 2.0
        assert config.duration == 600.0 and config.n_samples == 60
        assert config.policy.min_consecutive == 3
        assert config.similarity.method is SimilarityMethod.EUCLID

    def test_defaults_when_no_file(self):
        config = load_config(None)
        assert config.port == 8787
        assert [c.channel_id for c in config.channels] == ["hr", "eda", "resp"]

    def test_env_overrides(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, {"port": 9000})
        monkeypatch.setenv("SITUWATCH_CONFIG", str(path))
        monkeypatch.setenv("SITUWATCH_PORT", "9100")
        monkeypatch.setenv("SITUWATCH_DATA_DIR", str(tmp_path / "store"))
        config = load_config()
        assert config.port == 9100
        assert config.data_dir == str(tmp_path / "store")

    def test_invalid_policy_in_file_raises_named_error(self, tmp_path):
        with pytest.raises(InvalidConfigError) as e:
            config_from_dict({"policy": {"theta_on": 50, "theta_off": 60}})
        assert e.value.field == "theta_off"

    def test_retention_must_cover_window(self):
        with pytest.raises(InvalidConfigError):
            ServiceConfig(retention=100.0, duration=900.0)
