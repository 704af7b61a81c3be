"""
Test per la configurazione degli esperimenti.
Copre: default per comando, file di configurazione, override da CLI,
conversione dei tipi, validazione, KFP_THREADS.
"""

import pytest

from src.config import (
    DEFAULTS,
    ConfigError,
    ExperimentConfig,
    threads_from_env,
)


@pytest.fixture(autouse=True)
def clean_threads(monkeypatch):
    """Ogni test parte senza KFP_THREADS."""
    monkeypatch.delenv("KFP_THREADS", raising=False)


class TestDefaults:
    def test_every_command_loads(self):
        for command in DEFAULTS:
            config = ExperimentConfig.load(command)
            assert config.command == command
            assert config.seed == 0
            assert config.output_dir == "reports"
            assert config.plot is False
            assert config.threads == 1

    def test_common_keys_leave_params(self):
        config = ExperimentConfig.load("evolve")
        assert "seed" not in config.params
        assert "output_dir" not in config.params
        assert config["nx"] == 512
        assert config["strict"] is True

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.load("sync")


class TestOverrides:
    def test_cli_strings_are_coerced(self):
        config = ExperimentConfig.load("evolve", overrides={
            "nx": "64", "box": "8", "strict": "off", "center": "1,2", "seed": "7",
        })
        assert config["nx"] == 64
        assert config["box"] == 8.0
        assert config["strict"] is False
        assert config["center"] == (1.0, 2.0)
        assert config.seed == 7

    def test_none_means_not_given(self):
        config = ExperimentConfig.load("evolve", overrides={"nx": None})
        assert config["nx"] == 512

    def test_dashed_keys(self):
        config = ExperimentConfig.load("evolve", overrides={"t-min": "30"})
        assert config["t_min"] == 30.0

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="foo"):
            ExperimentConfig.load("evolve", overrides={"foo": "1"})

    def test_bad_bool(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.load("evolve", overrides={"strict": "forse"})

    def test_bad_number(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.load("evolve", overrides={"nx": "tanti"})


class TestConfigFile:
    def test_section_for_command(self, tmp_path):
        path = tmp_path / "lab.ini"
        path.write_text("[evolve]\nnx = 128\nt-max = 50\n\n[constants]\ndim_range = 3..5\n", encoding="utf-8")
        config = ExperimentConfig.load("evolve", str(path))
        assert config["nx"] == 128
        assert config["t_max"] == 50.0

    def test_cli_wins_over_file(self, tmp_path):
        path = tmp_path / "lab.ini"
        path.write_text("[evolve]\nnx = 128\n", encoding="utf-8")
        config = ExperimentConfig.load("evolve", str(path), {"nx": "64"})
        assert config["nx"] == 64

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "lab.ini"
        path.write_text("[evolve]\ngrid_spacing = 0.1\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            ExperimentConfig.load("evolve", str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.load("evolve", str(tmp_path / "missing.ini"))


class TestValidation:
    @pytest.mark.parametrize("overrides", [
        {"t_min": "100", "t_max": "20"},
        {"t_min": "0"},
        {"nx": "0"},
        {"box": "-1"},
        {"tol": "1.5"},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            ExperimentConfig.load("evolve", overrides=overrides)

    def test_errors_are_collected(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load("evolve", overrides={"nx": "0", "box": "-1"})
        assert "nx" in str(info.value) and "box" in str(info.value)

    def test_config_error_is_value_error(self):
        assert issubclass(ConfigError, ValueError)


class TestThreads:
    def test_default(self):
        assert threads_from_env() == 1

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("KFP_THREADS", "4")
        assert threads_from_env() == 4
        assert ExperimentConfig.load("constants").threads == 4

    @pytest.mark.parametrize("raw", ["0", "-2", "molti"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("KFP_THREADS", raw)
        with pytest.raises(ConfigError):
            threads_from_env()


class TestSerialization:
    def test_as_dict(self):
        config = ExperimentConfig.load("evolve", overrides={"output_dir": "/tmp/altro"})
        data = config.as_dict()
        assert data["command"] == "evolve"
        assert data["params"]["center"] == [0.0]
        assert "output_dir" not in data

    def test_rng_is_reproducible(self):
        config = ExperimentConfig.load("constants", overrides={"seed": "3"})
        assert config.rng().standard_normal() == config.rng().standard_normal()
