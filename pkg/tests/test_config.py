"""Config file parsing and validation."""

import pytest

from rankdistill.config import RunConfig, parse_config
from rankdistill.errors import ConfigError


class TestParseConfig:
    def test_defaults_when_empty(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("# nothing but a comment\n", encoding="utf-8")
        config = parse_config(path)
        assert config == RunConfig()
        assert (config.tau1, config.tau2, config.tau3) == (0.05, 0.025, 0.0125)
        assert (config.beta, config.gamma) == (1.0, 1.0)
        assert config.alpha == pytest.approx(1.0 / 3.0)

    def test_overrides_and_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "steps = 10        # short run\n"
            "rank_method = listmle\n"
            "learning_rate = 0.01\n",
            encoding="utf-8",
        )
        config = parse_config(path)
        assert config.steps == 10
        assert config.rank_method == "listmle"
        assert config.learning_rate == 0.01

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("stepz = 10\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(path)

    def test_type_error_reported(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("steps = soon\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("steps 10\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_validation_catches_bad_values(self, tmp_path):
        for line in (
            "tau1 = 0",
            "dropout_p = 1.0",
            "batch_size = 1",
            "rank_method = pairwise",
            "lr_schedule = cosine",
            "warmup_fraction = 1.0",
        ):
            path = tmp_path / "bad.cfg"
            path.write_text(line + "\n", encoding="utf-8")
            with pytest.raises(ConfigError):
                parse_config(path)
