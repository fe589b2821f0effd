import numpy as np
import pytest

from src.errors import ConfigError
from src.models.train_config import LayerConfig, load_train_config
from src.nn.activations import modReLU
from src.nn.attention import CVECA
from src.nn.layers import CVLinear
from src.nn.registry import build_layer, build_model, chain_check, known_names, layer_keys
from src.tensor.ctensor import CTensor


def layer(name, **keys):
    return LayerConfig(name=name, **keys)


class TestBuildLayer:
    def test_known_layer(self):
        built = build_layer(layer("CVLinear", in_features=3, out_features=2), 0, dtype="f64")
        assert isinstance(built, CVLinear)
        assert built.weight.shape == (2, 3)

    def test_key_aliases(self):
        built = build_layer(layer("CVECA", k=5), 0, rng=np.random.default_rng(0), dtype="f64")
        assert isinstance(built, CVECA)
        assert built.cfg.kernel_size == 5

    def test_activation_parameters(self):
        built = build_layer(layer("modReLU", b=-0.3), 0, dtype="f64")
        assert isinstance(built, modReLU)
        assert built.b.numpy().real.item() == pytest.approx(-0.3)

    def test_misspelled_name(self):
        with pytest.raises(ConfigError, match="unknown layer name 'CVBatchNrom'"):
            build_layer(layer("CVBatchNrom", num_features=4), 1)

    def test_unknown_key_names_the_key(self):
        with pytest.raises(ConfigError, match="has no key 'kernel'"):
            build_layer(layer("CVConv1d", in_channels=1, out_channels=1, kernel=3), 0)

    def test_activation_rejects_foreign_parameter(self):
        with pytest.raises(ConfigError, match="cannot build zReLU"):
            build_layer(layer("zReLU", b=0.1), 0)

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="cannot build CVLinear"):
            build_layer(layer("CVLinear", in_features=3), 0)

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            build_layer(layer("CVDropout", p=1.5), 0)

    def test_vocabulary(self):
        names = known_names()
        assert "wFMConv2d" in names and "CPReLU" in names and "CVCardiod" in names
        assert "rng" not in layer_keys("CVConv2d")
        assert "kernel_size" in layer_keys("CVConv2d")


class TestBuildModel:
    def test_errors_carry_config_line(self, write_config):
        path = write_config({"model": [{"name": "Flatten"}, {"name": "CVLinaer", "in_features": 16}]})
        cfg = load_train_config(path)
        with pytest.raises(ConfigError) as info:
            build_model(cfg, np.random.default_rng(0))
        message = str(info.value)
        assert str(path) in message
        assert "model.1.name" in message

    def test_kernel_path_override(self, write_config):
        cfg = load_train_config(write_config({"kernel_path": "naive"}))
        model = build_model(cfg, np.random.default_rng(0))
        assert model[1].path == "naive"

    def test_chain_check_reports_the_failing_layer(self, write_config):
        cfg = load_train_config(
            write_config({"model": [{"name": "Flatten"}, {"name": "CVLinear", "in_features": 15, "out_features": 2}]})
        )
        model = build_model(cfg, np.random.default_rng(0))
        sample = CTensor(np.zeros((2, 1, 16)), dtype="f64")
        with pytest.raises(ConfigError, match="CVLinear cannot take input of shape"):
            chain_check(model, cfg, sample)
        assert model.training

    def test_chain_check_returns_output_shape(self, write_config):
        cfg = load_train_config(write_config())
        model = build_model(cfg, np.random.default_rng(0))
        assert chain_check(model, cfg, CTensor(np.zeros((3, 1, 16)), dtype="f64")) == (3, 2)
