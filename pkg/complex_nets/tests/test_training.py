import numpy as np
import pandas as pd
import pytest

from src.config import CONFIGS_DIR
from src.errors import ConfigError
from src.models.train_config import load_train_config
from src.services.training_service import TrainingService, one_hot, predict, train
from src.utils.file_handler import METRICS_COLUMNS, FileHandler


class TestHelpers:
    def test_one_hot(self):
        targets = one_hot(np.array([1, 0]), 3, "f64").numpy()
        np.testing.assert_array_equal(targets, [[0, 1, 0], [1, 0, 0]])

    def test_predict_uses_magnitude(self):
        from src.autodiff.variable import Variable
        from src.tensor.ctensor import CTensor

        output = Variable(CTensor.from_complex(np.array([[1 + 0j, -3j], [0.5j, 0.1 + 0j]]), "f64"))
        assert predict(output).tolist() == [1, 0]


class TestTrainingService:
    def test_zero_epochs_writes_initial_metrics(self, write_config, tmp_path):
        cfg = load_train_config(write_config({"epochs": 0}))
        service, history = train(cfg, tmp_path / "run")
        assert [row["epoch"] for row in history] == [0]
        frame = FileHandler.load_metrics(tmp_path / "run")
        assert list(frame.columns) == METRICS_COLUMNS
        assert len(frame) == 1
        assert 0.0 <= frame["accuracy"][0] <= 1.0
        assert FileHandler.load_meta(tmp_path / "run" / "checkpoint").epoch == 0

    def test_metrics_are_byte_reproducible(self, write_config, tmp_path):
        cfg = load_train_config(write_config())
        train(cfg, tmp_path / "a")
        train(cfg, tmp_path / "b")
        first = (tmp_path / "a" / "metrics.csv").read_bytes()
        second = (tmp_path / "b" / "metrics.csv").read_bytes()
        assert first == second
        assert first.startswith(b"epoch,train_loss,eval_loss,accuracy\n")
        assert len(first.splitlines()) == 1 + 3

    def test_checkpoint_round_trip_is_bit_exact(self, write_config, tmp_path):
        cfg = load_train_config(write_config({"model": [
            {"name": "CVConv1d", "in_channels": 1, "out_channels": 2, "kernel_size": 3, "padding": 1},
            {"name": "CVBatchNorm", "num_features": 2},
            {"name": "modReLU"},
            {"name": "Flatten"},
            {"name": "CVLinear", "in_features": 32, "out_features": 2},
        ]}))
        service, _ = train(cfg, tmp_path / "run")
        restored = TrainingService(cfg, tmp_path / "restored")
        meta = restored.load_checkpoint(tmp_path / "run")
        assert meta.epoch == cfg.epochs
        assert meta.config_hash == cfg.config_hash()
        saved = service.model.state_dict()
        loaded = restored.model.state_dict()
        assert list(saved) == list(loaded)
        for name in saved:
            assert saved[name].re.tobytes() == loaded[name].re.tobytes(), name
            assert saved[name].im.tobytes() == loaded[name].im.tobytes(), name
        assert restored.rng.bit_generator.state == service.rng.bit_generator.state
        assert restored.evaluate().loss == service.evaluate().loss

    def test_denoise_has_no_accuracy(self, write_config, tmp_path):
        cfg = load_train_config(write_config({
            "task": "denoise",
            "epochs": 1,
            "model": [{"name": "CVConv1d", "in_channels": 1, "out_channels": 1, "kernel_size": 3, "padding": 1}],
            "dataset": {"n_train": 8, "n_test": 4, "n_tones": 2, "length": 16},
        }))
        _, history = train(cfg, tmp_path / "run")
        assert all(row["accuracy"] is None for row in history)
        frame = pd.read_csv(tmp_path / "run" / "metrics.csv")
        assert frame["accuracy"].isna().all()

    def test_output_shape_is_checked(self, write_config, tmp_path):
        cfg = load_train_config(write_config({"model": [
            {"name": "Flatten"},
            {"name": "CVLinear", "in_features": 16, "out_features": 3},
        ]}))
        with pytest.raises(ConfigError, match="does not match"):
            TrainingService(cfg, tmp_path / "run")

    def test_dtype_mismatch_on_load(self, write_config, tmp_path):
        cfg = load_train_config(write_config({"epochs": 0}))
        train(cfg, tmp_path / "run")
        other = load_train_config(write_config({"epochs": 0, "dtype": "f32"}, name="f32.json"))
        with pytest.raises(ConfigError, match="dtype"):
            TrainingService(other, tmp_path / "other").load_checkpoint(tmp_path / "run")

    def test_f32_training_runs(self, write_config, tmp_path):
        cfg = load_train_config(write_config({"dtype": "f32", "optimizer": "sgd"}))
        service, history = train(cfg, tmp_path / "run")
        assert len(history) == 3
        assert all(p.dtype == "f32" for p in service.model.parameters())


@pytest.mark.slow
class TestEndToEnd:
    def test_tone_classifier(self, tmp_path):
        cfg = load_train_config(CONFIGS_DIR / "classify_tones.json")
        _, history = train(cfg, tmp_path / "run")
        assert history[-1]["accuracy"] >= 0.95

    def test_manifold_tone_classifier(self, tmp_path):
        cfg = load_train_config(CONFIGS_DIR / "classify_tones_wfm.json")
        _, history = train(cfg, tmp_path / "run")
        assert history[-1]["accuracy"] >= 0.85

    def test_denoiser(self, tmp_path):
        cfg = load_train_config(CONFIGS_DIR / "denoise.json")
        _, history = train(cfg, tmp_path / "run")
        assert history[-1]["eval_loss"] < 0.1 * history[0]["eval_loss"]
        smoothed = pd.Series([row["train_loss"] for row in history[1:]]).rolling(5).mean().dropna()
        assert (smoothed.diff().dropna() <= 1e-3 * smoothed.iloc[0]).all()

    def test_overfits_eight_samples(self, write_config, tmp_path):
        cfg = load_train_config(write_config({
            "model": [
                {"name": "CVConv1d", "in_channels": 1, "out_channels": 4, "kernel_size": 5, "padding": 2},
                {"name": "CReLU"},
                {"name": "Flatten"},
                {"name": "CVLinear", "in_features": 64, "out_features": 2},
            ],
            "epochs": 200,
            "batch_size": 8,
            "dataset": {"n_classes": 2, "samples_per_class": 4, "length": 16, "snr_db": 0},
        }))
        service, _ = train(cfg, tmp_path / "run")
        assert service.evaluate("train").accuracy == 1.0

    def test_attention_config_runs(self, tmp_path):
        cfg = load_train_config(CONFIGS_DIR / "attention_demo.json")
        cfg = cfg.model_copy(update={"epochs": 1})
        _, history = train(cfg, tmp_path / "run")
        assert np.isfinite(history[-1]["eval_loss"])
