import numpy as np
import pytest

from src.errors import ConfigError
from src.models.train_config import DatasetSpec
from src.services.dataset_service import DatasetService, gen_synthetic, noise_power, tone


def clean_signals(service, dataset):
    tones = np.stack([tone(f, service.spec.length) for f in service.tone_frequencies()])
    return tones[dataset.labels]


class TestClassifyTones:
    def test_measured_snr(self):
        spec = DatasetSpec(n_classes=4, samples_per_class=25, length=100, snr_db=10.0)
        service = DatasetService(spec, "classify_tones", seed=0)
        data = service.classify_tones("train")
        noise = data.inputs.numpy()[:, 0, :] - clean_signals(service, data)
        assert noise.size == 10 ** 4
        measured_db = 10 * np.log10(1.0 / np.mean(np.abs(noise) ** 2))
        assert abs(measured_db - 10.0) <= 0.5

    @pytest.mark.parametrize("snr_db", [None, float("inf")])
    def test_noise_off(self, snr_db):
        spec = DatasetSpec(samples_per_class=4, length=32, snr_db=snr_db)
        data = gen_synthetic(spec, seed=1)
        np.testing.assert_allclose(np.abs(data.inputs.numpy()), 1.0, atol=1e-12)

    def test_shapes_and_balance(self):
        spec = DatasetSpec(n_classes=3, samples_per_class=5, test_samples_per_class=2, length=24)
        train = gen_synthetic(spec, seed=0, split="train")
        test = gen_synthetic(spec, seed=0, split="test")
        assert train.inputs.shape == (15, 1, 24)
        assert test.inputs.shape == (6, 1, 24)
        assert np.bincount(train.labels).tolist() == [5, 5, 5]

    def test_frequencies_are_distinct_and_below_nyquist(self):
        service = DatasetService(DatasetSpec(n_classes=6, length=64), "classify_tones", 0)
        freqs = service.tone_frequencies()
        assert len(set(freqs)) == 6
        assert max(freqs) < 32

    def test_deterministic_per_seed_and_split(self):
        spec = DatasetSpec(samples_per_class=4, length=16)
        a = gen_synthetic(spec, seed=9)
        b = gen_synthetic(spec, seed=9)
        c = gen_synthetic(spec, seed=10)
        test = gen_synthetic(spec, seed=9, split="test")
        np.testing.assert_array_equal(a.inputs.numpy(), b.inputs.numpy())
        np.testing.assert_array_equal(a.labels, b.labels)
        assert not np.array_equal(a.inputs.numpy(), c.inputs.numpy())
        assert not np.array_equal(a.inputs.numpy()[:8], test.inputs.numpy()[:8])

    def test_train_split_ignores_test_size(self):
        small = gen_synthetic(DatasetSpec(samples_per_class=4, test_samples_per_class=1, length=16), 2)
        large = gen_synthetic(DatasetSpec(samples_per_class=4, test_samples_per_class=50, length=16), 2)
        np.testing.assert_array_equal(small.inputs.numpy(), large.inputs.numpy())


class TestDenoise:
    def test_targets_have_unit_power(self):
        spec = DatasetSpec(n_train=20, n_tones=3, length=64)
        data = gen_synthetic(spec, seed=4, task="denoise")
        clean = data.targets.numpy()
        assert clean.shape == (20, 1, 64)
        np.testing.assert_allclose(np.mean(np.abs(clean) ** 2, axis=-1), 1.0, atol=1e-12)

    def test_noise_level(self):
        spec = DatasetSpec(n_train=100, length=100, noise_sigma=0.3)
        data = gen_synthetic(spec, seed=4, task="denoise")
        noise = data.inputs.numpy() - data.targets.numpy()
        assert np.mean(np.abs(noise) ** 2) == pytest.approx(0.09, rel=0.05)

    def test_too_many_tones(self):
        with pytest.raises(ConfigError):
            gen_synthetic(DatasetSpec(n_tones=9, length=16), seed=0, task="denoise")


class TestErrors:
    def test_unknown_task(self):
        with pytest.raises(ConfigError):
            DatasetService(DatasetSpec(), "segment", 0)

    def test_unknown_split(self):
        with pytest.raises(ConfigError):
            gen_synthetic(DatasetSpec(), 0, split="validation")

    def test_noise_power(self):
        assert noise_power(10.0) == pytest.approx(0.1)
        assert noise_power(None) == 0.0
