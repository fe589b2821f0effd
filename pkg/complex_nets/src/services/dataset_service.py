"""Synthetic complex-signal datasets: tone classification and tone-sum denoising."""
from dataclasses import dataclass
from typing import List, Optional, Union
import math

import numpy as np

from src.errors import ConfigError
from src.models.train_config import DatasetSpec
from src.tensor.ctensor import CTensor, circular_normal

TASKS = ("classify_tones", "denoise")
SPLITS = {"train": 0, "test": 1}


@dataclass
class SignalDataset:
    """inputs (N, 1, L); targets are class labels (classify_tones) or clean signals (denoise)."""

    inputs: CTensor
    targets: Union[np.ndarray, CTensor]
    task: str

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def labels(self) -> Optional[np.ndarray]:
        return self.targets if self.task == "classify_tones" else None


def tone(frequency: float, length: int, phase: float = 0.0) -> np.ndarray:
    """exp(j (2 pi f n / L + phase)) for n = 0..L-1."""
    n = np.arange(length)
    return np.exp(1j * (2 * np.pi * frequency * n / length + phase))


def noise_power(snr_db: Optional[float]) -> float:
    """Noise power for a unit-power signal; None or +inf switches noise off."""
    if snr_db is None or math.isinf(snr_db):
        return 0.0
    return 10.0 ** (-snr_db / 10.0)


class DatasetService:
    def __init__(self, spec: DatasetSpec, task: str, seed: int) -> None:
        if task not in TASKS:
            raise ConfigError(f"Unknown task {task!r}; expected one of {TASKS}")
        self.spec = spec
        self.task = task
        self.seed = seed

    def _rng(self, split: str) -> np.random.Generator:
        if split not in SPLITS:
            raise ConfigError(f"Unknown split {split!r}; expected one of {sorted(SPLITS)}")
        # each split has its own stream so the train set does not depend on the test size
        return np.random.default_rng([self.seed, SPLITS[split]])

    def tone_frequencies(self) -> List[int]:
        """Distinct integer bin frequencies, one per class, all below L/2."""
        spacing = max(1, self.spec.length // (2 * (self.spec.n_classes + 1)))
        return [(k + 1) * spacing for k in range(self.spec.n_classes)]

    def classify_tones(self, split: str = "train") -> SignalDataset:
        """Class k: a unit-modulus tone at frequency f_k plus circular noise at the set SNR."""
        rng = self._rng(split)
        per_class = (
            self.spec.samples_per_class if split == "train" else self.spec.test_samples_per_class
        )
        length = self.spec.length
        labels = rng.permutation(np.repeat(np.arange(self.spec.n_classes), per_class))
        clean = np.stack([tone(f, length) for f in self.tone_frequencies()])[labels]

        power = noise_power(self.spec.snr_db)
        signals = clean
        if power > 0:
            noise = circular_normal(rng, clean.shape, scale=math.sqrt(power), dtype="f64")
            signals = clean + noise.numpy()
        inputs = CTensor.from_complex(signals[:, None, :], "f64")
        return SignalDataset(inputs=inputs, targets=labels, task="classify_tones")

    def denoise(self, split: str = "train") -> SignalDataset:
        """Target: sum of n_tones random tones with unit total power; input adds noise of std noise_sigma."""
        rng = self._rng(split)
        count = self.spec.n_train if split == "train" else self.spec.n_test
        length, n_tones = self.spec.length, self.spec.n_tones
        if n_tones > length // 2:
            raise ConfigError(f"{n_tones} tones do not fit below L/2 = {length // 2}")

        clean = np.zeros((count, length), dtype=np.complex128)
        for i in range(count):
            freqs = rng.choice(np.arange(length // 2), size=n_tones, replace=False)
            phases = rng.uniform(-np.pi, np.pi, size=n_tones)
            for f, phi in zip(freqs, phases):
                clean[i] += tone(f, length, phi) / math.sqrt(n_tones)
        noise = circular_normal(rng, clean.shape, scale=self.spec.noise_sigma, dtype="f64")
        inputs = CTensor.from_complex((clean + noise.numpy())[:, None, :], "f64")
        targets = CTensor.from_complex(clean[:, None, :], "f64")
        return SignalDataset(inputs=inputs, targets=targets, task="denoise")

    def generate(self, split: str = "train") -> SignalDataset:
        if self.task == "classify_tones":
            return self.classify_tones(split)
        return self.denoise(split)


def gen_synthetic(
    spec: DatasetSpec, seed: int, task: str = "classify_tones", split: str = "train"
) -> SignalDataset:
    """Deterministic per (seed, task, split)."""
    return DatasetService(spec, task, seed).generate(split)
