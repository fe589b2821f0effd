import json
import os
import sys

import hypothesis
import numpy as np
import pytest

# Add the application directory to the Python path
app_dir = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, app_dir)

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end training runs (deselect with -m 'not slow')")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def crandn(rng):
    """Factory for random complex128 arrays."""
    def make(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return make


TINY_CLASSIFIER = {
    "task": "classify_tones",
    "model": [
        {"name": "Flatten"},
        {"name": "CVLinear", "in_features": 16, "out_features": 2},
    ],
    "epochs": 2,
    "batch_size": 4,
    "lr": 0.01,
    "seed": 3,
    "dataset": {
        "n_classes": 2,
        "samples_per_class": 8,
        "test_samples_per_class": 4,
        "length": 16,
    },
}


@pytest.fixture
def write_config(tmp_path):
    """Write a TrainConfig JSON (one key per line) and return its path."""
    def write(overrides=None, name="run.json"):
        data = {**TINY_CLASSIFIER, **(overrides or {})}
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return path
    return write
