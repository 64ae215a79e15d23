import numpy as np
import pytest

from edastress import WindowedDataset


def make_dataset(labels, num_classes, width=8, seed=0, subjects=None) -> WindowedDataset:
    """Random-valued dataset with the given labels, for split/fold/metric tests."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    values = rng.random((len(labels), width))
    # first column encodes the window's identity so partitions can be checked
    values[:, 0] = np.arange(len(labels)) / max(len(labels), 1)
    if subjects is None:
        subjects = ["S2"] * len(labels)
    return WindowedDataset(values, labels, subjects, num_classes)


@pytest.fixture
def tiny_model_config():
    from edastress import ModelConfig
    return ModelConfig(num_classes=2, input_len=20, conv1_filters=3, conv1_kernel=3,
                       conv2_filters=3, conv2_kernel=3, dense1_units=8, dense2_units=4,
                       dropout1=0.0, dropout2=0.0)
