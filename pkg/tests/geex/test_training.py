import numpy as np
import pytest

from geex.errors import BadArch, BadCount, EmptyDataset
from geex.training import LabeledDataset, accuracy, gen_synthetic_dataset, train_toy

ARCH = [{"units": 8, "activation": "relu"}, {"units": 2, "activation": "identity"}]


def test_gen_synthetic_dataset(dataset):
    assert len(dataset) == 512
    assert dataset.shape == (8, 8)
    assert np.sum(dataset.labels == 0) == np.sum(dataset.labels == 1), "classes should be balanced"
    assert dataset.patches[0] == [(r, c) for r in range(3) for c in range(3)]
    assert dataset.patches[1] == [(r, c) for r in range(5, 8) for c in range(5, 8)]
    assert dataset.patch_mask(1).data.sum() == 9.0

    clean = gen_synthetic_dataset(n=4, noise_sigma=0.0)
    np.testing.assert_array_equal(clean.samples[0], clean.patch_mask(0).array)
    np.testing.assert_array_equal(clean.samples[1], clean.patch_mask(1).array)


def test_gen_synthetic_dataset_is_deterministic():
    a = gen_synthetic_dataset(n=10, seed=4)
    b = gen_synthetic_dataset(n=10, seed=4)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_gen_synthetic_dataset_invalid():
    with pytest.raises(BadCount, match="at least 2 samples, got 1"):
        gen_synthetic_dataset(n=1)
    with pytest.raises(ValueError, match="unknown dataset kind"):
        gen_synthetic_dataset("three_blob")


def test_train_toy(toy_net, dataset):
    assert toy_net.training_accuracy >= 0.99, "the two-blob task should be learned"
    assert toy_net.training_accuracy == accuracy(toy_net, dataset)
    assert toy_net.input_range == (0.0, 1.0)


def test_train_toy_is_deterministic():
    data = gen_synthetic_dataset(n=32)
    a = train_toy(data, ARCH, epochs=20, seed=3)
    b = train_toy(data, ARCH, epochs=20, seed=3)

    for la, lb in zip(a.layers, b.layers):
        assert la.weights == lb.weights
        assert la.bias == lb.bias


def test_train_toy_invalid():
    data = gen_synthetic_dataset(n=8)
    empty = LabeledDataset(np.zeros((0, 8, 8)), np.zeros(0, dtype=int), 2)
    with pytest.raises(EmptyDataset):
        train_toy(empty, ARCH)
    with pytest.raises(BadArch, match="needs 2 units"):
        train_toy(data, [{"units": 3, "activation": "identity"}])
    with pytest.raises(BadArch, match="last activation is 'relu'"):
        train_toy(data, [{"units": 2, "activation": "relu"}], epochs=1)
