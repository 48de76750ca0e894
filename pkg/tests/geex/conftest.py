import pytest

from geex.training import gen_synthetic_dataset, train_toy

TOY_ARCH = [{"units": 16, "activation": "relu"}, {"units": 2, "activation": "identity"}]


@pytest.fixture(scope="session")
def dataset():
    return gen_synthetic_dataset("two_blob_8x8", n=512, noise_sigma=0.1, seed=13)


@pytest.fixture(scope="session")
def toy_net(dataset):
    """Two-blob classifier whose logits are explained; trained once per session."""
    return train_toy(dataset, TOY_ARCH, epochs=200, lr=0.5, seed=0)


@pytest.fixture(scope="session")
def class0_inputs(dataset):
    """The first four class-0 samples."""
    return [dataset.sample(i) for i in range(0, 8, 2)]
