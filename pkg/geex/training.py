from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, softmax

from geex.constants import Activation
from geex.dense_net import DenseNet, Layer, activation_vjp, forward_trace
from geex.errors import BadArch, BadCount, EmptyDataset, ShapeMismatch
from geex.grid import Grid

logger = logging.getLogger(__name__)

TWO_BLOB_8X8 = "two_blob_8x8"


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    Labeled Grids stored as one stack.
    Attributes:
        samples (np.ndarray): Inputs, shape (n, *shape).
        labels (np.ndarray): Integer class of every sample, shape (n,).
        num_classes (int): Number of classes.
        patches (dict[int, list[tuple[int, int]]]): Ground-truth relevant pixels of every class.
    """

    samples: np.ndarray
    labels: np.ndarray
    num_classes: int
    patches: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def shape(self) -> tuple:
        return tuple(self.samples.shape[1:])

    def sample(self, i: int) -> Grid:
        return Grid(self.samples[i])

    def patch_mask(self, label: int) -> Grid:
        """1 on the ground-truth pixels of a class, 0 elsewhere."""
        mask = np.zeros(self.shape)
        for row, col in self.patches[label]:
            mask[row, col] = 1.0
        return Grid(mask)


def _patch(top: int, left: int, size: int = 3) -> list[tuple[int, int]]:
    return [(top + r, left + c) for r in range(size) for c in range(size)]


def gen_synthetic_dataset(
    kind: str = TWO_BLOB_8X8, n: int = 512, noise_sigma: float = 0.1, seed: int = 13
) -> LabeledDataset:
    """
    Builds a synthetic image dataset whose relevant pixels are known.
    Args:
        kind (str): Only "two_blob_8x8": a bright 3x3 patch top-left is class 0,
            bottom-right is class 1, on an 8x8 zero background.
        n (int): Number of samples, at least 2; labels alternate 0, 1, 0, ...
        noise_sigma (float): Standard deviation of the additive Gaussian pixel noise.
        seed (int): Seed of the noise.
    Returns:
        LabeledDataset: Samples, labels and the patch coordinates of every class.
    Raises:
        BadCount: If n < 2.
    """
    if kind != TWO_BLOB_8X8:
        raise ValueError(f"unknown dataset kind {kind!r}, expected {TWO_BLOB_8X8!r}")
    if int(n) != n or n < 2:
        raise BadCount(f"a dataset needs at least 2 samples, got {n}")
    patches = {0: _patch(0, 0), 1: _patch(5, 5)}
    labels = np.arange(int(n)) % 2
    samples = np.zeros((int(n), 8, 8))
    for label, pixels in patches.items():
        selected = np.flatnonzero(labels == label)
        for row, col in pixels:
            samples[selected, row, col] = 1.0
    if noise_sigma > 0:
        samples = samples + np.random.default_rng(seed).normal(0.0, noise_sigma, samples.shape)
    return LabeledDataset(samples=samples, labels=labels, num_classes=2, patches=patches)


def accuracy(net: DenseNet, dataset: LabeledDataset) -> float:
    predictions = np.argmax(net.query_batch(dataset.samples), axis=1)
    return float(np.mean(predictions == dataset.labels))


def _output_delta(activation: str, z: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of the mean cross-entropy with respect to the last pre-activations."""
    if activation == Activation.sigmoid:
        probabilities = expit(z)
    elif activation in (Activation.softmax, Activation.identity):
        probabilities = softmax(z, axis=1)
    else:
        raise BadArch(f"cannot train a network whose last activation is {activation!r}")
    return (probabilities - targets) / z.shape[0]


def train_toy(
    dataset: LabeledDataset,
    arch: list[dict],
    epochs: int = 200,
    lr: float = 0.5,
    seed: int = 0,
    input_range: tuple = (0.0, 1.0),
) -> DenseNet:
    """
    Trains a dense network with plain full-batch gradient descent on cross-entropy.
    Args:
        dataset (LabeledDataset): Training data, non-empty.
        arch (list of dict): Layer configurations as accepted by DenseNet.layers_init;
            the last layer needs one unit per class and a sigmoid, softmax or identity
            activation (identity outputs are trained as softmax logits).
        epochs (int): Number of gradient steps; 0 returns the seeded initialization.
        lr (float): Learning rate.
        seed (int): Seed of the weight initialization.
        input_range (tuple): Declared input range of the returned network.
    Returns:
        DenseNet: The trained network, with `training_accuracy` set.
    Raises:
        EmptyDataset: If the dataset holds no samples.
        BadArch: If the architecture does not fit the dataset.
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    if not arch or int(arch[-1].get("units", 0)) != dataset.num_classes:
        raise BadArch(
            f"layer {max(len(arch) - 1, 0)}: the last layer needs {dataset.num_classes} units"
        )
    if dataset.labels.shape != (len(dataset),):
        raise ShapeMismatch("dataset needs exactly one label per sample")

    net = DenseNet.layers_init(arch, dataset.shape, seed=seed, input_range=input_range)
    weights = [layer.weights.array.copy() for layer in net.layers]
    biases = [layer.bias.array.copy() for layer in net.layers]
    activations = [layer.activation for layer in net.layers]
    targets = np.eye(dataset.num_classes)[dataset.labels]
    x = dataset.samples.reshape(len(dataset), -1)

    for epoch in range(int(epochs)):
        inputs, pre_activations, h = forward_trace(weights, biases, activations, x)
        delta = _output_delta(activations[-1], pre_activations[-1], targets)
        for i in reversed(range(len(weights))):
            if i < len(weights) - 1:
                delta = activation_vjp(activations[i], pre_activations[i], delta)
            grad_w = delta.T @ inputs[i]
            grad_b = delta.sum(axis=0)
            delta = delta @ weights[i]
            weights[i] -= lr * grad_w
            biases[i] -= lr * grad_b
        if epoch % 50 == 0:
            logger.debug("epoch %d: loss %.6f", epoch, _cross_entropy(h, targets, activations[-1]))

    trained = DenseNet(
        [Layer(Grid(w), Grid(b), a) for w, b, a in zip(weights, biases, activations)],
        dataset.shape,
        input_range=input_range,
    )
    trained.training_accuracy = accuracy(trained, dataset)
    logger.info("trained %s for %d epochs: accuracy %.4f", trained, epochs, trained.training_accuracy)
    return trained


def _cross_entropy(outputs: np.ndarray, targets: np.ndarray, activation: str) -> float:
    if activation == Activation.identity:
        outputs = softmax(outputs, axis=1)
    outputs = np.clip(outputs, 1e-12, 1.0)
    return float(-np.mean(np.sum(targets * np.log(outputs), axis=1)))
