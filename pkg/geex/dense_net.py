from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, softmax

from geex.constants import Activation, Capability, OutputKind
from geex.errors import BadArch
from geex.grid import Grid
from geex.query_model import QueryModel


@dataclass(frozen=True, eq=False)
class Layer:
    """
    One fully connected layer, activation(weights @ h + bias).
    Attributes:
        weights (Grid): Matrix of shape (rows, cols) = (outputs, inputs).
        bias (Grid): Vector of shape (rows,).
        activation (str): One of Activation.all(); softmax only on the last layer.
    """

    weights: Grid
    bias: Grid
    activation: str

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


def activate(activation: str, z: np.ndarray) -> np.ndarray:
    if activation == Activation.relu:
        return np.maximum(z, 0.0)
    if activation == Activation.sigmoid:
        return expit(z)
    if activation == Activation.softmax:
        return softmax(z, axis=1)
    return z


def forward_trace(
    weights: list, biases: list, activations: list, h: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Inputs and pre-activations of every layer plus the output, for a flattened batch h."""
    inputs, pre_activations = [], []
    for w, b, activation in zip(weights, biases, activations):
        inputs.append(h)
        z = h @ w.T + b
        pre_activations.append(z)
        h = activate(activation, z)
    return inputs, pre_activations, h


class DenseNet(QueryModel):
    """
    Stack of dense layers with exact, back-propagated input gradients.
    Attributes:
        layers (list[Layer]): Layers in evaluation order.
        input_shape (tuple[int, ...]): Shape of accepted inputs; flattened row-major into the first layer.
        num_classes (int): Rows of the last layer.
        training_accuracy (float | None): Accuracy recorded by the trainer, if trained.
    """

    def __init__(
        self,
        layers: list[Layer],
        input_shape: tuple = None,
        capability: str = Capability.white_box,
        input_range: tuple = (-np.inf, np.inf),
    ):
        if not layers:
            raise BadArch("a dense network needs at least one layer")
        for i, layer in enumerate(layers):
            if layer.weights.ndim != 2 or layer.bias.shape != (layer.rows,):
                raise BadArch(
                    f"layer {i}: weights {layer.weights.shape} and bias {layer.bias.shape} do not fit"
                )
            if layer.activation not in Activation.all():
                raise BadArch(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.activation == Activation.softmax and i != len(layers) - 1:
                raise BadArch(f"layer {i}: softmax is only allowed on the last layer")
            if i > 0 and layer.cols != layers[i - 1].rows:
                raise BadArch(
                    f"layer {i}: expects {layer.cols} inputs but layer {i - 1} has {layers[i - 1].rows} outputs"
                )
        if input_shape is None:
            input_shape = (layers[0].cols,)
        input_shape = tuple(int(s) for s in input_shape)
        if int(np.prod(input_shape)) != layers[0].cols:
            raise BadArch(
                f"layer 0: expects {layers[0].cols} inputs but input shape {input_shape} has "
                f"{int(np.prod(input_shape))} features"
            )
        if capability not in Capability.all():
            raise ValueError(f"unknown capability {capability!r}")
        self.layers = list(layers)
        self.input_shape = input_shape
        self.num_classes = layers[-1].rows
        self.capability = capability
        self.input_range = (float(input_range[0]), float(input_range[1]))
        self.training_accuracy: Optional[float] = None

    @classmethod
    def layers_init(cls, layers, input_shape, seed: int = 0, **kwargs) -> "DenseNet":
        """
        Initializes a network from a list of layer configurations.
        Args:
            layers (list of dict): One dictionary per layer, each containing:
                - "units" (int): Number of outputs of the layer.
                - "activation" (str): Activation applied to the outputs.
            input_shape (tuple): Shape of the network's inputs.
            seed (int): Seed of the weight initialization.
            **kwargs: Passed on to the constructor (capability, input_range).
        Returns:
            DenseNet: Network with N(0, gain / fan_in) weights and zero biases.
        Notes:
            - ReLU layers use gain 2, every other activation gain 1.
            - Identical arguments always give bit-identical weights.
        """
        if not layers:
            raise BadArch("a dense network needs at least one layer")
        rng = np.random.default_rng(seed)
        fan_in = int(np.prod(input_shape))
        built = []
        for i, spec in enumerate(layers):
            units = int(spec.get("units", 0))
            if units <= 0:
                raise BadArch(f"layer {i}: units must be positive, got {spec.get('units')}")
            gain = 2.0 if spec.get("activation") == Activation.relu else 1.0
            weights = rng.standard_normal((units, fan_in)) * np.sqrt(gain / fan_in)
            built.append(Layer(Grid(weights), Grid.zeros((units,)), spec.get("activation")))
            fan_in = units
        return cls(built, input_shape, **kwargs)

    def __str__(self):
        return " -> ".join(
            [str(self.input_shape)] + [f"{layer.rows}:{layer.activation}" for layer in self.layers]
        )

    @property
    def output_kind(self) -> str:
        if self.layers[-1].activation in (Activation.softmax, Activation.sigmoid):
            return OutputKind.probability
        return OutputKind.logit

    def _forward(self, batch):
        h = batch.reshape(batch.shape[0], -1)
        for layer in self.layers:
            h = activate(layer.activation, h @ layer.weights.array.T + layer.bias.array)
        return h

    def _gradient_batch(self, batch, class_idx):
        _, pre_activations, _ = forward_trace(
            [layer.weights.array for layer in self.layers],
            [layer.bias.array for layer in self.layers],
            [layer.activation for layer in self.layers],
            batch.reshape(batch.shape[0], -1),
        )
        # gradient of the selected output with respect to the last layer's outputs
        upstream = np.zeros((batch.shape[0], self.num_classes))
        upstream[:, class_idx] = 1.0
        for layer, z in zip(reversed(self.layers), reversed(pre_activations)):
            upstream = activation_vjp(layer.activation, z, upstream)
            upstream = upstream @ layer.weights.array
        return upstream.reshape(batch.shape)


def activation_vjp(activation: str, z: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Pulls a gradient with respect to an activation's output back to its input z."""
    if activation == Activation.relu:
        return upstream * (z > 0.0)
    if activation == Activation.sigmoid:
        s = expit(z)
        return upstream * s * (1.0 - s)
    if activation == Activation.softmax:
        p = softmax(z, axis=1)
        return p * (upstream - np.sum(upstream * p, axis=1, keepdims=True))
    return upstream
