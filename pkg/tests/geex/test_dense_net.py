import numpy as np
import pytest

from geex.constants import Capability, OutputKind
from geex.dense_net import DenseNet, Layer, forward_trace
from geex.errors import BadArch, NotWhiteBox
from geex.grid import Grid


def make_layer(units, activation):
    return {"units": int(units), "activation": activation}


def test_dense_net_layers_init():
    net = DenseNet.layers_init([make_layer(16, "relu"), make_layer(2, "identity")], (8, 8), seed=0)

    assert net.input_shape == (8, 8), "input shape should be kept"
    assert net.num_classes == 2, "the last layer fixes the number of classes"
    assert [layer.weights.shape for layer in net.layers] == [(16, 64), (2, 16)]
    assert all(np.all(layer.bias.array == 0.0) for layer in net.layers), "biases should start at zero"
    assert net.capability == Capability.white_box
    assert net.output_kind == OutputKind.logit
    assert str(net) == "(8, 8) -> 16:relu -> 2:identity"


def test_dense_net_layers_init_is_seeded():
    a = DenseNet.layers_init([make_layer(4, "relu")], (3,), seed=1)
    b = DenseNet.layers_init([make_layer(4, "relu")], (3,), seed=1)
    c = DenseNet.layers_init([make_layer(4, "relu")], (3,), seed=2)

    assert a.layers[0].weights == b.layers[0].weights
    assert a.layers[0].weights != c.layers[0].weights


def test_dense_net_forward():
    layers = [
        Layer(Grid([[1.0, -1.0], [2.0, 0.0]]), Grid([0.0, -1.0]), "relu"),
        Layer(Grid([[1.0, 1.0]]), Grid([0.5]), "identity"),
    ]
    net = DenseNet(layers)

    # hidden = relu([1 - 2, 2 - 1]) = [0, 1]
    assert net.query(Grid([1.0, 2.0])).tolist() == [1.5]
    assert net.gradient(Grid([1.0, 2.0]), 0) == Grid([2.0, 0.0])


def test_forward_trace_records_every_layer():
    weights = [np.array([[1.0, -1.0], [2.0, 0.0]]), np.array([[1.0, 1.0]])]
    biases = [np.array([0.0, -1.0]), np.array([0.5])]
    inputs, pre_activations, out = forward_trace(weights, biases, ["relu", "identity"], np.array([[1.0, 2.0]]))

    assert [a.tolist() for a in inputs] == [[[1.0, 2.0]], [[0.0, 1.0]]]
    assert [z.tolist() for z in pre_activations] == [[[-1.0, 1.0]], [[1.5]]]
    assert out.tolist() == [[1.5]]


def test_dense_net_softmax_outputs():
    net = DenseNet.layers_init([make_layer(5, "sigmoid"), make_layer(3, "softmax")], (4,), seed=3)
    scores = net.query_batch(np.random.default_rng(0).normal(size=(10, 4)))

    np.testing.assert_allclose(scores.sum(axis=1), 1.0, atol=1e-12)
    assert net.output_kind == OutputKind.probability


def test_dense_net_invalid():
    with pytest.raises(BadArch, match="at least one layer"):
        DenseNet([])
    with pytest.raises(BadArch, match="layer 1: expects 3 inputs but layer 0 has 2 outputs"):
        DenseNet([Layer(Grid.zeros((2, 4)), Grid.zeros((2,)), "relu"), Layer(Grid.zeros((1, 3)), Grid.zeros((1,)), "relu")])
    with pytest.raises(BadArch, match="layer 0: unknown activation 'tanh'"):
        DenseNet([Layer(Grid.zeros((2, 4)), Grid.zeros((2,)), "tanh")])
    with pytest.raises(BadArch, match="softmax is only allowed on the last layer"):
        DenseNet([Layer(Grid.zeros((2, 4)), Grid.zeros((2,)), "softmax"), Layer(Grid.zeros((1, 2)), Grid.zeros((1,)), "relu")])
    with pytest.raises(BadArch, match="layer 0: expects 4 inputs"):
        DenseNet([Layer(Grid.zeros((2, 4)), Grid.zeros((2,)), "relu")], input_shape=(3, 3))
    with pytest.raises(BadArch, match="units must be positive"):
        DenseNet.layers_init([make_layer(0, "relu")], (3,))


def test_dense_net_black_box_capability():
    net = DenseNet.layers_init([make_layer(2, "identity")], (3,), capability=Capability.black_box)
    with pytest.raises(NotWhiteBox):
        net.gradient(Grid.zeros((3,)), 0)


def test_identity_layer_keeps_outputs(toy_net):
    first, last = toy_net.layers
    identity = Layer(Grid(np.eye(first.rows)), Grid.zeros((first.rows,)), "identity")
    deeper = DenseNet([first, identity, last], toy_net.input_shape)
    batch = np.random.default_rng(1).uniform(size=(50, 8, 8))

    np.testing.assert_array_equal(deeper.query_batch(batch), toy_net.query_batch(batch))
