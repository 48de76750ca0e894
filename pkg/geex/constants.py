class _Names:
    """Plain namespace of string constants; subclasses list their values as class attributes."""

    @classmethod
    def all(cls) -> list[str]:
        return [
            value
            for name, value in vars(cls).items()
            if not name.startswith("_") and isinstance(value, str)
        ]


class GridOp(_Names):
    add = "add"
    sub = "sub"
    mul = "mul"
    scale = "scale"


class KernelNorm(_Names):
    frobenius = "frobenius"
    sum = "sum"


class AlphaMode(_Names):
    iid_uniform = "iid_uniform"
    stratified = "stratified"


class Capability(_Names):
    black_box = "black_box"
    white_box = "white_box"


class Activation(_Names):
    relu = "relu"
    sigmoid = "sigmoid"
    identity = "identity"
    softmax = "softmax"


class OutputKind(_Names):
    probability = "probability"
    logit = "logit"
    score = "score"


class Method(_Names):
    ge = "ge"
    geex_interpolated = "geex-interp"
    geex = "geex"
    ig = "ig"
    smoothgrad = "smoothgrad"
    random = "random"


class BaselineKind(_Names):
    zeros = "zeros"
    blurred_explicand = "blur"
    custom = "custom"


class Replacement(_Names):
    baseline = "baseline"
    gaussian = "gaussian"
