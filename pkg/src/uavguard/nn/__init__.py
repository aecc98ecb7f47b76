from .layers import (
    GRU,
    LSTM,
    Concat,
    Conv2D,
    Dense,
    Flatten,
    Layer,
    MaxPool2D,
    ReLU,
    ShapeError,
    Sigmoid,
    Tanh,
    TimeDistributed,
    sigmoid,
)
from .graph import Gradients, Network, Tape, network_from_spec
from .adam import Adam
from .io import (
    WeightFormatError,
    load_network,
    load_weights,
    read_weight_stream,
    save_network,
    save_weights,
)
