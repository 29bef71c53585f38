"""Stacked recurrent classifier with a one-unit sigmoid head."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import _binio
from ..errors import NonFiniteActivation, ShapeMismatch
from . import cells

P_CLIP = 1e-7
CHECKPOINT_FORMAT = "crashwatch.seqnet"
CHECKPOINT_VERSION = 1

NEURON_GRID = (32, 64, 128)
LAYER_GRID = (1, 2)
LEARNING_RATE_GRID = (0.001, 0.01, 0.1)


@dataclass(frozen=True)
class RnnHyper:
    cell: str = "simple"
    neurons: int = 32
    layers: int = 1
    learning_rate: float = 0.01
    max_epochs: int = 50
    patience: int = 10
    l1: float = 1e-5
    l2: float = 1e-4
    batch_size: int = 32
    seed: int = 0
    activation: str = "relu"
    min_delta: float = 1e-6

    def __post_init__(self):
        if self.cell not in cells.GATES:
            raise ValueError(f"cell must be one of {sorted(cells.GATES)}")
        if self.activation not in cells.ACTIVATIONS:
            raise ValueError(f"activation must be one of {sorted(cells.ACTIVATIONS)}")
        if self.neurons < 1 or self.layers < 1 or self.batch_size < 1:
            raise ValueError("neurons, layers and batch_size must be positive")

    def in_study_grid(self) -> bool:
        return (self.neurons in NEURON_GRID and self.layers in LAYER_GRID
                and self.learning_rate in LEARNING_RATE_GRID)


def _glorot(rng, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


class RecurrentNet:
    """``layers`` recurrent layers of width ``neurons`` followed by dense(1) + sigmoid.

    Parameters live in ``self.layers`` (one dict per recurrent layer with
    ``Wx``, ``Wh``, ``b``) and ``self.head`` (``w``: H x 1, ``b``: 1).
    """

    def __init__(self, n_features, cell="simple", neurons=32, layers=1, activation="relu",
                 l1=0.0, l2=0.0, seed=None):
        if cell not in cells.GATES:
            raise ValueError(f"unknown cell {cell!r}")
        self.n_features = int(n_features)
        self.cell = cell
        self.neurons = int(neurons)
        self.n_layers = int(layers)
        self.activation = activation
        self.l1 = float(l1)
        self.l2 = float(l2)
        self.seed = seed
        G, H = cells.GATES[cell], self.neurons
        self.layers = []
        for k in range(self.n_layers):
            fin = self.n_features if k == 0 else H
            self.layers.append({
                "Wx": np.zeros((fin, G * H)),
                "Wh": np.zeros((H, G * H)),
                "b": np.zeros(G * H),
            })
        self.head = {"w": np.zeros((H, 1)), "b": np.zeros(1)}
        if seed is not None:
            self.initialize(seed)

    @classmethod
    def from_hyper(cls, n_features: int, hyper: RnnHyper) -> "RecurrentNet":
        return cls(n_features, hyper.cell, hyper.neurons, hyper.layers, hyper.activation,
                   hyper.l1, hyper.l2, seed=hyper.seed)

    def initialize(self, seed) -> None:
        """Glorot-uniform kernels and recurrent kernels, zero biases."""
        rng = np.random.default_rng(seed)
        G, H = cells.GATES[self.cell], self.neurons
        for k, p in enumerate(self.layers):
            fin = p["Wx"].shape[0]
            p["Wx"][...] = _glorot(rng, fin, G * H)
            p["Wh"][...] = _glorot(rng, H, G * H)
            p["b"][...] = 0.0
        self.head["w"][...] = _glorot(rng, H, 1)
        self.head["b"][...] = 0.0

    @property
    def architecture(self) -> dict:
        return {
            "cell": self.cell, "n_features": self.n_features, "neurons": self.neurons,
            "layers": self.n_layers, "activation": self.activation, "l1": self.l1, "l2": self.l2,
        }

    def named_params(self):
        """(name, array) pairs in a fixed order; arrays are live views."""
        for k, p in enumerate(self.layers):
            for key in ("Wx", "Wh", "b"):
                yield f"{k}.{key}", p[key]
        yield "head.w", self.head["w"]
        yield "head.b", self.head["b"]

    def regularized_params(self):
        for k, p in enumerate(self.layers):
            for key in ("Wx", "Wh", "b"):
                yield f"{k}.{key}", p[key]

    def get_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for _, a in self.named_params()])

    def set_flat(self, flat) -> None:
        pos = 0
        for _, a in self.named_params():
            a[...] = np.reshape(flat[pos:pos + a.size], a.shape)
            pos += a.size

    def copy(self) -> "RecurrentNet":
        other = RecurrentNet(self.n_features, self.cell, self.neurons, self.n_layers,
                             self.activation, self.l1, self.l2)
        other.seed = self.seed
        other.set_flat(self.get_flat())
        return other

    # -- forward / loss / backward --------------------------------------

    def _check_input(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 3 or X.shape[2] != self.n_features:
            raise ShapeMismatch(f"expected N x T x {self.n_features} input, got {X.shape}")
        return X

    def _forward(self, X):
        caches = []
        seq = X
        for p in self.layers:
            seq, cache = cells.forward(self.cell, p, seq, self.activation)
            if not np.all(np.isfinite(seq)):
                raise NonFiniteActivation("hidden state overflowed; training has diverged")
            caches.append(cache)
        h_last = seq[:, -1]
        z = (h_last @ self.head["w"])[:, 0] + self.head["b"][0]
        return cells.sigmoid(z), h_last, caches

    def predict_proba(self, X, chunk: int = 4096) -> np.ndarray:
        X = getattr(X, "values", X)
        X = np.asarray(X, dtype=float)
        if X.size == 0 and X.ndim != 3:
            return np.empty(0)
        X = self._check_input(X)
        if X.shape[0] == 0:
            return np.empty(0)
        out = [self._forward(X[s:s + chunk])[0] for s in range(0, X.shape[0], chunk)]
        return np.concatenate(out)

    def forward(self, x) -> float:
        """Crash probability for one T x F sequence."""
        x = np.asarray(x, dtype=float)
        return float(self._forward(self._check_input(x[None]))[0][0])

    def penalty(self) -> float:
        total = 0.0
        for _, a in self.regularized_params():
            total += self.l1 * np.abs(a).sum() + self.l2 * (a * a).sum()
        return float(total)

    def loss(self, X, y) -> float:
        X = self._check_input(X)
        y = np.asarray(y, dtype=float)
        p = self._forward(X)[0]
        return bce(p, y) + self.penalty()

    def loss_and_grad(self, X, y):
        """Mean clipped binary cross-entropy plus L1/L2, and its exact gradient."""
        X = self._check_input(X)
        y = np.asarray(y, dtype=float)
        N = X.shape[0]
        p, h_last, caches = self._forward(X)
        loss = bce(p, y) + self.penalty()

        inside = (p >= P_CLIP) & (p <= 1.0 - P_CLIP)
        dz = np.where(inside, p - y, 0.0) / N
        grads = {
            "head.w": h_last.T @ dz[:, None],
            "head.b": np.array([dz.sum()]),
        }
        T = X.shape[1]
        dseq = np.zeros((N, T, self.neurons))
        dseq[:, -1] = dz[:, None] * self.head["w"][:, 0][None, :]
        for k in reversed(range(self.n_layers)):
            g, dseq = cells.backward(self.cell, self.layers[k], caches[k], dseq, self.activation)
            for key, val in g.items():
                w = self.layers[k][key]
                grads[f"{k}.{key}"] = val + self.l1 * np.sign(w) + 2.0 * self.l2 * w
        return loss, grads

    # -- persistence ----------------------------------------------------

    def dumps(self, hyper: RnnHyper | None = None, epoch: int | None = None, extra: dict | None = None) -> bytes:
        header = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "architecture": self.architecture,
            "hyper": asdict(hyper) if hyper is not None else None,
            "seed": self.seed,
            "epoch": epoch,
            "layout": [[name, list(a.shape)] for name, a in self.named_params()],
            "extra": extra or {},
        }
        return _binio.dumps(header, self.get_flat())

    def save(self, path, **kw) -> None:
        with open(path, "wb") as fh:
            fh.write(self.dumps(**kw))

    @classmethod
    def loads(cls, blob: bytes) -> tuple["RecurrentNet", dict]:
        header, payload = _binio.loads(blob)
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a recurrent-net checkpoint")
        a = header["architecture"]
        net = cls(a["n_features"], a["cell"], a["neurons"], a["layers"], a["activation"], a["l1"], a["l2"])
        net.seed = header.get("seed")
        expected = sum(int(np.prod(s)) for _, s in header["layout"])
        if payload.size != expected:
            raise ValueError(f"checkpoint payload has {payload.size} values, layout needs {expected}")
        net.set_flat(payload)
        return net, header

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.loads(fh.read())


def bce(p, y) -> float:
    pc = np.clip(p, P_CLIP, 1.0 - P_CLIP)
    return float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))
