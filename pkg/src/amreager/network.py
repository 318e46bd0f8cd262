"""Feed-forward classifiers over feature templates, in plain numpy.

A model owns three trainable embedding tables (words, POS tags, dependency
labels), concatenates their lookups with one-hot entity/scalar channels and
sparse flags, and runs two tanh hidden layers into a softmax.  Training is
minibatch SGD on cross-entropy with a linearly decaying learning rate,
fully deterministic for a given seed and dataset order.

Models persist to a directory: a JSON manifest, one binary blob per
parameter (shape header of little-endian uint32s followed by row-major
little-endian float32 values), and one text file per vocabulary.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import (
    FeatureVector,
    PAD,
    SCALAR_BUCKETS,
    TEMPLATE_SHAPES,
    UNK,
)

FORMAT_VERSION = 1


class Vocab:
    """Symbol inventory with padding and unknown entries at indices 0/1."""

    def __init__(self, symbols: Iterable[str] = ()):
        ordered = [PAD, UNK] + sorted(set(symbols) - {PAD, UNK})
        self.symbols: tuple[str, ...] = tuple(ordered)
        self._index = {s: i for i, s in enumerate(ordered)}

    def index(self, symbol: str) -> int:
        return self._index.get(symbol, 1)

    def __len__(self) -> int:
        return len(self.symbols)

    def save(self, path: Path) -> None:
        path.write_text("".join(f"{s}\n" for s in self.symbols), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Vocab":
        vocab = cls.__new__(cls)
        vocab.symbols = tuple(path.read_text(encoding="utf-8").splitlines())
        vocab._index = {s: i for i, s in enumerate(vocab.symbols)}
        return vocab


@dataclass
class FeatureSpace:
    """Vocabularies of one template, fixing the model's input layout."""

    template: str
    words: Vocab
    pos: Vocab
    deps: Vocab
    entities: Vocab

    @classmethod
    def build(cls, template: str, vectors: Iterable[FeatureVector]) -> "FeatureSpace":
        words: set[str] = set()
        pos: set[str] = set()
        deps: set[str] = set()
        entities: set[str] = set()
        for fv in vectors:
            if fv.template != template:
                raise ValueError(f"expected template {template!r}, got {fv.template!r}")
            words.update(fv.words)
            pos.update(fv.pos)
            deps.update(fv.deps)
            entities.update(fv.entities)
        return cls(template, Vocab(words), Vocab(pos), Vocab(deps), Vocab(entities))

    @property
    def shape(self) -> tuple[int, int, int, int, int, int]:
        return TEMPLATE_SHAPES[self.template]

    def encode(self, vectors: Sequence[FeatureVector]) -> dict[str, np.ndarray]:
        """Index a batch of feature vectors; rejects foreign templates."""
        for fv in vectors:
            if fv.template != self.template:
                raise ValueError(
                    f"template mismatch: model expects {self.template!r}, got {fv.template!r}"
                )
        return {
            "words": np.array([[self.words.index(s) for s in fv.words] for fv in vectors], dtype=np.int64),
            "pos": np.array([[self.pos.index(s) for s in fv.pos] for fv in vectors], dtype=np.int64),
            "deps": np.array([[self.deps.index(s) for s in fv.deps] for fv in vectors], dtype=np.int64),
            "entities": np.array([[self.entities.index(s) for s in fv.entities] for fv in vectors], dtype=np.int64),
            "scalars": np.array([fv.scalars for fv in vectors], dtype=np.int64).reshape(len(vectors), -1),
            "flags": np.array([fv.flags for fv in vectors], dtype=np.float64).reshape(len(vectors), -1),
        }


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 20
    seed: int = 42
    word_dim: int = 50
    pos_dim: int = 20
    dep_dim: int = 20
    hidden: int = 200
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("need at least one epoch")


def _onehot(indices: np.ndarray, width: int) -> np.ndarray:
    batch, slots = indices.shape
    out = np.zeros((batch, slots, width), dtype=np.float64)
    if slots:
        out[np.arange(batch)[:, None], np.arange(slots)[None, :], indices] = 1.0
    return out.reshape(batch, slots * width)


class FeedForwardModel:
    """softmax(W2·tanh(W1·tanh(W0·x + b0) + b1) + b2) over a class list."""

    def __init__(
        self,
        space: FeatureSpace,
        classes: Sequence[str],
        config: TrainConfig,
        rng: np.random.Generator,
        pretrained_words: tuple[Sequence[str], np.ndarray] | None = None,
    ):
        if len(set(classes)) != len(classes):
            raise ValueError("duplicate class labels")
        self.space = space
        self.classes = tuple(classes)
        self.class_index = {c: i for i, c in enumerate(self.classes)}
        self.config = config
        n_words, n_pos, n_deps, n_entities, n_scalars, n_flags = space.shape
        self.input_dim = (
            n_words * config.word_dim
            + n_pos * config.pos_dim
            + n_deps * config.dep_dim
            + n_entities * len(space.entities)
            + n_scalars * SCALAR_BUCKETS
            + n_flags
        )

        def glorot(fan_in: int, fan_out: int) -> np.ndarray:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-bound, bound, size=(fan_in, fan_out))

        self.params: dict[str, np.ndarray] = {
            "E_word": rng.uniform(-0.01, 0.01, size=(len(space.words), config.word_dim)),
            "E_pos": rng.uniform(-0.01, 0.01, size=(len(space.pos), config.pos_dim)),
            "E_dep": rng.uniform(-0.01, 0.01, size=(len(space.deps), config.dep_dim)),
            "W0": glorot(self.input_dim, config.hidden),
            "b0": np.zeros(config.hidden),
            "W1": glorot(config.hidden, config.hidden),
            "b1": np.zeros(config.hidden),
            "W2": glorot(config.hidden, len(self.classes)),
            "b2": np.zeros(len(self.classes)),
        }
        if pretrained_words is not None:
            vocab_words, matrix = pretrained_words
            if matrix.shape[1] != config.word_dim:
                raise ValueError(
                    f"pretrained embeddings have dimension {matrix.shape[1]}, "
                    f"model wants {config.word_dim}"
                )
            rows = {w: matrix[i] for i, w in enumerate(vocab_words)}
            for i, symbol in enumerate(space.words.symbols):
                if symbol in rows:
                    self.params["E_word"][i] = rows[symbol]
        self.history: list[dict] = []

    # -- forward / backward ------------------------------------------------

    def _compose_input(self, enc: dict[str, np.ndarray]) -> np.ndarray:
        batch = enc["words"].shape[0]
        parts = [
            self.params["E_word"][enc["words"]].reshape(batch, -1),
            self.params["E_pos"][enc["pos"]].reshape(batch, -1),
            self.params["E_dep"][enc["deps"]].reshape(batch, -1),
            _onehot(enc["entities"], len(self.space.entities)),
            _onehot(enc["scalars"], SCALAR_BUCKETS),
            enc["flags"],
        ]
        return np.concatenate(parts, axis=1)

    def _forward(self, x: np.ndarray):
        h0 = np.tanh(x @ self.params["W0"] + self.params["b0"])
        h1 = np.tanh(h0 @ self.params["W1"] + self.params["b1"])
        logits = h1 @ self.params["W2"] + self.params["b2"]
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - log_z
        return h0, h1, log_probs

    def forward(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        """Class probability rows for a batch of feature vectors."""
        enc = self.space.encode(vectors)
        _, _, log_probs = self._forward(self._compose_input(enc))
        return np.exp(log_probs)

    def distribution(self, fv: FeatureVector) -> dict[str, float]:
        probs = self.forward([fv])[0]
        return {c: float(p) for c, p in zip(self.classes, probs)}

    def predict(self, fv: FeatureVector) -> str:
        return self.classes[int(np.argmax(self.forward([fv])[0]))]

    def accuracy(self, dataset: Sequence[tuple[FeatureVector, str]]) -> float:
        if not dataset:
            return 0.0
        enc = self.space.encode([fv for fv, _ in dataset])
        _, _, log_probs = self._forward(self._compose_input(enc))
        predicted = np.argmax(log_probs, axis=1)
        gold = np.array([self.class_index[label] for _, label in dataset])
        return float((predicted == gold).mean())

    def loss_and_gradients(
        self, enc: dict[str, np.ndarray], labels: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean cross-entropy over the batch and gradients for every
        parameter, including the embedding tables."""
        x = self._compose_input(enc)
        h0, h1, log_probs = self._forward(x)
        batch = x.shape[0]
        loss = -float(log_probs[np.arange(batch), labels].mean())

        d_logits = np.exp(log_probs)
        d_logits[np.arange(batch), labels] -= 1.0
        d_logits /= batch

        grads: dict[str, np.ndarray] = {}
        grads["W2"] = h1.T @ d_logits
        grads["b2"] = d_logits.sum(axis=0)
        d_h1 = d_logits @ self.params["W2"].T
        d_z1 = d_h1 * (1.0 - h1 * h1)
        grads["W1"] = h0.T @ d_z1
        grads["b1"] = d_z1.sum(axis=0)
        d_h0 = d_z1 @ self.params["W1"].T
        d_z0 = d_h0 * (1.0 - h0 * h0)
        grads["W0"] = x.T @ d_z0
        grads["b0"] = d_z0.sum(axis=0)
        d_x = d_z0 @ self.params["W0"].T

        offset = 0
        for name, key, dim in (
            ("E_word", "words", self.config.word_dim),
            ("E_pos", "pos", self.config.pos_dim),
            ("E_dep", "deps", self.config.dep_dim),
        ):
            indices = enc[key]
            slots = indices.shape[1]
            grad = np.zeros_like(self.params[name])
            piece = d_x[:, offset : offset + slots * dim].reshape(batch, slots, dim)
            np.add.at(grad, indices, piece)
            grads[name] = grad
            offset += slots * dim
        return loss, grads

    # -- persistence ---------------------------------------------------

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": FORMAT_VERSION,
            "template": self.space.template,
            "classes": list(self.classes),
            "word_dim": self.config.word_dim,
            "pos_dim": self.config.pos_dim,
            "dep_dim": self.config.dep_dim,
            "hidden": self.config.hidden,
            "seed": self.config.seed,
        }
        (directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        for name, vocab in self._vocab_files():
            vocab.save(directory / name)
        for name, matrix in sorted(self.params.items()):
            _write_matrix(directory / f"{name}.mat", matrix)

    def _vocab_files(self):
        return (
            ("words.vocab", self.space.words),
            ("pos.vocab", self.space.pos),
            ("deps.vocab", self.space.deps),
            ("entities.vocab", self.space.entities),
        )

    @classmethod
    def load(cls, directory) -> "FeedForwardModel":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        if manifest["format"] != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {manifest['format']}")
        space = FeatureSpace(
            template=manifest["template"],
            words=Vocab.load(directory / "words.vocab"),
            pos=Vocab.load(directory / "pos.vocab"),
            deps=Vocab.load(directory / "deps.vocab"),
            entities=Vocab.load(directory / "entities.vocab"),
        )
        config = TrainConfig(
            word_dim=manifest["word_dim"],
            pos_dim=manifest["pos_dim"],
            dep_dim=manifest["dep_dim"],
            hidden=manifest["hidden"],
            seed=manifest["seed"],
        )
        model = cls(space, manifest["classes"], config, np.random.default_rng(0))
        for name in model.params:
            model.params[name] = _read_matrix(directory / f"{name}.mat")
        return model


def _write_matrix(path: Path, matrix: np.ndarray) -> None:
    array = np.ascontiguousarray(matrix, dtype="<f4")
    with open(path, "wb") as handle:
        handle.write(struct.pack("<I", array.ndim))
        handle.write(struct.pack(f"<{array.ndim}I", *array.shape))
        handle.write(array.tobytes())


def _read_matrix(path: Path) -> np.ndarray:
    with open(path, "rb") as handle:
        (rank,) = struct.unpack("<I", handle.read(4))
        shape = struct.unpack(f"<{rank}I", handle.read(4 * rank))
        data = np.frombuffer(handle.read(), dtype="<f4")
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {np.prod(shape)} values, found {data.size}")
    return data.reshape(shape).astype(np.float64)


# ---------------------------------------------------------------------------
# training


def train(
    dataset: Sequence[tuple[FeatureVector, str]],
    config: TrainConfig | None = None,
    dev: Sequence[tuple[FeatureVector, str]] | None = None,
    classes: Sequence[str] | None = None,
    space: FeatureSpace | None = None,
    pretrained_words: tuple[Sequence[str], np.ndarray] | None = None,
) -> FeedForwardModel:
    """Minibatch SGD with a linearly decaying learning rate.

    Deterministic given (dataset order, seed).  With a dev set, the
    parameters from the best dev epoch are restored at the end; otherwise
    the final parameters are kept.
    """
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    config = config or TrainConfig()
    if classes is None:
        classes = sorted({label for _, label in dataset})
    known = set(classes)
    for _, label in list(dataset) + list(dev or []):
        if label not in known:
            raise ValueError(f"unknown label {label!r}")
    template = dataset[0][0].template
    if space is None:
        space = FeatureSpace.build(template, (fv for fv, _ in dataset))

    rng = np.random.default_rng(config.seed)
    model = FeedForwardModel(space, classes, config, rng, pretrained_words)

    enc_all = space.encode([fv for fv, _ in dataset])
    labels_all = np.array([model.class_index[label] for _, label in dataset])
    n = len(dataset)
    batches_per_epoch = max(1, (n + config.batch_size - 1) // config.batch_size)
    total_updates = config.epochs * batches_per_epoch

    best_dev = -1.0
    best_params: dict[str, np.ndarray] | None = None
    update = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            chosen = order[start : start + config.batch_size]
            enc = {key: value[chosen] for key, value in enc_all.items()}
            loss, grads = model.loss_and_gradients(enc, labels_all[chosen])
            lr = config.learning_rate * (1.0 - update / total_updates)
            for name, grad in grads.items():
                model.params[name] -= lr * grad
            epoch_loss += loss * len(chosen)
            update += 1
        record = {"epoch": epoch + 1, "loss": epoch_loss / n}
        if dev is not None:
            record["dev_accuracy"] = model.accuracy(dev)
            if record["dev_accuracy"] > best_dev:
                best_dev = record["dev_accuracy"]
                best_params = {k: v.copy() for k, v in model.params.items()}
        model.history.append(record)
    if best_params is not None:
        model.params = best_params
    return model


def load_embeddings(path, seed: int = 42) -> tuple[Vocab, np.ndarray]:
    """Read a text embedding file: one ``word v1 ... vd`` line per word.

    Returns a vocabulary (padding and unknown symbols first) and a matrix
    indexed by it.  The two special rows are not in the file; they are
    seeded uniform in [-0.01, 0.01].  File rows are copied verbatim.
    """
    by_word: dict[str, list[float]] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            parts = line.split()
            if not parts:
                continue
            values = [float(v) for v in parts[1:]]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{line_no}: expected {dim} values, found {len(values)}"
                )
            by_word[parts[0]] = values
    if dim is None:
        raise ValueError(f"{path}: no embedding rows")
    vocab = Vocab(by_word)
    rng = np.random.default_rng(seed)
    matrix = np.empty((len(vocab), dim), dtype=np.float64)
    matrix[:2] = rng.uniform(-0.01, 0.01, size=(2, dim))
    for i, word in enumerate(vocab.symbols[2:], start=2):
        matrix[i] = by_word[word]
    return vocab, matrix
