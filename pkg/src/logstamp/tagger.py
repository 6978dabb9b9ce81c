"""Word-level TEMPLATE/VARIABLE classifier over frozen contextual embeddings."""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .encoder import EncoderModel, embed_id_batch
from .errors import ConsistencyError, InputError, ParameterError
from .labeler import LabeledSentence, WordLabel
from .modelio import read_container, write_container

log = logging.getLogger(__name__)

MAGIC = b"LSTMP-TAG"


class Architecture(str, enum.Enum):
    RECURRENT_BIDIR = "RECURRENT_BIDIR"
    RECURRENT_UNIDIR = "RECURRENT_UNIDIR"
    CONVOLUTIONAL = "CONVOLUTIONAL"


@dataclass(frozen=True)
class TaggerConfig:
    architecture: Architecture = Architecture.RECURRENT_BIDIR
    hidden_dim: int = 64
    epochs: int = 10
    learning_rate: float = 0.01
    seed: int = 0
    batch_size: int = 32
    optimizer: str = "adam"
    # chance that a VARIABLE-labelled token is fed to the encoder as the
    # unknown token during training, so unseen values at parse time look familiar
    unk_dropout: float = 0.25

    def __post_init__(self):
        try:
            object.__setattr__(self, "architecture", Architecture(self.architecture))
        except ValueError:
            raise ParameterError(f"tagger.architecture must be one of "
                                 f"{[a.value for a in Architecture]}, got {self.architecture!r}") from None
        if self.hidden_dim < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("tagger.hidden_dim, epochs and batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ParameterError("tagger.learning_rate must be positive")
        if not 0.0 <= self.unk_dropout < 1.0:
            raise ParameterError("tagger.unk_dropout must be in [0, 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ParameterError(f"tagger.optimizer must be adam or sgd, got {self.optimizer!r}")


@dataclass
class TaggerModel:
    architecture: Architecture
    params: dict[str, np.ndarray]
    config: TaggerConfig
    training_meta: dict = field(default_factory=dict)


def param_names(arch: Architecture) -> tuple[str, ...]:
    if arch is Architecture.RECURRENT_BIDIR:
        return ("Wf", "Uf", "bf", "Wb", "Ub", "bb", "Wo", "bo")
    if arch is Architecture.RECURRENT_UNIDIR:
        return ("Wf", "Uf", "bf", "Wo", "bo")
    return ("Wc", "bc", "Wo", "bo")


def init_params(arch: Architecture, input_dim: int, hidden: int, rng: np.random.Generator):
    p: dict[str, np.ndarray] = {}
    if arch is Architecture.CONVOLUTIONAL:
        limit = np.sqrt(6.0 / (3 * input_dim + hidden))
        p["Wc"] = rng.uniform(-limit, limit, size=(3, input_dim, hidden))
        p["bc"] = np.zeros(hidden)
        feat = hidden
    else:
        dirs = ("f", "b") if arch is Architecture.RECURRENT_BIDIR else ("f",)
        for d in dirs:
            p["W" + d] = nn.init_matrix(rng, input_dim, 3 * hidden)
            p["U" + d] = nn.init_matrix(rng, hidden, 3 * hidden)
            p["b" + d] = np.zeros(3 * hidden)
        feat = hidden * len(dirs)
    p["Wo"] = nn.init_matrix(rng, feat, 2)
    p["bo"] = np.zeros(2)
    return p


def _features(params, arch: Architecture, X: np.ndarray):
    if arch is Architecture.CONVOLUTIONAL:
        h, cache = nn.conv3_forward(X, params["Wc"], params["bc"])
        return h, ("conv", cache)
    hf, cf = nn.gru_forward(X, params["Wf"], params["Uf"], params["bf"])
    if arch is Architecture.RECURRENT_UNIDIR:
        return hf, ("uni", cf)
    hb, cb = nn.gru_forward(X, params["Wb"], params["Ub"], params["bb"], reverse=True)
    return np.concatenate([hf, hb], axis=2), ("bi", cf, cb)


def tagger_logits(params, arch: Architecture, X: np.ndarray) -> np.ndarray:
    h, _ = _features(params, arch, X)
    return h @ params["Wo"] + params["bo"]


def tagging_loss(params, arch: Architecture, X: np.ndarray, y: np.ndarray):
    """Mean per-token cross-entropy for inputs ``(B, T, D)`` and labels ``(B, T)``."""
    h, cache = _features(params, arch, X)
    B, T, F = h.shape
    flat_h = h.reshape(B * T, F)
    logits = flat_h @ params["Wo"] + params["bo"]
    loss, dlogits = nn.softmax_xent(logits, y.reshape(-1))
    grads = {"Wo": flat_h.T @ dlogits, "bo": dlogits.sum(axis=0)}
    dh = (dlogits @ params["Wo"].T).reshape(B, T, F)
    kind = cache[0]
    if kind == "conv":
        _, g = nn.conv3_backward(dh, cache[1])
        grads["Wc"], grads["bc"] = g["W"], g["b"]
    elif kind == "uni":
        _, g = nn.gru_backward(dh, cache[1])
        grads["Wf"], grads["Uf"], grads["bf"] = g["W"], g["U"], g["b"]
    else:
        H = F // 2
        _, gf = nn.gru_backward(dh[:, :, :H], cache[1])
        _, gb = nn.gru_backward(dh[:, :, H:], cache[2])
        grads["Wf"], grads["Uf"], grads["bf"] = gf["W"], gf["U"], gf["b"]
        grads["Wb"], grads["Ub"], grads["bb"] = gb["W"], gb["U"], gb["b"]
    return loss, grads


def _check_sentences(labeled: Sequence[LabeledSentence]) -> None:
    if not labeled:
        raise InputError("cannot train a tagger on an empty training set")
    for s in labeled:
        if len(s.tokens) != len(s.labels):
            raise ConsistencyError(f"record {s.record_id}: token/label length mismatch")
        if not s.tokens:
            raise InputError(f"record {s.record_id} has no tokens")


def _predict_ids(model: TaggerModel, encoder: EncoderModel, ids: np.ndarray) -> np.ndarray:
    X = embed_id_batch(encoder, ids)
    logits = tagger_logits(model.params, model.architecture, X)
    # strict comparison: ties go to TEMPLATE
    return (logits[..., 1] > logits[..., 0]).astype(int)


def train_tagger(labeled: Sequence[LabeledSentence], encoder: EncoderModel,
                 config: TaggerConfig = TaggerConfig()) -> TaggerModel:
    _check_sentences(labeled)
    arch = config.architecture
    rng = np.random.default_rng(config.seed)
    params = init_params(arch, encoder.embed_dim, config.hidden_dim, rng)
    id_rows = [np.array(encoder.vocab.ids(s.tokens)) for s in labeled]
    label_rows = [np.array([int(lab) for lab in s.labels]) for s in labeled]
    lengths = [len(r) for r in id_rows]
    unk = encoder.vocab.unk_id
    opt = nn.make_optimizer(config.optimizer, config.learning_rate)

    clean_batches = nn.length_batches(lengths, config.batch_size, None)
    clean_inputs = {}
    for b, idx in enumerate(clean_batches):
        clean_inputs[b] = embed_id_batch(encoder, np.stack([id_rows[i] for i in idx]))

    def dataset_loss():
        total = 0.0
        for b, idx in enumerate(clean_batches):
            y = np.stack([label_rows[i] for i in idx])
            loss, _ = tagging_loss(params, arch, clean_inputs[b], y)
            total += loss * y.size
        return total / sum(lengths)

    initial_loss = dataset_loss()
    epoch_losses = []
    for epoch in range(config.epochs):
        loss_sum = 0.0
        for idx in nn.length_batches(lengths, config.batch_size, rng):
            ids = np.stack([id_rows[i] for i in idx])
            y = np.stack([label_rows[i] for i in idx])
            if config.unk_dropout > 0:
                drop = (y == int(WordLabel.VARIABLE)) & (rng.random(y.shape) < config.unk_dropout)
                ids = np.where(drop, unk, ids)
            X = embed_id_batch(encoder, ids)
            loss, grads = tagging_loss(params, arch, X, y)
            opt.step(params, grads)
            loss_sum += loss * y.size
        epoch_losses.append(float(loss_sum / sum(lengths)))
        log.info("tagger epoch %d/%d: loss %.4f", epoch + 1, config.epochs, epoch_losses[-1])

    params = {k: params[k].astype(np.float32).astype(np.float64) for k in param_names(arch)}
    for k, v in params.items():
        if not np.all(np.isfinite(v)):
            raise ArithmeticError(f"tagger parameter {k} diverged to non-finite values")
    model = TaggerModel(arch, params, config)
    final_loss = dataset_loss()
    model.training_meta = {"initial_loss": float(initial_loss), "epoch_losses": epoch_losses,
                           "final_loss": float(final_loss),
                           "train_token_accuracy": token_accuracy(model, encoder, labeled),
                           "num_sentences": len(labeled), "num_tokens": int(sum(lengths))}
    return model


def tag(model: TaggerModel, encoder: EncoderModel, tokens: Sequence[str]) -> list[WordLabel]:
    if not tokens:
        raise InputError("cannot tag an empty token list")
    pred = _predict_ids(model, encoder, np.array([encoder.vocab.ids(tokens)]))[0]
    return [WordLabel(int(p)) for p in pred]


def tag_many(model: TaggerModel, encoder: EncoderModel,
             token_lists: Sequence[Sequence[str]], batch_size: int = 256) -> list[list[WordLabel]]:
    if any(not t for t in token_lists):
        raise InputError("cannot tag an empty token list")
    id_rows = [encoder.vocab.ids(t) for t in token_lists]
    out: list[list[WordLabel]] = [None] * len(id_rows)  # type: ignore[list-item]
    for idx in nn.length_batches([len(r) for r in id_rows], batch_size, None):
        pred = _predict_ids(model, encoder, np.array([id_rows[i] for i in idx]))
        for j, i in enumerate(idx):
            out[i] = [WordLabel(int(p)) for p in pred[j]]
    return out


def token_accuracy(model: TaggerModel, encoder: EncoderModel,
                   labeled: Sequence[LabeledSentence]) -> float:
    if not labeled:
        raise InputError("token_accuracy needs at least one sentence")
    predicted = tag_many(model, encoder, [s.tokens for s in labeled])
    hits = total = 0
    for s, pred in zip(labeled, predicted):
        hits += sum(p == lab for p, lab in zip(pred, s.labels))
        total += len(s.labels)
    return hits / total


def save_tagger(model: TaggerModel, path: str | Path) -> None:
    cfg = asdict(model.config)
    cfg["architecture"] = model.architecture.value
    header = {"architecture": model.architecture.value, "config": cfg,
              "training_meta": model.training_meta}
    write_container(path, MAGIC, header, {k: model.params[k] for k in param_names(model.architecture)})


def load_tagger(path: str | Path) -> TaggerModel:
    header, arrays = read_container(path, MAGIC)
    config = TaggerConfig(**header["config"])
    arch = Architecture(header["architecture"])
    params = {k: arrays[k].astype(np.float64) for k in param_names(arch)}
    return TaggerModel(arch, params, config, header.get("training_meta", {}))
