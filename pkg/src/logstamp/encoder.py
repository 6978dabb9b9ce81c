"""Compact bidirectional recurrent encoder trained with a masked-token objective.

Each token id is looked up in an embedding table, run through a forward and a
backward tanh recurrence, and the two states at every position are projected
back to ``embed_dim``. That projection is the contextual word embedding. The
masked-token head scores it against the (tied) embedding table.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import nn
from .corpus import Dataset
from .errors import InputError, ParameterError
from .modelio import read_container, write_container

log = logging.getLogger(__name__)

MAGIC = b"LSTMP-ENC"
UNKNOWN = "<unk>"
MASK = "<mask>"
PARAM_ORDER = ("E", "out_bias", "Wf", "Uf", "bf", "Wb", "Ub", "bb", "P", "c")


@dataclass(frozen=True)
class EncoderConfig:
    embed_dim: int = 64
    hidden_dim: int = 128
    epochs: int = 5
    learning_rate: float = 0.01
    mask_probability: float = 0.15
    max_vocab: int = 20000
    # tokens seen once map to the unknown id, so one-off values such as
    # block ids look alike to every later stage
    min_token_count: int = 2
    seed: int = 0
    batch_size: int = 32
    optimizer: str = "adam"

    def __post_init__(self):
        for name in ("embed_dim", "hidden_dim", "epochs", "max_vocab", "min_token_count", "batch_size"):
            if getattr(self, name) < 1:
                raise ParameterError(f"encoder.{name} must be >= 1")
        if not 0.0 < self.mask_probability < 1.0:
            raise ParameterError("encoder.mask_probability must be in (0, 1)")
        if not self.learning_rate > 0:
            raise ParameterError("encoder.learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ParameterError(f"encoder.optimizer must be adam or sgd, got {self.optimizer!r}")


class Vocabulary:
    def __init__(self, tokens: Sequence[str]):
        self.itos = list(tokens) + [UNKNOWN, MASK]
        self.stoi = {t: i for i, t in enumerate(tokens)}
        self.unk_id = len(tokens)
        self.mask_id = len(tokens) + 1

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def ids(self, tokens: Iterable[str]) -> list[int]:
        get = self.stoi.get
        unk = self.unk_id
        return [get(t, unk) for t in tokens]

    @property
    def real_tokens(self) -> list[str]:
        return self.itos[:-2]


def build_vocab(corpus: Dataset, config: EncoderConfig = EncoderConfig()) -> Vocabulary:
    if not len(corpus):
        raise InputError("cannot build a vocabulary from an empty corpus")
    counts = Counter(t for r in corpus.records for t in r.tokens)
    ranked = sorted((t for t, c in counts.items() if c >= config.min_token_count),
                    key=lambda t: (-counts[t], t))
    return Vocabulary(ranked[:config.max_vocab])


@dataclass
class EncoderModel:
    vocab: Vocabulary
    params: dict[str, np.ndarray]
    config: EncoderConfig
    training_meta: dict = field(default_factory=dict)

    @property
    def embed_dim(self) -> int:
        return self.config.embed_dim


@dataclass(frozen=True)
class SentenceEmbedding:
    vector: np.ndarray
    source_id: int | None = None


def init_params(vocab_size: int, config: EncoderConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    d, h = config.embed_dim, config.hidden_dim
    return {
        "E": rng.normal(0.0, 0.1, size=(vocab_size, d)),
        "out_bias": np.zeros(vocab_size),
        "Wf": nn.init_matrix(rng, d, h),
        "Uf": nn.init_matrix(rng, h, h) * 0.5,
        "bf": np.zeros(h),
        "Wb": nn.init_matrix(rng, d, h),
        "Ub": nn.init_matrix(rng, h, h) * 0.5,
        "bb": np.zeros(h),
        "P": nn.init_matrix(rng, 2 * h, d),
        "c": np.zeros(d),
    }


def context_forward(params, ids: np.ndarray):
    """Contextual vectors ``(B, T, embed_dim)`` for an id matrix ``(B, T)``."""
    x = params["E"][ids]
    hf, cf = nn.rnn_forward(x, params["Wf"], params["Uf"], params["bf"])
    hb, cb = nn.rnn_forward(x, params["Wb"], params["Ub"], params["bb"], reverse=True)
    hc = np.concatenate([hf, hb], axis=2)
    out = hc @ params["P"] + params["c"]
    return out, (ids, hc, cf, cb)


def masked_lm_loss(params, inputs: np.ndarray, mask: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy of predicting ``targets[mask]`` from ``inputs``.

    Returns ``(loss, grads)`` with one gradient array per parameter.
    """
    out, (ids, hc, cf, cb) = context_forward(params, inputs)
    E = params["E"]
    picked = out[mask]
    logits = picked @ E.T + params["out_bias"]
    loss, dlogits = nn.softmax_xent(logits, targets[mask])

    grads = {"E": dlogits.T @ picked, "out_bias": dlogits.sum(axis=0)}
    dout = np.zeros_like(out)
    dout[mask] = dlogits @ E
    B, T, d = out.shape
    H2 = hc.shape[2]
    grads["P"] = hc.reshape(B * T, H2).T @ dout.reshape(B * T, d)
    grads["c"] = dout.reshape(B * T, d).sum(axis=0)
    dhc = dout @ params["P"].T
    H = H2 // 2
    dxf, gf = nn.rnn_backward(dhc[:, :, :H], cf)
    dxb, gb = nn.rnn_backward(dhc[:, :, H:], cb)
    grads["Wf"], grads["Uf"], grads["bf"] = gf["W"], gf["U"], gf["b"]
    grads["Wb"], grads["Ub"], grads["bb"] = gb["W"], gb["U"], gb["b"]
    np.add.at(grads["E"], ids, dxf + dxb)
    return loss, grads


def sample_mask(length: int, probability: float, rng: np.random.Generator) -> np.ndarray:
    """Binomial number of masked positions (at least one), chosen uniformly."""
    k = max(1, int(rng.binomial(length, probability)))
    mask = np.zeros(length, dtype=bool)
    mask[rng.choice(length, size=k, replace=False)] = True
    return mask


def _masked_batch(id_rows, idx, vocab: Vocabulary, config: EncoderConfig, rng):
    targets = np.array([id_rows[i] for i in idx])
    mask = np.stack([sample_mask(targets.shape[1], config.mask_probability, rng) for _ in idx])
    inputs = np.where(mask, vocab.mask_id, targets)
    return inputs, mask, targets


def train_encoder(corpus: Dataset, config: EncoderConfig = EncoderConfig(),
                  on_epoch: Callable[[int, float], None] | None = None) -> EncoderModel:
    if not len(corpus):
        raise InputError("cannot train an encoder on an empty corpus")
    vocab = build_vocab(corpus, config)
    rng = np.random.default_rng(config.seed)
    params = init_params(len(vocab), config, rng)
    id_rows = [vocab.ids(r.tokens) for r in corpus.records]
    lengths = [len(r) for r in id_rows]
    opt = nn.make_optimizer(config.optimizer, config.learning_rate)

    # loss of the untrained model on one masking pass, for progress reporting
    probe_rng = np.random.default_rng([config.seed, 1])
    initial, total = 0.0, 0
    for idx in nn.length_batches(lengths, config.batch_size, None):
        inputs, mask, targets = _masked_batch(id_rows, idx, vocab, config, probe_rng)
        loss, _ = masked_lm_loss(params, inputs, mask, targets)
        initial += loss * mask.sum()
        total += mask.sum()
    initial_loss = initial / total

    epoch_losses = []
    for epoch in range(config.epochs):
        loss_sum, count = 0.0, 0
        for idx in nn.length_batches(lengths, config.batch_size, rng):
            inputs, mask, targets = _masked_batch(id_rows, idx, vocab, config, rng)
            loss, grads = masked_lm_loss(params, inputs, mask, targets)
            opt.step(params, grads)
            loss_sum += loss * mask.sum()
            count += mask.sum()
        epoch_losses.append(float(loss_sum / count))
        log.info("encoder epoch %d/%d: masked-token loss %.4f", epoch + 1, config.epochs, epoch_losses[-1])
        if on_epoch is not None:
            on_epoch(epoch, epoch_losses[-1])

    # round to the on-disk precision so saved and in-memory models agree exactly
    params = {k: params[k].astype(np.float32).astype(np.float64) for k in PARAM_ORDER}
    for k, v in params.items():
        if not np.all(np.isfinite(v)):
            raise ArithmeticError(f"encoder parameter {k} diverged to non-finite values")
    meta = {"initial_loss": float(initial_loss), "epoch_losses": epoch_losses,
            "final_loss": epoch_losses[-1] if epoch_losses else float(initial_loss),
            "num_lines": len(corpus), "vocab_size": len(vocab)}
    return EncoderModel(vocab, params, config, meta)


def embed_id_batch(model: EncoderModel, ids: np.ndarray) -> np.ndarray:
    out, _ = context_forward(model.params, np.asarray(ids))
    return out


def embed_tokens(model: EncoderModel, tokens: Sequence[str]) -> np.ndarray:
    """Contextual vectors, one row per token."""
    if not tokens:
        raise InputError("cannot embed an empty token list")
    ids = np.array([model.vocab.ids(tokens)])
    return embed_id_batch(model, ids)[0]


def embed_many(model: EncoderModel, token_lists: Sequence[Sequence[str]],
               batch_size: int = 256) -> list[np.ndarray]:
    """Batched :func:`embed_tokens`; results are identical to per-line calls."""
    if any(not t for t in token_lists):
        raise InputError("cannot embed an empty token list")
    id_rows = [model.vocab.ids(t) for t in token_lists]
    result: list[np.ndarray] = [None] * len(id_rows)  # type: ignore[list-item]
    for idx in nn.length_batches([len(r) for r in id_rows], batch_size, None):
        out = embed_id_batch(model, np.array([id_rows[i] for i in idx]))
        for j, i in enumerate(idx):
            result[i] = out[j]
    return result


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def embed_sentence(model: EncoderModel, tokens: Sequence[str], source_id: int | None = None) -> SentenceEmbedding:
    return SentenceEmbedding(_normalize(embed_tokens(model, tokens).mean(axis=0)), source_id)


def sentence_matrix(model: EncoderModel, token_lists: Sequence[Sequence[str]]) -> np.ndarray:
    """Unit-norm mean-pooled sentence embeddings, one row per input line."""
    vecs = [v.mean(axis=0) for v in embed_many(model, token_lists)]
    mat = np.array(vecs).reshape(len(vecs), model.embed_dim)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return mat / np.where(norms > 0, norms, 1.0)


def masked_accuracy(model: EncoderModel, corpus: Dataset, seed: int = 0) -> float:
    """Fraction of masked positions whose original token is the top prediction."""
    rng = np.random.default_rng(seed)
    id_rows = [model.vocab.ids(r.tokens) for r in corpus.records]
    hits = total = 0
    for idx in nn.length_batches([len(r) for r in id_rows], 256, None):
        inputs, mask, targets = _masked_batch(id_rows, idx, model.vocab, model.config, rng)
        out = embed_id_batch(model, inputs)
        logits = out[mask] @ model.params["E"].T + model.params["out_bias"]
        hits += int((logits.argmax(axis=1) == targets[mask]).sum())
        total += int(mask.sum())
    return hits / total


def save_encoder(model: EncoderModel, path: str | Path) -> None:
    header = {"config": asdict(model.config), "vocab": model.vocab.real_tokens,
              "training_meta": model.training_meta}
    write_container(path, MAGIC, header, {k: model.params[k] for k in PARAM_ORDER})


def load_encoder(path: str | Path) -> EncoderModel:
    header, arrays = read_container(path, MAGIC)
    config = EncoderConfig(**header["config"])
    params = {k: arrays[k].astype(np.float64) for k in PARAM_ORDER}
    return EncoderModel(Vocabulary(header["vocab"]), params, config, header.get("training_meta", {}))
