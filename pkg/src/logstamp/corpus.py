"""Loading Loghub-style CSV files, tokenizing log content, train splits."""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDatasetError, InputError, ParameterError, SchemaError

log = logging.getLogger(__name__)

DEFAULT_DELIMITERS = frozenset("=,:()[]")
DATASET_NAMES = ("HDFS", "Proxifier", "Zookeeper", "BGL", "Hadoop")


@dataclass(frozen=True)
class TokenizerConfig:
    extra_delimiters: frozenset[str] = DEFAULT_DELIMITERS
    lowercase: bool = False

    def __post_init__(self):
        delims = frozenset(self.extra_delimiters)
        for d in delims:
            if not isinstance(d, str) or len(d) != 1:
                raise ParameterError(f"delimiter must be a single character, got {d!r}")
        object.__setattr__(self, "extra_delimiters", delims)

    def to_dict(self) -> dict:
        return {"extra_delimiters": "".join(sorted(self.extra_delimiters)),
                "lowercase": self.lowercase}

    @classmethod
    def from_dict(cls, d: dict) -> "TokenizerConfig":
        return cls(extra_delimiters=frozenset(d.get("extra_delimiters", "")),
                   lowercase=bool(d.get("lowercase", False)))


@dataclass(frozen=True)
class LogRecord:
    id: int
    content: str
    tokens: tuple[str, ...]
    truth_group: str | None = None


@dataclass(frozen=True)
class Dataset:
    name: str
    records: tuple[LogRecord, ...]
    # ids of these records in the dataset they were sampled from, if any
    origin_ids: tuple[int, ...] | None = None
    skipped_empty: int = 0
    skipped_undecodable: int = 0

    @property
    def labeled(self) -> bool:
        return bool(self.records) and all(r.truth_group is not None for r in self.records)

    def __len__(self) -> int:
        return len(self.records)

    def truth_partition(self) -> dict[int, str]:
        return {r.id: r.truth_group for r in self.records}


_splitters: dict[frozenset[str], re.Pattern] = {}


def _splitter(delims: frozenset[str]) -> re.Pattern:
    pat = _splitters.get(delims)
    if pat is None:
        extra = "".join(re.escape(c) for c in sorted(delims))
        pat = re.compile(rf"[\s{extra}]+")
        _splitters[delims] = pat
    return pat


def tokenize(content: str, config: TokenizerConfig = TokenizerConfig()) -> list[str]:
    if config.lowercase:
        content = content.lower()
    return [t for t in _splitter(config.extra_delimiters).split(content) if t]


def make_dataset(name: str, contents: Iterable[str], truth: Iterable[str | None] | None = None,
                 config: TokenizerConfig = TokenizerConfig()) -> Dataset:
    """Build a Dataset from in-memory strings; lines without tokens are skipped."""
    contents = list(contents)
    truths = list(truth) if truth is not None else [None] * len(contents)
    if len(truths) != len(contents):
        raise InputError("contents and truth labels differ in length")
    records = []
    skipped = 0
    for content, group in zip(contents, truths):
        tokens = tokenize(content, config)
        if not tokens:
            skipped += 1
            continue
        records.append(LogRecord(len(records), content, tuple(tokens), group))
    return Dataset(name, tuple(records), skipped_empty=skipped)


def _has_surrogates(row: Sequence[str]) -> bool:
    return any(any("\udc80" <= ch <= "\udcff" for ch in cell) for cell in row)


def load_loghub_csv(path: str | Path, config: TokenizerConfig = TokenizerConfig(), *,
                    content_column: str = "Content", truth_column: str = "EventId",
                    name: str | None = None) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"dataset file not found: {path}")
    raw = path.read_bytes()
    if not raw.strip():
        raise EmptyDatasetError(f"dataset file is empty: {path}")
    text = raw.decode("utf-8", errors="surrogateescape")
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader)
    if content_column not in header:
        raise SchemaError(f"{path}: no {content_column!r} column in header {header}")
    ci = header.index(content_column)
    ti = header.index(truth_column) if truth_column in header else None

    records: list[LogRecord] = []
    empty = undecodable = 0
    for row in reader:
        if not row:
            continue
        if _has_surrogates(row):
            undecodable += 1
            continue
        content = row[ci] if ci < len(row) else ""
        tokens = tokenize(content, config)
        if not tokens:
            empty += 1
            continue
        truth = row[ti] if ti is not None and ti < len(row) else None
        records.append(LogRecord(len(records), content, tuple(tokens), truth))
    if empty or undecodable:
        log.warning("%s: skipped %d empty and %d undecodable rows", path.name, empty, undecodable)
    if not records:
        raise EmptyDatasetError(f"{path}: no usable log rows")
    if name is None:
        name = _guess_name(path)
    return Dataset(name, tuple(records), skipped_empty=empty, skipped_undecodable=undecodable)


def _guess_name(path: Path) -> str:
    stem = path.name.split(".")[0]
    for known in DATASET_NAMES:
        if stem.lower().startswith(known.lower()):
            return known
    return stem


def split_train(dataset: Dataset, fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Sample ``round(fraction * n)`` records for training; the test side is the whole dataset."""
    if not (0.0 < fraction <= 1.0) or math.isnan(fraction):
        raise ParameterError(f"fraction must be in (0, 1], got {fraction}")
    n = len(dataset)
    if n == 0:
        raise EmptyDatasetError("cannot split an empty dataset")
    k = max(1, min(n, math.floor(fraction * n + 0.5)))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=k, replace=False))
    train_records = tuple(replace(dataset.records[i], id=j) for j, i in enumerate(chosen))
    train = Dataset(dataset.name, train_records, origin_ids=tuple(int(i) for i in chosen))
    return train, dataset
