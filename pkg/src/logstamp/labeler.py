"""Per-word TEMPLATE/VARIABLE pseudo-labels from intra-cluster token frequency."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .cluster import NOISE, ClusterAssignment
from .corpus import LogRecord
from .errors import ConsistencyError, ParameterError


class WordLabel(enum.IntEnum):
    TEMPLATE = 0
    VARIABLE = 1

    @property
    def code(self) -> str:
        return "T" if self is WordLabel.TEMPLATE else "V"

    @classmethod
    def from_code(cls, code: str) -> "WordLabel":
        try:
            return {"T": cls.TEMPLATE, "V": cls.VARIABLE}[code]
        except KeyError:
            raise ValueError(f"word label must be 'T' or 'V', got {code!r}") from None


T = WordLabel.TEMPLATE
V = WordLabel.VARIABLE


class CountMode(str, enum.Enum):
    DOCUMENT = "DOCUMENT"
    POSITIONAL = "POSITIONAL"


@dataclass(frozen=True)
class LabelerConfig:
    tau: float = 0.9
    count_mode: CountMode = CountMode.DOCUMENT

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ParameterError(f"labeler.tau must be in (0, 1], got {self.tau}")
        try:
            object.__setattr__(self, "count_mode", CountMode(self.count_mode))
        except ValueError:
            raise ParameterError(f"labeler.count_mode must be DOCUMENT or POSITIONAL, "
                                 f"got {self.count_mode!r}") from None


@dataclass(frozen=True)
class LabeledSentence:
    record_id: int
    tokens: tuple[str, ...]
    labels: tuple[WordLabel, ...]
    cluster_id: int

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ConsistencyError(f"record {self.record_id}: {len(self.tokens)} tokens "
                                   f"but {len(self.labels)} labels")

    def to_json(self) -> dict:
        return {"record_id": self.record_id, "tokens": list(self.tokens),
                "labels": [lab.code for lab in self.labels], "cluster_id": self.cluster_id}


def _label_cluster(members: Sequence[LogRecord], config: LabelerConfig) -> list[tuple[WordLabel, ...]]:
    size = len(members)
    # freq/size >= tau, written as a count comparison to avoid rounding at tau=1
    if config.count_mode is CountMode.DOCUMENT:
        freq = Counter(t for r in members for t in set(r.tokens))
        keys = [r.tokens for r in members]
    else:
        freq = Counter(pt for r in members for pt in set(enumerate(r.tokens)))
        keys = [tuple(enumerate(r.tokens)) for r in members]
    return [tuple(T if freq[k] >= config.tau * size - 1e-9 else V for k in row) for row in keys]


def pseudo_label(records: Sequence[LogRecord], assignment: ClusterAssignment,
                 config: LabelerConfig = LabelerConfig()) -> list[LabeledSentence]:
    """Label every token of every clustered record; noise records are dropped."""
    clusters: dict[int, list[LogRecord]] = {}
    for r in records:
        if r.id not in assignment.labels:
            raise ConsistencyError(f"record {r.id} has no cluster assignment")
        c = assignment.labels[r.id]
        if c != NOISE:
            clusters.setdefault(c, []).append(r)

    by_id: dict[int, LabeledSentence] = {}
    for c, members in clusters.items():
        for r, labels in zip(members, _label_cluster(members, config)):
            by_id[r.id] = LabeledSentence(r.id, tuple(r.tokens), labels, c)
    return [by_id[r.id] for r in records if r.id in by_id]


@dataclass
class LabelSummary:
    per_cluster: dict[int, dict[str, int]]
    template_tokens: int
    variable_tokens: int
    noise_fraction: float

    @property
    def variable_fraction(self) -> float:
        total = self.template_tokens + self.variable_tokens
        return self.variable_tokens / total if total else 0.0

    def to_json(self) -> dict:
        return {"template_tokens": self.template_tokens, "variable_tokens": self.variable_tokens,
                "variable_fraction": self.variable_fraction, "noise_fraction": self.noise_fraction,
                "num_clusters": len(self.per_cluster),
                "per_cluster": {str(k): v for k, v in sorted(self.per_cluster.items())}}


def label_statistics(labeled: Sequence[LabeledSentence], total_records: int | None = None) -> LabelSummary:
    """Token counts per cluster; ``total_records`` includes noise records if known."""
    per: dict[int, dict[str, int]] = {}
    for s in labeled:
        row = per.setdefault(s.cluster_id, {"records": 0, "template": 0, "variable": 0})
        row["records"] += 1
        nv = sum(1 for lab in s.labels if lab is V)
        row["variable"] += nv
        row["template"] += len(s.labels) - nv
    t = sum(r["template"] for r in per.values())
    v = sum(r["variable"] for r in per.values())
    noise = 0.0
    if total_records:
        noise = (total_records - len(labeled)) / total_records
    return LabelSummary(per, t, v, noise)


def write_labeled_jsonl(path: str | Path, labeled: Iterable[LabeledSentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in labeled:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def read_labeled_jsonl(path: str | Path) -> list[LabeledSentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(LabeledSentence(d["record_id"], tuple(d["tokens"]),
                                           tuple(WordLabel.from_code(c) for c in d["labels"]),
                                           d["cluster_id"]))
    return out
