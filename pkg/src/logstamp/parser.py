"""Online parsing: tag each line, render its template, track templates in a store."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

from .corpus import LogRecord, TokenizerConfig, tokenize
from .encoder import EncoderModel
from .errors import ConsistencyError, FormatError, InputError
from .labeler import WordLabel
from .tagger import TaggerModel, tag

log = logging.getLogger(__name__)

PLACEHOLDER = "<*>"


@dataclass(frozen=True)
class Template:
    # None marks a placeholder slot
    parts: tuple[str | None, ...]

    def __post_init__(self):
        if not self.parts:
            raise ConsistencyError("a template needs at least one part")

    @property
    def rendered(self) -> str:
        return " ".join(PLACEHOLDER if p is None else p for p in self.parts)

    @property
    def placeholder_positions(self) -> list[int]:
        return [i for i, p in enumerate(self.parts) if p is None]


def canonicalize(tokens: Sequence[str], labels: Sequence[WordLabel]) -> Template:
    if len(tokens) != len(labels):
        raise ConsistencyError(f"{len(tokens)} tokens but {len(labels)} labels")
    if not tokens:
        raise ConsistencyError("cannot canonicalize an empty line")
    return Template(tuple(None if lab is WordLabel.VARIABLE else tok for tok, lab in zip(tokens, labels)))


@dataclass
class StoredTemplate:
    template_id: int
    count: int
    first_seen: int


@dataclass
class TemplateStore:
    templates: dict[str, StoredTemplate] = field(default_factory=dict)
    next_id: int = 0
    _sequence: int = 0

    def __len__(self) -> int:
        return len(self.templates)

    def add(self, rendered: str) -> tuple[int, bool]:
        """Record one occurrence; returns ``(template_id, is_new)``."""
        seq = self._sequence
        self._sequence += 1
        entry = self.templates.get(rendered)
        if entry is not None:
            entry.count += 1
            return entry.template_id, False
        self.templates[rendered] = StoredTemplate(self.next_id, 1, seq)
        self.next_id += 1
        return self.next_id - 1, True

    def rows(self) -> list[tuple[int, str, int]]:
        return sorted((e.template_id, r, e.count) for r, e in self.templates.items())

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["template_id", "rendered", "count"])
            w.writerows(self.rows())

    @classmethod
    def load_csv(cls, path: str | Path) -> "TemplateStore":
        path = Path(path)
        if not path.is_file():
            raise InputError(f"template store not found: {path}")
        store = cls()
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header != ["template_id", "rendered", "count"]:
                    raise FormatError(f"{path}: unexpected store header {header}")
                for n, row in enumerate(reader):
                    if len(row) != 3:
                        raise FormatError(f"{path}: row {n + 2} has {len(row)} fields")
                    tid, rendered, count = int(row[0]), row[1], int(row[2])
                    if count < 1 or rendered in store.templates:
                        raise FormatError(f"{path}: invalid row {n + 2}")
                    store.templates[rendered] = StoredTemplate(tid, count, n)
        except (ValueError, UnicodeDecodeError) as exc:
            raise FormatError(f"{path}: corrupt template store ({exc})") from None
        ids = sorted(e.template_id for e in store.templates.values())
        if ids != list(range(len(ids))):
            raise FormatError(f"{path}: template ids are not 0..{len(ids) - 1}")
        store.next_id = len(ids)
        store._sequence = sum(e.count for e in store.templates.values())
        return store


@dataclass(frozen=True)
class ParseResult:
    record_id: int
    template_id: int
    template: str
    variables: tuple[tuple[int, str], ...]
    is_new_template: bool

    def to_json(self) -> dict:
        return {"record_id": self.record_id, "template_id": self.template_id,
                "template": self.template, "variables": [[p, t] for p, t in self.variables],
                "new": self.is_new_template}


class LogParser:
    """Bundles the frozen models, a tokenizer and a mutable store.

    Store mutation is not thread-safe; feed lines from a single ingestion point.
    """

    def __init__(self, encoder: EncoderModel, tagger: TaggerModel,
                 store: TemplateStore | None = None, tokenizer: TokenizerConfig | None = None):
        self.encoder = encoder
        self.tagger = tagger
        self.store = store if store is not None else TemplateStore()
        if tokenizer is None:
            tok = encoder.training_meta.get("tokenizer")
            tokenizer = TokenizerConfig.from_dict(tok) if tok else TokenizerConfig()
        self.tokenizer = tokenizer
        self.skipped_empty = 0
        self.skipped_undecodable = 0

    def parse_record(self, record: LogRecord) -> ParseResult | None:
        return parse_line(self.encoder, self.tagger, self.store, record, self)

    def parse_stream(self, lines: Iterable[str | bytes], start_id: int = 0) -> Iterator[ParseResult]:
        return parse_stream(self.encoder, self.tagger, self.store, lines,
                            tokenizer=self.tokenizer, counters=self, start_id=start_id)


def parse_line(encoder: EncoderModel, tagger: TaggerModel, store: TemplateStore,
               record: LogRecord, counters=None) -> ParseResult | None:
    """Parse one record; an empty record is skipped (``None``) without touching the store."""
    if not record.tokens:
        if counters is not None:
            counters.skipped_empty += 1
        return None
    labels = tag(tagger, encoder, record.tokens)
    template = canonicalize(record.tokens, labels)
    rendered = template.rendered
    tid, new = store.add(rendered)
    variables = tuple((i, record.tokens[i]) for i in template.placeholder_positions)
    return ParseResult(record.id, tid, rendered, variables, new)


def parse_stream(encoder: EncoderModel, tagger: TaggerModel, store: TemplateStore,
                 lines: Iterable[str | bytes], tokenizer: TokenizerConfig = TokenizerConfig(),
                 counters=None, start_id: int = 0) -> Iterator[ParseResult]:
    """Lazily parse lines in order.

    Record ids count accepted lines from ``start_id``, matching the ids a
    dataset loader assigns after dropping empty rows.
    """
    rid = start_id
    for line in lines:
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError:
                if counters is not None:
                    counters.skipped_undecodable += 1
                continue
        tokens = tokenize(line.rstrip("\r\n"), tokenizer)
        if not tokens:
            if counters is not None:
                counters.skipped_empty += 1
            continue
        result = parse_line(encoder, tagger, store, LogRecord(rid, line, tuple(tokens)))
        rid += 1
        yield result


def induced_partition(results: Iterable[ParseResult]) -> dict[int, int]:
    partition: dict[int, int] = {}
    for r in results:
        if r.record_id in partition:
            raise ConsistencyError(f"duplicate record id {r.record_id} in parse results")
        partition[r.record_id] = r.template_id
    return partition


def reconstruct(result: ParseResult) -> list[str]:
    """Substitute a result's variables back into its template."""
    parts = result.template.split(" ")
    values = dict(result.variables)
    return [values[i] if p == PLACEHOLDER and i in values else p for i, p in enumerate(parts)]


def write_results_jsonl(results: Iterable[ParseResult], fh: IO[str]) -> int:
    n = 0
    for r in results:
        fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")
        n += 1
    return n
