"""RandIndex between predicted and ground-truth groupings, and experiment drivers."""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Hashable, Iterable, Mapping, Sequence

from .config import PipelineConfig
from .corpus import Dataset, split_train
from .errors import InputError, ParameterError
from .parser import LogParser, induced_partition
from .pipeline import train_offline
from .tagger import Architecture

log = logging.getLogger(__name__)

Partition = Mapping[int, Hashable]

SWEEP_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
GRID_EPS = (0.02, 0.05, 0.1, 0.2)
GRID_TAU = (0.8, 0.9, 1.0)
# keys that legitimately differ between otherwise identical runs
VOLATILE_KEYS = ("runtime_seconds", "parse_seconds", "timestamp")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def _pairs(k: int) -> int:
    return k * (k - 1) // 2


def pair_counts(predicted: Partition, truth: Partition) -> ConfusionCounts:
    """Count agreeing and disagreeing record pairs over all unordered pairs.

    tp: same truth group, same template      tn: different group, different template
    fp: different group, same template       fn: same group, different template
    """
    if set(predicted) != set(truth):
        raise InputError("predicted and truth partitions cover different record ids")
    n = len(truth)
    if n < 2:
        raise ParameterError("pair counting needs at least two records")
    cells = Counter((truth[i], predicted[i]) for i in truth)
    truth_sizes = Counter(truth.values())
    pred_sizes = Counter(predicted.values())
    tp = sum(_pairs(c) for c in cells.values())
    same_truth = sum(_pairs(c) for c in truth_sizes.values())
    same_pred = sum(_pairs(c) for c in pred_sizes.values())
    fn = same_truth - tp
    fp = same_pred - tp
    tn = _pairs(n) - tp - fn - fp
    return ConfusionCounts(tp, tn, fp, fn)


def rand_index(counts: ConfusionCounts) -> float:
    if counts.total <= 0:
        raise ParameterError("rand index of zero pairs is undefined")
    return (counts.tp + counts.tn) / counts.total


def partition_rand_index(predicted: Partition, truth: Partition) -> float:
    return rand_index(pair_counts(predicted, truth))


# -- experiments ---------------------------------------------------------------

def _require_labeled(dataset: Dataset) -> None:
    if not dataset.labeled:
        raise InputError(f"dataset {dataset.name!r} has no ground-truth groups; evaluation needs them")


def _report(dataset: Dataset, fraction: float, seed: int, config: PipelineConfig, **extra) -> dict:
    rep = {"dataset": dataset.name, "fraction": fraction, "seed": seed, "config": config.to_dict()}
    rep.update(extra)
    return rep


def parse_dataset(parser: LogParser, dataset: Dataset) -> dict[int, int]:
    """Stream every record's content through the parser; returns record id -> template id."""
    results = list(parser.parse_stream(r.content for r in dataset.records))
    if len(results) != len(dataset):
        raise InputError(f"parser accepted {len(results)} of {len(dataset)} records; "
                         "tokenizer settings differ from the loader's")
    return induced_partition(results)


def run_experiment(dataset: Dataset, fraction: float, seed: int = 0,
                   config: PipelineConfig = PipelineConfig(), encoder=None) -> dict:
    """Train on a ``fraction`` sample, parse the whole dataset online, score it."""
    _require_labeled(dataset)
    start = time.perf_counter()
    config = config.with_seed(seed)
    train, test = split_train(dataset, fraction, seed)
    trained = train_offline(train, config, encoder=encoder)
    parser = trained.parser()
    t_parse = time.perf_counter()
    predicted = parse_dataset(parser, test)
    parse_seconds = time.perf_counter() - t_parse
    truth = test.truth_partition()
    counts = pair_counts(predicted, truth)
    return _report(
        dataset, fraction, seed, config,
        rand_index=rand_index(counts),
        num_templates_predicted=len(set(predicted.values())),
        num_templates_truth=len(set(truth.values())),
        pair_counts=dataclasses.asdict(counts),
        num_records=len(test), num_train=len(train),
        num_clusters=trained.assignment.num_clusters,
        labels=trained.summary.to_json(),
        encoder_final_loss=trained.encoder.training_meta["final_loss"],
        tagger_train_accuracy=trained.tagger.training_meta["train_token_accuracy"],
        runtime_seconds=round(time.perf_counter() - start, 3),
        parse_seconds=round(parse_seconds, 3),
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    ), trained


def run_offline_experiment(dataset: Dataset, config: PipelineConfig = PipelineConfig(), seed: int = 0) -> dict:
    report, _ = run_experiment(dataset, 1.0, seed, config)
    report["mode"] = "offline"
    return report


def run_online_experiment(dataset: Dataset, fraction: float = 0.1, seed: int = 0,
                          config: PipelineConfig = PipelineConfig()) -> dict:
    report, _ = run_experiment(dataset, fraction, seed, config)
    report["mode"] = "online"
    return report


def run_sweep(dataset: Dataset, fractions: Sequence[float] = SWEEP_FRACTIONS, seed: int = 0,
              config: PipelineConfig = PipelineConfig()) -> dict:
    points = [run_online_experiment(dataset, f, seed, config) for f in fractions]
    scores = [p["rand_index"] for p in points]
    return {"mode": "sweep", "dataset": dataset.name, "seed": seed, "config": config.with_seed(seed).to_dict(),
            "curve": [{"fraction": p["fraction"], "rand_index": p["rand_index"],
                       "num_templates_predicted": p["num_templates_predicted"]} for p in points],
            "spread": max(scores) - min(scores),
            "runtime_seconds": round(sum(p["runtime_seconds"] for p in points), 3)}


def run_tagger_ablation(dataset: Dataset, fraction: float = 0.1, seed: int = 0,
                        config: PipelineConfig = PipelineConfig(),
                        architectures: Iterable[Architecture] = tuple(Architecture)) -> dict:
    rows = {}
    runtime = 0.0
    for arch in architectures:
        cfg = config.override("tagger", architecture=Architecture(arch))
        rep = run_online_experiment(dataset, fraction, seed, cfg)
        rows[Architecture(arch).value] = {"rand_index": rep["rand_index"],
                                          "num_templates_predicted": rep["num_templates_predicted"],
                                          "tagger_train_accuracy": rep["tagger_train_accuracy"]}
        runtime += rep["runtime_seconds"]
    return {"mode": "ablation", "dataset": dataset.name, "fraction": fraction, "seed": seed,
            "config": config.with_seed(seed).to_dict(), "architectures": rows,
            "runtime_seconds": round(runtime, 3)}


def run_grid(dataset: Dataset, fraction: float, seed: int = 0, config: PipelineConfig = PipelineConfig(),
             eps_values: Sequence[float] = GRID_EPS, tau_values: Sequence[float] = GRID_TAU) -> dict:
    """Documented eps x tau sweep; the encoder is trained once and shared by all cells."""
    from .encoder import train_encoder

    _require_labeled(dataset)
    cfg = config.with_seed(seed)
    train, _ = split_train(dataset, fraction, seed)
    encoder = train_encoder(train, cfg.encoder)
    encoder.training_meta["tokenizer"] = cfg.tokenizer.to_dict()
    cells = []
    for eps in eps_values:
        for tau in tau_values:
            cell_cfg = cfg.override("dbscan", eps=eps).override("labeler", tau=tau)
            try:
                rep, _ = run_experiment(dataset, fraction, seed, cell_cfg, encoder=encoder)
                cells.append({"eps": eps, "tau": tau, "rand_index": rep["rand_index"],
                              "num_templates_predicted": rep["num_templates_predicted"]})
            except InputError as exc:
                cells.append({"eps": eps, "tau": tau, "rand_index": None, "error": str(exc)})
    scored = [c for c in cells if c["rand_index"] is not None]
    best = max(scored, key=lambda c: c["rand_index"]) if scored else None
    return {"mode": "grid", "dataset": dataset.name, "fraction": fraction, "seed": seed,
            "config": cfg.to_dict(), "cells": cells, "best": best}


def stable_json(report: dict) -> str:
    """Canonical JSON with run-to-run volatile fields removed."""
    def strip(obj):
        if isinstance(obj, dict):
            return {k: strip(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
        if isinstance(obj, list):
            return [strip(v) for v in obj]
        return obj
    return json.dumps(strip(report), sort_keys=True)
