"""Offline workflow: encoder -> sentence clusters -> pseudo-labels -> tagger."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .cluster import ClusterAssignment, center_rows, dbscan
from .config import PipelineConfig
from .corpus import Dataset
from .encoder import EncoderModel, sentence_matrix, train_encoder
from .errors import InputError
from .labeler import LabeledSentence, LabelSummary, label_statistics, pseudo_label
from .parser import LogParser
from .tagger import TaggerModel, train_tagger

log = logging.getLogger(__name__)


@dataclass
class TrainedPipeline:
    encoder: EncoderModel
    tagger: TaggerModel
    assignment: ClusterAssignment
    labeled: list[LabeledSentence]
    summary: LabelSummary
    config: PipelineConfig

    def parser(self) -> LogParser:
        return LogParser(self.encoder, self.tagger, tokenizer=self.config.tokenizer)


def train_offline(train: Dataset, config: PipelineConfig = PipelineConfig(),
                  encoder: EncoderModel | None = None) -> TrainedPipeline:
    """Run the label-free offline workflow on ``train``.

    A pre-trained ``encoder`` may be passed to skip the masked-token stage
    (used by sweeps that only vary clustering or labelling parameters).
    """
    if not len(train):
        raise InputError("training split is empty")
    if encoder is None:
        encoder = train_encoder(train, config.encoder)
        encoder.training_meta["tokenizer"] = config.tokenizer.to_dict()
    points = sentence_matrix(encoder, [r.tokens for r in train.records])
    if config.dbscan.center:
        points = center_rows(points)
    assignment = dbscan(points, config.dbscan, ids=[r.id for r in train.records])
    labeled = pseudo_label(train.records, assignment, config.labeler)
    summary = label_statistics(labeled, total_records=len(train))
    log.info("%d clusters, %.1f%% noise, %.1f%% variable tokens", assignment.num_clusters,
             100 * summary.noise_fraction, 100 * summary.variable_fraction)
    if not labeled:
        raise InputError(f"every training record was DBSCAN noise (eps={config.dbscan.eps}, "
                         f"min_pts={config.dbscan.min_pts}); raise eps or lower min_pts")
    tagger = train_tagger(labeled, encoder, config.tagger)
    return TrainedPipeline(encoder, tagger, assignment, labeled, summary, config)
