"""Whole-pipeline configuration and its INI-style file format.

Sections mirror the sub-configs::

    [tokenizer]
    extra_delimiters = =,:()[]
    [encoder]
    epochs = 5
    [dbscan]
    eps = 0.1
    [labeler]
    tau = 0.9
    [tagger]
    architecture = RECURRENT_BIDIR
    [paths]
    out_dir = runs/hdfs
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .cluster import DbscanConfig
from .corpus import TokenizerConfig
from .encoder import EncoderConfig
from .errors import InputError, ParameterError
from .labeler import LabelerConfig
from .tagger import TaggerConfig

SECTIONS = {
    "encoder": EncoderConfig,
    "dbscan": DbscanConfig,
    "labeler": LabelerConfig,
    "tagger": TaggerConfig,
}


@dataclass(frozen=True)
class PipelineConfig:
    tokenizer: TokenizerConfig = TokenizerConfig()
    encoder: EncoderConfig = EncoderConfig()
    dbscan: DbscanConfig = DbscanConfig()
    labeler: LabelerConfig = LabelerConfig()
    tagger: TaggerConfig = TaggerConfig()
    paths: dict[str, str] = field(default_factory=dict)

    def with_seed(self, seed: int) -> "PipelineConfig":
        return dataclasses.replace(self, encoder=dataclasses.replace(self.encoder, seed=seed),
                                   tagger=dataclasses.replace(self.tagger, seed=seed))

    def override(self, section: str, **values: Any) -> "PipelineConfig":
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        current = getattr(self, section)
        return dataclasses.replace(self, **{section: _replace_checked(section, current, values)})

    def to_dict(self) -> dict:
        out = {"tokenizer": self.tokenizer.to_dict()}
        for name in SECTIONS:
            d = dataclasses.asdict(getattr(self, name))
            out[name] = {k: (v.value if hasattr(v, "value") else v) for k, v in d.items()}
        return out


def _replace_checked(section: str, current, values: dict):
    names = {f.name for f in dataclasses.fields(current)}
    unknown = set(values) - names
    if unknown:
        raise ParameterError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    return dataclasses.replace(current, **values)


def _coerce(cls, key: str, raw: str, section: str):
    ftype = {f.name: f for f in dataclasses.fields(cls)}[key].type
    ftype = ftype if isinstance(ftype, str) else getattr(ftype, "__name__", str(ftype))
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        if ftype == "bool":
            return raw.strip().lower() in ("1", "true", "yes", "on")
    except ValueError:
        raise ParameterError(f"[{section}] {key}: cannot parse {raw!r} as {ftype}") from None
    return raw.strip()


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ParameterError(f"{path}: {exc}") from None
    cfg = PipelineConfig()
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "tokenizer":
            tok = cfg.tokenizer.to_dict()
            unknown = set(items) - set(tok)
            if unknown:
                raise ParameterError(f"unknown key(s) in [tokenizer]: {', '.join(sorted(unknown))}")
            if "extra_delimiters" in items:
                tok["extra_delimiters"] = items["extra_delimiters"].strip()
            if "lowercase" in items:
                tok["lowercase"] = items["lowercase"].strip().lower() in ("1", "true", "yes", "on")
            cfg = dataclasses.replace(cfg, tokenizer=TokenizerConfig.from_dict(tok))
        elif section == "paths":
            cfg = dataclasses.replace(cfg, paths={**cfg.paths, **items})
        elif section in SECTIONS:
            cls = SECTIONS[section]
            names = {f.name for f in dataclasses.fields(cls)}
            unknown = set(items) - names
            if unknown:
                raise ParameterError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
            values = {k: _coerce(cls, k, v, section) for k, v in items.items()}
            cfg = cfg.override(section, **values)
        else:
            raise ParameterError(f"{path}: unknown section [{section}]")
    return cfg
