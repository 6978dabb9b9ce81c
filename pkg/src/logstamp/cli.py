"""``logstamp`` command line: train, parse, eval, inspect (plus synth for demo data)."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

from . import evaluation
from .cluster import center_rows, dump_assignment
from .config import PipelineConfig, load_config
from .corpus import load_loghub_csv, split_train
from .encoder import load_encoder, save_encoder, sentence_matrix
from .errors import InputError, LogStampError, ParameterError
from .labeler import write_labeled_jsonl
from .parser import LogParser, TemplateStore, write_results_jsonl
from .pipeline import train_offline
from .tagger import Architecture, load_tagger, save_tagger

log = logging.getLogger("logstamp")

ENCODER_FILE = "encoder.lstmp"
TAGGER_FILE = "tagger.lstmp"
STORE_FILE = "templates.csv"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with [tokenizer]/[encoder]/[dbscan]/[labeler]/[tagger] sections")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--eps", type=float, help="DBSCAN cosine radius")
    p.add_argument("--min-pts", type=int, help="DBSCAN core-point threshold")
    p.add_argument("--tau", type=float, help="template frequency ratio threshold")
    p.add_argument("--arch", choices=[a.value for a in Architecture], help="tagger architecture")
    p.add_argument("--encoder-epochs", type=int)
    p.add_argument("--tagger-epochs", type=int)
    p.add_argument("--content-column", default="Content")
    p.add_argument("--truth-column", default="EventId")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logstamp", description="Online log parsing by sequence labelling.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the offline workflow and save both models")
    _add_common(p)
    p.add_argument("--dataset", required=True, help="Loghub-style structured CSV")
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--out-dir", default="logstamp-model")
    p.add_argument("--dump-clusters", action="store_true", help="also write clusters.csv")

    p = sub.add_parser("parse", help="parse lines with trained models")
    p.add_argument("--model-dir", default="logstamp-model")
    p.add_argument("--input", default="-", help="text file, or - for stdin")
    p.add_argument("--output", default="-", help="JSONL output file, or - for stdout")
    p.add_argument("--store", help=f"template store CSV (default MODEL_DIR/{STORE_FILE})")
    p.add_argument("--csv", action="store_true", help="input is a Loghub CSV; parse its content column")
    p.add_argument("--content-column", default="Content")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("eval", help="reproduce the RandIndex experiments")
    _add_common(p)
    p.add_argument("--dataset", action="append", required=True, help="labelled CSV; repeat for several")
    p.add_argument("--mode", choices=["offline", "online", "sweep", "ablation"], default="online")
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--grid", action="store_true",
                   help="pick eps/tau from the documented grid before the final run")
    p.add_argument("--out-dir", default="logstamp-eval")

    p = sub.add_parser("inspect", help="list a template store by count")
    p.add_argument("--store", required=True)
    p.add_argument("--top", type=int, default=0, help="show only the N most frequent templates")

    p = sub.add_parser("synth", help="write a synthetic labelled CSV (for demos; not real data)")
    p.add_argument("--kind", default="HDFS", help="HDFS, Zookeeper, Proxifier, BGL, Hadoop or interface")
    p.add_argument("--lines", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return ap


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    cfg = cfg.override("dbscan", eps=args.eps, min_pts=args.min_pts)
    cfg = cfg.override("labeler", tau=args.tau)
    cfg = cfg.override("tagger", architecture=args.arch, epochs=args.tagger_epochs)
    cfg = cfg.override("encoder", epochs=args.encoder_epochs)
    return cfg


def _check_fraction(fraction: float) -> None:
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"--fraction must be in (0, 1], got {fraction}")


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _load(path: str, cfg: PipelineConfig, args):
    return load_loghub_csv(path, cfg.tokenizer, content_column=args.content_column,
                           truth_column=args.truth_column)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_train(args) -> int:
    _check_fraction(args.fraction)
    cfg = resolve_config(args)
    seed = _seed(args)
    dataset = _load(args.dataset, cfg, args)
    cfg = cfg.with_seed(seed)
    train, _ = split_train(dataset, args.fraction, seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    print(f"seed={seed} dataset={dataset.name} records={len(dataset)} train={len(train)}", file=sys.stderr)
    start = time.perf_counter()
    trained = train_offline(train, cfg)
    save_encoder(trained.encoder, out / ENCODER_FILE)
    save_tagger(trained.tagger, out / TAGGER_FILE)
    write_labeled_jsonl(out / "labeled.jsonl", trained.labeled)
    if args.dump_clusters:
        points = sentence_matrix(trained.encoder, [r.tokens for r in train.records])
        if cfg.dbscan.center:
            points = center_rows(points)
        dump_assignment(out / "clusters.csv", points, trained.assignment, [r.id for r in train.records])
    summary = trained.summary
    report = {"dataset": dataset.name, "fraction": args.fraction, "seed": seed, "config": cfg.to_dict(),
              "num_records": len(dataset), "num_train": len(train),
              "num_clusters": trained.assignment.num_clusters, "labels": summary.to_json(),
              "encoder": trained.encoder.training_meta, "tagger": trained.tagger.training_meta,
              "runtime_seconds": round(time.perf_counter() - start, 3)}
    _write_json(out / "train_report.json", report)
    print(f"clusters={trained.assignment.num_clusters} noise={summary.noise_fraction:.3f} "
          f"template_tokens={summary.template_tokens} variable_tokens={summary.variable_tokens} "
          f"variable_fraction={summary.variable_fraction:.3f}")
    print(f"wrote {out / ENCODER_FILE}, {out / TAGGER_FILE}, {out / 'labeled.jsonl'}, {out / 'train_report.json'}")
    return 0


def _open_lines(path: str):
    if path == "-":
        return sys.stdin.buffer, False
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file not found: {path}")
    return open(p, "rb"), True


def cmd_parse(args) -> int:
    model_dir = Path(args.model_dir)
    encoder = load_encoder(model_dir / ENCODER_FILE)
    tagger = load_tagger(model_dir / TAGGER_FILE)
    parser = LogParser(encoder, tagger)
    if args.csv:
        if args.input == "-":
            raise ParameterError("--csv needs a file path for --input")
        ds = load_loghub_csv(args.input, parser.tokenizer, content_column=args.content_column)
        lines = (r.content for r in ds.records)
        close = None
    else:
        fh, owned = _open_lines(args.input)
        lines = (line.rstrip(b"\r\n") for line in fh)
        close = fh if owned else None
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    start = time.perf_counter()
    try:
        n = write_results_jsonl(parser.parse_stream(lines), out)
    finally:
        if close is not None:
            close.close()
        if out is not sys.stdout:
            out.close()
    elapsed = time.perf_counter() - start
    store_path = Path(args.store) if args.store else model_dir / STORE_FILE
    parser.store.export_csv(store_path)
    rate = n / elapsed if elapsed > 0 else float("inf")
    print(f"parsed={n} templates={len(parser.store)} skipped_empty={parser.skipped_empty} "
          f"skipped_undecodable={parser.skipped_undecodable} lines_per_second={rate:.1f} store={store_path}",
          file=sys.stderr)
    return 0


def _table(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells)


def cmd_eval(args) -> int:
    _check_fraction(args.fraction)
    cfg = resolve_config(args)
    seed = _seed(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    datasets = [_load(p, cfg, args) for p in args.dataset]
    for ds in datasets:
        if not ds.labeled:
            raise InputError(f"{ds.name}: no {args.truth_column!r} column; eval needs ground truth")
    print(f"seed={seed} mode={args.mode}", file=sys.stderr)
    rows = []
    reports = []
    for ds in datasets:
        run_cfg = cfg
        grid = None
        if args.grid and args.mode in ("offline", "online"):
            frac = 1.0 if args.mode == "offline" else args.fraction
            grid = evaluation.run_grid(ds, frac, seed, cfg)
            if grid["best"] is not None:
                run_cfg = cfg.override("dbscan", eps=grid["best"]["eps"]).override("labeler", tau=grid["best"]["tau"])
        if args.mode == "offline":
            rep = evaluation.run_offline_experiment(ds, run_cfg, seed)
        elif args.mode == "online":
            rep = evaluation.run_online_experiment(ds, args.fraction, seed, run_cfg)
        elif args.mode == "sweep":
            rep = evaluation.run_sweep(ds, seed=seed, config=run_cfg)
        else:
            rep = evaluation.run_tagger_ablation(ds, args.fraction, seed, run_cfg)
        if grid is not None:
            rep["grid"] = grid["cells"]
        reports.append(rep)
        _write_json(out / f"{ds.name}_{args.mode}.json", rep)
        if args.mode == "sweep":
            for pt in rep["curve"]:
                rows.append((ds.name, pt["fraction"], f"{pt['rand_index']:.4f}", pt["num_templates_predicted"]))
        elif args.mode == "ablation":
            for arch, r in rep["architectures"].items():
                rows.append((ds.name, arch, f"{r['rand_index']:.4f}", r["num_templates_predicted"]))
        else:
            rows.append((ds.name, rep["fraction"], f"{rep['rand_index']:.4f}",
                         rep["num_templates_predicted"], rep["num_templates_truth"]))
    if args.mode == "sweep":
        print(_table(rows, ["dataset", "fraction", "rand_index", "templates"]))
    elif args.mode == "ablation":
        print(_table(rows, ["dataset", "architecture", "rand_index", "templates"]))
    else:
        print(_table(rows, ["dataset", "fraction", "rand_index", "templates", "truth_templates"]))
        if len(reports) > 1:
            avg = sum(r["rand_index"] for r in reports) / len(reports)
            _write_json(out / f"summary_{args.mode}.json",
                        {"mode": args.mode, "seed": seed, "average_rand_index": avg,
                         "per_dataset": {r["dataset"]: r["rand_index"] for r in reports}})
            print(f"average rand_index: {avg:.4f}")
    return 0


def cmd_inspect(args) -> int:
    store = TemplateStore.load_csv(args.store)
    rows = sorted(store.rows(), key=lambda r: (-r[2], r[0]))
    if args.top:
        rows = rows[:args.top]
    print(_table([(tid, count, rendered) for tid, rendered, count in rows], ["template_id", "count", "template"]))
    return 0


def cmd_synth(args) -> int:
    from .synthetic import LOGHUB_LIKE, loghub_like, two_template_corpus

    if args.kind == "interface":
        ds = two_template_corpus(args.lines, args.seed)
    elif args.kind in LOGHUB_LIKE:
        ds = loghub_like(args.kind, args.lines, args.seed)
    else:
        raise ParameterError(f"unknown --kind {args.kind!r}")
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["LineId", "Content", "EventId"])
        for r in ds.records:
            w.writerow([r.id + 1, r.content, r.truth_group])
    print(f"wrote {len(ds)} synthetic lines to {args.out}")
    return 0


COMMANDS = {"train": cmd_train, "parse": cmd_parse, "eval": cmd_eval, "inspect": cmd_inspect, "synth": cmd_synth}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except LogStampError as exc:
        print(f"logstamp {args.command} [{_origin(exc)}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


def _origin(exc: BaseException) -> str:
    """Short name of the logstamp module the exception was raised in."""
    tb = exc.__traceback__
    name = "cli"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("logstamp."):
            name = mod.split(".", 1)[1]
        tb = tb.tb_next
    return name


if __name__ == "__main__":
    sys.exit(main())
