"""``ser`` command line: synth, extract, train, predict, evaluate, compare."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace
from typing import List, Optional

from . import dataset as dsmod
from .audio_io import read_wav
from .classifier import Strategy, load_model, predict, save_model
from .dataset import Dataset, SynthSpec, confounded_spec, load_manifest, split_train_test
from .errors import SerError
from .features import FeatureConfig, FeatureMode, extract_features
from .labels import EMOTIONS, Gender
from .pipeline import default_workers, evaluate, extract_dataset, train_model
from .report import Layout, render_report, render_tables
from .svm_core import SvmParams


class UsageError(Exception):
    pass


class ConfigMismatch(SerError):
    pass


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return v


def _fraction(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("train fraction must lie strictly between 0 and 1")
    return v


def _feature_flags(p, with_mode=True):
    if with_mode:
        p.add_argument("--mode", choices=["mfcc", "lpcc"], default="mfcc")
    p.add_argument("--frame-ms", type=_positive_float, default=60.0)
    p.add_argument("--hop-ms", type=_positive_float, default=30.0)
    p.add_argument("--workers", type=_positive_int, default=None,
                   help="feature-extraction processes (default: CPU count)")


def _svm_flags(p):
    p.add_argument("--c", type=_positive_float, default=10.0, help="box constraint C")
    p.add_argument("--gamma", type=_positive_float, default=None,
                   help="RBF width (default 1/feature dimension)")


def _split_flags(p, default_split):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=_fraction, default=0.7)
    p.add_argument("--split", choices=["train", "test", "all"], default=default_split)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ser", description="Speech emotion recognition with RBF SVMs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labelled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=_positive_int, default=25,
                   help="files per (emotion, gender)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--genders", choices=["mf", "m", "f"], default="mf")
    p.add_argument("--duration", type=_positive_float, default=2.0)
    p.add_argument("--confounded", action="store_true",
                   help="emotions differ only by pitch, overlapping across genders")

    p = sub.add_parser("extract", help="write one feature row per manifest entry")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _feature_flags(p)

    p = sub.add_parser("train", help="train an OAA or gender-dependent model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--strategy", choices=["oaa", "gd"], default="oaa")
    _feature_flags(p)
    _svm_flags(p)
    _split_flags(p, "train")

    p = sub.add_parser("predict", help="classify one WAV file")
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--gender", choices=["m", "f"], default=None)
    _feature_flags(p, with_mode=False)

    p = sub.add_parser("evaluate", help="score a model on a manifest split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-csv", default=None)
    _feature_flags(p, with_mode=False)
    _split_flags(p, "test")

    p = sub.add_parser("compare", help="OAA vs GD and MFCC vs LPCC on one split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tables", default="I,II,III",
                   help="comma list among I, II, III (II only when samples carry dataset tags)")
    p.add_argument("--strategy", choices=["oaa", "gd"], default="gd",
                   help="strategy used for the MFCC vs LPCC table")
    p.add_argument("--out-csv", default=None)
    _feature_flags(p, with_mode=False)
    _svm_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=_fraction, default=0.7)
    return parser


def _feature_config(args, mode) -> FeatureConfig:
    if args.hop_ms > args.frame_ms:
        raise UsageError("--hop-ms must not exceed --frame-ms")
    return FeatureConfig(frame_ms=args.frame_ms, hop_ms=args.hop_ms, mode=FeatureMode.parse(mode))


def _svm_params(args) -> SvmParams:
    return SvmParams(C=args.c, gamma=args.gamma)


def _workers(args) -> int:
    return args.workers or default_workers()


def _write_atomic(path: str, data: str) -> None:
    tmp = path + ".partial"
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _select(ds: Dataset, args) -> Dataset:
    if args.split == "all":
        return ds
    train, test = split_train_test(ds, args.train_fraction, args.seed)
    return train if args.split == "train" else test


def cmd_synth(args, out) -> None:
    if args.confounded:
        spec = confounded_spec()
    else:
        spec = SynthSpec()
    offsets = {g: o for g, o in spec.gender_offsets_hz.items()
               if g.value.lower() in args.genders}
    spec = replace(spec, per_class=args.per_class, seed=args.seed, duration_s=args.duration,
                   gender_offsets_hz=offsets)
    ds = dsmod.synth_corpus(spec, args.out)
    out.write(f"wrote {len(ds)} files and manifest.csv to {args.out}\n")


def cmd_extract(args, out) -> None:
    cfg = _feature_config(args, args.mode)
    ds = load_manifest(args.manifest)
    vectors = extract_dataset(ds, cfg, _workers(args))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    layout = vectors[0].layout if vectors else ()
    w.writerow(("path", "emotion", "gender") + tuple(layout))
    for s, v in zip(ds.samples, vectors):
        w.writerow([s.path, s.emotion.value, s.gender.value] + ["%.17g" % x for x in v.values])
    _write_atomic(args.out, buf.getvalue())
    out.write(f"wrote {len(vectors)} feature rows to {args.out}\n")


def cmd_train(args, out) -> None:
    cfg = _feature_config(args, args.mode)
    params = _svm_params(args)
    strategy = Strategy.parse(args.strategy)
    ds = _select(load_manifest(args.manifest), args)
    vectors = extract_dataset(ds, cfg, _workers(args))
    model = train_model(strategy, ds.samples, vectors, params, cfg)
    save_model(model, args.model)
    nsv = sum(m.coefficients.size for b in model.banks.values() for m in b.models.values())
    out.write(f"trained {strategy.value} {cfg.mode.value} model on {len(ds)} samples "
              f"({nsv} support vectors) -> {args.model}\n")


def _config_for_model(args, model) -> FeatureConfig:
    cfg = _feature_config(args, model.mode.value)
    if model.fingerprint[:16] != cfg.fingerprint():
        raise ConfigMismatch("feature settings differ from those the model was trained with "
                             "(check --frame-ms/--hop-ms)")
    return cfg


def cmd_predict(args, out) -> None:
    model = load_model(args.model)
    if model.strategy is Strategy.GD and args.gender is None:
        raise UsageError("--gender is required for gender-dependent models")
    cfg = _config_for_model(args, model)
    vec = extract_features(read_wav(args.wav), cfg)
    gender = Gender.parse(args.gender) if args.gender else None
    label, scores = predict(model, vec, gender)
    out.write(label.value + "\n")
    for e in EMOTIONS:
        out.write(f"{e.value} {scores[e]:.6f}\n")


def cmd_evaluate(args, out) -> None:
    model = load_model(args.model)
    cfg = _config_for_model(args, model)
    ds = _select(load_manifest(args.manifest), args)
    vectors = extract_dataset(ds, cfg, _workers(args))
    tags = ds.tags
    report = evaluate(model, ds.samples, vectors, tags[0] if len(tags) == 1 else None)
    out.write(render_report(report))
    if args.out_csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("emotion", "accuracy_pct"))
        from .report import pct
        for e, acc in report.per_emotion_accuracy.items():
            w.writerow([e.value, "" if acc is None else pct(acc)])
        w.writerow(["macro", pct(report.overall_macro)])
        w.writerow(["micro", pct(report.overall_micro)])
        _write_atomic(args.out_csv, buf.getvalue())


def cmd_compare(args, out) -> None:
    wanted = {t.strip().upper() for t in args.tables.split(",") if t.strip()}
    if not wanted or not wanted <= {"I", "II", "III"}:
        raise UsageError("--tables takes a comma list of I, II, III")
    params = _svm_params(args)
    ds = load_manifest(args.manifest)
    workers = _workers(args)
    cfgs = {m: _feature_config(args, m.value) for m in FeatureMode}
    feats = {}
    needed_modes = {FeatureMode.MFCC} if wanted <= {"I", "II"} else set(FeatureMode)
    for m in FeatureMode:
        if m in needed_modes:
            feats[m] = dict(zip((s.path for s in ds.samples), extract_dataset(ds, cfgs[m], workers)))

    def run(subset, strategy, mode, tag=None):
        train, test = split_train_test(subset, args.train_fraction, args.seed)
        f = feats[mode]
        model = train_model(strategy, train.samples, [f[s.path] for s in train.samples],
                            params, cfgs[mode])
        return evaluate(model, test.samples, [f[s.path] for s in test.samples], tag)

    texts, csvs = [], []
    tags = ds.tags
    single_tag = tags[0] if len(tags) == 1 else None
    if "I" in wanted:
        reports = [run(ds, s, FeatureMode.MFCC, single_tag) for s in Strategy]
        t, c = render_tables(reports, Layout.TABLE_I)
        texts.append(t)
        csvs.append(c)
    if "II" in wanted:
        if tags and all(s.dataset_tag for s in ds.samples):
            reports = [run(ds.with_tag(tag), s, FeatureMode.MFCC, tag)
                       for tag in tags for s in Strategy]
            t, c = render_tables(reports, Layout.TABLE_II)
            texts.append(t)
            csvs.append(c)
        elif args.tables != build_parser().get_default("tables"):
            raise UsageError("Table II needs a dataset tag on every manifest row")
    if "III" in wanted:
        strategy = Strategy.parse(args.strategy)
        reports = [run(ds, strategy, m, single_tag) for m in FeatureMode]
        t, c = render_tables(reports, Layout.TABLE_III)
        texts.append(t)
        csvs.append(c)
    out.write("\n".join(texts))
    if args.out_csv:
        merged = csvs[0] + "".join(c.split("\n", 1)[1] for c in csvs[1:])
        _write_atomic(args.out_csv, merged)


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def run_cli(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(err)
        err.write(f"ser: error: {exc}\n")
        return 2
    except (SerError, OSError) as exc:
        err.write(f"ser: {type(exc).__name__}: {exc}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
