"""Command-line interface.

Subcommands: synth, train, cv, eval, retrieve, spectrum, report.  Exit
codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.  Flags
override an optional key=value config file (--config), which overrides the
built-in defaults.  All randomness flows from --seed.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import TrainConfig, load_model, save_model, scaled_freq_feature, train
from .dataio import (
    DATASET_MAGIC,
    KNOWLEDGE_MAGIC,
    SynthConfig,
    read_dataset,
    read_knowledge_base,
    synth_dataset,
    write_dataset,
    write_knowledge_base,
)
from .errors import DataError, NumericError
from .evaluation import (
    CVReport,
    confusion,
    cross_validate,
    evaluate_model,
    prf1,
    render_confusion_csv,
    render_report,
    roc_auc,
)
from .retrieval import top_k, METRICS, WEIGHTINGS
from .spectral import freq_feature_len, next_pow2, power_spectrum, rfft


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _parse_alpha(text: str):
    if text == "balanced":
        return "balanced"
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"alpha must be 'balanced' or comma-separated weights, got {text!r}"
        )
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("alpha needs exactly two class weights")
    return parts


def _train_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("training")
    g.add_argument("--epochs", type=int, default=30, help="training epochs (default 30)")
    g.add_argument("--batch-size", type=int, default=8, help="minibatch size (default 8)")
    g.add_argument("--lr", type=float, default=1e-4, help="initial learning rate (default 1e-4)")
    g.add_argument("--lr-min", type=float, default=0.0, help="annealed floor (default 0)")
    g.add_argument("--gamma", type=float, default=2.0, help="focusing exponent (default 2.0)")
    g.add_argument(
        "--alpha", type=_parse_alpha, default=(1.0, 1.0),
        help="class weights 'w0,w1' or 'balanced' (default 1,1)",
    )
    g.add_argument(
        "--label-smoothing", type=float, default=0.1, dest="label_smoothing",
        help="target smoothing epsilon (default 0.1)",
    )
    g.add_argument("--top-k", type=int, default=5, help="retrieved entries per query (default 5)")
    g.add_argument(
        "--metric", choices=METRICS, default="quantum",
        help="retrieval similarity (default quantum)",
    )
    g.add_argument(
        "--topk-weighting", choices=WEIGHTINGS, default="uniform",
        help="context aggregation weights (default uniform)",
    )
    g.add_argument(
        "--fusion", choices=("gated", "concat"), default="gated",
        help="fusion mode (default gated)",
    )
    g.add_argument("--proj-dim", type=int, default=256, help="projection width (default 256)")
    g.add_argument(
        "--query-mode", choices=("text", "fused"), default="text",
        help="retrieval query source (default text)",
    )


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=42, help="PRNG seed (default 42)")
    parser.add_argument("--config", type=str, default=None, help="key=value defaults file")


def _config_to_args(path: str) -> list[str]:
    """Turn a key=value file into flag tokens, spliced before CLI flags."""
    tokens: list[str] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"--config: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"--config {path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        tokens += [f"--{key.replace('_', '-')}", value]
    return tokens


def _train_config(args) -> TrainConfig:
    try:
        return TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            lr0=args.lr,
            lr_min=args.lr_min,
            gamma=args.gamma,
            alpha=args.alpha,
            epsilon=args.label_smoothing,
            seed=args.seed,
            fusion_mode=args.fusion,
            metric=args.metric,
            top_k=args.top_k,
            proj_dim=args.proj_dim,
            topk_weighting=args.topk_weighting,
            query_mode=args.query_mode,
        ).validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


class UsageError(Exception):
    pass


def _sniff_format(path, flag: str) -> str:
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise DataError(f"{flag}: {exc}") from exc
    return "binary" if head in (DATASET_MAGIC, KNOWLEDGE_MAGIC) else "jsonl"


def _load_dataset(path, flag: str = "--data"):
    return read_dataset(path, _sniff_format(path, flag))


def _load_kb(path, flag: str = "--knowledge"):
    return read_knowledge_base(path, _sniff_format(path, flag))


def _write_text(path_or_none, text: str) -> None:
    if path_or_none is None:
        sys.stdout.write(text)
    else:
        Path(path_or_none).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Commands

def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig(
            n_samples=args.n,
            d_t=args.d_t,
            d_v=args.d_v,
            d_k=args.d_k,
            n_knowledge=args.n_knowledge,
            class_separation=args.sep,
            noise_sigma=args.sigma,
            seed=args.seed,
        ).validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data, kb = synth_dataset(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / ("dataset.jsonl" if args.format == "jsonl" else "dataset.qfse")
    kb_path = out / ("knowledge.jsonl" if args.format == "jsonl" else "knowledge.qfkb")
    write_dataset(data, data_path, args.format)
    write_knowledge_base(kb, kb_path, args.format)
    print(data_path)
    print(kb_path)
    return 0


def cmd_train(args) -> int:
    cfg = _train_config(args)
    data = _load_dataset(args.data)
    kb = _load_kb(args.knowledge)
    params, history = train(data, kb, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.qfmp"
    save_model(params, cfg, model_path)
    (out / "history.json").write_text(
        json.dumps(history.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(model_path)
    print(
        f"final epoch: loss={history.epoch_loss[-1]:.6f} "
        f"accuracy={history.epoch_accuracy[-1]:.4f}"
    )
    return 0


def cmd_cv(args) -> int:
    cfg = _train_config(args)
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    data = _load_dataset(args.data)
    kb = _load_kb(args.knowledge)
    report = cross_validate(data, kb, cfg, folds=args.folds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(render_report(report, "json"), encoding="utf-8")
    (out / "report.txt").write_text(render_report(report, "text"), encoding="utf-8")
    (out / "report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    (out / "confusion.csv").write_text(render_confusion_csv(report), encoding="utf-8")
    sys.stdout.write(render_report(report, "text"))
    return 0


def cmd_eval(args) -> int:
    params, cfg = load_model(args.model)
    data = _load_dataset(args.data)
    kb = _load_kb(args.knowledge)
    d_vf = freq_feature_len(data.d_v)
    d_tf = freq_feature_len(data.d_t)
    if (d_vf, d_tf, kb.d_k) != (params.dims.d_vf, params.dims.d_tf, params.dims.d_k):
        raise DataError(
            f"model expects feature dims {params.dims.d_vf}/{params.dims.d_tf}/"
            f"{params.dims.d_k}, data gives {d_vf}/{d_tf}/{kb.d_k}"
        )
    y_true, y_pred, scores = evaluate_model(params, data, kb, cfg)
    m = confusion(y_true, y_pred)
    cm = prf1(m, positive_class=1)
    payload = {
        "accuracy": cm.accuracy,
        "precision": cm.precision,
        "recall": cm.recall,
        "f1": cm.f1,
        "roc_auc": roc_auc(y_true, scores),
        "confusion": m.to_dict(),
    }
    _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_retrieve(args) -> int:
    kb = _load_kb(args.knowledge)
    if (args.query is None) == (args.query_id is None):
        raise UsageError("provide exactly one of --query or --query-id")
    if args.query is not None:
        try:
            query = np.array([float(p) for p in args.query.split(",")])
        except ValueError as exc:
            raise UsageError(f"--query must be comma-separated numbers: {exc}") from exc
    else:
        if args.data is None:
            raise UsageError("--query-id requires --data")
        data = _load_dataset(args.data)
        sample = data.by_id(args.query_id)
        if args.query_mode == "fused":
            from .retrieval import fused_query_projector

            v_feat = scaled_freq_feature(sample.image_emb)
            t_feat = scaled_freq_feature(sample.text_emb)
            projector = fused_query_projector(
                v_feat.shape[0] + t_feat.shape[0], kb.d_k, args.seed
            )
            query = projector(np.concatenate([v_feat, t_feat]))
        else:
            query = sample.text_emb
    hits = top_k(query, kb, args.top_k, args.metric)
    rows = [
        {
            "index": h.index,
            "id": kb.entries[h.index].id,
            "score": h.score,
            "payload": kb.entries[h.index].payload,
        }
        for h in hits
    ]
    _write_text(args.out, json.dumps(rows, indent=2) + "\n")
    return 0


def cmd_spectrum(args) -> int:
    data = _load_dataset(args.data)
    sample = data.by_id(args.id)
    vec = sample.text_emb if args.modality == "text" else sample.image_emb
    n = next_pow2(vec.shape[0])
    padded = np.zeros(n)
    padded[: vec.shape[0]] = vec
    power = power_spectrum(rfft(padded))
    lines = ["bin,power"] + [f"{i},{p!r}" for i, p in enumerate(power.tolist())]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_report(args) -> int:
    try:
        with open(args.infile, "r", encoding="utf-8") as fh:
            report = CVReport.from_dict(json.load(fh))
    except OSError as exc:
        raise DataError(f"--in: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"--in: not a valid report JSON: {exc}") from exc
    _write_text(args.out, render_report(report, args.format))
    return 0


# ---------------------------------------------------------------------------
# Parser assembly

def build_parser() -> _Parser:
    parser = _Parser(prog="freqrag", description=__doc__)
    parser.add_argument("--version", action="version", version=f"freqrag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset and knowledge base")
    p.add_argument("--n", type=int, default=200, help="sample count (default 200)")
    p.add_argument("--d-t", type=int, default=768, help="text embedding dim (default 768)")
    p.add_argument("--d-v", type=int, default=2048, help="image embedding dim (default 2048)")
    p.add_argument("--d-k", type=int, default=768, help="knowledge key dim (default 768)")
    p.add_argument(
        "--n-knowledge", type=int, default=64,
        help="knowledge entries incl. 2 prototypes (default 64)",
    )
    p.add_argument("--sep", type=float, default=8.0, help="class mean separation (default 8)")
    p.add_argument("--sigma", type=float, default=1.0, help="noise std (default 1)")
    p.add_argument("--format", choices=("jsonl", "binary"), default="binary")
    p.add_argument("--out", required=True, help="output directory")
    _common_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a classifier")
    p.add_argument("--data", required=True, help="dataset file (QFSE or JSONL)")
    p.add_argument("--knowledge", required=True, help="knowledge base file (QFKB or JSONL)")
    p.add_argument("--out", required=True, help="output directory")
    _train_flags(p)
    _common_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--knowledge", required=True)
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--folds", type=int, default=5, help="fold count (default 5)")
    _train_flags(p)
    _common_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    p.add_argument("--model", required=True, help="QFMP checkpoint path")
    p.add_argument("--data", required=True)
    p.add_argument("--knowledge", required=True)
    p.add_argument("--out", default=None, help="metrics JSON path (default stdout)")
    _common_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("retrieve", help="query the knowledge base")
    p.add_argument("--knowledge", required=True)
    p.add_argument("--data", default=None, help="dataset file, needed with --query-id")
    p.add_argument("--query-id", default=None, help="sample id whose query to use")
    p.add_argument("--query", default=None, help="inline comma-separated query vector")
    p.add_argument("--query-mode", choices=("text", "fused"), default="text")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--metric", choices=METRICS, default="quantum")
    p.add_argument("--topk-weighting", choices=WEIGHTINGS, default="uniform")
    p.add_argument("--out", default=None, help="hits JSON path (default stdout)")
    _common_flags(p)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("spectrum", help="per-bin power of one sample's spectrum")
    p.add_argument("--data", required=True)
    p.add_argument("--id", required=True, help="sample id")
    p.add_argument("--modality", choices=("text", "image"), required=True)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    _common_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("report", help="re-render a report JSON")
    p.add_argument("--in", dest="infile", required=True, help="report.json path")
    p.add_argument("--format", choices=("json", "text", "csv"), default="text")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    _common_flags(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--config" in argv:
        try:
            cfg_path = argv[argv.index("--config") + 1]
        except IndexError:
            sys.stderr.write("freqrag: error: --config needs a path\n")
            return 1
        try:
            argv = argv[:1] + _config_to_args(cfg_path) + argv[1:]
        except DataError as exc:
            sys.stderr.write(f"freqrag: error: {exc}\n")
            return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"freqrag {args.command}: error: {exc}\n")
        return 1
    except (DataError, OSError) as exc:
        sys.stderr.write(f"freqrag {args.command}: data error: {exc}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"freqrag {args.command}: error: {exc}\n")
        return 1
    except NumericError as exc:
        sys.stderr.write(f"freqrag {args.command}: numeric failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
