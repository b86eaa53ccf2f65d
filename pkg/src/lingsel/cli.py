"""Command-line interface.

Subcommands: train, score, select, evaluate, synth. Exit codes: 0 success,
1 usage errors, 2 data/format errors, 3 numeric failures.

Every command that writes an output file also writes `<out>.run.json`
alongside it: tool version, resolved flags, SHA-256 digests of inputs and
output, seeds, kernel backend, and wall time. Run manifests exist for
provenance and are the one output that is not byte-stable across reruns
(wall time); compare the primary outputs instead.
"""

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__, corpus, kernels
from .dsvdd import (
    DsvddConfig,
    DsvddModel,
    ae_pretrain,
    dsvdd_decision,
    dsvdd_threshold,
    dsvdd_train,
    fix_center,
)
from .errors import DataError, LingselError, UsageError
from .evaluation import (
    evaluate_classifier,
    format_report_table,
    gen_synthetic_suite,
    make_report,
)
from .iforest import IForestConfig, IForestModel, iforest_decision, iforest_train
from .ocsvm import OcSvmConfig, OcSvmModel, ocsvm_decision, ocsvm_train
from .selection import (
    SelectionConfig,
    rank_pool,
    read_scores,
    select_ensemble,
    select_random,
    select_single,
    write_scores,
    write_selection,
)
from .serde import load_model, save_model


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    data problems, so parse failures are rethrown as UsageError (exit 1)."""

    def error(self, message):
        raise UsageError(message)


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_run_manifest(out_path, command, argv, args, inputs, seeds, started):
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "handler"}
    doc = {
        "tool": "lingsel",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "flags": flags,
        "inputs": {role: {"path": p, "sha256": _sha256(p)} for role, p in inputs},
        "output": {"path": str(out_path), "sha256": _sha256(out_path)},
        "seeds": seeds,
        "backend": kernels.BACKEND_NAME,
        "threads": kernels.worker_count(),
        "wall_sec": round(time.monotonic() - started, 6),
    }
    with open(f"{out_path}.run.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _load_corpus(manifest_path, blob_path):
    if blob_path:
        return corpus.load_binary_embeddings(manifest_path, blob_path)
    return corpus.load_manifest(manifest_path)


def _parse_gamma(text):
    if text == "scale":
        return "scale"
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--gamma must be 'scale' or a number, got {text!r}") from None


def _model_kind(model):
    if isinstance(model, OcSvmModel):
        return "ocsvm"
    if isinstance(model, IForestModel):
        return "iforest"
    return "dsvdd"


def _decision_batch(model, x):
    if isinstance(model, OcSvmModel):
        return ocsvm_decision(model, x)
    if isinstance(model, IForestModel):
        return iforest_decision(model, x)
    return dsvdd_decision(model, x)


def _cmd_train(args, argv):
    started = time.monotonic()
    pool = _load_corpus(args.manifest, args.blob)
    if args.normalize:
        pool = corpus.normalized_copy(pool)
    x = pool.embedding_matrix()
    seeds = {}
    if args.method == "ocsvm":
        config = OcSvmConfig(
            nu=args.nu,
            gamma=_parse_gamma(args.gamma),
            tol=args.tol,
            max_iter=args.max_iter,
        )
        model = ocsvm_train(x, config)
        note = (
            f"ocsvm: {model.support_vectors.shape[0]} support vectors, "
            f"rho={model.rho:.6g}, converged={model.converged}"
        )
    elif args.method == "iforest":
        config = IForestConfig(
            n_trees=args.trees, subsample=args.subsample, seed=args.seed
        )
        model = iforest_train(x, config)
        seeds = {"seed": args.seed}
        note = f"iforest: {model.n_trees} trees, subsample {model.psi}"
    elif args.method == "dsvdd":
        config = DsvddConfig(
            ae_epochs=args.ae_epochs,
            ae_lr=args.ae_lr,
            enc_epochs=args.enc_epochs,
            enc_lr=args.enc_lr,
            weight_decay=args.weight_decay,
            batch_size=args.batch_size,
            latent_dim=args.latent_dim,
            seed=args.seed,
        )
        encoder, _ = ae_pretrain(x, config)
        center = fix_center(encoder, x)
        model = dsvdd_train(x, encoder, center, config)
        seeds = {"seed": args.seed}
        note = (
            f"dsvdd: mean squared distance "
            f"{model.initial_mean_distance:.6g} -> {model.final_mean_distance:.6g}"
        )
    else:
        raise UsageError(f"unknown method {args.method!r}")
    model.normalized = bool(args.normalize)
    save_model(model, args.out)
    inputs = [("manifest", args.manifest)]
    if args.blob:
        inputs.append(("blob", args.blob))
    _write_run_manifest(args.out, "train", argv, args, inputs, seeds, started)
    print(f"trained on {len(pool.records)} embeddings; {note}", file=sys.stderr)
    return 0


def _cmd_score(args, argv):
    started = time.monotonic()
    model = load_model(args.model)
    pool = _load_corpus(args.manifest, args.blob)
    if pool.records:
        if pool.dim != model.dim:
            raise DataError(
                f"pool dimension {pool.dim} does not match model dimension {model.dim}"
            )
        if model.normalized:
            pool = corpus.normalized_copy(pool)
        scores = _decision_batch(model, pool.embedding_matrix())
    else:
        scores = np.empty(0, dtype=np.float64)
        print("note: pool is empty; writing an empty scores file", file=sys.stderr)
    write_scores(args.out, pool.ids(), scores)
    inputs = [("model", args.model), ("manifest", args.manifest)]
    if args.blob:
        inputs.append(("blob", args.blob))
    _write_run_manifest(args.out, "score", argv, args, inputs, {}, started)
    print(
        f"scored {len(pool.records)} utterances with {_model_kind(model)}",
        file=sys.stderr,
    )
    return 0


def _read_exclude(path):
    ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                ids.add(raw)
    return ids


def _cmd_select(args, argv):
    started = time.monotonic()
    pool_ids, durations = corpus.load_durations(args.pool)
    exclude = _read_exclude(args.exclude) if args.exclude else set()
    if exclude:
        pool_ids = [uid for uid in pool_ids if uid not in exclude]
        durations = {k: v for k, v in durations.items() if k not in exclude}
    config = SelectionConfig(
        k_hours=args.hours,
        l0=args.l0,
        strategy=args.strategy,
        seed=args.seed,
        tight_budget=args.tight_budget,
    )
    config.validate()
    score_paths = [p for p in (args.scores or "").split(",") if p]

    def ranked(path):
        scores = read_scores(path)
        if exclude:
            scores = {k: v for k, v in scores.items() if k not in exclude}
        return rank_pool(scores, durations)

    if args.strategy == "ensemble":
        if len(score_paths) != 3:
            raise UsageError(
                "ensemble strategy needs --scores with exactly three "
                "comma-separated files"
            )
        result = select_ensemble(
            ranked(score_paths[0]),
            ranked(score_paths[1]),
            ranked(score_paths[2]),
            durations,
            config,
        )
    elif args.strategy == "single":
        if len(score_paths) != 1:
            raise UsageError("single strategy needs --scores with exactly one file")
        result = select_single(ranked(score_paths[0]), durations, config)
    else:
        if score_paths:
            raise UsageError("random strategy does not take --scores")
        result = select_random(pool_ids, durations, config)
    write_selection(args.out, result, durations)
    inputs = [("pool", args.pool)]
    inputs.extend((f"scores{i + 1}", p) for i, p in enumerate(score_paths))
    if args.exclude:
        inputs.append(("exclude", args.exclude))
    seeds = {"seed": args.seed} if args.strategy == "random" else {}
    _write_run_manifest(args.out, "select", argv, args, inputs, seeds, started)
    if result.exhausted:
        print(
            "warning: pool exhausted before reaching the duration budget",
            file=sys.stderr,
        )
    print(
        f"selected {len(result.selected)} utterances, "
        f"{result.total_sec / 3600.0:.3f} h (passes={result.passes})",
        file=sys.stderr,
    )
    return 0


def _cmd_evaluate(args, argv):
    started = time.monotonic()
    model = load_model(args.model)
    pos = corpus.load_manifest(args.pos)
    neg = corpus.load_manifest(args.neg)
    if not pos.records:
        raise DataError("positive evaluation set is empty")
    if not neg.records:
        raise DataError("negative evaluation set is empty")
    for name, part in (("positive", pos), ("negative", neg)):
        if part.dim != model.dim:
            raise DataError(
                f"{name} set dimension {part.dim} does not match model "
                f"dimension {model.dim}"
            )
    if model.normalized:
        pos = corpus.normalized_copy(pos)
        neg = corpus.normalized_copy(neg)
    decisions_pos = _decision_batch(model, pos.embedding_matrix())
    decisions_neg = _decision_batch(model, neg.embedding_matrix())
    kind = _model_kind(model)
    if isinstance(model, DsvddModel):
        quantile = args.dsvdd_quantile
        threshold = -dsvdd_threshold(model, None, quantile)
    else:
        quantile = None
        threshold = 0.0
    rates = evaluate_classifier(decisions_pos, decisions_neg, threshold)
    report = make_report(kind, threshold, rates, quantile)
    print(format_report_table(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        inputs = [("model", args.model), ("pos", args.pos), ("neg", args.neg)]
        _write_run_manifest(args.out, "evaluate", argv, args, inputs, {}, started)
    else:
        print(json.dumps(report))
    return 0


def _cmd_synth(args, argv):
    started = time.monotonic()
    target, other = gen_synthetic_suite(
        args.seed, args.n_target, args.n_other, args.dim, args.separation
    )
    corpus.write_manifest(target, args.out_target)
    corpus.write_manifest(other, args.out_other)
    seeds = {"seed": args.seed}
    _write_run_manifest(args.out_target, "synth", argv, args, [], seeds, started)
    _write_run_manifest(args.out_other, "synth", argv, args, [], seeds, started)
    print(
        f"wrote {len(target.records)} target and {len(other.records)} other "
        f"utterances (dim {args.dim})",
        file=sys.stderr,
    )
    return 0


def build_parser():
    parser = _Parser(
        prog="lingsel",
        description="Train one-class novelty detectors on utterance embeddings, "
        "score a candidate pool, and select a duration-budgeted subset.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p_train = sub.add_parser("train", help="fit a detector on target embeddings")
    p_train.add_argument(
        "--method", required=True, choices=("ocsvm", "iforest", "dsvdd")
    )
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--blob", default=None, help="embeddings blob (LEMB)")
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--normalize", action="store_true")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--nu", type=float, default=0.01)
    p_train.add_argument("--gamma", default="scale")
    p_train.add_argument("--tol", type=float, default=1e-6)
    p_train.add_argument("--max-iter", type=int, default=100_000)
    p_train.add_argument("--trees", type=int, default=200)
    p_train.add_argument("--subsample", type=int, default=256)
    p_train.add_argument("--ae-epochs", type=int, default=2500)
    p_train.add_argument("--enc-epochs", type=int, default=1000)
    p_train.add_argument("--ae-lr", type=float, default=1e-2)
    p_train.add_argument("--enc-lr", type=float, default=1e-3)
    p_train.add_argument("--weight-decay", type=float, default=1e-6)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--latent-dim", type=int, default=32)
    p_train.set_defaults(handler=_cmd_train)

    p_score = sub.add_parser("score", help="score a pool with a trained model")
    p_score.add_argument("--model", required=True)
    p_score.add_argument("--manifest", required=True)
    p_score.add_argument("--blob", default=None, help="embeddings blob (LEMB)")
    p_score.add_argument("--out", required=True)
    p_score.set_defaults(handler=_cmd_score)

    p_select = sub.add_parser("select", help="pick a duration-budgeted subset")
    p_select.add_argument(
        "--strategy", required=True, choices=("ensemble", "single", "random")
    )
    p_select.add_argument(
        "--scores",
        default=None,
        help="comma-separated score files; three for ensemble (consulted in "
        "the given order), one for single, none for random",
    )
    p_select.add_argument("--pool", required=True)
    p_select.add_argument("--hours", type=float, required=True)
    p_select.add_argument("--l0", type=int, default=1000)
    p_select.add_argument("--tight-budget", action="store_true")
    p_select.add_argument("--exclude", default=None, help="file of ids to drop")
    p_select.add_argument("--seed", type=int, default=0)
    p_select.add_argument("--out", required=True)
    p_select.set_defaults(handler=_cmd_select)

    p_eval = sub.add_parser("evaluate", help="error rates on labeled sets")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--pos", required=True)
    p_eval.add_argument("--neg", required=True)
    p_eval.add_argument("--dsvdd-quantile", type=float, default=0.95)
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(handler=_cmd_evaluate)

    p_synth = sub.add_parser("synth", help="generate a synthetic benchmark")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--n-target", type=int, default=500)
    p_synth.add_argument("--n-other", type=int, default=2000)
    p_synth.add_argument("--dim", type=int, default=512)
    p_synth.add_argument("--separation", type=float, default=0.1)
    p_synth.add_argument("--out-target", required=True)
    p_synth.add_argument("--out-other", required=True)
    p_synth.set_defaults(handler=_cmd_synth)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args, argv)
    except LingselError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
