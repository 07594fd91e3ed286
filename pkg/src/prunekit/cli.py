"""Command-line entry point.

Subcommands: gen, score, prune, train, probe, finetune, trajectory, report.
Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
Failures print one machine-parsable line to stderr: "error[<kind>]: ...".
"""

import argparse
import sys
from dataclasses import replace

from . import data_io, scoring, svg, transfer
from .errors import DataError, PrunekitError, UsageError
from .nn import TrainConfig, init_model, load_model, save_model, train
from .pruning import apply_plan, make_plan
from .synthetic import gen_task, load_task_spec
from .transfer import HarnessConfig, full_finetune, linear_probe, run_trajectory


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fixed_width(prog):
    return argparse.HelpFormatter(prog, width=96)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated floats, got {text!r}") from exc


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _ratio_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("--ratio-grid expects start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"invalid --ratio-grid {text!r}") from exc
    if step <= 0:
        raise UsageError("--ratio-grid step must be positive")
    ratios, r, i = [], start, 0
    while r <= stop + 1e-12:
        ratios.append(round(r, 10))
        i += 1
        r = start + i * step
    return ratios


def build_parser() -> _Parser:
    parser = _Parser(prog="prunekit", formatter_class=_fixed_width,
                     description="Dataset pruning for transfer learning.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("gen", formatter_class=_fixed_width,
                       help="generate a synthetic source/target task")
    p.add_argument("--spec", required=True, help="task spec JSON")
    p.add_argument("--out-dir", required=True, help="directory for the generated files")

    p = sub.add_parser("score", formatter_class=_fixed_width,
                       help="score source classes or samples for a target task")
    p.add_argument("--method", required=True, choices=sorted(scoring.METHODS))
    p.add_argument("--model", help="model checkpoint (lm/fm/grand/el2n; optional for moderate)")
    p.add_argument("--source", help="source features .dpf (fm/grand/el2n/moderate/random)")
    p.add_argument("--manifest", help="source manifest JSON")
    p.add_argument("--targets", help="target features .dpf (lm/fm)")
    p.add_argument("--k", type=int, default=2000, help="pseudo-class count for fm (default 2000)")
    p.add_argument("--kmeans-iters", type=int, default=50)
    p.add_argument("--kmeans-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0, help="seed for fm clustering / random scores")
    p.add_argument("--granularity", choices=["class", "sample"], default="sample",
                   help="population kind for random scores")
    p.add_argument("--out", required=True, help="scores JSON output")

    p = sub.add_parser("prune", formatter_class=_fixed_width,
                       help="turn scores into a keep/drop plan")
    p.add_argument("--scores", required=True, help="scores JSON")
    p.add_argument("--ratio", required=True, type=float)
    p.add_argument("--order", choices=["ordered", "reversed"], default="ordered")
    p.add_argument("--out", required=True, help="plan JSON output")

    p = sub.add_parser("train", formatter_class=_fixed_width,
                       help="pretrain a source model (optionally on a pruned view)")
    p.add_argument("--source", required=True, help="source features .dpf")
    p.add_argument("--manifest", required=True, help="source manifest JSON")
    p.add_argument("--plan", help="plan JSON to apply before training")
    p.add_argument("--hidden", default="16,8", help="comma-separated hidden widths")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model checkpoint output")

    for name, help_text in (
        ("probe", "train a linear head on frozen representations"),
        ("finetune", "finetune the whole model on the target"),
    ):
        p = sub.add_parser(name, formatter_class=_fixed_width, help=help_text)
        p.add_argument("--model", required=True, help="pretrained model checkpoint")
        p.add_argument("--target", required=True, help="target features .dpf")
        p.add_argument("--epochs", type=int, default=40 if name == "probe" else 15)
        p.add_argument("--batch-size", type=int, default=64)
        p.add_argument("--lr", type=float, default=0.05 if name == "probe" else 0.02)
        p.add_argument("--momentum", type=float, default=0.9)
        p.add_argument("--weight-decay", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="checkpoint output for the trained head/model")

    p = sub.add_parser("trajectory", formatter_class=_fixed_width,
                       help="sweep pruning ratios and report downstream accuracy")
    p.add_argument("--spec", required=True, help="task spec JSON")
    p.add_argument("--method", required=True, choices=sorted(scoring.METHODS))
    p.add_argument("--mode", required=True, choices=["lp", "ff"])
    p.add_argument("--ratios", type=_float_list, help="comma-separated ratios (must start at 0)")
    p.add_argument("--ratio-grid", type=_ratio_grid, help="start:stop:step shorthand")
    p.add_argument("--seeds", required=True, type=_int_list, help="comma-separated seeds")
    p.add_argument("--order", choices=["ordered", "reversed"], default="ordered")
    p.add_argument("--k", type=int, default=2000, help="pseudo-class count for fm")
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="winning-subset tolerance below baseline")
    p.add_argument("--jobs", type=int, default=1, help="parallel (ratio, seed) cells")
    p.add_argument("--surrogate-hidden", default="16", help="surrogate hidden widths")
    p.add_argument("--hidden", default="16,3", help="source model hidden widths")
    p.add_argument("--pretrain-epochs", type=int, default=20)
    p.add_argument("--pretrain-lr", type=float, default=0.02)
    p.add_argument("--pretrain-weight-decay", type=float, default=0.03)
    p.add_argument("--probe-epochs", type=int, default=40)
    p.add_argument("--probe-lr", type=float, default=0.05)
    p.add_argument("--finetune-epochs", type=int, default=15)
    p.add_argument("--finetune-lr", type=float, default=0.02)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--out", required=True, help="report JSON output")
    p.add_argument("--csv", help="per-cell CSV output")
    p.add_argument("--plot", help="SVG plot output")

    p = sub.add_parser("report", formatter_class=_fixed_width,
                       help="print a stored trajectory report as a table")
    p.add_argument("--report", required=True, help="report JSON")
    p.add_argument("--csv", help="re-emit the per-cell CSV")
    p.add_argument("--plot", help="re-emit the SVG plot")
    return parser


def _hidden_dims(text):
    if not text.strip():
        return []
    try:
        dims = [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated widths, got {text!r}") from exc
    if any(d < 1 for d in dims):
        raise UsageError("hidden widths must be positive")
    return dims


def _cmd_gen(args):
    spec = load_task_spec(args.spec)
    task = gen_task(spec)
    import os

    os.makedirs(args.out_dir, exist_ok=True)
    data_io.write_featureset(task.source, os.path.join(args.out_dir, "source.dpf"))
    data_io.write_manifest(task.source_manifest, os.path.join(args.out_dir, "source_manifest.json"))
    data_io.write_featureset(task.target, os.path.join(args.out_dir, "target.dpf"))
    data_io.write_manifest(task.target_manifest, os.path.join(args.out_dir, "target_manifest.json"))
    print(
        f"generated source n={task.source.n_samples} dim={task.source.dim} "
        f"classes={task.source_manifest.n_classes}; target n={task.target.n_samples} "
        f"relevant={task.relevant_ids}"
    )
    return 0


def _require(args, names):
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise UsageError(f"--{name} is required for this method")


def _cmd_score(args):
    method = args.method
    if method == "lm":
        _require(args, ["model", "targets"])
        model = load_model(args.model)
        targets = data_io.read_featureset(args.targets)
        n_classes = model.out_dim
        if args.manifest:
            manifest = data_io.read_manifest(args.manifest)
            if manifest.n_classes != n_classes:
                raise DataError(
                    f"model predicts {n_classes} classes but manifest declares {manifest.n_classes}"
                )
        scores = scoring.lm_scores(model, targets, n_classes)
    elif method == "fm":
        _require(args, ["model", "source", "targets"])
        model = load_model(args.model)
        from .nn import extract_features

        src = extract_features(model, data_io.read_featureset(args.source))
        tgt = extract_features(model, data_io.read_featureset(args.targets))
        cluster = scoring.kmeans_fit(src, args.k, seed=args.seed,
                                     max_iters=args.kmeans_iters, tol=args.kmeans_tol)
        scores = scoring.fm_scores(cluster, tgt)
    elif method in ("grand", "el2n"):
        _require(args, ["model", "source"])
        model = load_model(args.model)
        source = data_io.read_featureset(args.source)
        fn = scoring.grand_scores if method == "grand" else scoring.el2n_scores
        scores = fn(model, source)
    elif method == "moderate":
        _require(args, ["source"])
        source = data_io.read_featureset(args.source)
        if args.model:
            from .nn import extract_features

            source = extract_features(load_model(args.model), source)
        scores = scoring.moderate_scores(source)
    else:  # random
        _require(args, ["source"])
        if args.granularity == "class":
            _require(args, ["manifest"])
            population = data_io.read_manifest(args.manifest).n_classes
        else:
            population = data_io.read_featureset(args.source).n_samples
        scores = scoring.random_scores(population, args.seed, args.granularity)
    data_io.write_scores(scores, args.out)
    print(f"wrote {len(scores)} {scores.granularity} scores ({method}) to {args.out}")
    return 0


def _cmd_prune(args):
    scores = data_io.read_scores(args.scores)
    plan = make_plan(scores, args.ratio, args.order)
    data_io.write_plan(plan, args.out)
    print(f"kept {len(plan.kept)}/{plan.population} ({plan.granularity}, {plan.order}) -> {args.out}")
    return 0


def _train_config(args):
    return TrainConfig(args.epochs, args.batch_size, args.lr,
                       momentum=args.momentum, weight_decay=args.weight_decay, seed=args.seed)


def _cmd_train(args):
    source = data_io.read_featureset(args.source)
    manifest = data_io.read_manifest(args.manifest)
    data_io.validate_against_manifest(source, manifest)
    if args.plan:
        plan = data_io.read_plan(args.plan)
        source, manifest = apply_plan(source, manifest, plan)
    dims = [source.dim] + _hidden_dims(args.hidden) + [manifest.n_classes]
    model, trace = train(init_model(dims, args.seed), source, _train_config(args))
    save_model(model, args.out)
    print(f"trained {dims} for {args.epochs} epochs; final loss {trace[-1]:.6f} -> {args.out}")
    return 0


def _cmd_probe(args, mode):
    model = load_model(args.model)
    target = data_io.read_featureset(args.target)
    config = _train_config(args)
    if mode == "lp":
        head, acc = linear_probe(model, target, config)
        out_model = head
    else:
        out_model, acc = full_finetune(model, target, config)
    if args.out:
        save_model(out_model, args.out)
    print(f"{mode} accuracy {acc:.4f}")
    return 0


def _cmd_trajectory(args):
    if (args.ratios is None) == (args.ratio_grid is None):
        raise UsageError("exactly one of --ratios or --ratio-grid is required")
    ratios = args.ratios if args.ratios is not None else args.ratio_grid
    spec = load_task_spec(args.spec)
    task = gen_task(spec)
    cfg = HarnessConfig(
        surrogate_hidden=tuple(_hidden_dims(args.surrogate_hidden)),
        hidden=tuple(_hidden_dims(args.hidden)),
        k=args.k,
        epsilon=args.epsilon,
        jobs=args.jobs,
    )
    cfg.pretrain = replace(cfg.pretrain, epochs=args.pretrain_epochs,
                           learning_rate=args.pretrain_lr, batch_size=args.batch_size,
                           weight_decay=args.pretrain_weight_decay)
    cfg.surrogate_train = replace(cfg.surrogate_train, batch_size=args.batch_size)
    cfg.probe = replace(cfg.probe, epochs=args.probe_epochs,
                        learning_rate=args.probe_lr, batch_size=args.batch_size)
    cfg.finetune = replace(cfg.finetune, epochs=args.finetune_epochs,
                           learning_rate=args.finetune_lr, batch_size=args.batch_size)
    report = run_trajectory(task.source, task.source_manifest, task.target,
                            args.method, args.mode, ratios, args.seeds, cfg, order=args.order)
    data_io.write_report(report, args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(transfer.report_csv(report))
    if args.plot:
        with open(args.plot, "w", encoding="utf-8") as fh:
            fh.write(svg.plot_trajectory(report))
    _print_report(report)
    return 0


def _print_report(report):
    print("ratio     accuracy  winning")
    for r, a in zip(report.ratios, report.accuracy):
        mark = "yes" if r in report.winning else "no"
        print(f"{r:<9.3f} {a:<9.4f} {mark}")
    print(f"baseline {report.baseline_accuracy:.4f}; best winning ratio: {report.best_winning}")


def _cmd_report(args):
    report = data_io.read_report(args.report)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(transfer.report_csv(report))
    if args.plot:
        with open(args.plot, "w", encoding="utf-8") as fh:
            fh.write(svg.plot_trajectory(report))
    _print_report(report)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (see --help)")
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "prune":
            return _cmd_prune(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "probe":
            return _cmd_probe(args, "lp")
        if args.command == "finetune":
            return _cmd_probe(args, "ff")
        if args.command == "trajectory":
            return _cmd_trajectory(args)
        if args.command == "report":
            return _cmd_report(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 2
    except PrunekitError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
