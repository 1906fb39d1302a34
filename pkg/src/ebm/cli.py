"""Command-line interface: ``ebm <command> ...``.

Exit codes: 0 success, 1 usage, 2 data validation, 3 capacity,
4 oracle check failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from . import crbm as _crbm
from . import dbn as _dbn
from . import gibbs as _gibbs
from .checks import oracle_check
from .errors import (
    CapacityError, ConfigError, DataValidationError, DimensionError, EbmError, ModelFormatError,
    UnsupportedFamilyError,
)
from .io import load_model, read_csv, read_sequences, save_model, write_csv
from .model import BmParams, CrbmParams, Dataset, DbnStack, RbmParams, TrainConfig, UnitFamily, rng_stream
from .trainer import train_bm, train_rbm
from .units import cond_mean_hidden, cond_mean_visible
from .validation import check_layer_sizes

log = logging.getLogger("ebm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAPACITY, EXIT_CHECK = 0, 1, 2, 3, 4
OUTPUT_FLAGS = ("--out", "--report", "--manifest", "--json")


class UsageError(EbmError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _train_flags(p, defaults_epochs=100):
    p.add_argument("--lr", type=float, default=0.1, help="learning rate")
    p.add_argument("--batch", type=int, default=10, help="mini-batch size")
    p.add_argument("--k", type=int, default=1, help="Gibbs sweeps per CD estimate")
    p.add_argument("--epochs", type=int, default=defaults_epochs)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-scale", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=0.0, help="stop when the update norm drops below this")
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--track-loglik", action="store_true", help="log exact log-likelihood per epoch")


def _common_flags(p):
    p.add_argument("--threads", type=int, default=None, help="cap on BLAS threads (default $EBM_THREADS)")
    p.add_argument("--manifest", default=None, help="run manifest path (default <out>.manifest.json)")


def build_parser():
    parser = _Parser(prog="ebm", description="Boltzmann machines, RBMs, conditional RBMs and DBNs.")
    parser.add_argument("--version", action="version", version=f"ebm {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train an RBM, BM or conditional RBM on a CSV")
    p.add_argument("kind", choices=["rbm", "bm", "crbm"])
    p.add_argument("data")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="per-epoch records (default <out>.report.jsonl)")
    p.add_argument("--hidden", type=int, default=2, help="number of hidden units")
    p.add_argument("--family", default="binary", help="visible unit family")
    p.add_argument("--hidden-family", default="binary")
    p.add_argument("--poisson-total", type=float, default=1.0)
    p.add_argument("--history", type=int, default=1, help="history length T (crbm)")
    p.add_argument("--standardize", action="store_true", help="standardise Gaussian visible columns")
    _train_flags(p)
    _common_flags(p)

    p = sub.add_parser("pretrain-dbn", help="greedy layer-wise RBM pre-training")
    p.add_argument("data")
    p.add_argument("--layers", required=True, help="comma-separated sizes, first = data dimension")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--sample-upward", action="store_true", help="propagate hidden samples instead of means")
    _train_flags(p)
    _common_flags(p)

    p = sub.add_parser("finetune-dbn", help="unroll a stack into an autoencoder and back-propagate")
    p.add_argument("data")
    p.add_argument("--model", required=True, help="DBN stack (or an MLP to continue training)")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--momentum", type=float, default=0.0)
    _common_flags(p)

    p = sub.add_parser("sample", help="generate visible vectors by Gibbs sampling")
    p.add_argument("model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=1, help="sweeps per frame (crbm)")
    p.add_argument("--seed-history", default=None, help="CSV of T frames, most recent first (crbm)")
    p.add_argument("--out", required=True)
    _common_flags(p)

    for name, text in (("encode", "code-layer activations"), ("reconstruct", "autoencoder reconstructions")):
        p = sub.add_parser(name, help=text)
        p.add_argument("model")
        p.add_argument("data")
        p.add_argument("--out", required=True)
        _common_flags(p)

    p = sub.add_parser("oracle-check", help="verify a model against exact enumeration")
    p.add_argument("model")
    p.add_argument("data", nargs="?", default=None)
    p.add_argument("--cap", type=int, default=24, help="enumeration bit budget")
    p.add_argument("--json", default=None, help="write machine-readable results here")
    _common_flags(p)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest_path")
    p.add_argument("--out-dir", default=None, help="redirect every output into this directory")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _config(args):
    return TrainConfig(
        learning_rate=args.lr, batch_size=args.batch, cd_steps=args.k, max_epochs=args.epochs,
        init_scale=args.init_scale, seed=args.seed, convergence_tol=args.tol,
        momentum=args.momentum, weight_decay=args.weight_decay, track_loglik=args.track_loglik,
    )


def _load_dataset(path, family):
    _, rows = read_csv(path)
    return Dataset(rows, family)


def _standardize(rows, stats=None):
    if stats is None:
        mean = rows.mean(axis=0)
        scale = rows.std(axis=0)
        scale[scale == 0] = 1.0
        stats = {"mean": mean.tolist(), "scale": scale.tolist()}
    return (rows - np.array(stats["mean"])) / np.array(stats["scale"]), stats


def _report_path(args):
    return args.report or f"{args.out}.report.jsonl"


def _summary(report, label):
    if not report.records:
        return
    first, last = report.records[0], report.records[-1]
    print(f"{label}: {len(report.records)} epochs, recon_error {first.recon_error:.6g} -> {last.recon_error:.6g}",
          file=sys.stderr)


def _write_reports(path, reports):
    with open(path, "w", encoding="utf-8") as fh:
        for stage, report in enumerate(reports):
            for line in report.to_lines():
                if len(reports) > 1:
                    line = json.dumps({"stage": stage, **json.loads(line)})
                fh.write(line + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_train(args):
    config = _config(args)
    metadata = {}
    if args.kind == "crbm":
        sequences = read_sequences(args.data)
        params, report = _crbm.train_crbm(config, sequences, args.history, args.hidden,
                                          args.hidden_family, args.family)
    else:
        family = UnitFamily.coerce(args.family)
        _, rows = read_csv(args.data)
        if args.standardize:
            if family is not UnitFamily.GAUSSIAN:
                raise ConfigError("--standardize only applies to gaussian visible units")
            rows, metadata["standardize"] = _standardize(rows)
        data = Dataset(rows, family)
        if args.kind == "rbm":
            params, report = train_rbm(config, data, args.hidden, args.hidden_family,
                                       poisson_total=args.poisson_total)
        else:
            if family is not UnitFamily.BINARY:
                raise UnsupportedFamilyError("bm training requires binary visible units")
            params, report = train_bm(config, data, args.hidden)
    save_model(params, args.out, metadata or None)
    report.write(_report_path(args))
    _summary(report, args.kind)
    return [args.out, _report_path(args)]


def cmd_pretrain_dbn(args):
    data = _load_dataset(args.data, UnitFamily.BINARY)
    sizes = check_layer_sizes(args.layers, data.d)
    stack, reports = _dbn.pretrain(_dbn.DbnSpec(tuple(sizes)), data, _config(args), args.sample_upward,
                                   return_reports=True)
    save_model(stack, args.out)
    _write_reports(_report_path(args), reports)
    for i, r in enumerate(reports):
        _summary(r, f"layer {i + 1}")
    return [args.out, _report_path(args)]


def _as_mlp(model):
    if isinstance(model, _dbn.Mlp):
        return model
    if isinstance(model, (DbnStack, RbmParams)):
        return _dbn.unroll_autoencoder(model)
    raise ConfigError(f"expected a dbn, rbm or mlp model, got {type(model).__name__}")


def cmd_finetune_dbn(args):
    mlp = _as_mlp(load_model(args.model))
    data = _load_dataset(args.data, UnitFamily.BINARY)
    if data.d != mlp.layer_sizes[0]:
        raise DataValidationError(f"data has {data.d} columns, network expects {mlp.layer_sizes[0]}")
    config = TrainConfig(learning_rate=args.lr, batch_size=min(args.batch, data.n), max_epochs=args.epochs,
                         seed=args.seed, momentum=args.momentum)
    mlp, report = _dbn.finetune(mlp, data, config)
    save_model(mlp, args.out)
    report.write(_report_path(args))
    _summary(report, "finetune")
    return [args.out, _report_path(args)]


def cmd_sample(args):
    model, metadata = load_model(args.model, with_metadata=True)
    rng = rng_stream(args.seed)
    if isinstance(model, CrbmParams):
        if args.seed_history:
            _, history = read_csv(args.seed_history)
        else:
            history = np.zeros((model.T, model.d))
        rows = _crbm.generate_sequence(model, history, args.n, args.k, rng)
    elif isinstance(model, (RbmParams, BmParams)):
        rows = _gibbs.generate(model, args.n, args.burn_in, args.thin, rng).rows
    else:
        raise ConfigError("sample needs an rbm, bm or crbm model")
    if "standardize" in metadata and len(rows):
        rows = rows * np.array(metadata["standardize"]["scale"]) + np.array(metadata["standardize"]["mean"])
    write_csv(args.out, rows, prefix="v")
    return [args.out]


def _forward(args, which):
    model, metadata = load_model(args.model, with_metadata=True)
    _, rows = read_csv(args.data)
    if "standardize" in metadata and len(rows):
        rows, _ = _standardize(rows, metadata["standardize"])
    if isinstance(model, RbmParams) and which == "encode":
        width = model.p
        fn = lambda x: cond_mean_hidden(model, x)
    elif isinstance(model, RbmParams):
        width = model.d
        fn = lambda x: cond_mean_visible(model, cond_mean_hidden(model, x))
    else:
        mlp = _as_mlp(model)
        width = mlp.layer_sizes[mlp.code_layer] if which == "encode" else mlp.layer_sizes[-1]
        fn = lambda x: _dbn.encode(mlp, x) if which == "encode" else _dbn.reconstruct(mlp, x)
    d_in = model.d if isinstance(model, RbmParams) else _as_mlp(model).layer_sizes[0]
    if rows.shape[0] and rows.shape[1] != d_in:
        raise DataValidationError(f"data has {rows.shape[1]} columns, model expects {d_in}")
    out = fn(rows) if rows.shape[0] else np.zeros((0, width))
    write_csv(args.out, out, prefix="h" if which == "encode" else "v")
    return [args.out]


def cmd_encode(args):
    return _forward(args, "encode")


def cmd_reconstruct(args):
    return _forward(args, "reconstruct")


class CheckFailed(EbmError):
    pass


def cmd_oracle_check(args):
    model = load_model(args.model)
    if not isinstance(model, (RbmParams, BmParams)):
        raise ConfigError("oracle-check needs an rbm or bm model")
    data = None
    if args.data:
        base = model.base if isinstance(model, BmParams) else model
        data = _load_dataset(args.data, UnitFamily.BINARY).rows
        if data.shape[1] != base.d:
            raise DataValidationError(f"data has {data.shape[1]} columns, model expects {base.d}")
    results = oracle_check(model, data, cap=args.cap)
    for r in results:
        print(r.line())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"model": args.model, "checks": [r.as_dict() for r in results]}, fh, indent=2)
    failed = [r.name for r in results if r.value is not None and not r.passed]
    if failed:
        raise CheckFailed("failed checks: " + ", ".join(failed))
    return [args.json] if args.json else []


COMMANDS = {
    "train": cmd_train,
    "pretrain-dbn": cmd_pretrain_dbn,
    "finetune-dbn": cmd_finetune_dbn,
    "sample": cmd_sample,
    "encode": cmd_encode,
    "reconstruct": cmd_reconstruct,
    "oracle-check": cmd_oracle_check,
}


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _manifest_path(args):
    if getattr(args, "manifest", None):
        return args.manifest
    return f"{args.out}.manifest.json" if getattr(args, "out", None) else None


def _absolute_argv(argv, args):
    """argv with input and output paths made absolute so reruns work from anywhere."""
    out = list(argv)
    for i, token in enumerate(out[:-1]):
        if token in OUTPUT_FLAGS + ("--model", "--seed-history"):
            out[i + 1] = os.path.abspath(out[i + 1])
    for attr in ("data", "model"):
        value = getattr(args, attr, None)
        if value and value in out:
            out[out.index(value)] = os.path.abspath(value)
    return out


def _run(argv, args):
    threads = args.threads if args.threads is not None else os.environ.get("EBM_THREADS")
    started = _now()
    fn = COMMANDS[args.command]
    if threads:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=int(threads)):
            outputs = fn(args)
    else:
        outputs = fn(args)
    manifest = _manifest_path(args)
    if manifest:
        config = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
        doc = {
            "command": args.command,
            "argv": _absolute_argv(argv, args),
            "config": config,
            "seed": getattr(args, "seed", None),
            "inputs": [os.path.abspath(p) for p in (getattr(args, "data", None), getattr(args, "model", None)) if p],
            "outputs": [os.path.abspath(p) for p in outputs if p],
            "code_version": __version__,
            "started": started,
            "finished": _now(),
        }
        with open(manifest, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)


def _redirect(argv, out_dir):
    argv = list(argv)
    for i, token in enumerate(argv[:-1]):
        if token in OUTPUT_FLAGS:
            argv[i + 1] = os.path.join(out_dir, os.path.basename(argv[i + 1]))
    return argv


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        if args.command == "rerun":
            with open(args.manifest_path, encoding="utf-8") as fh:
                manifest = json.load(fh)
            argv = manifest["argv"]
            if args.out_dir:
                os.makedirs(args.out_dir, exist_ok=True)
                argv = _redirect(argv, args.out_dir)
            return main(argv)
        _run(argv, args)
        return EXIT_OK
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ebm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"ebm: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except CheckFailed as exc:
        print(f"ebm: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except ConfigError as exc:
        print(f"ebm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataValidationError, ModelFormatError, DimensionError, UnsupportedFamilyError,
            FileNotFoundError, EbmError) as exc:
        print(f"ebm: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
