"""Command-line front end.

Subcommands: synth, train, eval, landscape, verify, simulate, inspect.
Every value-bearing flag resolves as flag > RECLAG_<NAME> env var >
built-in default, every run is deterministic given its flags and seed,
and each command writes a manifest (command, flags, seed, sha256 of
each artifact) next to its outputs.

Exit codes: 0 success, 1 input/config error, 2 numerical failure.
"""

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io_data
from .dynamics import (
    DivergenceError,
    classify_attractor,
    run_to_fixed_point,
)
from .energy import ClassPatternBank
from .io_data import FeatureFileError
from .lagrangians import HalfSquare, RecLag
from .ood import evaluate_detector
from .probability import estimate_log_partition, ood_score
from .trainer import TrainerConfig, TrainingDivergedError, train
from .verify import run_suite

ENV_PREFIX = "RECLAG_"
SCORERS = ("reclag", "mhe", "she", "msp", "energy", "react")


def _env(name, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    return cast(raw)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command, args, outputs):
    manifest = {
        "command": command,
        "flags": {k: v for k, v in sorted(vars(args).items())
                  if k != "func"},
        "seed": getattr(args, "seed", None),
        "artifacts": {str(p): _sha256(p) for p in outputs},
    }
    path = Path(out_dir) / f"manifest_{command}.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return path


def _chunked_scores(fn, rows, threads):
    """Apply fn to fixed 1024-row chunks; results do not depend on threads."""
    chunks = [rows[i:i + 1024] for i in range(0, len(rows), 1024)]
    if threads <= 1 or len(chunks) <= 1:
        parts = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, chunks))
    return np.concatenate([np.atleast_1d(p) for p in parts])


def _out_dir(args):
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_synth(args):
    out = _out_dir(args)
    id_data = io_data.gen_gaussian_mixture(
        args.clusters, args.per_cluster, args.dim, args.center_scale,
        args.noise_sigma, seed=args.seed)
    ood_data = io_data.gen_uniform_ring(
        args.ring_n, dim=args.dim, r_inner=args.ring_inner,
        r_outer=args.ring_outer, seed=args.seed + 1)
    id_path = out / args.id_out
    ood_path = out / args.ood_out
    io_data.write_features(id_path, id_data)
    io_data.write_features(ood_path, ood_data)
    _write_manifest(out, "synth", args, [id_path, ood_path])
    print(f"wrote {id_path} ({len(id_data)} samples) and "
          f"{ood_path} ({len(ood_data)} samples)")
    return 0


def cmd_train(args):
    out = _out_dir(args)
    data = io_data.read_features(args.features)
    cfg = TrainerConfig(
        n_memories=args.n_memories,
        epochs=args.epochs,
        learning_rate=args.lr,
        mc_samples=args.mc_samples,
        beta=args.beta,
        gamma=args.gamma,
        batch_size=args.batch_size,
        seed=args.seed,
        feature_norm_target=args.norm_target,
        estimator=args.estimator,
    )
    result = train(data, cfg)
    if args.estimate_partition:
        result.model.log_partition = estimate_log_partition(
            result.model, args.estimate_partition, seed=args.seed)
    model_path = out / args.model_out
    loss_path = out / args.loss_out
    io_data.write_density_model(model_path, result.model, result.emission)
    io_data.write_loss_csv(loss_path, result.history)
    _write_manifest(out, "train", args, [model_path, loss_path])
    print(f"trained {cfg.n_memories} memories for {cfg.epochs} epochs; "
          f"final mean log objective {result.history[-1]:.6f}")
    return 0


def cmd_eval(args):
    out = _out_dir(args)
    id_data = io_data.read_features(args.id)
    ood_data = io_data.read_features(args.ood)
    model = bank = head = None
    if args.scorer == "reclag":
        if args.model is None:
            raise ValueError("--model is required for the reclag scorer")
        model, _ = io_data.read_density_model(args.model)
        if args.norm_target:
            from .trainer import normalize_features
            id_data = normalize_features(id_data, args.norm_target)
            ood_data = normalize_features(ood_data, args.norm_target)
    if args.scorer in ("mhe", "she"):
        if args.bank_features is None:
            raise ValueError(
                f"--bank-features is required for the {args.scorer} scorer")
        bank_data = io_data.read_features(args.bank_features)
        if bank_data.labels is None:
            raise ValueError("bank features file carries no labels")
        bank = ClassPatternBank.from_class_means(bank_data.features,
                                                 bank_data.labels)
    if args.scorer == "react":
        if args.head is None:
            raise ValueError("--head is required for the react scorer")
        with np.load(args.head) as head_file:
            head = (head_file["weights"], head_file["bias"])

    if args.scorer == "reclag" and args.threads > 1:
        id_scores = _chunked_scores(lambda c: ood_score(model, c),
                                    id_data.features, args.threads)
        ood_scores = _chunked_scores(lambda c: ood_score(model, c),
                                     ood_data.features, args.threads)
        from .ood import ScoreSet, roc_and_auc
        metrics = roc_and_auc(ScoreSet(id_scores, ood_scores),
                              scorer="reclag")
    else:
        metrics = evaluate_detector(
            args.scorer, id_data, ood_data, model=model, bank=bank,
            head=head, clamp_percentile=args.clamp_percentile)

    pair = f"{Path(args.id).stem}_vs_{Path(args.ood).stem}"
    metrics_path = out / args.metrics_out
    roc_path = out / args.roc_out
    io_data.write_metrics_csv(metrics_path, [
        (args.scorer, pair, metrics.fpr95, metrics.auroc)])
    io_data.write_roc_csv(roc_path, metrics)
    _write_manifest(out, "eval", args, [metrics_path, roc_path])
    print(f"scorer={args.scorer} fpr95={metrics.fpr95:.4f} "
          f"auroc={metrics.auroc:.4f}")
    return 0


def cmd_landscape(args):
    out = _out_dir(args)
    if args.demo:
        model = io_data.demo_model()
    else:
        if args.model is None:
            raise ValueError("either --model or --demo is required")
        model, _ = io_data.read_density_model(args.model)
    bounds = tuple(args.bounds) if args.bounds else None
    grid = io_data.export_landscape(model, bounds=bounds,
                                    resolution=args.resolution)
    path = out / args.grid_out
    grid.to_csv(path)
    _write_manifest(out, "landscape", args, [path])
    print(f"wrote {grid.resolution ** 2} grid rows to {path}")
    return 0


def cmd_verify(args):
    results = run_suite(args.which, seed=args.seed,
                        gamma_factor=args.gamma_factor)
    for r in results:
        print(r.describe())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 0 if not failed else 2


def cmd_simulate(args):
    out = _out_dir(args)
    model, _ = io_data.read_density_model(args.model)
    data = io_data.read_features(args.features)
    if args.norm_target:
        from .trainer import normalize_features
        data = normalize_features(data, args.norm_target)
    if args.steps < 1:
        raise ValueError("--steps must be >= 1")
    gamma = args.gamma if args.gamma is not None else model.gamma
    mem = RecLag(beta=model.beta, gamma=gamma)
    feat = HalfSquare()

    import csv as _csv
    outputs = []
    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["sample", "attractor", "pattern_index",
                    "distance", "steps", "converged", "final_score"])
        for i, x in enumerate(data.features):
            traj = run_to_fixed_point(model.xi, x, mem, feat,
                                      max_steps=args.steps)
            label = classify_attractor(traj, model.xi, mem=mem)
            score = ood_score(model, traj.final)
            traj_path = out / f"trajectory_{i:05d}.csv"
            io_data.write_trajectory_csv(traj_path, traj)
            outputs.append(traj_path)
            w.writerow([
                i, label.kind,
                "" if label.index is None else label.index,
                "" if label.distance is None else repr(label.distance),
                traj.steps_taken, int(traj.converged), repr(score),
            ])
    outputs.append(summary_path)
    _write_manifest(out, "simulate", args, outputs)
    print(f"simulated {len(data)} samples for up to {args.steps} steps")
    return 0


def cmd_inspect(args):
    data = io_data.read_features(args.file)
    info = {
        "count": len(data),
        "feature_dim": data.n_features,
        "logit_dim": 0 if data.logits is None else data.logits.shape[1],
        "has_labels": data.labels is not None,
    }
    if args.json:
        print(json.dumps(info, sort_keys=True))
    else:
        for k, v in info.items():
            print(f"{k}: {v}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="reclag",
        description="Gated-Lagrangian Hopfield networks with a dedicated "
                    "out-of-distribution attractor",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int,
                       default=_env("seed", 0, int),
                       help="run seed (default: %(default)s)")
        p.add_argument("--out-dir", default=_env("out_dir", "."),
                       help="output directory (default: %(default)s)")
        p.add_argument("--threads", type=int,
                       default=_env("threads", 1, int),
                       help="worker cap for data-parallel scoring "
                            "(default: %(default)s)")

    p = sub.add_parser("synth", help="generate synthetic ID/OOD features")
    add_common(p)
    p.add_argument("--clusters", type=int, default=_env("clusters", 3, int))
    p.add_argument("--per-cluster", type=int,
                   default=_env("per_cluster", 500, int))
    p.add_argument("--dim", type=int, default=_env("dim", 2, int))
    p.add_argument("--center-scale", type=float,
                   default=_env("center_scale", 10.0, float))
    p.add_argument("--noise-sigma", type=float,
                   default=_env("noise_sigma", 0.2, float))
    p.add_argument("--ring-n", type=int, default=_env("ring_n", 1500, int))
    p.add_argument("--ring-inner", type=float,
                   default=_env("ring_inner", 12.0, float))
    p.add_argument("--ring-outer", type=float,
                   default=_env("ring_outer", 16.0, float))
    p.add_argument("--id-out", default="id.rlfv")
    p.add_argument("--ood-out", default="ood.rlfv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the interaction matrix")
    add_common(p)
    p.add_argument("--features", required=True, help="input feature file")
    p.add_argument("--n-memories", type=int,
                   default=_env("n_memories", 250, int))
    p.add_argument("--beta", type=float, default=_env("beta", 5.0, float))
    p.add_argument("--gamma", type=float, default=_env("gamma", None,
                                                       float))
    p.add_argument("--epochs", type=int, default=_env("epochs", 100, int))
    p.add_argument("--lr", type=float, default=_env("lr", 0.05, float))
    p.add_argument("--mc-samples", type=int,
                   default=_env("mc_samples", 5, int))
    p.add_argument("--batch-size", type=int,
                   default=_env("batch_size", 128, int))
    p.add_argument("--norm-target", type=float,
                   default=_env("norm_target", 10.0, float))
    p.add_argument("--estimator", choices=("auto", "exact", "sampled"),
                   default="auto")
    p.add_argument("--estimate-partition", type=int, default=0,
                   metavar="N_SAMPLES",
                   help="store a Monte Carlo log-partition estimate")
    p.add_argument("--model-out", default="model.rlmd")
    p.add_argument("--loss-out", default="loss.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score ID/OOD files and report metrics")
    add_common(p)
    p.add_argument("--id", required=True)
    p.add_argument("--ood", required=True)
    p.add_argument("--scorer", choices=SCORERS, default="reclag")
    p.add_argument("--model", help="density model file (reclag scorer)")
    p.add_argument("--bank-features",
                   help="labeled feature file for the class pattern bank")
    p.add_argument("--head", help="npz with 'weights' and 'bias' (react)")
    p.add_argument("--clamp-percentile", type=float, default=90.0)
    p.add_argument("--norm-target", type=float,
                   default=_env("norm_target", 10.0, float),
                   help="L2 rescaling applied before reclag scoring; "
                        "0 disables")
    p.add_argument("--metrics-out", default="metrics.csv")
    p.add_argument("--roc-out", default="roc.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("landscape", help="export the 2-d landscape grid")
    add_common(p)
    p.add_argument("--model")
    p.add_argument("--demo", action="store_true",
                   help="use the built-in five-pattern demo model")
    p.add_argument("--bounds", type=float, nargs=4,
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--resolution", type=int,
                   default=_env("resolution", 128, int))
    p.add_argument("--grid-out", default="landscape.csv")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("verify", help="run the numerical property suites")
    add_common(p)
    p.add_argument("--which",
                   choices=("thm1", "thm2", "thm3", "energy-descent",
                            "gradients", "all"),
                   default="all")
    p.add_argument("--gamma-factor", type=float, default=None,
                   help="gamma / N_H ratio for the origin-attractor "
                        "suite; values <= 1 violate its precondition")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate",
                       help="run gated dynamics per sample, export "
                            "trajectories")
    add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--steps", type=int, default=_env("steps", 50, int))
    p.add_argument("--gamma", type=float, default=None,
                   help="override the stored inverse memory strength")
    p.add_argument("--norm-target", type=float,
                   default=_env("norm_target", 10.0, float))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("inspect", help="print feature-file header info")
    add_common(p)
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DivergenceError, TrainingDivergedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (FeatureFileError, FileNotFoundError, ValueError, OSError,
            KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
