"""Command-line entry point.

Subcommands:

* ``gen``        synthetic benchmark dataset from a JSON config
* ``featurize``  weekly aggregation of raw event CSVs into a dataset
* ``train``      fit samkl/mamkl or an lp-norm baseline on a split
* ``eval``       ranking metrics of a model on a dataset split
* ``predict``    per-sample scores as CSV
* ``gradcheck``  finite-difference and PSD verification on random instances

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
All randomness flows from ``--seed`` so every subcommand is reproducible.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .core import (
    DataError,
    load_dataset,
    load_manifest,
    split_dataset,
)
from .featmap import FeatureMapper
from .pipeline import (
    PipelineConfig,
    SyntheticConfig,
    featurize,
    generate_synthetic,
    write_synthetic,
)
from .trainer import (
    ADAPTIVE_MODES,
    Design,
    NumericError,
    TrainConfig,
    auroc,
    build_design,
    evaluate,
    gradients,
    load_model,
    objective,
    predict,
    save_model,
    score_design,
    train,
    train_lp_baseline,
)

MODES = ("samkl", "mamkl", "lp-zf", "lp-mf")


def _parse_ratios(text: str):
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError as e:
        raise DataError(f"bad split ratios {text!r}: {e}") from e
    if len(parts) != 3:
        raise DataError(f"split needs 3 comma-separated ratios, got {text!r}")
    return parts


def _write_or_print(text: str, out):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
        print(out)
    else:
        print(text)


# ---------------------------------------------------------------------------
# gen / featurize
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    cfg_path = Path(args.config)
    if not cfg_path.is_file():
        print(f"usage error: config file not found: {cfg_path}", file=sys.stderr)
        return 2
    try:
        raw = json.loads(cfg_path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"config {cfg_path} is not valid JSON: {e}") from e
    if args.seed is not None:
        raw["seed"] = args.seed
    config = SyntheticConfig.from_dict(raw)
    dataset, truth = generate_synthetic(config)
    manifest_path = write_synthetic(dataset, truth, args.out)
    print(manifest_path)
    return 0


def cmd_featurize(args) -> int:
    kinds = tuple(args.kinds.split(",")) if args.kinds else None
    config = PipelineConfig(
        start=args.start,
        end=args.end,
        tz_offset_hours=args.tz_offset,
        event_kinds=kinds,
        map_seed=args.seed,
        name=args.name,
    )
    manifest_path = featurize(args.sources, config, args.out)
    print(manifest_path)
    return 0


# ---------------------------------------------------------------------------
# train / eval / predict
# ---------------------------------------------------------------------------


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        c1=args.c1,
        c2=args.c2,
        c3=args.c3,
        latent_k=args.latent_k,
        seed=args.seed,
        p_norm=args.p,
        outer_rounds=args.outer_rounds,
        scale_reg_by_batches=args.scale_reg_by_batches,
        sequential_updates=args.sequential_updates,
    )


def cmd_train(args) -> int:
    manifest = load_manifest(args.data)
    dataset = load_dataset(manifest)
    ratios = _parse_ratios(args.split)
    split_seed = args.split_seed if args.split_seed is not None else args.seed
    train_ds, val_ds, _ = split_dataset(dataset, ratios, split_seed)
    config = _train_config(args)

    # The mapper below is identical to the one train() builds internally
    # (both derive from the manifest seeds and training means), so the
    # per-epoch validation scores use exactly the trained feature maps.
    mapper = FeatureMapper.from_dataset(train_ds)
    val_design = build_design(val_ds, mapper)
    val_y = val_ds.labels
    log_lines = []

    def log_progress(step_name, step, value, params, mode):
        scores = score_design(val_design, params, mode)
        try:
            va = f"{auroc(scores, val_y):.6f}"
        except ValueError:
            va = "nan"
        log_lines.append(f"{step_name}={step} objective={value:.6f} val_auroc={va}")

    if args.mode in ADAPTIVE_MODES:
        if args.fill is not None:
            print("usage error: --fill only applies to lp-zf/lp-mf modes",
                  file=sys.stderr)
            return 2
        model = train(
            train_ds, config, args.mode,
            on_epoch=lambda e, v, p: log_progress("epoch", e, v, p, args.mode),
        )
    else:
        fill = args.fill or {"lp-zf": "zero", "lp-mf": "mean"}[args.mode]
        model = train_lp_baseline(
            train_ds, config, fill,
            on_round=lambda r, v, p: log_progress("round", r, v, p, "fixed"),
        )
    model.train_config["split"] = {"ratios": list(ratios), "seed": split_seed}
    save_model(model, args.out)
    log_text = "\n".join(log_lines) + "\n" if log_lines else ""
    if args.log:
        Path(args.log).write_text(log_text)
    else:
        sys.stdout.write(log_text)
    print(args.out)
    return 0


def _select_part(args, model, dataset):
    if args.part == "all":
        return dataset
    if args.split is not None:
        ratios = _parse_ratios(args.split)
        split_seed = args.split_seed if args.split_seed is not None else 0
    else:
        info = model.train_config.get("split")
        if not info:
            raise DataError(
                "model records no split; pass --split/--split-seed or --part all"
            )
        ratios, split_seed = tuple(info["ratios"]), int(info["seed"])
    parts = dict(zip(("train", "val", "test"), split_dataset(dataset, ratios, split_seed)))
    return parts[args.part]


def cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(load_manifest(args.data))
    part = _select_part(args, model, dataset)
    metrics = evaluate(model, part)
    _write_or_print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True), args.out)
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(load_manifest(args.data))
    part = _select_part(args, model, dataset)
    ids, scores, _ = predict(model, part)
    lines = ["sample_id,score"]
    lines += [f"{sid},{float(score)!r}" for sid, score in zip(ids, scores)]
    _write_or_print("\n".join(lines), args.out)
    return 0


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


def _instance_margins(design, params):
    return 1.0 - design.y * score_design(design, params, "samkl")


def _block_errors(params, design, config):
    """Per-block norm relative error between analytic and FD gradients."""
    grads = gradients(params, design, config, "samkl")

    def obj(**over):
        p = dict(params)
        p.update(over)
        return objective(p, design, config, "samkl")

    errors = {}

    def rel_err(name, analytic, f):
        fd = oracle.finite_diff_grad(f, np.zeros(np.size(analytic)))
        denom = max(float(np.linalg.norm(fd)), 1e-12)
        errors[name] = float(np.linalg.norm(np.ravel(analytic) - fd)) / denom

    for m in range(design.s):
        def f_w(delta, m=m):
            ws = list(params["omegas"])
            ws[m] = params["omegas"][m] + delta
            return obj(omegas=ws)

        rel_err(f"omega_{m}", grads["omegas"][m], f_w)
    rel_err("b", np.array([grads["b"]]), lambda d: obj(b=params["b"] + float(d[0])))
    rel_err("V", grads["V"], lambda d: obj(V=params["V"] + d.reshape(params["V"].shape)))
    rel_err("A", grads["A"], lambda d: obj(A=params["A"] + d.reshape(params["A"].shape)))
    return errors


def cmd_gradcheck(args) -> int:
    config = TrainConfig(c1=0.7, c2=0.3, c3=0.2, latent_k=args.k, seed=args.seed)
    worst = 0.0
    done = 0
    attempt = 0
    while done < args.instances:
        d = oracle.random_mapped_design(
            args.n, args.s, args.k, args.groups, seed=args.seed + 1000 * attempt
        )
        attempt += 1
        design = Design(phis=d["phis"], pattern=d["pattern"],
                        groups=d["groups"], y=d["y"])
        params = {"omegas": d["omegas"], "b": d["b"], "V": d["V"], "A": d["A"]}
        if np.min(np.abs(_instance_margins(design, params))) <= 1e-3:
            continue  # too close to a hinge kink for finite differences
        errors = _block_errors(params, design, config)
        inst_max = max(errors.values())
        worst = max(worst, inst_max)
        print(f"gradcheck instance {done}: max rel err {inst_max:.3e}")
        done += 1

    psd_fail = 0
    min_ratio = np.inf
    for t in range(args.psd_instances):
        data, presence, kernels, V, A, groups = oracle.random_kernel_instance(
            seed=args.seed + 7000 + t
        )
        exact = oracle.exact_kernel_matrix(data, presence, kernels, V, A, groups)
        res = oracle.check_psd(exact.K_eta, tol=1e-8)
        min_ratio = min(min_ratio, res.lambda_min / max(1.0, res.lambda_max))
        if not res.passed:
            psd_fail += 1
    print(f"psd: {args.psd_instances - psd_fail}/{args.psd_instances} instances pass "
          f"(worst eigenvalue ratio {min_ratio:.3e})")

    ok = worst <= args.tol and psd_fail == 0
    print(f"{'PASS' if ok else 'FAIL'} (max relative error {worst:.3e}, "
          f"tolerance {args.tol:.0e})")
    return 0 if ok else 4


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="samkl",
        description="Adaptive multiple kernel learning for multi-channel data "
                    "with missing channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic benchmark dataset")
    p.add_argument("--config", required=True, help="generator config JSON")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("featurize", help="aggregate raw event CSVs into weekly samples")
    p.add_argument("--sources", required=True, help="directory with events.csv, "
                   "weather.csv, maintenance.csv, equipment.csv, failures.csv")
    p.add_argument("--start", required=True, help="first local date, YYYY-MM-DD")
    p.add_argument("--end", required=True, help="exclusive end date, YYYY-MM-DD")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--tz-offset", type=float, default=0.0,
                   help="local UTC offset in hours (default 0)")
    p.add_argument("--kinds", default=None,
                   help="comma-separated movement event kinds (default: observed)")
    p.add_argument("--name", default="weekly")
    p.add_argument("--seed", type=int, default=0, help="feature-map seed base")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit a model on the training split")
    p.add_argument("--data", required=True, help="dataset manifest JSON")
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--split", default="0.6,0.2,0.2")
    p.add_argument("--split-seed", type=int, default=None,
                   help="shuffle seed for the split (default: --seed)")
    p.add_argument("--log", default=None, help="write progress lines to this file")
    tc = TrainConfig()
    p.add_argument("--seed", type=int, default=tc.seed)
    p.add_argument("--epochs", type=int, default=tc.epochs)
    p.add_argument("--batch-size", type=int, default=tc.batch_size)
    p.add_argument("--lr", type=float, default=tc.lr)
    p.add_argument("--c1", type=float, default=tc.c1)
    p.add_argument("--c2", type=float, default=tc.c2)
    p.add_argument("--c3", type=float, default=tc.c3)
    p.add_argument("--latent-k", type=int, default=tc.latent_k)
    p.add_argument("--p", type=float, default=tc.p_norm,
                   help="lp-norm of the baseline weight constraint")
    p.add_argument("--outer-rounds", type=int, default=tc.outer_rounds,
                   help="alternating rounds for the lp baselines")
    p.add_argument("--fill", choices=("zero", "mean"), default=None,
                   help="override the baseline's raw-channel fill")
    p.add_argument("--scale-reg-by-batches", action="store_true",
                   help="divide regularizer steps by batches per epoch")
    p.add_argument("--sequential-updates", action="store_true",
                   help="update blocks V, A, b, omega one after another per batch")
    p.set_defaults(func=cmd_train)

    for name, fn in (("eval", cmd_eval), ("predict", cmd_predict)):
        p = sub.add_parser(name, help=f"{name} a trained model on a dataset part")
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--part", choices=("train", "val", "test", "all"),
                       default="test" if name == "eval" else "all")
        p.add_argument("--split", default=None,
                       help="override the split recorded in the model")
        p.add_argument("--split-seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser("gradcheck", help="finite-difference and PSD verification")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=48)
    p.add_argument("--s", type=int, default=4)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--groups", type=int, default=3)
    p.add_argument("--instances", type=int, default=5)
    p.add_argument("--psd-instances", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
