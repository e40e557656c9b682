"""Command-line interface: fit, predict, simulate, bench.

Exit codes: 0 success, 1 runtime failure (bad file, degenerate data), 2
usage error.  All indices printed or accepted on this surface are 1-based;
the Python API underneath is 0-based.  Fit output is deterministic JSON
(sorted keys, no timestamps, no environment echoes), so a given
(data, seed, settings) triple produces byte-identical files regardless of
thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .dataset import (
    DataFormatError,
    Dataset,
    apply_column_filters,
    load_covariates,
    load_dense,
    load_sparse,
)
from .posterior import Hyperparams, score_model
from .predict import PredictiveEnsemble, ridge_coefficients
from .search import SearchConfig, run_search, top_k_weights, wam
from .simbench import (
    KINDS,
    DesignSpec,
    default_hyperparams,
    evaluate,
    generate,
    group_alternative_hyperparams,
    time_to_map,
)

# π̂ entries at or below this are omitted from the fit report
PI_REPORT_FLOOR = 1e-6


def _env_threads() -> int:
    raw = os.environ.get("SVEN_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        print(f"warning: ignoring malformed SVEN_THREADS={raw!r}", file=sys.stderr)
        return 1


def _add_search_flags(sp, temps_default=9, steps_default=200):
    sp.add_argument("--temps", type=int, default=temps_default,
                    help="number of temperature rungs")
    sp.add_argument("--steps", type=int, default=steps_default,
                    help="moves per temperature chain")
    sp.add_argument("--screen-cap", type=int, default=20)
    sp.add_argument("--screen-log-gap", type=float, default=-6.0)
    sp.add_argument("--weight-log-gap", type=float, default=-16.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-model-size", type=int, default=200)
    sp.add_argument("--block-size", type=int, default=4096)
    sp.add_argument("--threads", type=int, default=None,
                    help="scan worker threads (default: SVEN_THREADS env or 1)")


def _add_hyper_flags(sp):
    sp.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="slab precision (default n/p^2)")
    sp.add_argument("--w", type=float, default=None,
                    help="prior inclusion probability (default sqrt(n)/p)")


def _search_config(args) -> SearchConfig:
    threads = args.threads if args.threads is not None else _env_threads()
    return SearchConfig(
        n_temps=args.temps, steps_per_temp=args.steps,
        screen_cap=args.screen_cap, screen_log_gap=args.screen_log_gap,
        weight_log_gap=args.weight_log_gap, seed=args.seed,
        max_model_size=args.max_model_size, block_size=args.block_size,
        threads=threads,
    )


def _validate_common(parser, args):
    if args.lam is not None and args.lam <= 0:
        parser.error(f"--lambda must be positive, got {args.lam}")
    if args.w is not None and not 0 < args.w < 1:
        parser.error(f"--w must be inside (0, 1), got {args.w}")
    if args.temps < 1:
        parser.error("--temps must be >= 1")
    if args.steps < 0:
        parser.error("--steps must be >= 0")
    if args.screen_cap < 1:
        parser.error("--screen-cap must be >= 1")
    if args.screen_log_gap >= 0:
        parser.error("--screen-log-gap must be negative")
    if args.weight_log_gap >= 0:
        parser.error("--weight-log-gap must be negative")
    if args.max_model_size < 1:
        parser.error("--max-model-size must be >= 1")
    if args.block_size < 1:
        parser.error("--block-size must be >= 1")
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")


def _hyperparams(args, n: int, p: int) -> Hyperparams:
    if args.lam is not None and args.w is not None:
        return Hyperparams(lam=args.lam, w=args.w)
    base = default_hyperparams(n, p)
    return Hyperparams(
        lam=args.lam if args.lam is not None else base.lam,
        w=args.w if args.w is not None else base.w,
    )


def _write_text(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# fit


def _load_for_fit(parser, args) -> tuple:
    dense = args.data is not None
    sparse_in = args.sparse_data is not None
    if dense == sparse_in:
        parser.error("give exactly one of --data or --sparse-data")
    if dense:
        if args.response is None:
            parser.error("--data needs --response (name or 1-based index)")
        ds = load_dense(args.data, args.response)
        source, response = args.data, str(args.response)
    else:
        if args.response_file is None:
            parser.error("--sparse-data needs --response-file")
        ds = load_sparse(args.sparse_data, args.response_file)
        source, response = args.sparse_data, args.response_file
    return ds, source, response


def cmd_fit(args, parser) -> int:
    _validate_common(parser, args)
    if args.min_maf is not None and not 0 <= args.min_maf < 0.5:
        parser.error("--min-maf must be in [0, 0.5)")

    ds, source, response = _load_for_fit(parser, args)
    kept = None
    if args.min_maf is not None or args.drop_duplicates:
        p_before = ds.p
        ds, kept_idx = apply_column_filters(ds, min_maf=args.min_maf,
                                            drop_duplicates=args.drop_duplicates)
        if kept_idx.size != p_before:
            kept = [int(j) + 1 for j in kept_idx]

    hp = _hyperparams(args, ds.n, ds.p)
    cfg = _search_config(args)
    result = run_search(ds, hp, cfg)

    weighted = top_k_weights(result.top, cfg.weight_log_gap)
    pi, wam_model = wam(weighted, ds.p)
    map_state = score_model(ds, hp, result.map_model)
    mu0, mu, beta_std = ridge_coefficients(ds, map_state)

    doc = {
        "columns": list(ds.columns),
        "config": {
            "block_size": cfg.block_size,
            "max_model_size": cfg.max_model_size,
            "n_temps": cfg.n_temps,
            "screen_cap": cfg.screen_cap,
            "screen_log_gap": cfg.screen_log_gap,
            "seed": cfg.seed,
            "steps_per_temp": cfg.steps_per_temp,
            "weight_log_gap": cfg.weight_log_gap,
        },
        "data": {"n": ds.n, "p": ds.p, "response": response, "source": str(source)},
        "hyperparams": {"lambda": float(hp.lam), "w": float(hp.w)},
        "inclusion": [[int(j) + 1, float(pi[j])] for j in np.flatnonzero(pi > PI_REPORT_FLOOR)],
        "map": {
            "log_post": float(result.map_log_post),
            "model": [int(j) + 1 for j in result.map_model],
            "names": [ds.columns[j] for j in result.map_model],
            "size": len(result.map_model),
        },
        "map_fit": {
            "intercept": float(mu0),
            "slopes": [float(x) for x in mu],
            "slopes_standardized": [float(x) for x in beta_std],
        },
        "top_models": [
            {"log_post": float(result.top[key]), "model": [int(j) + 1 for j in key],
             "weight": float(wt)}
            for key, wt in weighted
        ],
        "wam": {
            "model": [int(j) + 1 for j in wam_model],
            "names": [ds.columns[j] for j in wam_model],
            "size": len(wam_model),
        },
    }
    if kept is not None:
        doc["data"]["kept_columns"] = kept
    if ds.n > 3:
        states = [(score_model(ds, hp, key), wt) for key, wt in weighted]
        doc["predictive"] = PredictiveEnsemble.from_states(ds, states).to_jsonable()
    if args.trace:
        doc["trace"] = [
            {"log_post": float(st.log_post),
             "move": [st.move[0]] + [int(x) + 1 for x in st.move[1:]],
             "size": st.size, "step": st.step, "temp_index": st.temp_index,
             "temperature": float(st.temperature)}
            for st in result.trace
        ]

    _write_text(args.out, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# predict


def cmd_predict(args, parser) -> int:
    if not 0 < args.alpha < 1:
        parser.error(f"--alpha must be in (0, 1), got {args.alpha}")
    if args.mc_draws < 2:
        parser.error("--mc-draws must be >= 2")

    with open(args.fit, "r") as fh:
        fit = json.load(fh)
    z_new, names = load_covariates(args.new_data)

    train_cols = fit.get("columns", [])
    if names is not None:
        if list(names) != list(train_cols):
            extra = [c for c in names if c not in train_cols]
            missing = [c for c in train_cols if c not in names]
            raise DataFormatError(
                f"{args.new_data}: columns do not match the fit "
                f"(missing {missing[:5]}, unexpected {extra[:5]}, order must match)"
            )
    elif z_new.shape[1] != len(train_cols):
        raise DataFormatError(
            f"{args.new_data}: {z_new.shape[1]} columns, fit expects {len(train_cols)}"
        )
    if "predictive" not in fit:
        raise ValueError(f"{args.fit}: no predictive state (fit had n <= 3?)")

    ens = PredictiveEnsemble.from_jsonable(fit["predictive"])
    want_z = args.method in ("zpi", "both")
    want_mc = args.method in ("mcpi", "both")
    header = ["row"]
    cols = []
    if want_z:
        zr = ens.z_interval(z_new, alpha=args.alpha)
        header += ["mean", "variance", "zpi_lo", "zpi_hi"]
        cols += [zr["mean"], zr["variance"], zr["lo"], zr["hi"]]
    if want_mc:
        mr = ens.mc_interval(z_new, n_mc=args.mc_draws, alpha=args.alpha,
                             rng=np.random.default_rng(args.seed))
        header += ["mcpi_lo", "mcpi_hi"]
        cols += [mr["lo"], mr["hi"]]

    lines = [",".join(header)]
    for i in range(z_new.shape[0]):
        lines.append(",".join([str(i + 1)] + [_fmt(c[i]) for c in cols]))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# simulate


_METRIC_FIELDS = ("size", "mspe", "mse_beta", "coverage", "fdr", "fnr", "jaccard")


def _metrics_row(metrics) -> list:
    return [metrics.model_size, metrics.mspe, metrics.mse_beta, metrics.coverage,
            metrics.fdr, metrics.fnr, metrics.jaccard]


def _fit_and_score(sim, hp, cfg):
    """Search on one replicate; returns metric rows for the MAP and WAM models."""
    ds = Dataset.from_arrays(sim.z_train, sim.y_train)
    result = run_search(ds, hp, cfg)
    weighted = top_k_weights(result.top, cfg.weight_log_gap)
    _, wam_model = wam(weighted, ds.p)

    rows = []
    for model in (result.map_model, wam_model):
        state = score_model(ds, hp, model)
        mu0, mu, _ = ridge_coefficients(ds, state)
        beta_hat = np.zeros(ds.p)
        beta_hat[list(state.columns)] = mu
        rows.append(_metrics_row(evaluate(model, beta_hat, sim, intercept=mu0)))
    return rows[0], rows[1], result


def cmd_simulate(args, parser) -> int:
    _validate_common(parser, args)
    if args.reps < 1:
        parser.error("--reps must be >= 1")
    kind = "compound_symmetry" if args.design == "cs" else args.design

    header = (["rep", "lambda", "w"]
              + [f"map_{f}" for f in _METRIC_FIELDS]
              + [f"wam_{f}" for f in _METRIC_FIELDS])
    rows = []
    for r in range(args.reps):
        spec = DesignSpec(kind=kind, n=args.n, p=args.p, rho=args.rho,
                          n_factors=args.factors, r_squared=args.r2,
                          seed=args.seed + r)
        sim = generate(spec)
        if args.alt_hyper:
            hp = group_alternative_hyperparams()
        else:
            hp = _hyperparams(args, args.n, args.p)
        cfg = replace(_search_config(args), seed=args.seed + 100_000 + r)
        map_row, wam_row, _ = _fit_and_score(sim, hp, cfg)
        rows.append([r + 1, hp.lam, hp.w] + map_row + wam_row)

    means = ["mean"] + [float(np.mean([row[i] for row in rows])) for i in range(1, len(header))]
    lines = [",".join(header)]
    for row in rows + [means]:
        lines.append(",".join([str(row[0])] + [_fmt(x) for x in row[1:]]))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args, parser) -> int:
    _validate_common(parser, args)
    if args.reps < 1:
        parser.error("--reps must be >= 1")
    try:
        n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    except ValueError:
        parser.error(f"--n-list must be comma-separated integers, got {args.n_list!r}")
    if not n_list or any(n < 8 for n in n_list):
        parser.error("--n-list entries must be >= 8")
    kind = "compound_symmetry" if args.design == "cs" else args.design

    lines = ["n,p,median_hit_ms,median_map_size"]
    for i, n in enumerate(n_list):
        p = int(round(2.0 * n ** 1.5))
        hits, sizes = [], []
        for r in range(args.reps):
            spec = DesignSpec(kind=kind, n=n, p=p, rho=args.rho,
                              n_factors=args.factors, r_squared=args.r2,
                              seed=args.seed + 1000 * i + r)
            sim = generate(spec)
            ds = Dataset.from_arrays(sim.z_train, sim.y_train)
            hp = _hyperparams(args, n, p)
            cfg = replace(_search_config(args), seed=args.seed + 1000 * i + r)
            result = run_search(ds, hp, cfg)
            hits.append(time_to_map(result) * 1000.0)
            sizes.append(len(result.map_model))
        lines.append(",".join([str(n), str(p), _fmt(np.median(hits)),
                               _fmt(np.median(sizes))]))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slabsearch",
        description="Bayesian variable selection for wide regression: exact "
                    "spike-and-slab model scores, tempered shotgun search, "
                    "and model-averaged prediction intervals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="select variables on a dataset, write JSON")
    fit.add_argument("--data", help="delimited matrix containing the response")
    fit.add_argument("--response", help="response column name or 1-based index")
    fit.add_argument("--sparse-data", help="coordinate-format sparse matrix")
    fit.add_argument("--response-file", help="response values, one per line")
    fit.add_argument("--min-maf", type=float, default=None,
                     help="drop 0/1 columns with minor frequency below this")
    fit.add_argument("--drop-duplicates", action="store_true",
                     help="drop exactly duplicated columns, keeping the first")
    fit.add_argument("--trace", action="store_true", help="include the search path")
    fit.add_argument("--out", default=None, help="output path (default stdout)")
    _add_hyper_flags(fit)
    _add_search_flags(fit)
    fit.set_defaults(func=cmd_fit)

    pred = sub.add_parser("predict", help="prediction intervals from a fit")
    pred.add_argument("--fit", required=True, help="fit JSON from the fit command")
    pred.add_argument("--new-data", required=True, help="covariates-only matrix")
    pred.add_argument("--alpha", type=float, default=0.05)
    pred.add_argument("--method", choices=("zpi", "mcpi", "both"), default="both")
    pred.add_argument("--mc-draws", type=int, default=1000)
    pred.add_argument("--seed", type=int, default=0)
    pred.add_argument("--out", default=None)
    pred.set_defaults(func=cmd_predict)

    sim = sub.add_parser("simulate", help="replicate a simulation scenario")
    sim.add_argument("--design", required=True, choices=KINDS + ("cs",))
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--reps", type=int, default=10)
    sim.add_argument("--rho", type=float, default=0.6)
    sim.add_argument("--factors", type=int, default=2)
    sim.add_argument("--r2", type=float, default=0.9)
    sim.add_argument("--alt-hyper", action="store_true",
                     help="use the grouped-covariate hyperparameters (200, 0.02)")
    sim.add_argument("--out", default=None)
    _add_hyper_flags(sim)
    _add_search_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    bench = sub.add_parser("bench", help="time the search across problem sizes")
    bench.add_argument("--design", default="ar1", choices=KINDS + ("cs",))
    bench.add_argument("--n-list", default="100,225,400",
                       help="comma-separated n values; p = 2*n^1.5 each")
    bench.add_argument("--reps", type=int, default=10)
    bench.add_argument("--rho", type=float, default=0.6)
    bench.add_argument("--factors", type=int, default=2)
    bench.add_argument("--r2", type=float, default=0.9)
    bench.add_argument("--out", default=None)
    _add_hyper_flags(bench)
    _add_search_flags(bench, temps_default=3, steps_default=50)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
