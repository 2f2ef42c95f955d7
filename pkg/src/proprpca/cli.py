"""Command-line interface.

Subcommands: simulate, fit, predict, evaluate, experiment, loocv,
preprocess. Exit codes: 0 success, 2 validation/config error, 3 when more
than 10% of experiment replicates fail.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .basis import build_design
from .data import ObservedMatrix, SiteFrame
from .exceptions import ConfigError, ReplicationFailure, SchemaMismatch
from .kriging import uk_design, uk_fit, uk_predict
from .metrics import prediction_r2, prediction_r2_mse, reconstruction_error
from .pipeline import (
    METHODS,
    build_experiment_spec,
    fit_method,
    filter_gis_covariates,
    gis_pca,
    load_model,
    model_to_dict,
    parse_config_file,
    preprocess_components,
    read_csv_table,
    run_experiment,
    run_loocv,
    save_model,
    true_test_scores,
    write_csv,
)
from .reducers import FitOptions
from .simulate import SCENARIO_KINDS, ScenarioConfig
from .pipeline import apply_missingness, generate_scenario

_CONFIG_KEYS_HELP = """\
config keys (file `key=value` lines and/or --set overrides):
  scenario       one of %s (required)
  grid_size      lattice side length (default 100)
  n_train        training sites per replicate (default 400)
  n_test         testing sites per replicate (default 100)
  missing        complete | mcar:<rate> | mar (default complete)
  methods        comma list from %s (default all)
  imputer        none | soft_impute (required for pca/predpca with missing)
  q              components per fit (default 1)
  replications   replicate count (default 200)
  seed           base seed (default 0)
  output_dir     where CSVs are written
  k_tilde        spline columns in the design (default 10)
  t_max          per-component iteration cap (default 500)
  tol            loading convergence tolerance (default 1e-6)
  ridge          predictive-PCA coefficient ridge (default 1e-8)
  workers        parallel replicate workers (default: PROPRPCA_WORKERS or cpu count)
  uk_phi_starts  kriging range-grid size (default 5)
  uk_nm_maxiter  kriging Nelder-Mead iteration cap (default 80)
""" % (", ".join(SCENARIO_KINDS), ", ".join(METHODS))


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ReplicationFailure as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proprpca",
        description="Spatially predictive principal components for "
        "multi-pollutant data with missing entries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate one scenario dataset as CSVs")
    p.add_argument("--scenario", required=True, choices=SCENARIO_KINDS)
    p.add_argument("--missing", default="complete", help="complete | mcar:<rate> | mar")
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--n-train", type=int, default=400)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit one reducer to sites + components CSVs")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--sites", required=True)
    p.add_argument("--components", required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--k-tilde", type=int, default=10)
    p.add_argument("--t-max", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--imputer",
        default="none",
        choices=["none", "soft_impute"],
        help="required for pca/predpca when components have missing cells",
    )
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser(
        "predict", help="krige fitted component scores at new sites"
    )
    p.add_argument("--model", required=True)
    p.add_argument("--sites", required=True, help="new sites CSV")
    p.add_argument("--out", required=True, help="predictions CSV path")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser(
        "evaluate", help="score predictions against held-out components"
    )
    p.add_argument("--model", required=True)
    p.add_argument("--sites", required=True, help="test sites CSV")
    p.add_argument("--components", required=True, help="complete test components CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser(
        "experiment",
        help="run a replicated simulation experiment",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=_CONFIG_KEYS_HELP,
    )
    p.add_argument("--config", help="key=value config file")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    p.add_argument("--output-dir", help="override output_dir")
    p.add_argument("--workers", type=int, help="override workers")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("loocv", help="leave-one-site-out cross-validation")
    p.add_argument("--sites", required=True)
    p.add_argument("--components", required=True)
    p.add_argument("--methods", default="pca,predpca,proprpca_spline")
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--training", default="complete", choices=["complete", "full"])
    p.add_argument("--k-tilde", type=int, default=10)
    p.add_argument("--t-max", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_loocv)

    p = sub.add_parser(
        "preprocess",
        help="log-proportion transform and/or GIS covariate screening",
    )
    p.add_argument("--components", help="raw component-mass CSV")
    p.add_argument(
        "--total-col", default="pm25_total", help="total-mass column name"
    )
    p.add_argument("--out-components", help="transformed components CSV path")
    p.add_argument("--sites", help="sites CSV with covariates to screen")
    p.add_argument(
        "--landuse-prefix",
        default="lu_",
        help="covariate name prefix marking land-use columns",
    )
    p.add_argument("--gis-pcs", type=int, default=5)
    p.add_argument("--out-sites", help="screened sites CSV with GIS PC scores")
    p.add_argument("--report", help="rule-attribution report CSV path")
    p.set_defaults(func=_cmd_preprocess)

    return parser


# ---------------------------------------------------------------------------
# CSV schemas
# ---------------------------------------------------------------------------

def read_sites_csv(path):
    header, rows = read_csv_table(path)
    if header[:3] != ["site_id", "x", "y"]:
        raise SchemaMismatch(f"{path}: header must start with site_id,x,y")
    covar_names = header[3:]
    site_ids = [r[0] for r in rows]
    coords = np.array([[float(r[1]), float(r[2])] for r in rows])
    covars = np.array(
        [[float(c) if c != "" else np.nan for c in r[3:]] for r in rows]
    ).reshape(len(rows), len(covar_names))
    return site_ids, coords, covars, covar_names


def read_components_csv(path):
    header, rows = read_csv_table(path)
    if header[0] != "site_id":
        raise SchemaMismatch(f"{path}: first column must be site_id")
    names = header[1:]
    site_ids = [r[0] for r in rows]
    vals = np.array(
        [[float(c) if c != "" else np.nan for c in r[1:]] for r in rows]
    )
    return site_ids, vals, names


def _check_alignment(site_ids_a, site_ids_b, what):
    if site_ids_a != site_ids_b:
        raise SchemaMismatch(f"site_id columns of {what} do not match")


def write_components_csv(path, site_ids, names, values):
    rows = []
    for sid, row in zip(site_ids, values):
        rows.append([sid] + ["" if np.isnan(v) else repr(float(v)) for v in row])
    write_csv(path, ["site_id"] + list(names), rows)


def write_sites_csv(path, site_ids, coords, covars, covar_names):
    rows = []
    for i, sid in enumerate(site_ids):
        row = [sid, repr(float(coords[i, 0])), repr(float(coords[i, 1]))]
        row += [repr(float(v)) for v in covars[i]]
        rows.append(row)
    write_csv(path, ["site_id", "x", "y"] + list(covar_names), rows)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    import os

    cfg = ScenarioConfig(
        kind=args.scenario,
        grid_size=args.grid_size,
        n_train=args.n_train,
        n_test=args.n_test,
        missing=args.missing,
        seed=args.seed,
    )
    x_all, frame_all = generate_scenario(cfg)
    train_idx = np.arange(cfg.n_train)
    x_train = x_all.take_rows(train_idx)
    frame_train = frame_all.take_rows(train_idx)
    x_train = apply_missingness(x_train, frame_train, cfg.missing, cfg.seed + 1)
    values = x_all.values.copy()
    values[: cfg.n_train] = np.where(x_train.mask, x_train.values, np.nan)

    os.makedirs(args.out_dir, exist_ok=True)
    site_ids = [f"s{i:05d}" for i in range(x_all.n)]
    covar_names = [f"r{j + 1}" for j in range(frame_all.k)]
    write_sites_csv(
        os.path.join(args.out_dir, "sites.csv"),
        site_ids,
        frame_all.coords,
        frame_all.covars,
        covar_names,
    )
    comp_names = [f"x{j + 1}" for j in range(x_all.p)]
    write_components_csv(
        os.path.join(args.out_dir, "components.csv"), site_ids, comp_names, values
    )
    roles = ["train"] * cfg.n_train + ["test"] * cfg.n_test
    write_csv(
        os.path.join(args.out_dir, "split.csv"),
        ["site_id", "role"],
        list(zip(site_ids, roles)),
    )
    print(f"wrote sites.csv, components.csv, split.csv to {args.out_dir}")
    return 0


def _load_dataset(sites_path, components_path):
    site_ids, coords, covars, covar_names = read_sites_csv(sites_path)
    comp_ids, vals, comp_names = read_components_csv(components_path)
    _check_alignment(site_ids, comp_ids, "sites and components")
    if covars.size and np.isnan(covars).any():
        raise SchemaMismatch("site covariates must be complete")
    frame = SiteFrame(coords, covars)
    return site_ids, frame, ObservedMatrix(vals), comp_names, covar_names


def _cmd_fit(args) -> int:
    _, frame, x, comp_names, _ = _load_dataset(args.sites, args.components)
    opts = FitOptions(q=args.q, t_max=args.t_max, tol=args.tol, seed=args.seed)
    design = None
    if args.method in ("predpca", "proprpca_spline"):
        design = build_design(frame, args.k_tilde, args.seed)
    imputed = None
    if args.method in ("pca", "predpca") and not x.is_complete:
        if args.imputer != "soft_impute":
            raise ConfigError(
                f"{args.method} with missing components requires --imputer soft_impute"
            )
        from .impute import soft_impute_cv

        imputed, _ = soft_impute_cv(x, seed=args.seed)
    result = fit_method(args.method, x, frame, design, opts, imputed)
    payload = model_to_dict(
        args.method,
        result,
        frame,
        {"component_names": comp_names, "q": args.q, "k_tilde": args.k_tilde},
    )
    save_model(args.out, payload)
    print(f"fitted {args.method} (q={args.q}); wrote {args.out}")
    return 0


def _cmd_predict(args) -> int:
    payload = load_model(args.model)
    site_ids, coords, covars, _ = read_sites_csv(args.sites)
    if covars.size and np.isnan(covars).any():
        raise SchemaMismatch("site covariates must be complete")
    new_frame = SiteFrame(coords, covars)
    train_frame = SiteFrame(
        np.asarray(payload["train_coords"]), np.asarray(payload["train_covars"])
    )
    ukd_train, uk_spec = uk_design(train_frame)
    ukd_new = uk_design(new_frame, uk_spec)
    preds = []
    for comp in payload["components"]:
        model = uk_fit(np.asarray(comp["score"]), ukd_train, train_frame.coords)
        preds.append(uk_predict(model, ukd_new, new_frame.coords))
    preds = np.column_stack(preds)
    header = ["site_id"] + [f"pc_{l + 1}" for l in range(preds.shape[1])]
    write_csv(
        args.out,
        header,
        [[sid] + [repr(float(v)) for v in row] for sid, row in zip(site_ids, preds)],
    )
    print(f"wrote predictions for {len(site_ids)} sites to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    payload = load_model(args.model)
    site_ids, vals, _ = read_components_csv(args.components)
    sids2, coords, covars, _ = read_sites_csv(args.sites)
    _check_alignment(sids2, site_ids, "sites and components")
    if np.isnan(vals).any():
        raise SchemaMismatch("evaluation requires complete test components")
    header, rows = read_csv_table(args.predictions)
    _check_alignment([r[0] for r in rows], site_ids, "predictions and components")
    q = payload["q"]
    u_hat = np.array([[float(c) for c in r[1 : q + 1]] for r in rows])

    means = np.asarray(payload["column_means"])
    loadings = np.column_stack(
        [np.asarray(c["loading"]) for c in payload["components"]]
    )
    xt_c = vals - means[None, :]
    u_true = true_test_scores(xt_c, loadings)
    out_rows = []
    for l in range(q):
        r2 = prediction_r2(u_true[:, l], u_hat[:, l])
        r2m = prediction_r2_mse(u_true[:, l], u_hat[:, l])
        re = reconstruction_error(xt_c, u_hat[:, : l + 1], loadings[:, : l + 1])
        out_rows.append((l + 1, r2, r2m, re))
    write_csv(
        args.out,
        ["pc_index", "prediction_r2", "prediction_r2_mse", "reconstruction_error"],
        out_rows,
    )
    print(f"wrote metrics for {q} components to {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    mapping = {}
    if args.config:
        mapping.update(parse_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        mapping[key.strip()] = value.strip()
    if args.output_dir:
        mapping["output_dir"] = args.output_dir
    if args.workers is not None:
        mapping["workers"] = str(args.workers)
    spec = build_experiment_spec(mapping)
    agg = run_experiment(spec)
    for row in agg.summary:
        method, pc, n, med_r2, iqr_r2, med_re, iqr_re = row
        print(
            f"{method} pc{pc}: median R2 = {med_r2:.3f} (IQR {iqr_r2:.3f}), "
            f"median RE = {med_re:.2f} over {n} replicates"
        )
    if agg.failures:
        print(f"{len(agg.failures)} replicate(s) failed", file=sys.stderr)
    if spec.output_dir:
        print(f"outputs written to {spec.output_dir}")
    return 0


def _cmd_loocv(args) -> int:
    import os

    _, frame, x, _, _ = _load_dataset(args.sites, args.components)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError(f"unknown methods: {unknown}")
    rows, summary, failures = run_loocv(
        x,
        frame,
        methods,
        args.q,
        training=args.training,
        k_tilde=args.k_tilde,
        seed=args.seed,
        t_max=args.t_max,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    write_csv(
        os.path.join(args.out_dir, "loocv_folds.csv"),
        ("site", "method", "pc_index", "u_true", "u_hat"),
        rows,
    )
    write_csv(
        os.path.join(args.out_dir, "loocv_summary.csv"),
        ("method", "pc_index", "n_folds", "pooled_r2"),
        summary,
    )
    if failures:
        write_csv(
            os.path.join(args.out_dir, "loocv_failures.csv"),
            ("fold", "site", "error"),
            failures,
        )
    for method, pc, n, r2 in summary:
        print(f"{method} pc{pc}: pooled R2 = {r2:.3f} over {n} folds")
    return 0


def _cmd_preprocess(args) -> int:
    did_something = False
    if args.components:
        if not args.out_components:
            raise ConfigError("--components requires --out-components")
        site_ids, vals, names = read_components_csv(args.components)
        if args.total_col not in names:
            raise ConfigError(f"total column {args.total_col!r} not in components file")
        tot_j = names.index(args.total_col)
        totals = vals[:, tot_j]
        comp = np.delete(vals, tot_j, axis=1)
        comp_names = [nm for j, nm in enumerate(names) if j != tot_j]
        out = preprocess_components(comp, totals)
        write_components_csv(args.out_components, site_ids, comp_names, out.values)
        print(f"wrote log-proportions for {len(comp_names)} components")
        did_something = True
    if args.sites:
        if not args.out_sites:
            raise ConfigError("--sites requires --out-sites")
        site_ids, coords, covars, covar_names = read_sites_csv(args.sites)
        land_use = np.array(
            [nm.startswith(args.landuse_prefix) for nm in covar_names]
        )
        survivors, kept, report = filter_gis_covariates(covars, land_use)
        if np.isnan(survivors).any():
            col_means = np.nanmean(survivors, axis=0)
            idx = np.where(np.isnan(survivors))
            survivors = survivors.copy()
            survivors[idx] = np.take(col_means, idx[1])
        scores = gis_pca(survivors, n_components=args.gis_pcs)
        pc_names = [f"gis_pc{l + 1}" for l in range(scores.shape[1])]
        write_sites_csv(args.out_sites, site_ids, coords, scores, pc_names)
        if args.report:
            write_csv(
                args.report,
                ("column", "name", "rule"),
                [(j, covar_names[j], rule) for j, rule in report],
            )
        print(
            f"kept {len(kept)}/{len(covar_names)} covariates; "
            f"wrote {args.gis_pcs} GIS PCs"
        )
        did_something = True
    if not did_something:
        raise ConfigError("preprocess needs --components and/or --sites")
    return 0


if __name__ == "__main__":
    sys.exit(main())
