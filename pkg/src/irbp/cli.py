"""Command-line entry point.

Subcommands: simulate, estimate, test, mle, index.  Every run resolves a
configuration (defaults, then --config JSON, then flags, flags winning),
validates it with precise field paths, and writes a summary JSON that
embeds the resolved configuration and the tool version; re-running a
command with --config pointed at its own summary reproduces the outputs
byte for byte.  Data files are plain tidy CSVs for external plotting.

Exit codes: 0 success, 1 validation error, 2 runtime or data error.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, estimate, inference, model, patents, simulate
from .errors import ConfigError, IrbpError, ValidationError

TABLE_GRID = (0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IrbpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irbp",
        description="Interacting reinforced Bernoulli processes: simulate, "
                    "fit growth exponents, test interaction intensity, and "
                    "build patent success matrices.")
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="JSON config file (a previous run's "
                                        "summary JSON also works)")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for replica ensembles")
        p.add_argument("--output-dir", default=None, help="output directory")

    p = sub.add_parser("simulate", help="generate trajectories")
    common(p)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--matrix-csv", default=None,
                   help="interaction matrix CSV (row = source process)")
    p.add_argument("--per-replica-files", action="store_true", default=None,
                   help="one CSV per replica instead of one long-format file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="log-log growth fits")
    common(p)
    p.add_argument("--input", required=True,
                   help="trajectory CSV or success-matrix CSV")
    p.add_argument("--size", type=int, default=None,
                   help="subsample size (default 10000)")
    p.add_argument("--baseline", default=None,
                   help="baseline category label or 1-based number "
                        "(default: last)")
    p.add_argument("--replica", type=int, default=None,
                   help="replica to read from a long-format file")
    p.add_argument("--split", action="store_true", default=None,
                   help="also fit per-source-category counters")
    p.add_argument("--gamma-star", type=float, default=None,
                   help="pinned slope for the split fits "
                        "(default: the fitted common slope)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("test", help="interaction-intensity test sweep")
    common(p)
    p.add_argument("--input", required=True,
                   help="trajectory CSV or success-matrix CSV")
    p.add_argument("--iota0", default=None,
                   help="comma-separated tested intensities "
                        "(default 0.55..0.95)")
    p.add_argument("--gamma-star", type=float, default=None,
                   help="growth exponent, if known")
    p.add_argument("--estimate-gamma", action="store_true", default=None,
                   help="estimate the growth exponent from the input first")
    p.add_argument("--replica", type=int, default=None)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("mle", help="maximum-likelihood interaction intensity")
    common(p)
    p.add_argument("--input", required=True,
                   help="success-matrix CSV or trajectory CSV with "
                        "contiguous checkpoints")
    p.add_argument("--gamma-star", type=float, default=None)
    p.add_argument("--estimate-gamma", action="store_true", default=None)
    p.add_argument("--theta", default=None,
                   help="comma-separated theta vector or one scalar "
                        "(default 0.5)")
    p.add_argument("--c", dest="c_param", default=None,
                   help="comma-separated c vector or one scalar (default 1)")
    p.add_argument("--replica", type=int, default=None)
    p.set_defaults(func=_cmd_mle)

    p = sub.add_parser("index", help="build the patent success matrix")
    common(p)
    p.add_argument("--patents", required=True, help="patents CSV")
    p.add_argument("--citations", required=True, help="citations CSV")
    p.add_argument("--window-years", type=int, default=None,
                   help="forward-citation window in years (default 5)")
    p.add_argument("--tau", type=float, default=None,
                   help="success threshold (default 0.8)")
    p.add_argument("--categories", default=None,
                   help="comma-separated category labels (default A..H)")
    p.add_argument("--sweep", default=None,
                   help="comma-separated thresholds for the exceedance sweep")
    p.add_argument("--write-index", action="store_true", default=None,
                   help="also write the per-patent index table CSV")
    p.set_defaults(func=_cmd_index)
    return parser


# -- config plumbing ----------------------------------------------------------

def _load_config(path) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    if "config" in obj and isinstance(obj["config"], dict):
        return obj["config"]  # a previous run's summary
    return obj


def _resolve(defaults: dict, args, flag_map: dict) -> dict:
    cfg = dict(defaults)
    if args.config:
        loaded = _load_config(args.config)
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ConfigError(
                f"unknown config field(s): {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for field, attr in flag_map.items():
        value = getattr(args, attr)
        if value is not None:
            cfg[field] = value
    return cfg


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _write_summary(outdir: Path, name: str, command: str, cfg: dict,
                   payload: dict) -> Path:
    doc = {"tool": "irbp", "version": __version__, "command": command,
           "config": _jsonable(cfg)}
    doc.update(_jsonable(payload))
    path = outdir / name
    path.write_text(json.dumps(doc, sort_keys=True, indent=2,
                               allow_nan=False) + "\n")
    return path


def _outdir(cfg: dict) -> Path:
    out = Path(cfg.get("output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- simulate -----------------------------------------------------------------

_SIMULATE_DEFAULTS = {
    "matrix": None,
    "theta": 0.5,
    "c": 1.0,
    "pi": None,
    "shocks": [],
    "t_max": 100000,
    "replicas": 1,
    "seed": 0,
    "checkpoints": None,
    "per_replica_files": False,
    "threads": 1,
    "output_dir": ".",
}


def _cmd_simulate(args) -> int:
    cfg = _resolve(_SIMULATE_DEFAULTS, args, {
        "seed": "seed", "threads": "threads", "output_dir": "output_dir",
        "t_max": "t_max", "replicas": "replicas",
        "per_replica_files": "per_replica_files",
    })
    if args.matrix_csv is not None:
        cfg["matrix"] = {"csv": args.matrix_csv}
    mat = _matrix_from_config(cfg["matrix"])
    params = _params_from_config(cfg, mat.n)
    _require(isinstance(cfg["t_max"], int) and cfg["t_max"] >= 1,
             "t_max", "must be an integer >= 1")
    for i, s in enumerate(params.shocks):
        _require(s.t_shock <= cfg["t_max"], f"shocks[{i}].t_shock",
                 f"must be <= t_max ({cfg['t_max']})")
    _require(isinstance(cfg["replicas"], int) and cfg["replicas"] >= 1,
             "replicas", "must be an integer >= 1")
    schedule = _schedule_from_config(cfg["checkpoints"], cfg["t_max"])

    ensemble = simulate.run_ensemble(
        params, mat, cfg["t_max"], cfg["replicas"], cfg["seed"],
        checkpoint_schedule=schedule, threads=int(cfg["threads"]))

    outdir = _outdir(cfg)
    files = []
    if cfg["per_replica_files"]:
        for traj in ensemble:
            name = f"replica_{traj.replica_id:05d}.csv"
            simulate.write_trajectory_csv(traj, outdir / name)
            files.append(name)
    else:
        name = "trajectories.csv"
        simulate.write_ensemble_csv(ensemble, outdir / name)
        files.append(name)

    payload = {
        "files": files,
        "final_counts": {str(traj.replica_id): traj.S[-1] for traj in ensemble},
    }
    if mat.irreducible:
        spec = model.perron(mat)
        payload["spectral"] = {
            "gamma_star": spec.gamma_star, "u": spec.u, "v": spec.v,
            "gamma2_real": spec.gamma2_real, "gap_ok": spec.gap_ok,
        }
    else:
        growth = model.growth_exponents(mat)
        payload["growth"] = {"exponent": growth.exponent,
                             "log_power": growth.log_power}
    path = _write_summary(outdir, "simulate_summary.json", "simulate", cfg,
                          payload)
    print(path)
    return 0


def _matrix_from_config(spec) -> model.InteractionMatrix:
    _require(isinstance(spec, dict) and spec, "matrix",
             'must be {"entries": [[...]]}, {"mean_field": {...}} or '
             '{"csv": "path"}')
    try:
        if "csv" in spec:
            return model.load_matrix_csv(spec["csv"])
        return model.matrix_from_json(spec)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"matrix: malformed specification ({exc})")
    except ValidationError as exc:
        raise ConfigError(f"matrix: {exc}")


def _vector(value, n: int, path: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return np.full(n, float(value))
    _require(isinstance(value, (list, tuple)) and len(value) == n, path,
             f"must be a scalar or a length-{n} list")
    return np.asarray(value, dtype=np.float64)


def _params_from_config(cfg: dict, n: int) -> simulate.ModelParams:
    theta = _vector(cfg["theta"], n, "theta")
    c = _vector(cfg["c"], n, "c")
    pi = None
    if cfg.get("pi") is not None:
        _require(isinstance(cfg["pi"], (list, tuple)) and len(cfg["pi"]) == n,
                 "pi", f"must be a length-{n} list or null")
        pi = np.asarray(cfg["pi"], dtype=np.float64)
    shocks = []
    for i, raw in enumerate(cfg.get("shocks") or []):
        _require(isinstance(raw, dict), f"shocks[{i}]", "must be an object")
        missing = {"t_shock", "process", "theta_new", "c_new"} - set(raw)
        _require(not missing, f"shocks[{i}]",
                 f"missing field(s): {', '.join(sorted(missing))}")
        shocks.append(simulate.ShockSpec(
            t_shock=raw["t_shock"], process=raw["process"],
            theta_new=raw["theta_new"], c_new=raw["c_new"]))
    try:
        return simulate.ModelParams(theta=theta, c=c, pi=pi,
                                    shocks=tuple(shocks))
    except ValidationError as exc:
        raise ConfigError(str(exc))


def _schedule_from_config(spec, t_max: int):
    if spec is None:
        return None
    if isinstance(spec, dict) and "per_decade" in spec:
        return simulate.default_checkpoints(t_max, int(spec["per_decade"]))
    _require(isinstance(spec, (list, tuple)), "checkpoints",
             'must be null, {"per_decade": k}, or a list of steps')
    return np.asarray(spec, dtype=np.int64)


# -- estimate -----------------------------------------------------------------

_ESTIMATE_DEFAULTS = {
    "input": None,
    "size": 10000,
    "baseline": None,
    "replica": None,
    "split": False,
    "gamma_star": None,
    "output_dir": ".",
}


def _cmd_estimate(args) -> int:
    cfg = _resolve(_ESTIMATE_DEFAULTS, args, {
        "input": "input", "size": "size", "baseline": "baseline",
        "replica": "replica", "split": "split", "gamma_star": "gamma_star",
        "output_dir": "output_dir",
    })
    source, labels = _load_counts_source(cfg["input"], cfg.get("replica"))
    sample = estimate.subsample(source, int(cfg["size"]))
    if labels is not None:
        sample = estimate.LogLogSample(ts=sample.ts, counts=sample.counts,
                                       split_counts=sample.split_counts,
                                       labels=labels)
    fit = estimate.fit_heaps(sample)
    baseline = _baseline_index(cfg.get("baseline"), fit.labels)
    ratios = estimate.centrality_ratios(fit, baseline)

    payload = {
        "fit": {
            "labels": list(fit.labels),
            "slopes": fit.slopes,
            "common_slope": fit.common_slope,
            "intercepts": fit.intercepts,
            "r2_free": fit.r2_free,
            "r2_common": fit.r2_common,
            "slope_sd": fit.slope_sd,
        },
        "baseline": fit.labels[baseline],
        "centrality_ratios": dict(zip(fit.labels, ratios)),
        "n_points": int(sample.ts.size),
    }
    if cfg["split"]:
        gs = cfg["gamma_star"] if cfg["gamma_star"] is not None \
            else fit.common_slope
        split_fit = estimate.fit_split(sample, float(gs), baseline=baseline)
        payload["split_fit"] = {
            "gamma_star": split_fit.gamma_star,
            "intercepts": split_fit.intercepts,
            "pi_ratios": split_fit.pi_ratios,
            "baseline": split_fit.labels[split_fit.baseline],
            "r2_common": split_fit.r2_common,
            "r2_free": split_fit.r2_free,
        }

    outdir = _outdir(cfg)
    _write_fitted_lines(outdir / "fitted_lines.csv", sample, fit)
    path = _write_summary(outdir, "fit.json", "estimate", cfg, payload)
    print(path)
    return 0


def _baseline_index(raw, labels: tuple[str, ...]) -> int:
    if raw is None:
        return len(labels) - 1
    if isinstance(raw, str) and raw in labels:
        return labels.index(raw)
    try:
        k = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"baseline: {raw!r} is neither a category label "
                          f"nor a 1-based number")
    _require(1 <= k <= len(labels), "baseline",
             f"must be in 1..{len(labels)}")
    return k - 1


def _write_fitted_lines(path, sample: estimate.LogLogSample,
                        fit: estimate.FitResult) -> None:
    import csv as _csv
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["category", "t", "observed", "fitted"])
        for h, lab in enumerate(fit.labels):
            mask = sample.counts[:, h] > 0
            for t, obs in zip(sample.ts[mask], sample.counts[mask, h]):
                fitted = 10.0 ** (fit.intercepts[h]
                                  + fit.common_slope * math.log10(t))
                w.writerow([lab, int(t), repr(float(obs)), repr(fitted)])


def _load_counts_source(path, replica):
    """Detect the input format; returns (source, labels or None)."""
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
    if header[:3] == ["id", "pub_date", "category"]:
        sm = patents.read_success_matrix_csv(path)
        return sm, sm.labels
    if header and header[0] in ("t", "replica"):
        ts, S, split = simulate.read_trajectory_csv(path, replica=replica)
        return (ts, S, split) if split is not None else (ts, S), None
    raise ConfigError(f"{path}: cannot detect input format from header "
                      f"{header!r}")


# -- test ---------------------------------------------------------------------

_TEST_DEFAULTS = {
    "input": None,
    "iota0": list(TABLE_GRID),
    "gamma_star": None,
    "estimate_gamma": False,
    "replica": None,
    "size": 10000,
    "output_dir": ".",
}


def _cmd_test(args) -> int:
    cfg = _resolve(_TEST_DEFAULTS, args, {
        "input": "input", "gamma_star": "gamma_star",
        "estimate_gamma": "estimate_gamma", "replica": "replica",
        "output_dir": "output_dir",
    })
    if args.iota0 is not None:
        cfg["iota0"] = [float(v) for v in str(args.iota0).split(",")]
    source, labels = _load_counts_source(cfg["input"], cfg.get("replica"))
    ts, counts = _final_counts(source)
    gamma_star, gamma_src = _gamma_star_for(cfg, source)

    rows = []
    for iota0 in cfg["iota0"]:
        res = inference.mean_field_test(counts, ts, float(iota0), gamma_star)
        rows.append(res)

    outdir = _outdir(cfg)
    import csv as _csv
    with open(outdir / "test_results.csv", "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["iota0", "statistic", "p_value", "validity"])
        for res in rows:
            w.writerow([repr(res.iota0), repr(res.statistic),
                        repr(res.p_value), int(res.validity)])
    payload = {
        "t": ts,
        "counts": {lab: int(v) for lab, v in
                   zip(labels or [str(i + 1) for i in range(len(counts))],
                       counts)},
        "gamma_star": gamma_star,
        "gamma_star_source": gamma_src,
        "df": rows[0].df,
        "results": [{"iota0": r.iota0, "statistic": r.statistic,
                     "p_value": r.p_value, "validity": r.validity}
                    for r in rows],
    }
    path = _write_summary(outdir, "test_summary.json", "test", cfg, payload)
    print(path)
    return 0


def _final_counts(source):
    if isinstance(source, patents.SuccessMatrix):
        counts = np.asarray(source.X, dtype=np.int64).sum(axis=0)
        return len(source.ids), counts
    ts, S = source[0], source[1]
    return int(ts[-1]), np.asarray(S[-1], dtype=np.int64)


def _gamma_star_for(cfg, source):
    if cfg.get("gamma_star") is not None:
        _require(not cfg.get("estimate_gamma"), "gamma_star",
                 "give either a value or estimate_gamma, not both")
        return float(cfg["gamma_star"]), "fixed"
    if cfg.get("estimate_gamma"):
        sample = estimate.subsample(source, int(cfg.get("size", 10000)))
        fit = estimate.fit_heaps(sample)
        return float(fit.common_slope), "estimated"
    raise ConfigError("gamma_star: supply a value or set estimate_gamma")


# -- mle ----------------------------------------------------------------------

_MLE_DEFAULTS = {
    "input": None,
    "gamma_star": None,
    "estimate_gamma": False,
    "theta": 0.5,
    "c": 1.0,
    "replica": None,
    "size": 10000,
    "output_dir": ".",
}


def _cmd_mle(args) -> int:
    cfg = _resolve(_MLE_DEFAULTS, args, {
        "input": "input", "gamma_star": "gamma_star",
        "estimate_gamma": "estimate_gamma", "replica": "replica",
        "output_dir": "output_dir",
    })
    if args.theta is not None:
        cfg["theta"] = _parse_vector_flag(args.theta, "theta")
    if args.c_param is not None:
        cfg["c"] = _parse_vector_flag(args.c_param, "c")
    source, labels = _load_counts_source(cfg["input"], cfg.get("replica"))
    x = _success_rows(source)
    n = x.shape[1]
    gamma_star, gamma_src = _gamma_star_for(cfg, source)
    theta = _vector(cfg["theta"], n, "theta")
    c = _vector(cfg["c"], n, "c")
    res = inference.mle_iota(x, gamma_star, theta=theta, c=c)
    outdir = _outdir(cfg)
    payload = {
        "iota_hat": res.iota_hat,
        "log_likelihood": res.log_likelihood,
        "gamma_star_used": res.gamma_star_used,
        "gamma_star_source": gamma_src,
        "converged": res.converged,
        "theta": theta,
        "c": c,
        "n_steps": int(x.shape[0]),
        "n_categories": int(n),
        "labels": list(labels) if labels else None,
    }
    path = _write_summary(outdir, "mle.json", "mle", cfg, payload)
    print(path)
    return 0


def _parse_vector_flag(raw: str, path: str):
    try:
        parts = [float(v) for v in str(raw).split(",")]
    except ValueError:
        raise ConfigError(f"{path}: expected a number or comma-separated "
                          f"numbers, got {raw!r}")
    return parts[0] if len(parts) == 1 else parts


def _success_rows(source) -> np.ndarray:
    if isinstance(source, patents.SuccessMatrix):
        return np.asarray(source.X, dtype=np.uint8)
    ts, S = source[0], source[1]
    ts = np.asarray(ts)
    if ts[0] != 1 or np.any(np.diff(ts) != 1):
        raise ConfigError(
            "input: the likelihood needs per-step outcomes; trajectory "
            "checkpoints must be contiguous 1..t (simulate with "
            '"checkpoints": [1, 2, ..., t_max])')
    x = np.diff(np.asarray(S, dtype=np.int64), axis=0, prepend=0)
    if np.any((x < 0) | (x > 1)):
        raise ConfigError("input: counts are not cumulative 0/1 outcomes")
    return x.astype(np.uint8)


# -- index --------------------------------------------------------------------

_INDEX_DEFAULTS = {
    "patents": None,
    "citations": None,
    "window_years": 5,
    "tau": 0.8,
    "categories": list(patents.DEFAULT_CATEGORIES),
    "sweep": None,
    "write_index": False,
    "output_dir": ".",
}


def _cmd_index(args) -> int:
    cfg = _resolve(_INDEX_DEFAULTS, args, {
        "patents": "patents", "citations": "citations",
        "window_years": "window_years", "tau": "tau",
        "write_index": "write_index", "output_dir": "output_dir",
    })
    if args.categories is not None:
        cfg["categories"] = [c.strip() for c in args.categories.split(",")]
    if args.sweep is not None:
        cfg["sweep"] = [float(v) for v in args.sweep.split(",")]
    _require(cfg["patents"] is not None, "patents", "input file required")
    _require(cfg["citations"] is not None, "citations", "input file required")

    tables = patents.ingest(cfg["patents"], cfg["citations"],
                            category_set=tuple(cfg["categories"]))
    table = patents.forward_citation_counts(tables, int(cfg["window_years"]))
    sm = patents.success_matrix(table, float(cfg["tau"]))

    outdir = _outdir(cfg)
    files = ["success_matrix.csv"]
    patents.write_success_matrix_csv(sm, outdir / "success_matrix.csv")
    sweep_data = None
    if cfg["sweep"]:
        sweep_data = patents.threshold_sweep(table, cfg["sweep"])
        patents.write_sweep_csv(sweep_data, outdir / "sweep.csv")
        files.append("sweep.csv")
    if cfg["write_index"]:
        patents.write_index_csv(table, outdir / "index_table.csv")
        files.append("index_table.csv")
    if not tables.citations:
        tables.report.warnings.append(
            "no usable citations: the success matrix is all zeros")

    payload = {
        "files": files,
        "n_patents": tables.report.n_patents,
        "n_citations": tables.report.n_citations,
        "dropped": tables.report.dropped,
        "warnings": tables.report.warnings,
        "successes_per_category": {
            lab: int(v) for lab, v in zip(sm.labels, sm.X.sum(axis=0))},
        "sweep": sweep_data,
    }
    path = _write_summary(outdir, "index_summary.json", "index", cfg, payload)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
