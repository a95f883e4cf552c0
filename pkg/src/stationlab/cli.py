"""Command-line orchestration with JSON configs and CSV/JSON outputs.

Subcommands: check | simulate | ma-error | clt | wip | quenched | variance |
report-data. Common flags: --config PATH, --seed U64, --workers N, --out DIR,
--assert. Exit codes: 0 success, 2 config error, 3 assertion failure,
4 refused computation (divergent or uncertified reference, degenerate
variance, uncertifiable verdicts).

Outputs are byte-identical for identical (config, seed, version) across runs
and worker counts; every CSV ends with a comment line carrying the config
hash and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .models import (
    ModelError,
    PastConfig,
    draw_pasts,
    exact_variance,
    model_from_json,
    variance_error_bound,
)
from .martingale import exact_entry, gordin_increment, ma_error_mc
from .sequences import (
    UNKNOWN,
    SequenceError,
    check_gl,
    check_h,
    check_mw,
    lemma_series_lhs,
    sequence_from_json,
)
from .simulate import replicate_batch, terminal_sums
from .stats import (
    DegenerateVarianceError,
    DivergentReferenceError,
    TiesError,
    boundedness_diagnostic,
    bm_sup_reference,
    clt_test,
    normal_reference,
    reference_sigma2,
    wip_sup_test,
)
from .tables import config_hash, write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSERT = 3
EXIT_REFUSED = 4

VERDICT_HEADER = ["condition", "classification", "N", "partial_sum", "certified"]
BATCH_HEADER = ["model_id", "n", "replicate", "S_n", "max_S", "max_absdev", "seed_hi", "seed_lo"]
MA_HEADER = ["model_id", "functional", "n", "value", "se", "method", "past_id", "trunc_N"]
STATS_HEADER = ["test", "model_id", "n", "R", "statistic", "pvalue", "alpha", "pass", "past_id"]
VARIANCE_HEADER = ["model_id", "n", "quantity", "value", "err_bound"]
GROWTH_HEADER = ["model_id", "n", "var_over_n", "q90_abs", "flag"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class AssertionFailed(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON: {e}")
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    if cfg.get("schema") != 1:
        raise ConfigError("schema", f"expected 1, got {cfg.get('schema')!r}")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be an object")
    return sec


def _req(sec: dict, path: str, key: str, types, default=None):
    if key not in sec:
        if default is not None:
            return default
        raise ConfigError(f"{path}.{key}", "missing required field")
    val = sec[key]
    if not isinstance(val, types):
        raise ConfigError(f"{path}.{key}", f"expected {types}, got {type(val).__name__}")
    return val


def _build_model(cfg: dict):
    if "model" not in cfg:
        raise ConfigError("model", "missing required field")
    try:
        return model_from_json(cfg["model"])
    except (ModelError, SequenceError, KeyError, TypeError) as e:
        raise ConfigError("model", str(e))


def _meta(cfg: dict, seed: int) -> dict:
    return {"config_sha256": config_hash(cfg), "seed": seed, "stationlab": __version__}


def _seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _workers(cfg: dict, args) -> int:
    if args.workers is not None:
        return args.workers
    if "workers" in cfg:
        return int(cfg["workers"])
    env = os.environ.get("STATIONLAB_WORKERS")
    return int(env) if env else 1


def _outdir(cfg: dict, args) -> Path:
    out = args.out or cfg.get("out", "results")
    return Path(out)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_check(cfg: dict, args) -> int:
    sec = _section(cfg, "check")
    q = float(sec.get("q", 2.0))
    if "sequence" in cfg:
        try:
            seq = sequence_from_json(cfg["sequence"])
        except (SequenceError, KeyError, TypeError) as e:
            raise ConfigError("sequence", str(e))
    else:
        model = _build_model(cfg)
        seq = model.projection_norms()
    grid = sec.get("grid")
    verdicts = [
        check_gl(seq, grid),
        check_h(seq, grid),
        check_mw(seq, grid),
        lemma_series_lhs(seq, q, grid),
    ]
    out = _outdir(cfg, args)
    meta = _meta(cfg, _seed(cfg, args))
    rows = [row for v in verdicts for row in v.csv_rows()]
    write_csv(out / "verdicts.csv", VERDICT_HEADER, rows, meta)
    write_json(out / "verdicts.json", [v.to_json() for v in verdicts])
    for v in verdicts:
        print(f"{v.condition}: {v.classification} (certified={v.certified})")
    if any(v.classification == UNKNOWN for v in verdicts):
        print("uncertifiable sequence: at least one verdict is Unknown", file=sys.stderr)
        return EXIT_REFUSED
    return EXIT_OK


def _load_past(sec: dict, name: str) -> PastConfig | None:
    path = sec.get("past_file")
    if path is None:
        return None
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return PastConfig(
            tuple(float(v) for v in doc["values"]),
            tuple(int(i) for i in doc["indices"]) if doc.get("indices") is not None else None,
            int(doc.get("past_id", 0)),
        )
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{name}.past_file", str(e))


def cmd_simulate(cfg: dict, args) -> int:
    sec = _section(cfg, "simulate")
    model = _build_model(cfg)
    n = int(_req(sec, "simulate", "horizon", (int,)))
    count = int(_req(sec, "simulate", "replicates", (int,)))
    seed = _seed(cfg, args)
    workers = _workers(cfg, args)
    past = _load_past(sec, "simulate")
    martingale = None
    if sec.get("martingale", False):
        martingale = gordin_increment(model, int(sec.get("truncation", model.lag)))
    batch = replicate_batch(model, n, count, seed, past=past, martingale=martingale, workers=workers)
    out = _outdir(cfg, args)
    write_csv(out / "batch.csv", BATCH_HEADER, batch.csv_rows(), _meta(cfg, seed))
    print(f"{count} replicates at n={n}: mean S_n = {float(np.mean(batch.s_n)):.6g}, "
          f"Var(S_n) = {float(np.var(batch.s_n, ddof=1)):.6g}")
    return EXIT_OK


def cmd_ma(cfg: dict, args) -> int:
    sec = _section(cfg, "ma")
    model = _build_model(cfg)
    horizons = [int(n) for n in _req(sec, "ma", "horizons", (list,))]
    count = int(sec.get("replicates", 10_000))
    seed = _seed(cfg, args)
    workers = _workers(cfg, args)
    trunc = int(sec.get("truncation", model.lag))
    maximal = bool(sec.get("maximal", False))
    increment = gordin_increment(model, trunc)
    entries = []
    for n in horizons:
        exact = exact_entry(model, increment, n)
        mc = ma_error_mc(model, increment, n, count, seed, maximal=maximal, workers=workers)
        entries.extend([exact, mc])
    out = _outdir(cfg, args)
    write_csv(out / "ma_decay.csv", MA_HEADER, [e.csv_row() for e in entries], _meta(cfg, seed))
    for e in entries:
        print(f"{e.functional} n={e.n} {e.method}: {e.value:.6g} (se {e.se:.2g})")
    if args.check:
        exacts = [e for e in entries if e.method == "exact_oracle"]
        mcs = [e for e in entries if e.method == "monte_carlo"]
        vals = [e.value for e in exacts]
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise AssertionFailed("exact error values are not strictly decreasing")
        for a, b in zip(exacts, mcs):
            if abs(a.value - b.value) > 4.0 * b.se:
                raise AssertionFailed(
                    f"exact and Monte Carlo disagree at n={a.n}: "
                    f"{a.value:.6g} vs {b.value:.6g} (se {b.se:.2g})"
                )
    return EXIT_OK


def _cdf_overlay_rows(samples: np.ndarray, reference, max_points: int = 1024):
    x = np.sort(samples)
    r = len(x)
    idx = np.unique(np.linspace(0, r - 1, min(max_points, r)).astype(int))
    emp = (idx + 1) / r
    ref = np.asarray(reference(x[idx]), dtype=float)
    return [(float(a), float(b), float(c)) for a, b, c in zip(x[idx], emp, ref)]


def cmd_clt(cfg: dict, args) -> int:
    sec = _section(cfg, "clt")
    model = _build_model(cfg)
    n = int(sec.get("horizon", 4096))
    count = int(sec.get("replicates", 20_000))
    seeds = int(sec.get("seeds", 1))
    alpha = float(sec.get("alpha", 0.01))
    seed = _seed(cfg, args)
    workers = _workers(cfg, args)
    sigma2 = reference_sigma2(model, sec.get("sigma2"))
    results = []
    for s in range(seeds):
        results.append(clt_test(model, n, count, seed + s, alpha=alpha, sigma2=sigma2, workers=workers))
    out = _outdir(cfg, args)
    meta = _meta(cfg, seed)
    rows = [r.csv_row(model.model_id, n) for r in results]
    write_csv(out / "stats_tests.csv", STATS_HEADER, rows, meta)
    sums = terminal_sums(model, n, count, seed, workers=workers)
    overlay = _cdf_overlay_rows(sums / math.sqrt(n), normal_reference(sigma2))
    write_csv(out / "clt_cdf.csv", ["x", "empirical", "reference"], overlay, meta)
    passed = sum(r.passed for r in results)
    print(f"clt: {passed}/{seeds} seeds pass at alpha={alpha} (n={n}, R={count}, sigma2={sigma2:g})")
    if args.check and passed < math.ceil(0.95 * seeds):
        raise AssertionFailed(f"only {passed}/{seeds} seeds passed")
    return EXIT_OK


def cmd_wip(cfg: dict, args) -> int:
    sec = _section(cfg, "wip")
    model = _build_model(cfg)
    n = int(sec.get("horizon", 16384))
    count = int(sec.get("replicates", 5_000))
    seeds = int(sec.get("seeds", 1))
    alpha = float(sec.get("alpha", 0.01))
    seed = _seed(cfg, args)
    workers = _workers(cfg, args)
    sigma2 = reference_sigma2(model, sec.get("sigma2"))
    results = [
        wip_sup_test(model, n, count, seed + s, alpha=alpha, sigma2=sigma2, workers=workers)
        for s in range(seeds)
    ]
    out = _outdir(cfg, args)
    meta = _meta(cfg, seed)
    write_csv(out / "stats_tests.csv", STATS_HEADER, [r.csv_row(model.model_id, n) for r in results], meta)
    batch = replicate_batch(model, n, count, seed, workers=workers)
    samples = np.maximum(batch.max_s, 0.0) / math.sqrt(n)
    overlay = _cdf_overlay_rows(samples, bm_sup_reference(sigma2))
    write_csv(out / "wip_cdf.csv", ["x", "empirical", "reference"], overlay, meta)
    passed = sum(r.passed for r in results)
    print(f"wip: {passed}/{seeds} seeds pass at alpha={alpha} (n={n}, R={count}, sigma2={sigma2:g})")
    if args.check and passed < math.ceil(0.95 * seeds):
        raise AssertionFailed(f"only {passed}/{seeds} seeds passed")
    return EXIT_OK


def cmd_quenched(cfg: dict, args) -> int:
    sec = _section(cfg, "quenched")
    model = _build_model(cfg)
    n_ma = int(sec.get("ma_horizon", 1024))
    n_ks = int(sec.get("ks_horizon", 4096))
    count = int(sec.get("replicates", 10_000))
    n_pasts = int(sec.get("pasts", 10))
    depth = sec.get("depth")
    alpha = float(sec.get("alpha", 0.01))
    seed = _seed(cfg, args)
    workers = _workers(cfg, args)
    pasts = draw_pasts(model, n_pasts, seed, depth=depth)
    increment = gordin_increment(model, int(sec.get("truncation", model.lag)))

    entries = [
        ma_error_mc(model, increment, n_ma, count, seed, past=p, remove_drift=True, workers=workers)
        for p in pasts
    ]
    annealed = ma_error_mc(model, increment, n_ma, count, seed + 1, remove_drift=True, workers=workers)
    out = _outdir(cfg, args)
    meta = _meta(cfg, seed)
    ma_rows = [e.csv_row() for e in entries]
    # annealed reference row: same reduced functional, no past id
    ma_rows.append(
        (annealed.model_id, "MA0", annealed.n, annealed.value, annealed.se,
         annealed.method, "", annealed.truncation)
    )
    write_csv(out / "quenched_ma.csv", MA_HEADER, ma_rows, meta)

    ks_results = clt_test(
        model, n_ks, count, seed, alpha=alpha, quenched_pasts=pasts,
        sigma2=sec.get("sigma2"), workers=workers,
    )
    rows = [r.csv_row(model.model_id, n_ks) for r in ks_results]
    n_pass = sum(r.passed for r in ks_results)
    need = math.ceil(0.9 * n_pasts)
    rows.append(
        ("clt_quenched_aggregate", model.model_id, n_ks, count, float(n_pass), float("nan"),
         alpha, n_pass >= need, "")
    )
    write_csv(out / "stats_tests.csv", STATS_HEADER, rows, meta)
    for e in entries:
        print(f"past {e.past_id}: MA0 = {e.value:.6g} (se {e.se:.2g})")
    print(f"annealed reference: {annealed.value:.6g} (se {annealed.se:.2g})")
    print(f"quenched KS: {n_pass}/{n_pasts} pasts pass at alpha={alpha} (n={n_ks})")

    if args.check:
        vals = entries + [annealed]
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                gap = abs(vals[i].value - vals[j].value)
                tol = 4.0 * math.hypot(vals[i].se, vals[j].se)
                if gap > tol:
                    raise AssertionFailed(
                        f"quenched estimates differ beyond 4 SE "
                        f"({vals[i].past_id} vs {vals[j].past_id}: {gap:.3g} > {tol:.3g})"
                    )
        if n_pass < need:
            raise AssertionFailed(f"only {n_pass}/{n_pasts} quenched KS tests passed")
    return EXIT_OK


def cmd_variance(cfg: dict, args) -> int:
    sec = _section(cfg, "variance")
    model = _build_model(cfg)
    horizons = [int(n) for n in _req(sec, "variance", "horizons", (list,))]
    count = int(sec.get("replicates", 500))
    seed = _seed(cfg, args)
    workers = _workers(cfg, args)
    rows = []
    for n in horizons:
        v = exact_variance(model, n)
        err = variance_error_bound(model, n)
        rows.append((model.model_id, n, "var", v, err))
        rows.append((model.model_id, n, "var_over_n", v / n, err / n))
    out = _outdir(cfg, args)
    meta = _meta(cfg, seed)
    write_csv(out / "variance.csv", VARIANCE_HEADER, rows, meta)
    table = boundedness_diagnostic(model, horizons, count=count, master_seed=seed, workers=workers)
    write_csv(out / "variance_growth.csv", GROWTH_HEADER, table.csv_rows(), meta)
    for n, v, q in zip(table.horizons, table.var_over_n, table.q90_abs):
        print(f"n={n}: Var(S_n)/n = {v:.6g}, q90(|S_n|/sqrt n) = {q:.4g}")
    print(f"flag: {table.flag}")
    return EXIT_OK


def cmd_report_data(cfg: dict, args) -> int:
    out = _outdir(cfg, args)
    files: dict[str, str] = {}
    ran = []

    def run(name, fn, *sub_outputs):
        code = fn(cfg, args)
        if code != EXIT_OK:
            raise AssertionFailed(f"sub-command {name} refused (exit {code})")
        ran.append(name)
        for key, fname in sub_outputs:
            files[key] = fname

    if "check" in cfg or "sequence" in cfg:
        run("check", cmd_check, ("verdicts", "verdicts.csv"))
    if "ma" in cfg:
        run("ma", cmd_ma, ("ma_decay", "ma_decay.csv"))
    if "variance" in cfg:
        run("variance", cmd_variance, ("variance", "variance.csv"),
            ("variance_growth", "variance_growth.csv"))
    if "clt" in cfg:
        run("clt", cmd_clt, ("stats_tests", "stats_tests.csv"), ("clt_cdf", "clt_cdf.csv"))
    if "wip" in cfg:
        run("wip", cmd_wip, ("stats_tests", "stats_tests.csv"), ("wip_cdf", "wip_cdf.csv"))
    if "quenched" in cfg:
        run("quenched", cmd_quenched, ("quenched_ma", "quenched_ma.csv"),
            ("stats_tests", "stats_tests.csv"))
    if not ran:
        raise ConfigError("report-data", "no experiment sections present in config")
    manifest = {
        "schema": 1,
        "model_id": cfg.get("model", {}).get("id", cfg.get("sequence", {}).get("id", "sequence")),
        "config_sha256": config_hash(cfg),
        "files": files,
    }
    write_json(out / "manifest.json", manifest)
    print(f"report data written to {out} ({', '.join(ran)})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "ma-error": cmd_ma,
    "clt": cmd_clt,
    "wip": cmd_wip,
    "quenched": cmd_quenched,
    "variance": cmd_variance,
    "report-data": cmd_report_data,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stationlab", description=__doc__)
    p.add_argument("--version", action="version", version=f"stationlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker threads (overrides config and STATIONLAB_WORKERS)")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("--assert", dest="check", action="store_true",
                        help="nonzero exit when an acceptance assertion fails")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionFailed as e:
        print(f"assertion failed: {e}", file=sys.stderr)
        return EXIT_ASSERT
    except (DivergentReferenceError, DegenerateVarianceError, TiesError) as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_REFUSED
    except (ModelError, SequenceError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
