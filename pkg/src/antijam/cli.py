"""Command-line entry point.

All subcommands share ``--config``/``--preset`` (what to run), ``--seed``
(overrides the config seed) and ``--out`` (the run directory).  Datasets
go to ``<out>/data``, checkpoints to ``<out>/models``, tables and figures
to ``<out>`` itself.

Exit codes: 0 success, 2 configuration or input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analytics as an
from . import jammers as jam
from .config import PRESETS, ConfigError, ExperimentConfig, load_config
from .experiments import (ANALYTIC_FIELDS, JAMMER_FIELDS, SUMMARY_FIELDS, TRACE_FIELDS, analytic_table,
                          evaluate_sc1, evaluate_sc2, summarize)
from .neural import GruModel, TrainingDiverged
from .report import RunLog, prepare_run_dir, read_csv, write_csv, write_manifest
from .sc1 import build_training_set, fit_classifier
from .sc1 import read_dataset as read_sc1
from .sc1 import write_dataset as write_sc1
from .sc2 import fit_forecasters, generate_sc2_episodes
from .sc2 import read_dataset as read_sc2
from .sc2 import write_dataset as write_sc2

log = logging.getLogger("antijam")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    """Missing or mismatched input files (reported with exit code 2)."""


# -- helpers -------------------------------------------------------------

def _mode(interference: bool) -> str:
    return "if" if interference else "nif"


def _preset_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def sc1_data_path(out: Path) -> Path:
    return out / "data" / "sc1.csv"


def sc2_data_path(out: Path, preset: str, interference: bool, user: int) -> Path:
    return out / "data" / f"sc2_{preset}_{_mode(interference)}_u{user}.csv"


def sc1_model_path(out: Path) -> Path:
    return out / "models" / "sc1.npz"


def sc2_model_path(out: Path, preset: str, interference: bool, user: int) -> Path:
    return out / "models" / f"sc2_{preset}_{_mode(interference)}_u{user}.npz"


def _presets(cfg: ExperimentConfig) -> list[str]:
    return [jam.resolve_preset(p) for p in cfg.jammers.presets]


# -- subcommands -----------------------------------------------------------

def cmd_gen_data(cfg: ExperimentConfig, out: Path, runlog: RunLog) -> dict:
    (out / "data").mkdir(parents=True, exist_ok=True)
    files = {}
    if cfg.scenario == "sc1":
        taxonomy = cfg.taxonomy()
        episodes = build_training_set(taxonomy, cfg.sc1_config(), cfg.sc1_training(), cfg.seed)
        path = sc1_data_path(out)
        write_sc1(path, episodes, cfg.network.num_channels)
        counts = np.bincount([int(ep[0, -1]) for ep in episodes], minlength=len(taxonomy))
        files[str(path.relative_to(out))] = {"rows": int(sum(len(e) for e in episodes)),
                                             "episodes": len(episodes),
                                             "episodes_per_class": counts.tolist()}
    elif cfg.scenario == "sc2":
        plan = cfg.sc2_training()
        for i, preset in enumerate(_presets(cfg)):
            seed = _preset_seed(cfg.seed, i)
            eps = generate_sc2_episodes(preset, cfg.network.num_users, plan.slots, cfg.eval.interference,
                                        cfg.sc2_config(), seed, plan.episodes)
            for k in range(cfg.network.num_users):
                path = sc2_data_path(out, preset, cfg.eval.interference, k)
                user_eps = [ep[k] for ep in eps]
                write_sc2(path, user_eps)
                files[str(path.relative_to(out))] = {"rows": int(sum(len(x) for x, _ in user_eps)),
                                                     "episodes": len(user_eps), "seed": seed}
    else:
        raise ConfigError("gen-data needs scenario sc1 or sc2")
    runlog.event("gen_data", files=files)
    return {"files": files}


def cmd_train(cfg: ExperimentConfig, out: Path, runlog: RunLog) -> dict:
    (out / "models").mkdir(parents=True, exist_ok=True)
    trained = {}
    if cfg.scenario == "sc1":
        path = sc1_data_path(out)
        if not path.exists():
            raise InputError(f"dataset not found: expected {path} (run gen-data first)")
        episodes, L = read_sc1(path)
        if L != cfg.network.num_channels:
            raise InputError(f"{path} has L={L} but the config says L={cfg.network.num_channels}")
        model, res = fit_classifier(episodes, len(cfg.taxonomy()), cfg.sc1_config(), cfg.sc1_training())
        _check_finite(res.loss_curve)
        mpath = sc1_model_path(out)
        model.save(mpath, cfg.sc1_training().train, extra={"scenario": "sc1", "L": L})
        _write_curve(out / "models" / "loss_sc1.csv", res)
        trained[str(mpath.relative_to(out))] = res.loss_curve[-1] if res.loss_curve else None
        runlog.event("train", model="sc1", final_loss=trained[str(mpath.relative_to(out))])
    elif cfg.scenario == "sc2":
        plan = cfg.sc2_training()
        N = cfg.network.num_users
        for preset in _presets(cfg):
            per_user = []
            for k in range(N):
                path = sc2_data_path(out, preset, cfg.eval.interference, k)
                if not path.exists():
                    raise InputError(f"dataset not found: expected {path} (run gen-data first)")
                per_user.append(read_sc2(path))
            episodes = [[per_user[k][e] for k in range(N)] for e in range(len(per_user[0]))]
            models, results = fit_forecasters(episodes, cfg.sc2_config(), plan)
            for res in results:
                _check_finite(res.loss_curve)
            for k, m in enumerate(models):
                mpath = sc2_model_path(out, preset, cfg.eval.interference, k)
                m.save(mpath, plan.train, extra={"scenario": "sc2", "preset": preset, "user": k})
                trained[str(mpath.relative_to(out))] = results[0 if plan.shared else k].loss_curve[-1]
            _write_curve(out / "models" / f"loss_sc2_{preset}_{_mode(cfg.eval.interference)}.csv", results[0])
            runlog.event("train", model=f"sc2_{preset}", final_loss=results[0].loss_curve[-1])
    else:
        raise ConfigError("train needs scenario sc1 or sc2")
    return {"models": trained}


def _check_finite(curve):
    if not np.all(np.isfinite(curve)):
        raise TrainingDiverged("non-finite value in loss curve")


def _write_curve(path: Path, res):
    rows = [{"epoch": i, "loss": l, "accuracy": a}
            for i, (l, a) in enumerate(zip(res.loss_curve, res.accuracy_curve))]
    write_csv(path, rows, ("epoch", "loss", "accuracy"))


def _load(path: Path, input_dim: int) -> GruModel:
    if not path.exists():
        raise InputError(f"checkpoint not found: expected {path} (run train first)")
    model, _ = GruModel.load(path)
    if model.input_dim != input_dim:
        raise InputError(f"{path}: model input {model.input_dim} does not match 2L={input_dim}")
    return model


def cmd_eval(cfg: ExperimentConfig, out: Path, runlog: RunLog, plots: bool = True) -> dict:
    L = cfg.network.num_channels
    if cfg.scenario == "sc1":
        needs_model = "proposed" in cfg.eval.methods
        model = _load(sc1_model_path(out), 2 * L) if needs_model else None
        taxonomy = cfg.taxonomy()
        if model is not None and model.head.out_dim != len(taxonomy):
            raise InputError(f"classifier has {model.head.out_dim} classes, taxonomy has {len(taxonomy)}")
        result = evaluate_sc1(cfg, model, taxonomy)
    elif cfg.scenario == "sc2":
        models = {}
        if "proposed" in cfg.eval.methods:
            for preset in _presets(cfg):
                models[preset] = [_load(sc2_model_path(out, preset, cfg.eval.interference, k), 2 * L)
                                  for k in range(cfg.network.num_users)]
        result = evaluate_sc2(cfg, models)
    else:
        raise ConfigError("eval needs scenario sc1 or sc2")
    summary = summarize(result, cfg.eval.bucket)
    counts = {"traces.csv": write_csv(out / "traces.csv", result.traces, TRACE_FIELDS),
              "summary.csv": write_csv(out / "summary.csv", summary, SUMMARY_FIELDS)}
    if result.jammer_rates:
        counts["jammers.csv"] = write_csv(out / "jammers.csv", result.jammer_rates, JAMMER_FIELDS)
    figures = []
    if plots:
        from .plotting import plot_summary

        figures = [str(p.name) for p in plot_summary(read_csv(out / "summary.csv"), out, cfg.eval.bucket)]
    headline = {f"{r['method']}/{r['case']}/{r['metric']}": r["value"] for r in summary if r["slot"] == "all"}
    runlog.event("eval", rows=counts, headline=headline)
    return {"rows": counts, "figures": figures}


def cmd_analytic(cfg: ExperimentConfig, out: Path, runlog: RunLog, plots: bool = True) -> dict:
    rows = analytic_table(cfg)
    n = write_csv(out / "analytic.csv", rows, ANALYTIC_FIELDS)
    figures = []
    if plots:
        from .plotting import plot_analytic

        figures = [plot_analytic(read_csv(out / "analytic.csv"), out).name]
    runlog.event("analytic", rows=n)
    return {"rows": {"analytic.csv": n}, "figures": figures}


def compare_reports(paths: list[Path]) -> tuple[list[dict], list[str]]:
    """Merge summary tables into one row per (case, metric, slot), one column per run/method."""
    runs = []
    for p in paths:
        p = Path(p)
        run_dir = p if p.is_dir() else p.parent
        summary = run_dir / "summary.csv" if p.is_dir() else p
        if not summary.exists():
            raise InputError(f"no summary table at {summary}")
        cfg_path = run_dir / "config.yaml"
        cfg = load_config(cfg_path) if cfg_path.exists() else None
        runs.append((run_dir.name or str(run_dir), cfg, read_csv(summary)))
    ref = runs[0][1]
    for name, cfg, _ in runs[1:]:
        if ref is None or cfg is None:
            continue
        if cfg.network.num_channels != ref.network.num_channels:
            raise InputError(f"{name}: L={cfg.network.num_channels} differs from "
                             f"L={ref.network.num_channels} of {runs[0][0]}")
        if cfg.scenario != ref.scenario:
            raise InputError(f"{name}: scenario {cfg.scenario} differs from {ref.scenario}")
    single = len(runs) == 1
    columns: list[str] = []
    table: dict = {}
    for name, _, rows in runs:
        for r in rows:
            col = r["method"] if single else f"{name}:{r['method']}"
            if col not in columns:
                columns.append(col)
            table.setdefault((r["case"], r["metric"], r["slot"]), {})[col] = r["value"]
    merged = [{"case": c, "metric": m, "slot": s, **vals} for (c, m, s), vals in table.items()]
    return merged, ["case", "metric", "slot"] + columns


def cmd_compare(paths: list[Path], out: Path) -> dict:
    merged, fields = compare_reports(paths)
    out.mkdir(parents=True, exist_ok=True)
    n = write_csv(out / "comparison.csv", merged, fields)
    return {"rows": {"comparison.csv": n}}


def cmd_selftest(seed: int) -> dict:
    """Fast oracle checks; raises AssertionError on the first failure."""
    from .neural.gradcheck import finite_difference_check, random_instance
    from .sensing import SensingConfig, p_false_alarm, p_miss_detection, sense

    rng = np.random.default_rng(seed)
    results = {}
    for rho in (1.0, 10.0):
        closed = an.er_random_rayleigh(rho)
        quad = an.er_random(an.ErConfig(12, jammed=11, snr=rho))
        results[f"er_random_e1_rho{rho:g}"] = abs(closed - quad)
        assert abs(closed - quad) < 1e-6, (closed, quad)
    ec = an.ErConfig(12, jammed=4, snr=10.0)
    mc = an.mc_er_oracle(ec, "best_of_n", 200_000, rng, n=ec.free)
    exact = an.er_max_selection(ec)
    results["er_max_vs_mc"] = abs(mc.mean - exact) / exact
    assert abs(mc.mean - exact) < 5 * mc.stderr + 1e-3, (mc, exact)
    s = SensingConfig()
    trials = 200_000
    fa = sense(np.zeros(trials, dtype=bool), s, rng).mean()
    md = 1 - sense(np.ones(trials, dtype=bool), s, rng).mean()
    for name, emp, p in (("p_fa", fa, p_false_alarm(s)), ("p_md", md, p_miss_detection(s))):
        sigma = np.sqrt(p * (1 - p) / trials)
        results[name] = abs(emp - p) / sigma
        assert abs(emp - p) <= 4 * sigma, (name, emp, p)
    worst = max(finite_difference_check(*random_instance(seed + i, activation=a))
                for i, a in enumerate(("softmax", "sigmoid", "softmax")))
    results["gradcheck_max_rel_err"] = worst
    assert worst < 1e-4, worst
    return results


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="antijam", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        p.add_argument("--config", type=Path, help="YAML experiment file (overlays --preset)")
        p.add_argument("--preset", choices=PRESETS, help="shipped figure configuration")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", type=Path, default=Path("runs/default"), help="run directory")
        return p

    common(sub.add_parser("gen-data", help="simulate training datasets"))
    common(sub.add_parser("train", help="fit GRU models from the datasets in <out>/data"))
    for name, helptext in (("eval", "evaluate trained models and the DQL baseline"),
                           ("run", "gen-data, train and eval in one go"),
                           ("analytic", "ergodic-rate table with Monte-Carlo checks")):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p = sub.add_parser("compare", help="merge summary tables of several runs")
    p.add_argument("reports", nargs="+", type=Path, help="run directories or summary.csv files")
    p.add_argument("--out", type=Path, default=Path("runs/compare"))
    p = sub.add_parser("selftest", help="fast oracle checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        if args.command == "selftest":
            res = cmd_selftest(args.seed)
            for k, v in res.items():
                print(f"PASS {k} {v:.3g}")
            return EXIT_OK
        if args.command == "compare":
            info = cmd_compare(args.reports, args.out)
            print(json.dumps(info))
            return EXIT_OK
        if args.config is None and args.preset is None:
            raise ConfigError("give --config and/or --preset")
        overrides = {"seed": args.seed} if args.seed is not None else None
        cfg = load_config(args.config, args.preset, overrides)
        out = prepare_run_dir(args.out, cfg)
        with RunLog(out / "log.jsonl") as runlog:
            runlog.event("start", command=args.command, seed=cfg.seed, scenario=cfg.scenario)
            if args.command == "gen-data":
                info = cmd_gen_data(cfg, out, runlog)
            elif args.command == "train":
                info = cmd_train(cfg, out, runlog)
            elif args.command == "eval":
                info = cmd_eval(cfg, out, runlog, plots=not args.no_plots)
            elif args.command == "analytic":
                info = cmd_analytic(cfg, out, runlog, plots=not args.no_plots)
            else:  # run
                info = {}
                if cfg.scenario == "analytic":
                    info["analytic"] = cmd_analytic(cfg, out, runlog, plots=not args.no_plots)
                else:
                    info["gen_data"] = cmd_gen_data(cfg, out, runlog)
                    if "proposed" in cfg.eval.methods:
                        info["train"] = cmd_train(cfg, out, runlog)
                    info["eval"] = cmd_eval(cfg, out, runlog, plots=not args.no_plots)
            runlog.event("done")
        write_manifest(out, args.command, cfg, time.perf_counter() - t0, result=info)
        print(f"{args.command}: wrote {out}")
        return EXIT_OK
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingDiverged, an.QuadratureError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AssertionError as exc:
        print(f"selftest failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
