"""Evaluation drivers shared by the CLI and the acceptance tests.

Every driver returns plain row dictionaries so that the report layer can
write them as CSV without knowing the scenario.  Seeds are derived from
``(config seed, case index, repetition)`` only, so the proposed method and
the DQL baseline see the same jammer phases and fading draws.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import analytics as an
from . import jammers as jam
from .config import ExperimentConfig
from .dql import DqlConfig, run_dql_sc1, run_dql_sc2
from .neural import GruModel
from .sc1 import ClassTaxonomy, run_sc1_episode
from .sc2 import run_sc2_episode

log = logging.getLogger(__name__)

TRACE_FIELDS = ("method", "case", "interference", "repetition", "slot", "user", "success", "rate", "correct")
JAMMER_FIELDS = ("method", "case", "interference", "repetition", "jammer", "success_rate")
SUMMARY_FIELDS = ("method", "case", "metric", "slot", "value", "stderr", "count")
ANALYTIC_FIELDS = ("shape", "snr", "num_channels", "num_users", "jammed", "free", "er_max",
                   "er_random", "mc_max", "mc_max_stderr", "mc_random", "mc_random_stderr")


def episode_rng(seed: int, case: int, repetition: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, case, repetition]))


@dataclass
class EvalResult:
    traces: list[dict] = field(default_factory=list)
    jammer_rates: list[dict] = field(default_factory=list)
    empirical_er: dict = field(default_factory=dict)  # (method, case) -> mean rate
    analytic_er: dict = field(default_factory=dict)  # case -> er_max_selection


def _trace_rows(method, case, interference, rep, success, rates, correct=None):
    rows = []
    success = np.asarray(success).reshape(len(success), -1)
    rates = np.asarray(rates).reshape(success.shape)
    for t in range(success.shape[0]):
        for k in range(success.shape[1]):
            rows.append({"method": method, "case": case, "interference": int(interference),
                         "repetition": rep, "slot": t, "user": k, "success": int(success[t, k]),
                         "rate": float(rates[t, k]),
                         "correct": "" if correct is None else int(correct[t])})
    return rows


def evaluate_sc1(cfg: ExperimentConfig, model: GruModel, taxonomy: ClassTaxonomy) -> EvalResult:
    sc1 = cfg.sc1_config()
    ev = cfg.eval
    out = EvalResult()
    L = sc1.num_channels
    for ci, (kind, width) in enumerate(cfg.eval_classes()):
        case = f"{kind}-{width}"
        free = L - width
        out.analytic_er[case] = an.er_max_selection(an.ErConfig(
            L, jammed=width, shape=sc1.fading.shape, mean_power=sc1.fading.mean_power, snr=sc1.snr))
        for method in ev.methods:
            rates = []
            for rep in range(ev.repetitions):
                rng = episode_rng(cfg.seed, ci, rep)
                if method == "proposed":
                    tr = run_sc1_episode(model, taxonomy, kind, width, ev.slots, sc1, rng)
                    out.traces += _trace_rows(method, case, True, rep, tr.success, tr.rates, tr.correct)
                    rates.append(tr.rates)
                else:
                    dq = run_dql_sc1(kind, width, ev.slots, sc1, rng, DqlConfig(decay_steps=max(1, ev.slots // 2)))
                    out.traces += _trace_rows(method, case, True, rep, dq.success, dq.rates)
                    rates.append(dq.rates)
            out.empirical_er[(method, case)] = float(np.mean(rates))
        log.info("sc1 %s done (free channels %d)", case, free)
    return out


def evaluate_sc2(cfg: ExperimentConfig, models_by_preset: dict[str, list[GruModel]]) -> EvalResult:
    sc2 = cfg.sc2_config()
    ev = cfg.eval
    N = cfg.network.num_users
    out = EvalResult()
    for ci, preset in enumerate(cfg.jammers.presets):
        case = jam.resolve_preset(preset)
        out.analytic_er[case] = an.er_max_selection(an.ErConfig(
            sc2.num_channels, jammed=jam.nominal_jammed(case), shape=sc2.fading.shape,
            mean_power=sc2.fading.mean_power, snr=sc2.snr))
        for method in ev.methods:
            rates = []
            for rep in range(ev.repetitions):
                rng = episode_rng(cfg.seed, ci, rep)
                if method == "proposed":
                    tr = run_sc2_episode(models_by_preset[case], case, N, ev.slots, ev.interference, sc2, rng)
                    hits = tr.jammer_success_rate
                    success, r = tr.success, tr.rates
                else:
                    dq = run_dql_sc2(case, N, ev.slots, ev.interference, sc2, rng,
                                     DqlConfig(decay_steps=max(1, ev.slots // 2)))
                    hits, success, r = None, dq.success, dq.rates
                out.traces += _trace_rows(method, case, ev.interference, rep, success, r)
                rates.append(r)
                if hits is not None:
                    for kind, h in zip(jam.KINDS, hits):
                        out.jammer_rates.append({"method": method, "case": case,
                                                 "interference": int(ev.interference),
                                                 "repetition": rep, "jammer": kind,
                                                 "success_rate": float(h)})
            out.empirical_er[(method, case)] = float(np.mean(rates))
        log.info("sc2 %s done", case)
    return out


def summarize(result: EvalResult, bucket: int) -> list[dict]:
    """STR (and detection accuracy) per slot bucket, plus whole-episode ER rows.

    The mean and standard error are taken across repetitions (per-repetition
    values first average over users and slots in the bucket).
    """
    groups: dict = defaultdict(lambda: defaultdict(list))
    for row in result.traces:
        key = (row["method"], row["case"], row["slot"] // bucket * bucket)
        groups[key][("str", row["repetition"])].append(row["success"])
        if row["correct"] != "":
            groups[key][("accuracy", row["repetition"])].append(row["correct"])
    rows = []
    for (method, case, slot), series in sorted(groups.items()):
        for metric in ("str", "accuracy"):
            per_rep = [np.mean(v) for (m, _), v in sorted(series.items()) if m == metric]
            if per_rep:
                rows.append(_stat_row(method, case, metric, slot, per_rep))
    for (method, case), value in sorted(result.empirical_er.items()):
        rows.append({"method": method, "case": case, "metric": "er", "slot": "all",
                     "value": value, "stderr": "", "count": ""})
        if case in result.analytic_er:
            rows.append({"method": method, "case": case, "metric": "er_ratio", "slot": "all",
                         "value": value / result.analytic_er[case], "stderr": "", "count": ""})
    for case, value in sorted(result.analytic_er.items()):
        rows.append({"method": "analytic", "case": case, "metric": "er", "slot": "all",
                     "value": value, "stderr": "", "count": ""})
    by_jammer: dict = defaultdict(list)
    for row in result.jammer_rates:
        by_jammer[(row["method"], row["case"], row["jammer"])].append(row["success_rate"])
    for (method, case, kind), vals in sorted(by_jammer.items()):
        rows.append(_stat_row(method, case, f"jammer_{kind}", "all", vals))
    return rows


def _stat_row(method, case, metric, slot, values) -> dict:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    return {"method": method, "case": case, "metric": metric, "slot": slot,
            "value": float(v.mean()), "stderr": se, "count": len(v)}


def analytic_table(cfg: ExperimentConfig) -> list[dict]:
    """ER vs. jammed-channel count, with Monte-Carlo checks of both selections."""
    a = cfg.analytic
    L, N = cfg.network.num_channels, cfg.network.num_users
    rows = []
    for shape in a.shapes:
        for snr in a.snrs:
            for jammed in a.jammed:
                ec = an.ErConfig(L, jammed=int(jammed), num_users=N, shape=float(shape),
                                 mean_power=cfg.fading.mean_power, snr=float(snr))
                n = ec.free_with_interference if N > 1 else ec.free
                er_max = an.er_interference(ec) if N > 1 else an.er_max_selection(ec)
                row = {"shape": shape, "snr": snr, "num_channels": L, "num_users": N, "jammed": jammed,
                       "free": n, "er_max": er_max, "er_random": an.er_random(ec)}
                if a.mc_trials and n > 0:
                    rng = episode_rng(cfg.seed, int(jammed), int(round(1000 * shape + snr)))
                    mx = an.mc_er_oracle(ec, "best_of_n", a.mc_trials, rng, n=n)
                    rd = an.mc_er_oracle(ec, "random", a.mc_trials, rng)
                    row.update(mc_max=mx.mean, mc_max_stderr=mx.stderr,
                               mc_random=rd.mean, mc_random_stderr=rd.stderr)
                else:
                    row.update(mc_max="", mc_max_stderr="", mc_random="", mc_random_stderr="")
                rows.append(row)
    return rows
