"""Figures rendered from summary tables (CLI report path only).

The CSV files stay the contract; these PNGs are a convenience view of the
same rows and never feed back into any number.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _series(rows, metric):
    out = defaultdict(lambda: ([], [], []))
    for r in rows:
        if r["metric"] != metric or r["slot"] in ("all", ""):
            continue
        x, y, e = out[(r["method"], r["case"])]
        x.append(int(r["slot"]))
        y.append(float(r["value"]))
        e.append(float(r["stderr"] or 0.0))
    return out


def _line_figure(series, ylabel, path: Path, bucket: int):
    cases = sorted({c for _, c in series})
    fig, axes = plt.subplots(1, len(cases), figsize=(3.2 * len(cases), 3.0), squeeze=False, sharey=True)
    for ax, case in zip(axes[0], cases):
        for (method, c), (x, y, e) in sorted(series.items()):
            if c != case:
                continue
            centers = [v + bucket / 2 for v in x]
            ax.errorbar(centers, y, yerr=e, marker="o", ms=3, capsize=2, label=method)
        ax.set_title(case, fontsize=9)
        ax.set_xlabel("elapsed slot")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel(ylabel)
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_summary(rows: list[dict], out: Path, bucket: int) -> list[Path]:
    out = Path(out)
    written = []
    for metric, label in (("str", "STR"), ("accuracy", "detection accuracy")):
        s = _series(rows, metric)
        if s:
            written.append(_line_figure(s, label, out / f"{metric}.png", bucket))
    er = [r for r in rows if r["metric"] == "er"]
    if er:
        written.append(_bar_figure(er, "ergodic rate (bit/s/Hz)", out / "er.png"))
    jam_rows = [dict(r, method=r["metric"].removeprefix("jammer_")) for r in rows
                if r["metric"].startswith("jammer_")]
    if jam_rows:
        written.append(_bar_figure(jam_rows, "jammer success rate", out / "jammers.png"))
    return written


def _bar_figure(rows, ylabel, path: Path):
    cases = sorted({r["case"] for r in rows})
    groups = sorted({r["method"] for r in rows})
    width = 0.8 / len(groups)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(cases) * len(groups) ** 0.5), 3.2))
    for i, g in enumerate(groups):
        vals = {r["case"]: float(r["value"]) for r in rows if r["method"] == g}
        xs = [j + i * width for j in range(len(cases))]
        ax.bar(xs, [vals.get(c, 0.0) for c in cases], width, label=g)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(cases))])
    ax.set_xticklabels(cases, rotation=30, fontsize=8)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_analytic(rows: list[dict], out: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    keys = sorted({(float(r["shape"]), float(r["snr"])) for r in rows})
    for shape, snr in keys:
        sel = sorted((r for r in rows if float(r["shape"]) == shape and float(r["snr"]) == snr),
                     key=lambda r: int(r["jammed"]))
        x = [int(r["jammed"]) for r in sel]
        tag = f"m={shape:g}, snr={snr:g}"
        ax.plot(x, [float(r["er_max"]) for r in sel], "-", label=f"max, {tag}")
        ax.plot(x, [float(r["er_random"]) for r in sel], "--", label=f"random, {tag}")
        mc = [(xi, float(r["mc_max"])) for xi, r in zip(x, sel) if r["mc_max"] != ""]
        if mc:
            ax.plot(*zip(*mc), "o", ms=4, mfc="none", color="k")
    ax.set_xlabel("jammed channels")
    ax.set_ylabel("ergodic rate (bit/s/Hz)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(out) / "analytic.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
