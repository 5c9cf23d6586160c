"""CSV tables, run manifests, threshold tables and matplotlib figures."""

from __future__ import annotations

import csv
import json
import math
import platform
import subprocess
from importlib import metadata
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ["run_id", "game_index", "algo", "t", "expl_avg", "expl_cur", "eq1_bound",
                      "ext_regret_p1", "ext_regret_p2", "pred_err", "wall_ms"]
SUMMARY_COLUMNS = ["algo", "t", "mean_expl_avg", "se_expl_avg", "mean_expl_cur", "se_expl_cur",
                   "mean_ext_regret_per_t", "se_ext_regret_per_t"]
TRAINING_COLUMNS = ["epoch", "mean_loss", "entropy_term", "eval_expl_T", "wall_ms"]
TABLE_THRESHOLDS = (1.0, 0.5, 0.1, 0.05)


def fmt(x) -> str:
    """Stable float text: ``repr`` round-trips, empty string for NaN."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def trajectory_rows(run_id, algo, run, game_offset=0):
    for log in run.logs:
        for b in range(len(log.expl_avg)):
            yield [run_id, game_offset + b, algo, log.t, log.expl_avg[b], log.expl_cur[b],
                   log.eq1_bound[b], log.ext_regret[b, 0], log.ext_regret[b, 1], log.pred_err[b],
                   log.wall_ms]


def mean_se(values, axis=-1):
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[axis]
    mean = values.mean(axis=axis)
    se = values.std(axis=axis, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return mean, se


def curves(run):
    """``(T, B)`` arrays of average/current exploitability and ext regret per step."""
    expl_avg = np.array([log.expl_avg for log in run.logs])
    expl_cur = np.array([log.expl_cur for log in run.logs])
    ext = np.array([log.ext_regret.sum(axis=1) for log in run.logs])
    t = np.arange(1, len(run.logs) + 1)[:, None]
    return expl_avg, expl_cur, ext / t


def summary_rows(algo, run):
    ea, ec, er = curves(run)
    ma, sa = mean_se(ea)
    mc, sc = mean_se(ec)
    mr, sr = mean_se(er)
    for k in range(ea.shape[0]):
        yield [algo, k + 1, ma[k], sa[k], mc[k], sc[k], mr[k], sr[k]]


def steps_to_threshold(curve, thresholds=TABLE_THRESHOLDS):
    """First step (1-based) at which ``curve`` is at or below each threshold.

    Returns ints, or the string ``"> N"`` (``N`` the curve length) when the
    threshold is never reached.
    """
    curve = np.asarray(curve, dtype=np.float64)
    out = []
    for th in thresholds:
        hit = np.flatnonzero(curve <= th)
        out.append(int(hit[0]) + 1 if hit.size else f"> {curve.size}")
    return out


def threshold_table(labels, mean_curves, thresholds=TABLE_THRESHOLDS) -> str:
    """Text table in the threshold-by-algorithm layout of the benchmark table."""
    cells = [steps_to_threshold(c, thresholds) for c in mean_curves]
    head = ["expl"] + list(labels)
    rows = [[f"{th:g}"] + [str(c[k]) for c in cells] for k, th in enumerate(thresholds)]
    widths = [max(len(r[j]) for r in [head] + rows) for j in range(len(head))]
    line = lambda r: "| " + " | ".join(v.rjust(w) for v, w in zip(r, widths)) + " |"
    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(head), sep] + [line(r) for r in rows]) + "\n"


def version_string() -> str:
    try:
        base = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        base = "0+unknown"
    try:
        rev = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{base}-{rev}" if rev else base


def write_manifest(path, command, config, seed, wall_s, outputs, extra=None) -> None:
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": version_string(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": round(float(wall_s), 3),
        "outputs": sorted(str(o) for o in outputs),
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# ------------------------------------------------------------------ figures


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curves(path, series, ylabel, title=None, logy=True, vline=None) -> list:
    """Mean curves with standard-error bands; ``series`` maps label -> (mean, se).

    Writes ``path`` with ``.png`` and ``.svg`` suffixes and returns both paths.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (mean, se) in series.items():
        t = np.arange(1, len(mean) + 1)
        ax.plot(t, mean, label=label, linewidth=1.4)
        lo = np.maximum(mean - se, 1e-12) if logy else mean - se
        ax.fill_between(t, lo, mean + se, alpha=0.2)
    if vline:
        ax.axvline(vline, color="grey", linestyle="--", linewidth=0.8)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("iteration t")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    out = []
    for suffix in (".png", ".svg"):
        p = Path(path).with_suffix(suffix)
        fig.savefig(p, dpi=120)
        out.append(p)
    plt.close(fig)
    return out


def plot_xy(path, x, ys: dict, xlabel, ylabel, logy=False) -> list:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in ys.items():
        ax.plot(x, y, marker="o", markersize=2.5, linewidth=1.2, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = []
    for suffix in (".png", ".svg"):
        p = Path(path).with_suffix(suffix)
        fig.savefig(p, dpi=120)
        out.append(p)
    plt.close(fig)
    return out
