"""Command line harness: ``metaregret {solve,train,eval,ood,gradcheck,analyze}``.

Every command writes CSV tables, PNG/SVG figures and a ``manifest.json``
into ``--out``. Exit codes: 0 ok, 1 configuration error, 2 numeric failure,
3 failed acceptance check.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as C
from . import games as G
from . import regret as RG
from . import report
from .autodiff import gradcheck as gc
from .autodiff.params import load_checkpoint, save_checkpoint
from .cfr import SelfPlay
from .meta import checks as meta_checks
from .meta.network import MetaNetwork
from .meta.trainer import EVAL_SEED, MetaTrainConfig, TrainingDiverged, train

log = logging.getLogger("metaregret")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
LAST_ITERATE_TOL = 1e-6
UNIFORM_TOL = 1e-6
# fixed chunking keeps every number independent of the thread count
CHUNK_GAMES = 16


class NumericFailure(RuntimeError):
    pass


class CheckFailure(RuntimeError):
    pass


# ------------------------------------------------------------------ helpers


def _games(spec: dict, seed_override=None, default_seed=0):
    seed = spec.get("seed", default_seed) if seed_override is None else seed_override
    dist = G.GameDistribution(spec["family"], seed, spec.get("params", {}))
    return G.sample_games(dist, spec.get("count", 100))


def _load_network(entry: dict, game: G.GameTree):
    info = RG.kind_info(entry["kind"])
    if not info.neural or (entry.get("bypass") and info.neural == "npcfr"):
        return None, None
    if "checkpoint" not in entry:
        raise C.ConfigError(f"algo {entry['label']!r} ({entry['kind']}) needs a checkpoint")
    try:
        params, arch, _ = load_checkpoint(entry["checkpoint"])
    except (OSError, ValueError, KeyError) as exc:
        raise C.ConfigError(f"cannot load checkpoint {entry['checkpoint']}: {exc}") from None
    if arch["head"] != info.neural:
        raise C.ConfigError(f"checkpoint head {arch['head']!r} does not fit {entry['kind']}")
    if arch["feature_dim"] != game.features.shape[1] or arch["num_actions"] != game.structure.A:
        raise C.ConfigError(
            f"encoding mismatch: checkpoint expects features={arch['feature_dim']}, "
            f"actions={arch['num_actions']}; game has {game.features.shape[1]}, {game.structure.A}")
    return MetaNetwork(arch), {k: v for k, v in params.items()}


def _chunks(n: int, size: int = CHUNK_GAMES):
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def run_algo(games, entry, T, threads=1, delay_ms=0.0, keep_trajectory=False):
    """Run one algorithm on every game; chunks go to a thread pool and are merged by index."""
    network, params = _load_network(entry, games[0])
    kwargs = {k: entry[k] for k in ("schedule", "averaging", "bypass") if k in entry}

    def one(bounds):
        a, b = bounds
        run = SelfPlay(G.GameBatch.of(games[a:b]), entry["kind"], network=network, params=params,
                       log=True, delay_ms=delay_ms, keep_trajectory=keep_trajectory, **kwargs)
        run.run(T)
        return a, run

    parts = _chunks(len(games))
    if threads == 1 or len(parts) == 1:
        results = [one(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(parts))) as pool:
            results = list(pool.map(one, parts))
    results.sort(key=lambda item: item[0])
    for _, run in results:
        for lg in run.logs:
            if not (np.all(np.isfinite(lg.expl_avg)) and np.all(np.isfinite(lg.ext_regret))):
                raise NumericFailure(f"{entry['label']}: non-finite value at t={lg.t}")
    return results


def _curves(results):
    """Merge chunked runs into ``(T, n_games)`` curves."""
    ea, ec, er = zip(*(report.curves(run) for _, run in results))
    return np.hstack(ea), np.hstack(ec), np.hstack(er)


def _write_runs(out: Path, name: str, runs: dict, run_id: str, vline=None):
    """Trajectory and summary CSVs plus mean-curve figures; returns written paths."""
    traj, summ = out / f"{name}_trajectories.csv", out / f"{name}_summary.csv"
    rows, srows = [], []
    series_avg, series_ext = {}, {}
    for label, results in runs.items():
        for offset, run in results:
            rows.extend(report.trajectory_rows(run_id, label, run, offset))
        ea, ec, er = _curves(results)
        ma, sa = report.mean_se(ea)
        mc, sc = report.mean_se(ec)
        mr, sr = report.mean_se(er)
        srows.extend([label, k + 1, ma[k], sa[k], mc[k], sc[k], mr[k], sr[k]] for k in range(len(ma)))
        series_avg[label] = (ma, sa)
        series_ext[label] = (mr, sr)
    report.write_csv(traj, report.TRAJECTORY_COLUMNS, rows)
    report.write_csv(summ, report.SUMMARY_COLUMNS, srows)
    figs = report.plot_curves(out / f"{name}_expl_avg", series_avg, "exploitability of average strategy",
                              vline=vline)
    figs += report.plot_curves(out / f"{name}_ext_regret", series_ext, "external regret / t", vline=vline)
    return [traj, summ, *figs]


def _finish(args, cfg, out: Path, outputs, t0, extra=None):
    man = out / "manifest.json"
    report.write_manifest(man, args.command, cfg, args.seed, time.perf_counter() - t0, outputs, extra)
    log.info("wrote %d files to %s", len(outputs) + 1, out)


# ----------------------------------------------------------------- commands


def cmd_solve(cfg, args, out: Path):
    games = _games(cfg["game"], args.seed)
    runs = {e["label"]: run_algo(games, e, cfg["iters"], args.threads, cfg["delay_ms"])
            for e in C.algo_entries(cfg)}
    return _write_runs(out, "solve", runs, C.digest(cfg)), {}


def cmd_eval(cfg, args, out: Path):
    """Runs every algorithm to the evaluation horizon and prints the threshold table."""
    T = cfg["iters"]
    horizon = cfg.get("eval_horizon", 2 * T)
    spec = dict(cfg.get("eval_game", cfg["game"]))
    spec.setdefault("seed", EVAL_SEED)
    games = _games(spec, None, EVAL_SEED)
    entries = C.algo_entries(cfg)
    runs = {e["label"]: run_algo(games, e, horizon, args.threads, cfg["delay_ms"]) for e in entries}
    outputs = _write_runs(out, "eval", runs, C.digest(cfg), vline=T)
    means = [_curves(runs[e["label"]])[0].mean(axis=1) for e in entries]
    table = report.threshold_table([e["label"] for e in entries], means, cfg["thresholds"])
    (out / "thresholds.txt").write_text(table, encoding="utf-8")
    rows = []
    for e, m in zip(entries, means):
        rows.append([e["label"]] + [str(s) for s in report.steps_to_threshold(m, cfg["thresholds"])])
    report.write_csv(out / "thresholds.csv", ["algo"] + [f"{th:g}" for th in cfg["thresholds"]], rows)
    print(table, end="")
    return outputs + [out / "thresholds.txt", out / "thresholds.csv"], {}


def cmd_ood(cfg, args, out: Path):
    """Frozen checkpoints on a shifted family; checks the ext-regret/t trend."""
    spec = dict(cfg.get("eval_game", {"family": "uniform_matrix_game"}))
    spec.setdefault("seed", EVAL_SEED)
    games = _games(spec, None, EVAL_SEED)
    horizon = cfg.get("eval_horizon", 2 * cfg["iters"])
    t_from = min(cfg["trend_from"], horizon)
    entries = C.algo_entries(cfg)
    runs = {e["label"]: run_algo(games, e, horizon, args.threads, cfg["delay_ms"]) for e in entries}
    outputs = _write_runs(out, "ood", runs, C.digest(cfg), vline=t_from)
    rows, failed = [], []
    for e in entries:
        _, _, er = _curves(runs[e["label"]])
        mean = er.mean(axis=1)
        before, after = float(mean[t_from - 1]), float(mean[horizon - 1])
        decreasing = after < before
        # the NOA head carries no regret-minimisation guarantee, so it is only logged
        asserted = RG.kind_info(e["kind"]).neural != "noa"
        if asserted and not decreasing:
            failed.append(e["label"])
        rows.append([e["label"], e["kind"], t_from, horizon, before, after, str(decreasing).lower(),
                     str(asserted).lower()])
        print(f"{e['label']}: ext_regret/t {before:.6g} at t={t_from} -> {after:.6g} at t={horizon}"
              f" ({'decreasing' if decreasing else 'not decreasing'}{'' if asserted else ', logged only'})")
    trend = out / "ood_trend.csv"
    report.write_csv(trend, ["algo", "kind", "t_from", "t_to", "ext_regret_per_t_from",
                             "ext_regret_per_t_to", "decreasing", "asserted"], rows)
    if failed:
        raise CheckFailure(f"ext_regret/t not decreasing for {', '.join(failed)}")
    return outputs + [trend], {}


def cmd_train(cfg, args, out: Path):
    tcfg = dict(cfg["training"])
    game = cfg["game"]
    seed = args.seed if args.seed is not None else game.get("seed", 0)
    try:
        mcfg = MetaTrainConfig(family=game["family"], family_params=game.get("params", {}), seed=seed, **tcfg)
    except (TypeError, ValueError) as exc:
        raise C.ConfigError(f"training config: {exc}") from None

    def progress(ep):
        log.info("epoch %d loss %.6g entropy %.4g eval %.4g (%.0f ms)", ep.epoch, ep.mean_loss,
                 ep.entropy_term, ep.eval_expl_T, ep.wall_ms)

    t0 = time.perf_counter()
    try:
        params, network, logs = train(mcfg, progress)
    except TrainingDiverged as exc:
        raise NumericFailure(str(exc)) from exc
    ckpt = out / "checkpoint.json"
    save_checkpoint(ckpt, params, network.arch,
                    {"config": mcfg.to_dict(), "config_digest": mcfg.digest(), "seed": seed,
                     "epochs": mcfg.epochs})
    log_csv = out / "training_log.csv"
    report.write_csv(log_csv, report.TRAINING_COLUMNS,
                     [[e.epoch, e.mean_loss, e.entropy_term, e.eval_expl_T, e.wall_ms] for e in logs])
    ep = np.array([e.epoch for e in logs])
    figs = report.plot_xy(out / "training_loss", ep, {"mean loss": np.array([e.mean_loss for e in logs])},
                          "epoch", "meta-loss")
    if not all(e.chain_ok for e in logs):
        raise CheckFailure("meta-loss inequality chain violated during training")
    return [ckpt, log_csv, *figs], {"train_wall_s": round(time.perf_counter() - t0, 3)}


def cmd_gradcheck(cfg, args, out: Path):
    g = cfg["gradcheck"]
    seed = args.seed or 0
    results = (gc.primitive_checks(g["draws"], seed=seed) + gc.lstm_checks(g["draws"], seed=seed + 1)
               + meta_checks.meta_graph_checks(g["meta_draws"]))
    rows = []
    for res in results:
        rows.append([res.name, res.draws, res.max_rel_err, res.tolerance, str(res.passed).lower()])
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: max rel err {res.max_rel_err:.3g}"
              f" over {res.draws} draws (tol {res.tolerance:g})")
    path = out / "gradcheck.csv"
    report.write_csv(path, ["check", "draws", "max_rel_err", "tolerance", "passed"], rows)
    bad = [r.name for r in results if not r.passed]
    if bad:
        raise CheckFailure(f"gradient checks failed: {', '.join(bad)}")
    return [path], {}


def cmd_analyze(cfg, args, out: Path):
    from .analysis import theory as TH

    a = cfg["analysis"]
    failures = []
    s1, s2 = TH.locally_optimal(TH.FiniteDistribution.uniform(TH.MATRIX_ENSEMBLE_EXAMPLE))
    dev = max(np.abs(s1 - 0.5).max(), np.abs(s2 - 0.5).max())
    print(f"three-game ensemble: locally optimal sigma1={np.round(s1, 8).tolist()} "
          f"sigma2={np.round(s2, 8).tolist()}")
    if dev > UNIFORM_TOL:
        failures.append("ensemble example is not uniform")

    rows = []
    pair = TH.FiniteDistribution.uniform(TH.INDISTINGUISHABLE_PAIR)
    for j in range(len(pair)):
        steps = TH.last_iterate_driver(pair, a["max_steps"], j)
        rows.extend(["pair", j, len(pair), s.t, s.support_size, s.expl] for s in steps)
        if steps[-1].support_size != 2 or steps[-1].expl > LAST_ITERATE_TOL:
            failures.append(f"indistinguishable pair, hidden game {j}")
    print("indistinguishable pair: both games kept, final exploitability "
          f"{max(r[5] for r in rows if r[3] == a['max_steps']):.3g}")

    seed = args.seed or 0
    worst = 0.0
    for e in range(a["ensembles"]):
        dist = TH.random_ensemble(seed, e, a["max_games"])
        k = len(dist)
        for j in range(k):
            steps = TH.last_iterate_driver(dist, k, j)
            rows.extend([f"random_{e}", j, k, s.t, s.support_size, s.expl] for s in steps)
            worst = max(worst, steps[-1].expl)
            if steps[-1].expl > LAST_ITERATE_TOL:
                failures.append(f"random ensemble {e}, hidden game {j}")
    if a["ensembles"]:
        print(f"{a['ensembles']} random ensembles: worst exploitability after k steps {worst:.3g}")
    path = out / "last_iterate.csv"
    report.write_csv(path, ["ensemble", "hidden_game", "k", "t", "support_size", "expl"], rows)
    curve = TH.expected_exploitability_curve(TH.FiniteDistribution.uniform(TH.MATRIX_ENSEMBLE_EXAMPLE),
                                             a["max_steps"])
    ccsv = out / "expected_expl.csv"
    report.write_csv(ccsv, ["t", "expected_expl"], [[t + 1, v] for t, v in enumerate(curve)])
    figs = report.plot_xy(out / "expected_expl", np.arange(1, len(curve) + 1),
                          {"three-game ensemble": curve}, "step", "expected exploitability")
    if failures:
        raise CheckFailure("; ".join(failures))
    return [path, ccsv, *figs], {}


COMMANDS = {
    "solve": cmd_solve,
    "train": cmd_train,
    "eval": cmd_eval,
    "ood": cmd_ood,
    "gradcheck": cmd_gradcheck,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metaregret", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    p.add_argument("--out", type=Path, default=None, help="output directory (default runs/<command>)")
    p.add_argument("--seed", type=int, default=None, help="overrides the game/training seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads over game chunks")
    p.add_argument("--delay-ms", type=float, default=None, help="artificial delay per iteration")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    t0 = time.perf_counter()
    try:
        if args.threads < 1:
            raise C.ConfigError("--threads must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise C.ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = C.load(args.config)
        if args.delay_ms is not None:
            if args.delay_ms < 0:
                raise C.ConfigError("--delay-ms must be >= 0")
            cfg["delay_ms"] = args.delay_ms
        out = args.out or Path("runs") / args.command
        out.mkdir(parents=True, exist_ok=True)
        outputs, extra = COMMANDS[args.command](cfg, args, out)
    except C.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        _finish(args, cfg, out, [], t0, {"failure": str(exc)})
        return EXIT_CHECK
    _finish(args, cfg, out, outputs, t0, extra)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
