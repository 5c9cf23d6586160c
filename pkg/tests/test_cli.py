import json

import numpy as np
import pytest

from metaregret import cli, report
from metaregret import config as C


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def run_cli(tmp_path, command, doc, *extra, out="out"):
    cfg = write(tmp_path, f"{command}.json", doc)
    code = cli.main([command, "--config", str(cfg), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("train")
    doc = {"game": {"family": "rock_paper_scissors"},
           "training": {"T": 6, "epochs": 2, "batch_games": 3, "steps_per_epoch": 2, "hidden": 6, "static": 4}}
    code, out = run_cli(tmp, "train", doc)
    assert code == 0
    return out


def test_solve_outputs(tmp_path):
    doc = {"game": {"family": "rock_paper_scissors", "count": 4}, "iters": 12, "algos": ["RM", "PRM_PLUS"]}
    code, out = run_cli(tmp_path, "solve", doc)
    assert code == 0
    raw = (out / "solve_trajectories.csv").read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0].split(",") == report.TRAJECTORY_COLUMNS
    assert len(lines) == 1 + 2 * 4 * 12
    rows = report.read_csv(out / "solve_summary.csv")
    assert list(rows[0]) == report.SUMMARY_COLUMNS
    for f in ("solve_expl_avg.svg", "solve_expl_avg.png", "manifest.json"):
        assert (out / f).exists()
    man = json.loads((out / "manifest.json").read_text())
    assert {"config", "seed", "version", "wall_time_s", "command"} <= set(man)
    assert man["config"]["iters"] == 12


def test_rm_matching_pennies_zero(tmp_path):
    doc = {"game": {"family": "matching_pennies", "count": 2}, "iters": 10, "algos": ["RM"]}
    code, out = run_cli(tmp_path, "solve", doc)
    assert code == 0
    assert all(float(r["expl_avg"]) == 0.0 for r in report.read_csv(out / "solve_trajectories.csv"))


def test_threads_merge_matches_serial(tmp_path):
    doc = {"game": {"family": "kuhn_poker", "count": 40}, "iters": 8, "algos": ["RM_PLUS"]}
    _, a = run_cli(tmp_path, "solve", doc, "--threads", "1", out="a")
    _, b = run_cli(tmp_path, "solve", doc, "--threads", "3", out="b")
    ra, rb = report.read_csv(a / "solve_trajectories.csv"), report.read_csv(b / "solve_trajectories.csv")
    key = lambda r: (r["algo"], int(r["game_index"]), int(r["t"]))
    ra, rb = sorted(ra, key=key), sorted(rb, key=key)
    assert [key(r) for r in ra] == [key(r) for r in rb]
    for x, y in zip(ra, rb):
        assert x["expl_avg"] == y["expl_avg"] and x["ext_regret_p2"] == y["ext_regret_p2"]


def test_delay_flag(tmp_path):
    doc = {"game": {"family": "matching_pennies", "count": 1}, "iters": 3, "algos": ["RM"]}
    code, out = run_cli(tmp_path, "solve", doc, "--delay-ms", "10")
    assert code == 0
    assert all(float(r["wall_ms"]) >= 10 for r in report.read_csv(out / "solve_trajectories.csv"))


def test_cfr_plus_beats_cfr_on_rps(tmp_path):
    doc = {"game": {"family": "rock_paper_scissors", "count": 100}, "iters": 1000, "algos": ["RM", "RM_PLUS"]}
    code, out = run_cli(tmp_path, "solve", doc)
    assert code == 0
    rows = report.read_csv(out / "solve_summary.csv")
    curve = {a: np.array([float(r["mean_expl_avg"]) for r in rows if r["algo"] == a]) for a in ("CFR", "CFR+")}
    for c in curve.values():
        assert c[-1] < c[9] < c[0]
    assert curve["CFR+"][-1] <= curve["CFR"][-1]


def test_config_errors(tmp_path):
    assert run_cli(tmp_path, "solve", {"unknown": 1})[0] == cli.EXIT_CONFIG
    assert run_cli(tmp_path, "solve", {"iters": 0})[0] == cli.EXIT_CONFIG
    assert run_cli(tmp_path, "solve", {"algos": ["NPCFR"]})[0] == cli.EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert cli.main(["solve", "--threads", "0", "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_numeric_failure_exit(tmp_path, monkeypatch):
    def diverge(cfg, progress=None):
        raise cli.TrainingDiverged("non-finite loss in epoch 1")

    monkeypatch.setattr(cli, "train", diverge)
    assert run_cli(tmp_path, "train", {"training": {"kind": "NOA"}})[0] == cli.EXIT_NUMERIC


def test_train_outputs(trained):
    rows = report.read_csv(trained / "training_log.csv")
    assert list(rows[0]) == report.TRAINING_COLUMNS
    assert len(rows) == 2
    meta = json.loads((trained / "checkpoint.json").read_text())["training_meta"]
    assert {"config_digest", "seed"} <= set(meta)


def test_train_is_byte_identical(tmp_path, trained):
    doc = {"game": {"family": "rock_paper_scissors"},
           "training": {"T": 6, "epochs": 2, "batch_games": 3, "steps_per_epoch": 2, "hidden": 6, "static": 4}}
    code, out = run_cli(tmp_path, "train", doc)
    assert code == 0
    assert (out / "checkpoint.json").read_bytes() == (trained / "checkpoint.json").read_bytes()


def test_eval_table(tmp_path, trained, capsys):
    doc = {"game": {"family": "rock_paper_scissors", "count": 6}, "iters": 8,
           "algos": ["PRM_PLUS", {"kind": "NPCFR_PLUS", "label": "mine", "checkpoint": str(trained / "checkpoint.json")}]}
    code, out = run_cli(tmp_path, "eval", doc)
    assert code == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].split("|")[1].strip() == "expl"
    assert "mine" in text
    assert (out / "thresholds.txt").read_text() == text
    rows = report.read_csv(out / "thresholds.csv")
    assert [r["algo"] for r in rows] == ["PCFR+", "mine"]
    assert len(report.read_csv(out / "eval_trajectories.csv")) == 2 * 6 * 16


def test_checkpoint_on_training_family_matches_solve(tmp_path, trained):
    algo = {"kind": "NPCFR_PLUS", "checkpoint": str(trained / "checkpoint.json")}
    game = {"family": "rock_paper_scissors", "count": 3, "seed": 5}
    _, a = run_cli(tmp_path, "solve", {"game": game, "iters": 10, "algos": [algo]}, out="a")
    _, b = run_cli(tmp_path, "ood", {"eval_game": game, "iters": 5, "eval_horizon": 10, "trend_from": 2,
                                     "algos": [algo]}, out="b")
    cols = ["game_index", "t", "expl_avg", "expl_cur", "eq1_bound", "ext_regret_p1", "ext_regret_p2", "pred_err"]
    ra = [[r[c] for c in cols] for r in report.read_csv(a / "solve_trajectories.csv")]
    rb = [[r[c] for c in cols] for r in report.read_csv(b / "ood_trajectories.csv")]
    assert ra == rb


def test_ood_encoding_mismatch(tmp_path, trained):
    doc = {"eval_game": {"family": "kuhn_poker", "count": 2},
           "algos": [{"kind": "NPCFR_PLUS", "checkpoint": str(trained / "checkpoint.json")}]}
    assert run_cli(tmp_path, "ood", doc)[0] == cli.EXIT_CONFIG


def test_ood_flags_non_decreasing_trend(tmp_path):
    # a horizon shorter than the trend start can never decrease
    doc = {"eval_game": {"family": "uniform_matrix_game", "count": 2}, "iters": 4, "eval_horizon": 4,
           "trend_from": 4, "algos": ["RM"]}
    code, out = run_cli(tmp_path, "ood", doc)
    assert code == cli.EXIT_CHECK
    assert json.loads((out / "manifest.json").read_text())["failure"]


def test_gradcheck_command(tmp_path, capsys):
    code, out = run_cli(tmp_path, "gradcheck", {"gradcheck": {"draws": 2, "meta_draws": 1}})
    assert code == 0
    rows = report.read_csv(out / "gradcheck.csv")
    assert {r["check"] for r in rows} >= {"softmax", "lstm_cell", "meta_graph_npcfr_plus"}
    assert all(r["passed"] == "true" for r in rows)


def test_analyze_command(tmp_path, capsys):
    code, out = run_cli(tmp_path, "analyze", {"analysis": {"ensembles": 3, "max_games": 3, "max_steps": 3}})
    assert code == 0
    text = capsys.readouterr().out
    assert "sigma1=[0.5, 0.5]" in text and "sigma2=[0.5, 0.5]" in text
    rows = report.read_csv(out / "last_iterate.csv")
    assert list(rows[0]) == ["ensemble", "hidden_game", "k", "t", "support_size", "expl"]


def test_analyze_three_game_ensemble_final_expl():
    from metaregret.analysis import theory as TH

    dist = TH.FiniteDistribution.uniform(TH.MATRIX_ENSEMBLE_EXAMPLE)
    for j in range(3):
        assert TH.last_iterate_driver(dist, 3, j)[-1].expl <= 1e-6


def test_steps_to_threshold():
    assert report.steps_to_threshold(np.zeros(5)) == [1, 1, 1, 1]
    curve = np.array([2.0, 0.7, 0.3, 0.08, 0.2, 0.04])
    assert report.steps_to_threshold(curve) == [2, 3, 4, 6]
    assert report.steps_to_threshold(np.full(512, 0.2)) == [1, 1, "> 512", "> 512"]


@pytest.mark.parametrize("seed", range(20))
def test_steps_nested(seed):
    curve = np.exp(np.random.default_rng(seed).normal(-1, 1.5, 64))
    s = [v if isinstance(v, int) else 10**9 for v in report.steps_to_threshold(curve)]
    assert s[0] <= s[1] <= s[2] <= s[3]


def test_threshold_table_layout():
    text = report.threshold_table(["A", "B"], [np.zeros(3), np.full(3, 0.2)])
    lines = text.splitlines()
    assert [c.strip() for c in lines[0].strip("|").split("|")] == ["expl", "A", "B"]
    assert [c.strip() for c in lines[2].strip("|").split("|")] == ["1", "1", "1"]
    assert [c.strip() for c in lines[-1].strip("|").split("|")] == ["0.05", "1", "> 3"]
    assert report.TABLE_THRESHOLDS == (1.0, 0.5, 0.1, 0.05)


def test_csv_float_format(tmp_path):
    p = tmp_path / "x.csv"
    report.write_csv(p, ["a", "b"], [[0.1, float("nan")], [1e-20, 3]])
    assert p.read_text() == "a,b\n0.1,\n1e-20,3\n"


def test_defaults_validate():
    cfg = C.load(None)
    assert cfg["iters"] == 64
    assert [e["label"] for e in C.algo_entries(cfg)] == ["CFR", "CFR+", "PCFR", "PCFR+", "DCFR", "SPCFR+"]
