"""Command-line interface: subcommands, exit codes, report files."""

import json

import pytest

from bkverify.cli import main


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


def test_suite_subcommand_writes_report(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"suite": "reimer", "n": 1}))
    out = tmp_path / "report.jsonl"
    assert main(["suite", "--config", str(cfg), "--out", str(out)]) == 0
    lines = read_jsonl(out)
    assert len(lines) == 17
    assert "summary" in lines[-1]


def test_suite_by_name_and_instance(tmp_path):
    out = tmp_path / "one.jsonl"
    code = main(
        ["suite", "--suite", "cw-bk", "--instance", "cw-bk:J-0.5:s1", "--out", str(out)]
    )
    assert code == 0
    lines = read_jsonl(out)
    assert len(lines) == 2
    assert lines[0]["id"] == "cw-bk:J-0.5:s1"


def test_suite_error_exit_codes(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"suite": "reimer", "n": 1, "tolerance": -1}))
    assert main(["suite", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    cfg.write_text("{not json")
    assert main(["suite", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"suite": "unknown"}))
    assert main(["suite", "--config", str(cfg)]) == 2


def test_reimer_subcommand(tmp_path):
    out = tmp_path / "r.jsonl"
    assert main(["reimer", "--n", "2", "--out", str(out)]) == 0
    assert len(read_jsonl(out)) == 257


def test_nlc_subcommand_pass_and_fail(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"family": "curie_weiss", "n": 3, "coupling": -1.0}))
    out = tmp_path / "nlc.jsonl"
    assert main(["nlc", "--config", str(cfg), "--out", str(out)]) == 0
    cfg.write_text(json.dumps({"family": "curie_weiss", "n": 3, "coupling": 1.0}))
    assert main(["nlc", "--config", str(cfg), "--out", str(out)]) == 1


def test_bk_subcommand_single_pair(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"family": "k_out_of_n", "n": 2, "k": 1}))
    out = tmp_path / "bk.jsonl"
    code = main(
        ["bk", "--config", str(cfg), "--event-a", "c", "--event-b", "c", "--out", str(out)]
    )
    assert code == 0
    rec = read_jsonl(out)[0]
    assert rec["lhs"] == 0.0 and rec["rhs"] == pytest.approx(0.25)


def test_bk_subcommand_sweep(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"family": "curie_weiss", "n": 3, "coupling": -0.5}))
    out = tmp_path / "bk.jsonl"
    assert main(["bk", "--config", str(cfg), "--out", str(out)]) == 0
    rec = read_jsonl(out)[0]
    assert rec["pairs_unordered"] == 20 * 21 // 2


def test_fold_subcommand(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"family": "curie_weiss", "n": 3, "coupling": -0.5}))
    out = tmp_path / "fold.jsonl"
    code = main(
        ["fold", "--config", str(cfg), "--locked", "2", "--alpha", "1", "--fit", "--out", str(out)]
    )
    assert code == 0
    rec = read_jsonl(out)[0]
    assert rec["sites"] == 2 and len(rec["weights"]) == 4
    assert rec["fit_x"] == pytest.approx(2.718281828459045**2, rel=1e-9)


def test_rcr_validate_subcommand(tmp_path):
    cfg = tmp_path / "v.json"
    cfg.write_text(
        json.dumps(
            {
                "measure": {"family": "symmetric_levels", "n": 4, "x": "2", "exact": True},
                "base": {"type": "matching", "x": "2"},
            }
        )
    )
    out = tmp_path / "val.jsonl"
    assert main(["rcr-validate", "--config", str(cfg), "--out", str(out)]) == 0
    assert read_jsonl(out)[0]["passed"]


def test_gibbs_base_subcommand(tmp_path):
    cfg = tmp_path / "p.json"
    cfg.write_text(
        json.dumps(
            {"n": 2, "alphabet": [-1, 1], "terms": [{"sites": [0, 1], "table": [1, -1, -1, 1]}]}
        )
    )
    out = tmp_path / "gb.jsonl"
    assert main(["gibbs-base", "--config", str(cfg), "--out", str(out)]) == 0
    rec = read_jsonl(out)[0]
    assert rec["support"] == 2


def test_conditions_subcommand(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(
        json.dumps(
            {
                "measure": {"family": "curie_weiss", "n": 3, "coupling": -0.5},
                "rule": "upper_ones",
                "events": {"a": "f8", "b": "e0"},
            }
        )
    )
    out = tmp_path / "cond.jsonl"
    assert main(["conditions", "--config", str(cfg), "--out", str(out)]) == 0
    assert read_jsonl(out)[0]["passed"]


def test_xi_subcommand_exact_fractions(tmp_path, capsys):
    assert main(["xi", "--n", "4", "--x", "3/2", "--exact"]) == 0
    payload = json.loads(capsys.readouterr().out)
    table = payload["table"]
    assert table[0]["xi"] == "1/1"
    assert table[1]["xi"] == "19/24"  # ((3/2)^3 - 1) / 3


def test_matchings_subcommand(capsys):
    assert main(["matchings", "--n", "4", "--omega", "1100"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["mismatches"] == 0
    by_j = {row["j"]: row["count"] for row in payload["rows"]}
    assert by_j[1] == 4 and by_j[2] == 2


def test_four_arm_subcommand(capsys):
    assert main(["four-arm", "--k", "1", "--coupling", "0.5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"]


def test_corollary19_subcommand(tmp_path):
    out = tmp_path / "c19.jsonl"
    assert main(["corollary19", "--graphs", "3", "--out", str(out)]) == 0
    assert len(read_jsonl(out)) == 4


def test_input_error_exit_code(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"family": "potts", "n": 2, "q": 3, "couplings": [[0, 1, -1.0]]}))
    assert main(["nlc", "--config", str(cfg)]) == 2  # non-binary alphabet
