import json

import pytest

from symplab.cli import DEFAULTS, main


def _records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_census_lists_both_fixed_points(capsys):
    assert main(["census"]) == 0
    recs = _records(capsys.readouterr().out)
    head = recs[0]
    assert head["format"] == "symplab-records/1" and head["subcommand"] == "census"
    assert head["config"]["map"] == {"type": "standard", "a": 0.5}
    pts = sorted(tuple(round(v, 9) + 0.0 for v in r["point"]) for r in recs if r.get("record") == "point")
    assert pts == [(0.0, 0.0), (0.5, 0.0)]


def test_malformed_config_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("steps = 10\nstepz = 3\n")
    assert main(["simulate", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "stepz" in err
    bad.write_text("steps = [\n")
    assert main(["simulate", "--config", str(bad)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.toml")]) == 2


def test_records_are_deterministic(tmp_path, capsys):
    conf = tmp_path / "c.toml"
    conf.write_text("steps = 50\nsymplectic_points = 10\n")
    outs = []
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(conf), "--seed", "7", "--out", str(tmp_path / d)]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files_a == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files_a:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_output_files_embed_config_and_version(tmp_path, capsys):
    assert main(["census", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    head = json.loads((tmp_path / "census.jsonl").read_text().splitlines()[0])
    assert head["config"]["seed"] == 0 and "version" in head
    table = (tmp_path / "census-counts.csv").read_text().splitlines()
    assert table[0].startswith("# symplab-table/1") and table[1].startswith("# config ")


def test_print_defaults(capsys):
    import tomli

    assert main(["renorm", "--print-defaults"]) == 0
    assert tomli.loads(capsys.readouterr().out)["seed"] == DEFAULTS["renorm"]["seed"]


def test_failed_check_exit_one(tmp_path, capsys):
    conf = tmp_path / "c.toml"
    # a non-symplectic linear map fails the symplecticity check
    conf.write_text('steps = 5\nsymplectic_points = 4\n[map]\ntype = "linear"\nM = [[2.0, 0.0], [0.0, 1.0]]\n')
    assert main(["simulate", "--config", str(conf)]) == 1
    assert "failed checks" in capsys.readouterr().err


@pytest.mark.parametrize("sub", ["normalform", "renorm"])
def test_subcommands_pass_on_defaults(sub, capsys):
    assert main([sub, "--workers", "1"]) == 0
    recs = _records(capsys.readouterr().out)
    assert all(r["passed"] for r in recs if r.get("record") == "check")


def test_verify_subset_is_byte_identical(tmp_path, capsys):
    conf = tmp_path / "v.toml"
    conf.write_text("criteria = [2, 4, 10]\ndeterminism = false\n")
    outs = []
    for _ in range(2):
        assert main(["verify", "--config", str(conf)]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert sum(r.get("record") == "criterion" for r in _records(outs[0])) == 3
