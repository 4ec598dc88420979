"""Config parsing, sweep CSV schema, and command-line behavior."""

import csv
import math
import os

import pytest

from msjsim.cli import CSV_COLUMNS, _fmt, main
from msjsim.config import ConfigError, parse_config
from msjsim.policies import PolicyKind

HERE = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(HERE, "configs")

SMALL_CONFIG = """
[system]
k = 8
need_mode = "power_of_two"

[workload]
target_loads = [0.5]

[[class]]
need = 1
probability = 0.5
dist = "exponential"
mean = 2.0

[[class]]
need = 4
probability = 0.5
dist = "deterministic"
value = 1.0

[run]
policies = ["ServerFillingSRPT", "ResourcePooledSRPT1"]
n_arrivals = 2000
seeds = [0, 1]
r_thresholds = 8
"""


# --- parsing ---------------------------------------------------------------


def test_parse_shipped_configs():
    for name, n_pol, n_loads in (("fig6.toml", 5, 4), ("fig7.toml", 5, 4),
                                 ("fig2.toml", 7, 5)):
        with open(os.path.join(CONFIGS, name)) as fh:
            cfg = parse_config(fh.read())
        assert cfg.system.k == 8
        assert len(cfg.policies) == n_pol
        assert len(cfg.loads) == n_loads
        assert len(cfg.seeds) == 3
        # row count of the resulting sweep CSV
        assert len(cfg.loads) * len(cfg.policies) * len(cfg.seeds) in (60, 105)


def test_workload_for_derives_rate():
    cfg = parse_config(SMALL_CONFIG)
    spec = cfg.workload_for(0.5)
    # E[S] = 0.5*(1*2/8) + 0.5*(4*1/8) = 0.375, so lambda = 0.5/0.375
    assert spec.arrival_rate == pytest.approx(0.5 / 0.375)


def test_parse_collects_all_errors():
    bad = """
[system]
k = 6

[workload]
arrival_rate = -1.0
target_loads = [0.5]

[[class]]
need = 3
probability = 0.7
dist = "uniform"

[[class]]
need = 2
probability = 0.2
dist = "exponential"
mean = 1.0

[run]
policies = ["NoSuchPolicy"]
n_arrivals = 0
warmup_fraction = 0.9
seeds = []
r_thresholds = -1
extra_key = 1
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    msgs = "\n".join(exc.value.errors)
    assert len(exc.value.errors) >= 8
    for fragment in ("system", "either arrival_rate or target_loads",
                     "unknown dist", "probabilities sum",
                     "unknown policy", "n_arrivals", "warmup_fraction",
                     "seeds", "r_thresholds", "unknown key"):
        assert fragment in msgs


def test_parse_rejects_gittins_with_thresholds():
    text = SMALL_CONFIG.replace(
        '["ServerFillingSRPT", "ResourcePooledSRPT1"]',
        '["ServerFillingGittins"]',
    )
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("Gittins" in e for e in exc.value.errors)
    # dropping the grid makes it valid
    parse_config(text.replace("r_thresholds = 8", "r_thresholds = 0"))


def test_parse_rejects_mode_mismatch():
    text = SMALL_CONFIG.replace(
        '"ServerFillingSRPT"', '"DivisorFillingSRPT"'
    )
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("divisible" in e for e in exc.value.errors)


def test_parse_syntax_error_exit():
    with pytest.raises(ConfigError) as exc:
        parse_config("[system\nk=8")
    assert exc.value.errors[0].startswith("syntax:")


# --- formatting ------------------------------------------------------------


def test_fmt_cells():
    assert _fmt(None) == ""
    assert _fmt(math.nan) == ""
    assert _fmt(True) == "true" and _fmt(False) == "false"
    assert _fmt(1.5) == "1.5"
    assert _fmt(0.1 + 0.2) == repr(0.1 + 0.2)
    assert _fmt(7) == "7"
    assert _fmt("x") == "x"


# --- CLI end to end --------------------------------------------------------


@pytest.fixture()
def small_cfg(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(SMALL_CONFIG)
    return p


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sweep_writes_schema_csv(small_cfg, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", str(small_cfg), "--output", str(out)]) == 0
    rows = read_rows(out)
    with open(out) as fh:
        header = fh.readline().strip().split(",")
    assert header == CSV_COLUMNS
    assert len(rows) == 2 * 2  # policies x seeds, one load
    # sorted by (load, policy, seed)
    keys = [(float(r["load"]), r["policy"], int(r["seed"])) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert r["stable"] == "true"
        assert float(r["mean_T"]) > 0
        assert float(r["ratio_T"]) >= 0.99 or r["policy"] == "ResourcePooledSRPT1"
        assert r["rwe_violations"] == "0"
        assert float(r["wall_seconds"]) > 0
    base = [r for r in rows if r["policy"] == "ResourcePooledSRPT1"]
    assert all(float(r["ratio_T"]) == pytest.approx(1.0) for r in base)


def test_sweep_deterministic_modulo_walltime(small_cfg, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["sweep", str(small_cfg), "--output", str(out1)]) == 0
    assert main(["sweep", str(small_cfg), "--output", str(out2)]) == 0
    strip = lambda path: [
        {k: v for k, v in row.items() if k != "wall_seconds"}
        for row in read_rows(path)
    ]
    assert strip(out1) == strip(out2)


def test_seed_env_override(small_cfg, tmp_path, monkeypatch):
    out = tmp_path / "seeded.csv"
    monkeypatch.setenv("MSJ_SEED", "100")
    assert main(["sweep", str(small_cfg), "--output", str(out)]) == 0
    seeds = sorted({int(r["seed"]) for r in read_rows(out)})
    assert seeds == [100, 101]


def test_run_prints_table(small_cfg, capsys):
    assert main(["run", str(small_cfg)]) == 0
    out = capsys.readouterr().out
    assert "policy" in out and "ServerFillingSRPT" in out
    assert "true" in out


def test_sweep_without_output_is_config_error(small_cfg, capsys):
    assert main(["sweep", str(small_cfg)]) == 2
    assert "output" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text("[system]\nk = 7\n")
    assert main(["sweep", str(p)]) == 2
    err = capsys.readouterr().err
    assert "config error" in err


def test_missing_file_exits_3(capsys):
    assert main(["run", "/nonexistent/exp.toml"]) == 3
    assert "error" in capsys.readouterr().err


def test_verify_subcommand(capsys):
    assert main(["verify", "--suite", "packing", "--cases", "200"]) == 0
    out = capsys.readouterr().out
    assert "packing" in out and "PASS" in out


def test_rank_dump_stdout_and_file(small_cfg, tmp_path, capsys):
    assert main(["rank-dump", str(small_cfg)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "class_id,age,rank"
    # one curve per distinct need, ids carry the need values
    ids = {int(l.split(",")[0]) for l in lines[1:]}
    assert ids == {1, 4}
    for line in lines[1:3]:
        _, age, rank = line.split(",")
        float(age), float(rank)  # parseable floats

    out = tmp_path / "ranks.csv"
    assert main(["rank-dump", str(small_cfg), "--output", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "class_id,age,rank"
