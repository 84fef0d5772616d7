"""End-to-end tests for the command-line interface.

Covers config parsing with error paths, hash canonicalization, record
emission, every experiment kind through main(), exit codes and thread
determinism.  FNV-1a reference digests are the published test vectors.
"""

import csv
import json
import re

import numpy as np
import pytest

from entlab.cli import (
    CSV_HEADER,
    emit_results,
    fnv1a64,
    main,
    parse_config,
    run_experiment,
)
from entlab.errors import ParseError, ValidationError

# --------------------------------------------------------------- reference


def _converge_config(**over):
    cfg = {
        "kind": "converge",
        "seed": 1,
        "alpha": [1, 1],
        "operators": [
            {
                "angles": ["0", "1/3"],
                "stable": [[0.4, 0.0]],
                "basis": {"type": "orthonormal", "seed": 5},
            },
            {
                "angles": ["0", "2/3"],
                "stable": [[0.0, 0.3]],
                "basis": {"type": "orthonormal", "seed": 6},
            },
        ],
        "connectors": [{"type": "haar", "seed": 2}],
        "schedule": [16, 64, 256],
    }
    cfg.update(over)
    return cfg


def _continuous_config(**over):
    cfg = {
        "kind": "continuous",
        "alpha": [1, 1],
        "generators": [
            {
                "frequencies": ["0", "1/2"],
                "stable": [[-0.5, 0.0]],
                "basis": {"type": "orthonormal", "seed": 7},
            },
            {
                "frequencies": ["0", "-1/2"],
                "stable": [[-1.0, 0.0]],
                "basis": {"type": "orthonormal", "seed": 8},
            },
        ],
        "horizons": [8.0, 32.0],
        "quadrature": {"scheme": "midpoint", "points": "auto"},
    }
    cfg.update(over)
    return cfg


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


# ------------------------------------------------------------------ hashing


def test_fnv1a64_published_vectors():
    assert fnv1a64(b"") == "cbf29ce484222325"
    assert fnv1a64(b"a") == "af63dc4c8601ec8c"
    assert fnv1a64(b"foobar") == "85944171f73967e8"


def test_config_hash_stable_under_key_reordering():
    a = parse_config(json.dumps(_converge_config()))
    shuffled = dict(reversed(list(_converge_config().items())))
    b = parse_config(json.dumps(shuffled))
    assert a.config_hash == b.config_hash


def test_config_hash_stable_under_angle_spelling():
    base = _converge_config()
    other = parse_config(
        json.dumps(
            _converge_config(
                operators=[
                    {
                        "angles": ["0", "2/6"],  # same value as 1/3: no warning
                        "stable": [[0.4, 0.0]],
                        "basis": {"type": "orthonormal", "seed": 5},
                    },
                    base["operators"][1],
                ]
            )
        )
    )
    assert other.config_hash == parse_config(json.dumps(base)).config_hash


def test_wrapped_angle_warns_and_hashes_canonically():
    base = _converge_config()
    wrapped = _converge_config(
        operators=[
            {
                "angles": ["0", "-2/3"],  # wraps to 1/3: value changed
                "stable": [[0.4, 0.0]],
                "basis": {"type": "orthonormal", "seed": 5},
            },
            base["operators"][1],
        ]
    )
    with pytest.warns(UserWarning, match="normalized"):
        cfg = parse_config(json.dumps(wrapped))
    assert cfg.config_hash == parse_config(json.dumps(base)).config_hash


def test_config_hash_changes_with_content():
    a = parse_config(json.dumps(_converge_config(seed=1)))
    b = parse_config(json.dumps(_converge_config(seed=2)))
    assert a.config_hash != b.config_hash


# ------------------------------------------------------------------ parsing


def test_parse_config_defaults():
    cfg = parse_config(json.dumps(_converge_config()))
    assert cfg.kind == "converge"
    assert cfg.strategy == "presum"
    assert cfg.tolerance == 1e-8
    assert cfg.budget == 1e8
    assert cfg.threads == 1
    assert cfg.format == "csv"
    assert cfg.out is None
    assert cfg.data["schedule"] == [16, 64, 256]


def test_parse_config_schedule_sorted_and_deduplicated():
    cfg = parse_config(json.dumps(_converge_config(schedule=[64, 4, 64, 16])))
    assert cfg.data["schedule"] == [4, 16, 64]


def test_parse_config_invalid_json_reports_position():
    with pytest.raises(ParseError, match=r"line \d+"):
        parse_config("{ not json")


@pytest.mark.parametrize(
    "mutate, path_fragment",
    [
        (lambda c: c.update(kind="warp"), "$.kind"),
        (lambda c: c.update(strategy="turbo"), "$.strategy"),
        (lambda c: c.update(tolerance=-1.0), "$.tolerance"),
        (lambda c: c.update(threads=0), "$.threads"),
        (lambda c: c.update(format="xml"), "$.format"),
        (lambda c: c.update(alpha=[1, 3]), "$.alpha"),
        (lambda c: c.update(alpha=[]), "$.alpha"),
        (lambda c: c.update(schedule=[]), "$.schedule"),
        (lambda c: c.update(schedule=[4, 0]), "$.schedule[1]"),
        (lambda c: c.update(mystery=1), "unknown fields"),
        (lambda c: c.update(connectors=[{"type": "identity"}] * 5), "$.connectors"),
        (
            lambda c: c["operators"][0].update(angles=["1/0"]),
            "$.operators[0].angles[0]",
        ),
        (
            lambda c: c["operators"].pop(),
            "$.operators",
        ),
    ],
)
def test_parse_config_error_paths(mutate, path_fragment):
    cfg = _converge_config()
    mutate(cfg)
    with pytest.raises(ValidationError, match=re.escape(path_fragment)):
        parse_config(json.dumps(cfg))


def test_parse_config_operator_needs_an_eigenvalue():
    cfg = _converge_config()
    cfg["operators"][0] = {"angles": [], "stable": []}
    with pytest.raises(ValidationError, match="at least one eigenvalue"):
        parse_config(json.dumps(cfg))


def test_parse_config_basis_and_connector_validation():
    cfg = _converge_config()
    cfg["operators"][0]["basis"] = {"type": "fourier"}
    with pytest.raises(ValidationError, match="basis type"):
        parse_config(json.dumps(cfg))
    cfg = _converge_config()
    cfg["operators"][0]["basis"] = {"type": "similarity", "condition_cap": 0.5}
    with pytest.raises(ValidationError, match="condition_cap"):
        parse_config(json.dumps(cfg))
    cfg = _converge_config(connectors=[{"type": "warp"}])
    with pytest.raises(ValidationError, match="connector type"):
        parse_config(json.dumps(cfg))


def test_parse_config_counterexample_fields():
    cfg = parse_config(
        json.dumps({"kind": "counterexample", "checkpoints": [16, 4, 4]})
    )
    assert cfg.data["checkpoints"] == [4, 16]
    assert cfg.data["window"] == 64
    with pytest.raises(ValidationError, match=r"\$\.window"):
        parse_config(
            json.dumps({"kind": "counterexample", "checkpoints": [4], "window": -1})
        )


def test_parse_config_continuous_fields():
    cfg = parse_config(json.dumps(_continuous_config()))
    assert cfg.data["quadrature"] == {"scheme": "midpoint", "points": "auto"}
    assert cfg.data["richardson"] is True
    assert cfg.data["horizons"] == [8.0, 32.0]
    with pytest.raises(ValidationError, match=r"\$\.horizons"):
        parse_config(json.dumps(_continuous_config(horizons=[-1.0])))
    with pytest.raises(ValidationError, match=r"\$\.quadrature\.points"):
        parse_config(
            json.dumps(_continuous_config(quadrature={"points": 1}))
        )
    with pytest.raises(ValidationError, match=r"\$\.quadrature\.scheme"):
        parse_config(
            json.dumps(_continuous_config(quadrature={"scheme": "simpson"}))
        )


def test_parse_config_frequencies_are_signed():
    cfg = parse_config(json.dumps(_continuous_config()))
    assert cfg.data["generators"][1]["frequencies"] == ["0/1", "-1/2"]


# ----------------------------------------------------------------- emitting


def test_emit_csv_exact_header_and_roundtrip(tmp_path):
    records = [
        {
            "checkpoint": 16,
            "error_fro": 0.125,
            "error_op": 0.1,
            "runtime_ms": 1.5,
            "strategy": "presum",
            "seed": 1,
            "config_hash": "deadbeefdeadbeef",
        }
    ]
    path = tmp_path / "r.csv"
    emit_results(records, "csv", str(path))
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == "checkpoint,error_fro,error_op,runtime_ms,strategy,seed,config_hash"
    assert CSV_HEADER == tuple(lines[0].split(","))
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["error_fro"]) == 0.125
    assert rows[0]["config_hash"] == "deadbeefdeadbeef"


def test_emit_json_roundtrip(tmp_path):
    records = [{k: 0 for k in CSV_HEADER}]
    path = tmp_path / "r.json"
    emit_results(records, "json", str(path))
    assert json.loads(path.read_text()) == records


# ------------------------------------------------------------- end to end


def test_main_converge_writes_records_and_summary(tmp_path, capsys):
    cfg_path = _write(tmp_path, _converge_config())
    out_path = str(tmp_path / "records.csv")
    rc = main(["converge", "--config", cfg_path, "--out", out_path])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["kind"] == "converge"
    assert summary["records"] == 3
    assert summary["out"] == out_path
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    errs = [float(r["error_fro"]) for r in rows]
    ns = [int(r["checkpoint"]) for r in rows]
    assert ns == [16, 64, 256]
    assert errs[-1] < errs[0]  # averages approach the limit
    assert errs[-1] <= 0.1
    assert all(e >= 0 for e in errs)
    assert {r["config_hash"] for r in rows} == {summary["config_hash"]}


def test_main_limit_reports_tuples_and_matrix(tmp_path, capsys):
    cfg = _converge_config(kind="limit")
    del cfg["schedule"]
    cfg_path = _write(tmp_path, cfg)
    rc = main(["limit", "--config", cfg_path, "--out", str(tmp_path / "r.csv")])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    # angles {0,1/3} x {0,2/3}: resonances (0,0) and (1/3,2/3)
    assert len(summary["resonant_tuples"]) == 2
    assert len(summary["matrix"]) == 3  # d = 3
    got = {
        tuple(e.get("angle") for e in t["entries"])
        for t in summary["resonant_tuples"]
    }
    assert got == {("0/1", "0/1"), ("1/3", "2/3")}


def test_main_resonances_one_record_per_tuple(tmp_path, capsys):
    cfg = _converge_config(kind="resonances")
    del cfg["schedule"]
    cfg_path = _write(tmp_path, cfg)
    out_path = str(tmp_path / "r.csv")
    rc = main(["resonances", "--config", cfg_path, "--out", out_path])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["count"] == 2
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert all(float(r["error_fro"]) == 0.0 for r in rows)  # exact angles


def test_main_counterexample_exact_values(tmp_path, capsys):
    cfg = {"kind": "counterexample", "checkpoints": [16, 32], "window": 4}
    cfg_path = _write(tmp_path, cfg)
    rc = main(["counterexample", "--config", cfg_path, "--out", str(tmp_path / "r.csv")])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["exact_values"] == {"16": "3/8", "32": "21/32"}
    assert summary["finite_section_norm"] == pytest.approx(np.sqrt(3.0), abs=1e-6)


def test_main_stacking_test_residuals_at_roundoff(tmp_path, capsys):
    cfg = _converge_config(kind="stacking-test", schedule=[8, 32])
    cfg_path = _write(tmp_path, cfg)
    out_path = str(tmp_path / "r.csv")
    rc = main(["stacking-test", "--config", cfg_path, "--out", out_path])
    assert rc == 0
    capsys.readouterr()
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["error_fro"]) <= 1e-12 for r in rows)


def test_main_continuous_auto_points(tmp_path, capsys):
    cfg_path = _write(tmp_path, _continuous_config())
    out_path = str(tmp_path / "r.csv")
    rc = main(["continuous", "--config", cfg_path, "--out", out_path])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    quad = summary["quadrature"]
    assert quad["8.0"]["points"] == 80  # 20 per period * t * fmax = 20*8*0.5
    assert quad["32.0"]["points"] == 320
    assert quad["8.0"]["richardson"] is not None
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    errs = {float(r["checkpoint"]): float(r["error_fro"]) for r in rows}
    assert errs[32.0] < errs[8.0]  # longer horizon, closer to the limit


def test_main_state_seed_gives_vector_records(tmp_path, capsys):
    cfg_path = _write(tmp_path, _converge_config(state_seed=9, schedule=[32]))
    out_path = str(tmp_path / "r.csv")
    rc = main(["converge", "--config", cfg_path, "--out", out_path])
    assert rc == 0
    capsys.readouterr()
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    # vector mode: both norm columns coincide
    assert float(rows[0]["error_fro"]) == float(rows[0]["error_op"])


def test_main_threads_do_not_change_results(tmp_path, capsys):
    cfg_path = _write(tmp_path, _converge_config(schedule=[8, 16, 32, 64]))
    one = str(tmp_path / "one.csv")
    two = str(tmp_path / "two.csv")
    assert main(["converge", "--config", cfg_path, "--out", one]) == 0
    assert main(["converge", "--config", cfg_path, "--out", two, "--threads", "3"]) == 0
    capsys.readouterr()

    def errors(path):
        with open(path, newline="") as fh:
            return [(r["checkpoint"], r["error_fro"], r["error_op"]) for r in csv.DictReader(fh)]

    assert errors(one) == errors(two)


def test_main_json_format_override(tmp_path, capsys):
    cfg_path = _write(tmp_path, _converge_config(schedule=[8]))
    out_path = str(tmp_path / "r.json")
    rc = main(["converge", "--config", cfg_path, "--out", out_path, "--format", "json"])
    assert rc == 0
    capsys.readouterr()
    records = json.loads((tmp_path / "r.json").read_text())
    assert isinstance(records, list) and records[0]["checkpoint"] == 8


def test_main_default_out_name(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg_path = _write(tmp_path, _converge_config(schedule=[8]))
    rc = main(["converge", "--config", cfg_path])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["out"] == "entlab-converge.csv"
    assert (tmp_path / "entlab-converge.csv").exists()


# --------------------------------------------------------------- exit codes


def test_exit_1_when_config_unreadable(tmp_path, capsys):
    rc = main(["converge", "--config", str(tmp_path / "missing.json")])
    assert rc == 1
    assert "cannot read config" in capsys.readouterr().err


def test_exit_2_on_bad_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{")
    rc = main(["converge", "--config", str(p)])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_exit_2_on_kind_mismatch(tmp_path, capsys):
    cfg = _converge_config(kind="limit")
    del cfg["schedule"]
    cfg_path = _write(tmp_path, cfg)
    rc = main(["converge", "--config", cfg_path])
    assert rc == 2
    assert "does not match" in capsys.readouterr().err


def test_exit_3_on_budget_refusal(tmp_path, capsys):
    cfg_path = _write(tmp_path, _converge_config())
    rc = main(["converge", "--config", cfg_path, "--budget", "10"])
    assert rc == 3
    assert "budget refused" in capsys.readouterr().err
    assert not (tmp_path / "entlab-converge.csv").exists()


def test_exit_4_on_numerical_overflow(tmp_path, capsys):
    cfg = _continuous_config(
        horizons=[1.0e9], quadrature={"scheme": "midpoint", "points": 8}
    )
    cfg_path = _write(tmp_path, cfg)
    rc = main(["continuous", "--config", cfg_path, "--out", str(tmp_path / "r.csv")])
    assert rc == 4
    assert "numerical failure" in capsys.readouterr().err


# ------------------------------------------------------------ run_experiment


def test_run_experiment_summary_envelope():
    cfg = parse_config(json.dumps(_converge_config(schedule=[8])))
    records, summary = run_experiment(cfg)
    assert summary["kind"] == "converge"
    assert summary["config_hash"] == cfg.config_hash
    assert summary["records"] == len(records) == 1
    assert set(records[0]) == set(CSV_HEADER)
