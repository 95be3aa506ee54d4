import json
import subprocess
import sys

import pytest

from ttextra.cli import main


def write_cfg(tmp_path, **sections):
    cfg = {
        "graph": {"generator": "ring", "n": 5},
        "problem": {"family": "quadratic", "p": 2, "seed": 0},
        "params": {"margin": 1.05},
        "run": {"max_iters": 10000, "record_stride": 50, "init_seed": 0},
    }
    for key, val in sections.items():
        cfg.setdefault(key, {}).update(val)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def last_json(out: str) -> dict:
    return json.loads(out[out.index("{"):])


def test_select_params_ok(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["select-params", str(cfg), "--out", str(tmp_path / "p.json")]) == 0
    out = last_json(capsys.readouterr().out)
    assert out["validation"]["passed"]
    s = out["steps"]
    assert s["rho"] > s["rho_lb"] and s["beta"] > s["beta_lb"]
    assert json.loads((tmp_path / "p.json").read_text()) == out


def test_select_params_infeasible_rho(tmp_path, capsys):
    cfg = write_cfg(tmp_path, params={"rho": 0.1})
    assert main(["select-params", str(cfg)]) == 2
    out = last_json(capsys.readouterr().out)
    assert out["violated"] == "rho lower bound" and out["value"] == 0.1


def test_set_override(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["select-params", str(cfg), "--set", "params.beta=1.0"]) == 2
    assert last_json(capsys.readouterr().out)["violated"] == "beta lower bound"


def test_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 1


def test_unknown_key_rejected(tmp_path):
    cfg = write_cfg(tmp_path, run={"max_iter": 5})
    assert main(["run", str(cfg)]) == 1


def test_bad_family_rejected(tmp_path):
    cfg = write_cfg(tmp_path, problem={"family": "quartic"})
    assert main(["select-params", str(cfg)]) == 1


def test_run_converges(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    trace = tmp_path / "t.csv"
    assert main(["run", str(cfg), "--trace", str(trace)]) == 0
    out = last_json(capsys.readouterr().out)
    assert out["converged"] and out["descent_violations"] == 0
    assert trace.read_text().startswith("iter,f,L_rho,P_c,consensus_err,stationarity,step_norm,dual_step_norm,w_norm,descent_ok\n")


def test_run_not_converged(tmp_path):
    cfg = write_cfg(tmp_path, run={"max_iters": 5})
    assert main(["run", str(cfg), "--trace", str(tmp_path / "t.csv")]) == 3


def test_run_diverges(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem={"family": "regularized_ls"}, params={"rho": 30.0, "beta": 0.05})
    assert main(["run", str(cfg), "--trace", str(tmp_path / "t.csv")]) == 4
    assert last_json(capsys.readouterr().out)["diverged"]


def test_max_iters_zero(tmp_path):
    cfg = write_cfg(tmp_path, run={"max_iters": 0})
    assert main(["run", str(cfg)]) == 1


def test_compare_default(tmp_path, capsys):
    cfg = write_cfg(tmp_path, compare={"iters": 100})
    assert main(["compare", str(cfg), "--trace", str(tmp_path / "c.csv")]) == 0
    out = last_json(capsys.readouterr().out)
    assert out["max_gap_to_tt_extra_compact"]["tt-extra-agent"] <= 1e-10
    assert out["extra_forms_gap"] <= 1e-10
    assert not out["equivalence_asserted"]
    assert out["scalars_per_round"] == {"tt-extra": 10, "two-variable-baseline": 20}
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert len(lines) == 1 + 4 * 101


def test_compare_equivalent_setting(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem={"family": "welsch"}, params={"rho": 25.0, "beta": 25.0}, compare={"iters": 100})
    assert main(["compare", str(cfg)]) == 0
    out = last_json(capsys.readouterr().out)
    assert out["equivalence_asserted"]
    assert max(out["max_gap_to_tt_extra_compact"].values()) <= 1e-10


def test_check_lemmas_roundtrip(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem={"family": "regularized_ls"}, run={"max_iters": 2000})
    trace = tmp_path / "t.csv"
    main(["run", str(cfg), "--trace", str(trace)])
    capsys.readouterr()
    assert main(["check-lemmas", str(cfg), str(trace)]) == 0
    out = last_json(capsys.readouterr().out)
    assert out["min_slack"] >= -1e-9 and out["descent_violations"] == 0


def test_check_lemmas_rejects_foreign_trace(tmp_path):
    cfg = write_cfg(tmp_path, run={"max_iters": 100})
    trace = tmp_path / "t.csv"
    main(["run", str(cfg), "--trace", str(trace)])
    trace.write_text(trace.read_text().replace("true", "false", 1))
    assert main(["check-lemmas", str(cfg), str(trace)]) == 1


def test_console_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, run={"max_iters": 20})
    proc = subprocess.run(
        [sys.executable, "-m", "ttextra.cli", "run", str(cfg), "--trace", str(tmp_path / "t.csv")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 3
    assert json.loads(proc.stdout)["iterations"] == 20
