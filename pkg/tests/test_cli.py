"""Command-line entry point: configs, outputs, exit codes, determinism."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from dysonprop.cli import main


def linop_doc(grades, matrix):
    m = np.asarray(matrix, dtype=complex)
    flat = [[float(z.real), float(z.imag)] for z in m.reshape(-1)]
    return {"dim": len(grades), "grades": list(grades), "matrix": flat}


def pair_model_doc(g=0.3, hermitian=False):
    h1 = np.zeros((3, 3))
    h1[1, 0] = g
    h1[2, 1] = g
    if hermitian:
        h1 = h1 + h1.T
    return {
        "h_free": linop_doc([0, 1, 2], np.diag([0.0, 1.0, 2.5])),
        "h_int": linop_doc([0, 1, 2], h1),
    }


def small_qed_doc(coupling=0.3):
    return {
        "qed": {
            "momentum_points": [[0.8, -0.3, 0.5]],
            "fermion_momenta": [[0.2, 0.1, -0.4]],
            "mass": 1.0,
            "coupling": coupling,
            "photon_cap": 2,
            "chi_sp": [1.0],
            "chi_ph": [0.2],
            "chi_el": [0.3],
        }
    }


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_all(out_dir, names):
    return {n: (out_dir / n).read_bytes() for n in names}


# ------------------------------------------------------------------ evolve

def test_evolve_writes_certified_artifacts(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "command": "evolve",
            "model": pair_model_doc(),
            "t_end": 1.0,
            "steps": 8,
            "tol": 1e-10,
            "initial_state": {"basis_index": 0},
            "out_dir": str(tmp_path / "out"),
        },
    )
    assert main(["evolve", cfg]) == 0
    out = tmp_path / "out"
    doc = json.loads((out / "evolve.json").read_text())
    assert doc["command"] == "evolve"
    assert doc["series"]["tail_bound"] <= 1e-10
    assert len(doc["final_state"]) == 3
    assert doc["all_passed"] is True
    assert len(doc["config_digest"]) == 64

    rows = (out / "trajectory.csv").read_bytes().split(b"\r\n")
    assert rows[0].startswith(b"time,norm,residual,config_digest,version")
    assert len(rows) == 1 + 9 + 1  # header, steps+1 rows, trailing empty
    orders = (out / "orders.csv").read_text().splitlines()
    assert orders[0].startswith("order,sup_norm,apriori_bound")


def test_evolve_free_model_preserves_norms(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "model": pair_model_doc(g=0.0),
            "t_end": 2.0,
            "steps": 4,
            "initial_state": [[0.6, 0.0], [0.0, 0.8], [0.0, 0.0]],
            "out_dir": str(tmp_path),
        },
    )
    assert main(["evolve", cfg]) == 0
    for line in (tmp_path / "trajectory.csv").read_text().splitlines()[1:]:
        assert float(line.split(",")[1]) == pytest.approx(1.0, abs=1e-12)


def test_rerun_is_byte_identical(tmp_path):
    names = ["evolve.json", "trajectory.csv", "orders.csv"]
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        cfg = write_config(
            tmp_path,
            {
                "model": pair_model_doc(),
                "t_end": 0.5,
                "steps": 4,
                "seed": 7,
                "out_dir": str(out),
            },
            name=f"cfg-{tag}.json",
        )
        assert main(["evolve", cfg]) == 0
        outs.append(read_all(out, names))
    assert outs[0] == outs[1]


def test_override_changes_digest_and_document(tmp_path):
    base = {
        "model": pair_model_doc(),
        "t_end": 1.0,
        "steps": 4,
        "out_dir": str(tmp_path / "x"),
    }
    cfg = write_config(tmp_path, base)
    assert main(["evolve", cfg]) == 0
    plain = json.loads((tmp_path / "x" / "evolve.json").read_text())

    assert main(["evolve", cfg, "--t-end", "0.5", "--out",
                 str(tmp_path / "y")]) == 0
    shifted = json.loads((tmp_path / "y" / "evolve.json").read_text())
    assert shifted["t_end"] == 0.5
    assert shifted["config_digest"] != plain["config_digest"]


def test_model_may_live_in_its_own_file(tmp_path):
    model_path = tmp_path / "model.json"
    model_path.write_text(json.dumps(pair_model_doc()))
    cfg = write_config(
        tmp_path,
        {"model": "model.json", "steps": 4, "out_dir": str(tmp_path)},
    )
    assert main(["evolve", cfg]) == 0
    # the inlined model, not the path, feeds the digest and the artifact
    doc = json.loads((tmp_path / "evolve.json").read_text())
    assert isinstance(doc["config"]["model"], dict)
    assert "h_free" in doc["config"]["model"]


# ------------------------------------------------------------- exit codes

def test_unknown_field_is_a_config_error(tmp_path, capsys):
    cfg = write_config(
        tmp_path, {"model": pair_model_doc(), "stepz": 4}
    )
    assert main(["evolve", cfg]) == 2
    assert "stepz" in capsys.readouterr().err


def test_json_syntax_error_reports_position(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"model": \n[}')
    assert main(["evolve", str(path)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err


def test_missing_config_file(tmp_path, capsys):
    assert main(["evolve", str(tmp_path / "nope.json")]) == 2
    assert main(["heisenberg"]) == 2


def test_nonhermitian_free_part_exits_three(tmp_path, capsys):
    doc = pair_model_doc()
    bad = np.diag([0.0, 1.0, 2.5]).astype(complex)
    bad[0, 1] = 0.4  # upper entry with no mirror
    doc["h_free"] = linop_doc([0, 1, 2], bad)
    cfg = write_config(
        tmp_path, {"model": doc, "steps": 4, "out_dir": str(tmp_path)}
    )
    assert main(["evolve", cfg]) == 3
    assert "free-part-not-hermitian" in capsys.readouterr().err


def test_untruncatable_series_exits_four(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {
            "model": pair_model_doc(g=50.0),
            "t_end": 1.0,
            "steps": 4,
            "max_order": 4,
            "out_dir": str(tmp_path),
        },
    )
    assert main(["evolve", cfg]) == 4
    assert "truncation" in capsys.readouterr().err


def test_failing_reports_exit_one(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {
            "command": "verify",
            "count": 2,
            "tuples": 2,
            "tol": 1e-30,
            "out_dir": str(tmp_path),
        },
    )
    assert main(["verify", cfg]) == 1
    root = ET.fromstring((tmp_path / "verify.xml").read_text())
    assert int(root.get("failures")) > 0
    assert "FAIL" in capsys.readouterr().out


def test_command_mismatch_rejected(tmp_path):
    cfg = write_config(
        tmp_path, {"command": "verify", "model": pair_model_doc()}
    )
    assert main(["evolve", cfg]) == 2


# ------------------------------------------------------- suite commands

def test_verify_small_fleet(tmp_path, capsys):
    cfg = write_config(
        tmp_path, {"count": 2, "tuples": 2, "out_dir": str(tmp_path)}
    )
    assert main(["verify", cfg]) == 0
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["all_passed"] is True
    root = ET.fromstring((tmp_path / "verify.xml").read_text())
    assert root.get("failures") == "0"
    assert int(root.get("tests")) >= 18
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_heisenberg_pipeline(tmp_path):
    obs = np.zeros((3, 3))
    obs[0, 0] = 1.0
    cfg = write_config(
        tmp_path,
        {
            "model": pair_model_doc(),
            "observable": linop_doc([0, 1, 2], obs),
            "t_end": 0.5,
            "steps": 8,
            "out_dir": str(tmp_path),
        },
    )
    assert main(["heisenberg", cfg]) == 0
    doc = json.loads((tmp_path / "heisenberg.json").read_text())
    assert doc["all_passed"] is True
    names = [r["check_name"] for r in doc["reports"]]
    assert "heisenberg-initial-value" in names
    assert "heisenberg-residual-order" in names
    lines = (tmp_path / "heisenberg.csv").read_text().splitlines()
    assert lines[0].startswith("time,observable_norm,strong_residual")
    assert len(lines) == 1 + 9


def test_heisenberg_requires_even_steps(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "model": pair_model_doc(),
            "observable": linop_doc([0, 1, 2], np.eye(3)),
            "steps": 7,
            "out_dir": str(tmp_path),
        },
    )
    assert main(["heisenberg", cfg]) == 2


def test_qed_demo_small_model(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {
            "model": small_qed_doc(),
            "t_end": 0.5,
            "steps": 8,
            "pairs": 4,
            "out_dir": str(tmp_path),
        },
    )
    assert main(["qed-demo", cfg]) == 0
    doc = json.loads((tmp_path / "qed_demo.json").read_text())
    assert doc["all_passed"] is True
    names = [r["check_name"] for r in doc["reports"]]
    for expected in (
        "gamma-anticommutators",
        "eta-pairing-drift",
        "weak-residual-order",
        "oracle-cross-check",
    ):
        assert expected in names
    assert (tmp_path / "qed_demo.xml").exists()
    lines = (tmp_path / "qed_demo.csv").read_text().splitlines()
    assert lines[0].startswith("time,weak_residual")


def test_convergence_pipeline(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "model": pair_model_doc(),
            "t_end": 1.0,
            "n_max": 6,
            "alphas": [0, 2],
            "out_dir": str(tmp_path),
        },
    )
    assert main(["convergence", cfg]) == 0
    doc = json.loads((tmp_path / "convergence.json").read_text())
    assert doc["table"]["onsets"] == [0, 0] or max(doc["table"]["onsets"]) <= 3
    assert doc["all_passed"] is True
    header = (tmp_path / "convergence.csv").read_text().splitlines()[0]
    assert header.startswith("order,norm_alpha_0,tail_alpha_0")
