import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from expsel import cli, scenario, wignerfriend

BUNDLED = scenario.bundled_scenarios()
DOCS_SCHEMA = Path(__file__).resolve().parents[1] / "docs" / "scenario.schema.json"


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_variant(tmp_path, name, edit):
    data = json.loads(BUNDLED[name].read_text())
    edit(data)
    path = tmp_path / f"{name}.scenario"
    path.write_text(json.dumps(data))
    return str(path)


def table_lines(out):
    return [line for line in out.splitlines() if not line.startswith("#")]


def test_bundled_scenarios_present():
    assert {"wigner_t1", "wigner_t2", "friend_t1", "wf_comparator", "qubit_born"} <= set(BUNDLED)


def test_run_wigner_t1(capsys):
    code, out, _ = run_cli(capsys, "run", str(BUNDLED["wigner_t1"]))
    assert code == 0
    assert table_lines(out) == ["0 1.000000000000", "1 0.000000000000"]
    assert out.startswith("# engine=operator prescription=minimal")
    norm = float(out.splitlines()[-1].split("=")[1])
    assert norm == pytest.approx(1 / np.cos(0.4) ** 2, rel=1e-10)


def test_run_wigner_t2_values(capsys):
    code, out, _ = run_cli(capsys, "run", str(BUNDLED["wigner_t2"]))
    assert code == 0
    values = [float(line.split()[1]) for line in table_lines(out)]
    assert values == pytest.approx([np.cos(0.4) ** 2, np.sin(0.4) ** 2], abs=1e-12)


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_engines_print_identical_tables(capsys, name):
    _, a, _ = run_cli(capsys, "run", str(BUNDLED[name]))
    _, b, _ = run_cli(capsys, "run", str(BUNDLED[name]), "--engine", "pathsum")
    assert table_lines(a) == table_lines(b)


def test_run_csv_and_json(capsys):
    _, out, _ = run_cli(capsys, "run", str(BUNDLED["qubit_born"]), "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows == [["label", "probability"], ["0", "0.500000000000"], ["1", "0.500000000000"]]
    _, out, _ = run_cli(capsys, "run", str(BUNDLED["qubit_born"]), "--format", "json")
    report = json.loads(out)
    assert report["table"]["labels"] == ["0", "1"]
    assert report["table"]["probabilities"] == [0.5, 0.5]
    assert "wall_time_ms" not in report


def test_run_output_is_byte_identical_across_workers(capsys):
    outs = {run_cli(capsys, "run", str(BUNDLED["wigner_t2"]), "--engine", "pathsum", "--workers", str(w))[1]
            for w in (1, 4, 8)}
    assert len(outs) == 1


def test_timing_flag(capsys):
    _, out, _ = run_cli(capsys, "run", str(BUNDLED["qubit_born"]), "--timing")
    assert "# wall_time_ms=" in out


def test_non_unitary_step_reports_index(capsys, tmp_path):
    def edit(d):
        d["steps"][0]["matrix"] = [[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]

    code, _, err = run_cli(capsys, "run", write_variant(tmp_path, "qubit_born", edit))
    assert code == 2
    assert "steps[0]" in err and "not unitary" in err


def test_schema_violation_names_field(capsys, tmp_path):
    def edit(d):
        d["steps"][1]["gate"] = "teleport"

    code, _, err = run_cli(capsys, "run", write_variant(tmp_path, "wigner_t2", edit))
    assert code == 2
    assert "steps[1].gate" in err


def test_invalid_json_and_missing_file(capsys, tmp_path):
    bad = tmp_path / "bad.scenario"
    bad.write_text("{not json")
    assert run_cli(capsys, "run", str(bad))[0] == 2
    assert run_cli(capsys, "run", str(tmp_path / "nope.scenario"))[0] == 2


def test_unreachable_condition_exit_3(capsys, tmp_path):
    def edit(d):
        d["parameters"]["theta"] = 0.0
        d["events"][0]["select"] = "1"

    code, _, err = run_cli(capsys, "run", write_variant(tmp_path, "wigner_t1", edit))
    assert code == 3
    assert "error" in err


def test_path_cap_exit_4(capsys, monkeypatch):
    monkeypatch.setenv("EXPSEL_PATH_CAP", "100")
    code, _, err = run_cli(capsys, "run", str(BUNDLED["wigner_t2"]), "--engine", "pathsum")
    assert code == 4
    assert "cap" in err
    # the operator engine does not enumerate paths
    assert run_cli(capsys, "run", str(BUNDLED["wigner_t2"]))[0] == 0


def test_compare_wf_comparator(capsys):
    code, out, _ = run_cli(capsys, "compare", str(BUNDLED["wf_comparator"]), "--against", "incoherent_sum")
    assert code == 0
    lines = out.splitlines()
    assert "Phi 1.000000000000" in lines and "Phi 0.500000000000" in lines
    assert lines[-1] == "total_variation 0.500000000000"


@pytest.mark.parametrize("against,tv", [("minimal", 0.0), ("joint", 0.5), ("coherent_sum", 0.0)])
def test_compare_json_across_kinds(capsys, against, tv):
    code, out, _ = run_cli(
        capsys, "compare", str(BUNDLED["wf_comparator"]), "--against", against, "--format", "json"
    )
    assert code == 0
    report = json.loads(out)
    assert report["divergence"]["total_variation"] == pytest.approx(tv, abs=1e-12)


def test_compare_csv(capsys):
    _, out, _ = run_cli(
        capsys, "compare", str(BUNDLED["wf_comparator"]), "--against", "incoherent_sum", "--format", "csv"
    )
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["label", "minimal", "incoherent_sum"]
    assert rows[-1][:2] == ["total_variation", "0.500000000000"]


def test_compare_missing_auxiliary_exit_5(capsys):
    code, _, err = run_cli(capsys, "compare", str(BUNDLED["qubit_born"]), "--against", "incoherent_sum")
    assert code == 5
    assert "auxiliary" in err


def test_sweep(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--theta-steps", "3", "--phi-steps", "2")
    assert code == 0
    lines = out.splitlines()
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[:-1]))))
    assert len(rows) == 6
    quarter = [r for r in rows if float(r["theta"]) == pytest.approx(np.pi / 4, abs=1e-12)]
    assert quarter and all(r["p00"] == "0.500000000000" for r in quarter)
    # theta = 0 leaves the i=1 memory unreachable
    assert rows[0]["p10"] == "nan"
    assert lines[-1].startswith("# max_deviation=")
    assert float(lines[-1].split("=")[1]) < 1e-10


def test_sweep_engines_agree(capsys):
    _, a, _ = run_cli(capsys, "sweep", "--theta-steps", "2", "--phi-steps", "2")
    _, b, _ = run_cli(capsys, "sweep", "--theta-steps", "2", "--phi-steps", "2", "--engine", "pathsum")
    assert a.splitlines()[:-1] == b.splitlines()[:-1]


def test_bad_arguments_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "--theta-steps", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["run", str(BUNDLED["qubit_born"]), "--workers", "0"])


def test_document_round_trip():
    doc = scenario.load(BUNDLED["wf_comparator"])
    again = scenario.parse(json.loads(doc.to_json()))
    for kind in ("minimal", "joint", "incoherent_sum"):
        a = scenario.run(doc, kind=kind).probabilities
        b = scenario.run(again, kind=kind).probabilities
        assert np.array_equal(a, b)


def test_docs_schema_matches_packaged():
    assert json.loads(DOCS_SCHEMA.read_text()) == scenario.schema()


def test_entry_point_runs():
    out = subprocess.run(
        [sys.executable, "-m", "expsel.cli", "run", str(BUNDLED["friend_t1"])],
        capture_output=True, text=True, check=True,
    ).stdout
    assert table_lines(out) == ["0 0.500000000000", "1 0.500000000000"]


def test_selftest_detects_broken_v(capsys, monkeypatch):
    real = wignerfriend.build_V
    monkeypatch.setattr(wignerfriend, "build_V", lambda *a, **k: -real(*a, **k))
    code, out, _ = run_cli(capsys, "selftest")
    assert code == 1
    failing = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert any("psi2-compatibility" in line for line in failing)
