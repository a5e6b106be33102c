import json
import textwrap

import pytest

from vertexbound.cli import main


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("VERTEXBOUND_CACHE", str(tmp_path / "cache"))


FOCK_INI = """
[run]
depth = 4
m = 1

[voa]
kind = heisenberg

[module.f1]
kind = fock
charge = 1

[module.f2]
kind = fock
charge = 2

[intertwiner.Y]
lam = 1
mu = 2

[intertwiner.Yhalf]
lam = 1
mu = 2
scale = 1/2

[command]
module = f1
left = f1
right = f2
intertwiners = Y Yhalf
first = Y
second = Yhalf
orders = 1,2,3
"""

ISING_INI = """
[run]
depth = 4

[voa]
kind = virasoro
central_charge = 1/2

[module.sigma]
kind = verma
highest_weight = 1/16

[module.eps]
kind = quotient
highest_weight = 1/2
singular_vectors = level2

[command]
module = eps
"""


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return str(path)


def run_cli(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr().out


def run_json(argv, capsys):
    code, out = run_cli(argv, capsys)
    return code, json.loads(out)


def test_cm_quotient_fock_example(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["cm-quotient", "--config", config], capsys)
    assert code == 0
    assert report["schema"] == "vertexbound-report/1"
    assert report["command"] == "cm-quotient"
    assert len(report["config_hash"]) == 64
    assert report["payload"]["quotient_dims"] == [1, 0, 0, 0, 0]
    assert report["certification"]["certified_depth"] == 4
    assert report["certification"]["truncation_warnings"] == []


def test_cm_quotient_virasoro_quotient(tmp_path, capsys):
    config = write_config(tmp_path, ISING_INI)
    code, report = run_json(["cm-quotient", "--config", config], capsys)
    assert code == 0
    assert report["payload"]["quotient_dims"] == [1, 1, 0, 0, 0]


def test_cm_quotient_verma(tmp_path, capsys):
    config = write_config(tmp_path, ISING_INI.replace("module = eps", "module = sigma"))
    code, report = run_json(["cm-quotient", "--config", config], capsys)
    assert code == 0
    assert report["payload"]["quotient_dims"] == [1, 1, 1, 1, 1]


def test_ode_example(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["ode", "--config", config], capsys)
    assert code == 0
    payload = report["payload"]
    assert payload["dimension"] == 1
    assert payload["pole_order"] == 1
    assert payload["entries"] == [
        {"row": 0, "col": 0, "terms": [{"power": -1, "num": "2", "den": "1"}]}
    ]


def test_graded_dims_certified(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["graded-dims", "--config", config], capsys)
    assert code == 0
    payload = report["payload"]
    assert payload["dims"] == [1, 1, 2, 3, 5]
    assert payload["certified"] == [True] * 5
    assert report["certification"]["certified_depth"] == 4


def test_complement_payload(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["complement", "--config", config], capsys)
    assert code == 0
    assert report["payload"]["labels"] == [{"level": 0, "monomial": "|1>"}]
    assert report["payload"]["lowest_weight"] == "1/2"


def test_reduce_echoes_inputs(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["reduce", "--config", config], capsys)
    assert code == 0
    payload = report["payload"]
    assert payload["p"] == "|1>"
    assert payload["q"] == "|2>"
    assert payload["entries"]
    assert payload["entries"][0]["terms"]


def test_bound_payload(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["bound", "--config", config], capsys)
    assert code == 0
    assert report["payload"]["value"] == 1
    assert report["payload"]["provenance"][0]["product"] == 1


def test_frobenius_payload(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["frobenius", "--config", config], capsys)
    assert code == 0
    payload = report["payload"]
    assert payload["indicial"]["exponents"] == [{"value": "2", "multiplicity": 1}]
    sols = payload["series"][0]["solutions"]
    assert sols[0]["exponent"] == "2"
    assert sols[0]["terms"][0]["vector"] == ["1"]


def test_join_is_surjective_onto_target(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["join", "--config", config], capsys)
    assert code == 0
    payload = report["payload"]
    assert payload["target_dims"] == [1, 1, 2, 3, 5]
    for row in payload["surjectivity"]:
        assert row["rank"] == row["dim"]


def test_compare_scalar_twist_equivalent(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["compare", "--config", config], capsys)
    assert code == 0
    payload = report["payload"]
    assert payload["relation"] == "equivalent"
    assert payload["witness"] is not None
    assert payload["reverse_witness"] is not None


def test_log_bound_payload(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(["log-bound", "--config", config], capsys)
    assert code == 0
    payload = report["payload"]
    assert payload["orders"] == [1, 2, 3]
    assert payload["coarse_bound"] == 9
    assert payload["sharp_bound"] == 4
    assert payload["attained"] is True


def test_identity_suite_heisenberg(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    code, report = run_json(
        ["identity-suite", "--config", config, "--depth", "2"], capsys
    )
    assert code == 0
    payload = report["payload"]
    assert payload["all_passed"] is True
    assert payload["failures"] == []
    assert payload["commutator_checked"] > 0
    assert payload["associativity_checked"] > 0


def test_out_writes_report_file(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    target = tmp_path / "report.json"
    code, out = run_cli(
        ["cm-quotient", "--config", config, "--out", str(target)], capsys
    )
    assert code == 0
    assert out == ""
    report = json.loads(target.read_text(encoding="utf-8"))
    assert report["payload"]["quotient_dims"] == [1, 0, 0, 0, 0]


def test_depth_override_changes_hash(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    _, base = run_json(["cm-quotient", "--config", config], capsys)
    code, deeper = run_json(
        ["cm-quotient", "--config", config, "--depth", "3"], capsys
    )
    assert code == 0
    assert deeper["depth"] == 3
    assert deeper["payload"]["quotient_dims"] == [1, 0, 0, 0]
    assert deeper["config_hash"] != base["config_hash"]


def test_reports_byte_identical_across_threads(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    argv = ["identity-suite", "--config", config, "--depth", "2"]
    _, first = run_cli(argv + ["--threads", "1"], capsys)
    _, second = run_cli(argv + ["--threads", "8"], capsys)
    assert first == second


def test_reports_byte_identical_across_cache_states(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    argv = ["graded-dims", "--config", config]
    _, cold = run_cli(argv, capsys)
    _, warm = run_cli(argv, capsys)
    assert cold == warm
    # poison the cache; the spot check forces a rebuild, bytes unchanged
    for path in (tmp_path / "cache").glob("*.json"):
        path.write_text("{", encoding="utf-8")
    _, rebuilt = run_cli(argv, capsys)
    assert rebuilt == cold


def test_missing_config_file_is_config_error(tmp_path, capsys):
    code, report = run_json(
        ["cm-quotient", "--config", str(tmp_path / "absent.ini")], capsys
    )
    assert code == 2
    assert report["error"]["type"] == "ConfigError"
    assert report["error"]["exit_code"] == 2


def test_truncation_error_exit_code(tmp_path, capsys):
    text = FOCK_INI.replace("intertwiners = Y Yhalf",
                            "intertwiners = Y Yhalf\nleft_key = 9")
    config = write_config(tmp_path, text)
    code, report = run_json(["reduce", "--config", config], capsys)
    assert code == 3
    assert report["error"]["type"] == "TruncationError"


def test_missing_command_param_is_config_error(tmp_path, capsys):
    config = write_config(tmp_path, MINIMAL_HEISENBERG)
    code, report = run_json(["reduce", "--config", config], capsys)
    assert code == 2
    assert report["error"]["type"] == "ConfigError"


MINIMAL_HEISENBERG = """
[run]
depth = 3

[voa]
kind = heisenberg
"""


def test_unknown_command_rejected_by_parser(tmp_path, capsys):
    config = write_config(tmp_path, FOCK_INI)
    with pytest.raises(SystemExit):
        main(["conjure", "--config", config])


def test_run_section_defaults_feed_cli(tmp_path, capsys):
    # threads/out from [run] are honored when flags are absent
    target = tmp_path / "from_run.json"
    text = FOCK_INI.replace("m = 1", f"m = 1\nout = {target}")
    config = write_config(tmp_path, text)
    code, out = run_cli(["cm-quotient", "--config", config], capsys)
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["payload"]["quotient_dims"] == [1, 0, 0, 0, 0]
