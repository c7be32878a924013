import csv
import io
import json

import pytest
from click.testing import CliRunner

from cli.app import cli
from core.catalog import CATALOG_CONFIG


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def fast_config_file(tmp_path, fast_cfg):
    path = tmp_path / "fast.json"
    path.write_text(fast_cfg.model_dump_json(), encoding="utf-8")
    return str(path)


def run_json(runner, args):
    result = runner.invoke(cli, args + ["--json"])
    document = json.loads(result.stdout)
    document.pop("timing")
    return result, document


def read_csv(text: str) -> tuple[list[str], list[list[float]]]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) for v in row] for row in rows[1:]]


@pytest.mark.parametrize("domain", ["sl2", "glplus2"])
@pytest.mark.parametrize("name", list(CATALOG_CONFIG))
def test_exit_codes_follow_expected_verdicts(runner, fast_config_file, name, domain):
    result = runner.invoke(cli, ["analyze", "--catalog", name, "--domain", domain, "--config", fast_config_file])
    key = "sl2_rank_one" if domain == "sl2" else "glplus_rank_one"
    assert result.exit_code == (0 if CATALOG_CONFIG[name]["expected"][key] else 1), result.output


def test_analyze_expression_report(runner, fast_config_file):
    result, document = run_json(runner, ["analyze", "--energy-expr", "phi: -gamma", "--config", fast_config_file])
    assert result.exit_code == 1
    assert document["command"] == "analyze"
    assert document["passed"] is False
    assert document["energy"]["expression"] == "phi: -gamma"
    assert document["analysis"]["verdicts"]["dfz"] == "fails"
    dfz = next(r for r in document["analysis"]["results"] if r["criterion"] == "dfz")
    assert dfz["witnesses"][0]["kind"] == "gamma-pair"


def test_analyze_ratio_expression_on_glplus(runner, fast_config_file):
    result = runner.invoke(cli, ["analyze", "--energy-expr", "h: abs(sqrt(t) - sqrt(1/t))",
                                 "--domain", "glplus2", "--config", fast_config_file])
    assert result.exit_code == 1


def test_analyze_text_summary(runner, fast_config_file):
    result = runner.invoke(cli, ["analyze", "--catalog", "neo-hooke-inc", "--config", fast_config_file])
    assert result.exit_code == 0
    assert "neo-hooke-inc" in result.stdout
    assert "✅ holds" in result.stdout


def test_energy_file(runner, tmp_path, fast_config_file):
    path = tmp_path / "energy.txt"
    path.write_text("# квадратичный профиль\nphi: gamma^2\n", encoding="utf-8")
    result = runner.invoke(cli, ["analyze", "--energy-file", str(path), "--config", fast_config_file])
    assert result.exit_code == 0


def test_energy_file_with_invalid_encoding(runner, tmp_path):
    path = tmp_path / "energy.txt"
    path.write_bytes(b"phi: gamma\xff\n")
    for command in ("analyze", "profile"):
        result = runner.invoke(cli, [command, "--energy-file", str(path)])
        assert result.exit_code == 2, result.output
        assert "energy.txt" in result.stderr
        assert not isinstance(result.exception, UnicodeDecodeError)


@pytest.mark.parametrize(
    "args",
    [
        ["analyze", "--energy-expr", "phi: gamma +"],
        ["analyze", "--energy-expr", "phi: foo(gamma)"],
        ["analyze", "--energy-expr", "phi: gamma", "--catalog", "neo-hooke-inc"],
        ["analyze"],
        ["analyze", "--catalog", "no-such-energy"],
        ["analyze", "--catalog", "Bad Name!"],
        ["analyze", "--energy-expr", "g: l1 - l2", "--domain", "glplus2"],
        ["analyze", "--energy-expr", "g: l1^2 + l2^2", "--domain", "glplus2", "--samples-f", "5"],
        ["catalog", "--name", "no-such-energy"],
    ],
)
def test_usage_errors_exit_with_2(runner, args):
    result = runner.invoke(cli, args)
    assert result.exit_code == 2, result.output
    assert result.stderr


def test_parse_error_reports_position(runner):
    result = runner.invoke(cli, ["analyze", "--energy-expr", "phi: gamma +"])
    assert result.exit_code == 2
    assert "строка 1" in result.stderr


def test_bad_config_file(runner, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps({"tau": "wide"}), encoding="utf-8")
    for path in (broken, invalid):
        result = runner.invoke(cli, ["analyze", "--catalog", "neo-hooke-inc", "--config", str(path)])
        assert result.exit_code == 2


def test_out_leaves_stdout_empty(runner, tmp_path, fast_config_file):
    out = tmp_path / "report.json"
    result = runner.invoke(cli, ["analyze", "--catalog", "neo-hooke-inc", "--config", fast_config_file,
                                 "--out", str(out)])
    assert result.exit_code == 0
    assert result.stdout == ""
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["passed"] is True
    assert document["schema_version"] == "1.0"
    assert "total_time" in document["timing"]


def test_reports_are_deterministic(runner, fast_config_file):
    args = ["analyze", "--catalog", "hencky-inc", "--config", fast_config_file]
    _, first = run_json(runner, args)
    _, second = run_json(runner, args)
    assert first == second


@pytest.mark.parametrize("name, domain", [("fung-inc", "sl2"), ("iso-ratio", "glplus2")])
def test_report_config_reproduces_run(runner, tmp_path, fast_config_file, name, domain):
    first_path, second_path = tmp_path / "first.json", tmp_path / "second.json"
    runner.invoke(cli, ["analyze", "--catalog", name, "--domain", domain, "--config", fast_config_file,
                        "--out", str(first_path)])
    result = runner.invoke(cli, ["analyze", "--config", str(first_path), "--out", str(second_path)])
    assert result.exit_code == 0
    first = json.loads(first_path.read_text(encoding="utf-8"))
    second = json.loads(second_path.read_text(encoding="utf-8"))
    first.pop("timing")
    second.pop("timing")
    assert second["analysis"]["domain"] == first["analysis"]["domain"]
    assert first == second


def test_explicit_domain_overrides_report(runner, tmp_path, fast_config_file):
    report_path = tmp_path / "glplus.json"
    runner.invoke(cli, ["analyze", "--catalog", "iso-ratio", "--domain", "glplus2", "--config", fast_config_file,
                        "--out", str(report_path)])
    _, document = run_json(runner, ["analyze", "--config", str(report_path), "--domain", "sl2"])
    assert document["analysis"]["domain"] == "SL2"


def test_report_with_unknown_domain(runner, tmp_path, fast_config_file):
    report_path = tmp_path / "report.json"
    runner.invoke(cli, ["analyze", "--catalog", "neo-hooke-inc", "--config", fast_config_file,
                        "--out", str(report_path)])
    document = json.loads(report_path.read_text(encoding="utf-8"))
    document["analysis"]["domain"] = "SL3"
    report_path.write_text(json.dumps(document), encoding="utf-8")
    result = runner.invoke(cli, ["analyze", "--config", str(report_path)])
    assert result.exit_code == 2
    assert "SL3" in result.stderr


def test_seed_from_environment(runner, fast_config_file):
    result = runner.invoke(cli, ["analyze", "--catalog", "neo-hooke-inc", "--config", fast_config_file, "--json"],
                           env={"SLCONVEX_SEED": "99"})
    document = json.loads(result.stdout)
    assert document["config"]["seed"] == 99
    assert document["analysis"]["seed"] == 99


def test_counterexample_command(runner, tmp_path, fast_config_file):
    result, document = run_json(runner, ["counterexample", "--config", fast_config_file])
    assert result.exit_code == 0
    assert document["command"] == "counterexample"
    assert document["passed"] is True
    assert [c["claim"] for c in document["claims"]][0] == "invariance"

    out = tmp_path / "claims.json"
    result = runner.invoke(cli, ["counterexample", "--config", fast_config_file, "--strict", "--out", str(out)])
    assert result.exit_code == 0
    assert result.stdout == ""
    assert json.loads(out.read_text(encoding="utf-8"))["passed"] is True


def test_profile_linear_shear(runner, fast_config_file):
    result = runner.invoke(cli, ["profile", "--catalog", "counterexample-inc", "--curve", "phi",
                                 "--config", fast_config_file])
    assert result.exit_code == 0
    header, rows = read_csv(result.stdout)
    assert header == ["gamma", "phi"]
    assert len(rows) == 201
    assert all(gamma == phi for gamma, phi in rows)


def test_profile_neo_hooke(runner, fast_config_file):
    result = runner.invoke(cli, ["profile", "--catalog", "neo-hooke-inc", "--config", fast_config_file])
    _, rows = read_csv(result.stdout)
    assert all(phi == pytest.approx(gamma ** 2, abs=1e-9) for gamma, phi in rows)


def test_profile_invariant_slack(runner, fast_config_file):
    result = runner.invoke(cli, ["profile", "--energy-expr", "psi: I - 2", "--curve", "slack-abeyaratne",
                                 "--config", fast_config_file])
    assert result.exit_code == 0
    header, rows = read_csv(result.stdout)
    assert header == ["I", "psi_prime", "psi_second", "slack"]
    assert all(row[3] == pytest.approx(1.0, abs=1e-6) for row in rows)


def test_profile_to_file(runner, tmp_path, fast_config_file):
    out = tmp_path / "h.csv"
    result = runner.invoke(cli, ["profile", "--catalog", "iso-ratio", "--curve", "h",
                                 "--config", fast_config_file, "--out", str(out)])
    assert result.exit_code == 0
    header, rows = read_csv(out.read_text(encoding="utf-8"))
    assert header == ["t", "h"]
    assert all(h == pytest.approx(t + 1.0 / t, rel=1e-12) for t, h in rows)


def test_catalog_listing(runner):
    result = runner.invoke(cli, ["catalog"])
    assert result.exit_code == 0
    for name in CATALOG_CONFIG:
        assert name in result.stdout

    result = runner.invoke(cli, ["catalog", "--json"])
    entries = json.loads(result.stdout)
    assert len(entries) >= 6
    assert {e["name"] for e in entries} == set(CATALOG_CONFIG)


def test_catalog_single_entry(runner):
    result = runner.invoke(cli, ["catalog", "--name", "counterexample-iso", "--json"])
    assert result.exit_code == 0
    [entry] = json.loads(result.stdout)
    assert entry["representation"] == "RatioH"
    assert entry["expected"] == {"sl2_rank_one": True, "sl2_polyconvex": True, "glplus_rank_one": False}


def test_schema_command(runner):
    result = runner.invoke(cli, ["schema"])
    assert result.exit_code == 0
    schema = json.loads(result.stdout)
    assert {"config", "analysis", "claims", "timing"} <= set(schema["properties"])


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "1.0.0" in result.stdout
