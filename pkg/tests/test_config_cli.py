import json
import math
from pathlib import Path

import pytest

from latticedress.cli import main, model_from_config, run
from latticedress.config import ConfigError, load_config, parse_config

REPO_ROOT = Path(__file__).resolve().parent.parent

FAST_YAML = """
model:
  lattice: {sites_per_dim: 3}
  interaction: {name: phi3}
  order: 2
numerics:
  per_mode_cutoff: 4
  total_cutoff: 4
  lambdas: [0.02, 0.04, 0.08, 0.16]
"""


# ---------------------------------------------------------------------------
# configuration parsing


def test_defaults_from_empty_document():
    cfg = parse_config("")
    assert cfg.interaction == "phi3"
    assert cfg.order == 2
    assert cfg.policy == "shirokov"
    assert (cfg.per_mode_cutoff, cfg.total_cutoff) == (4, 4)
    assert cfg.lambdas == [0.02, 0.04, 0.08, 0.16]
    assert cfg.physical_length == pytest.approx(2.0 * math.pi)
    assert cfg.formats == ["json"]
    assert cfg.checks["residuals"].enabled
    assert not cfg.checks["equal_time"].enabled


def test_shipped_example_config_parses():
    cfg = load_config(REPO_ROOT / "configs" / "phi3.yaml")
    assert cfg.sites_per_dim == 5
    assert cfg.interaction == "phi3"
    assert cfg.formats == ["json", "csv"]


def test_echo_round_trips_all_sections():
    cfg = parse_config(FAST_YAML)
    echo = cfg.echo()
    assert set(echo) == {"model", "numerics", "checks", "output"}
    assert echo["model"]["lattice"]["sites_per_dim"] == 3
    assert set(echo["checks"]) == {"residuals", "oracle", "momentum",
                                   "equal_time", "spacelike"}


@pytest.mark.parametrize("text, fragment", [
    ("bogus: 1", "<root>.bogus"),
    ("model:\n  lattice: {sides: 3}", "model.lattice.sides"),
    ("model:\n  lattice: {sites_per_dim: 4}", "must be odd"),
    ("model:\n  species: [{name: phi, mass: -1.0}]", "mass must be a positive"),
    ("model:\n  interaction: {name: phi5}", "unknown interaction"),
    ("model:\n  policy: frobnicate", "shirokov or weidlich"),
    ("model:\n  order: 0", "must be >= 1"),
    ("numerics:\n  lambdas: nope", "list of numbers"),
    ("checks:\n  residuals: {enabled: maybe}", "expected a boolean"),
    ("checks:\n  sanity: {}", "checks.sanity"),
    ("output:\n  formats: [xml]", "unknown format"),
    ("model: [1, 2]", "expected a mapping"),
    ("{{{", "not valid YAML"),
])
def test_schema_violations_name_the_key(text, fragment):
    with pytest.raises(ConfigError, match=None) as exc:
        parse_config(text)
    assert fragment in str(exc.value)


def test_model_from_config_builds():
    model = model_from_config(parse_config(FAST_YAML))
    assert model.name == "phi3"
    assert len(model.system.modes) == 3


# ---------------------------------------------------------------------------
# pipeline runs and exit codes


def test_dress_command_passes(tmp_path):
    cfg = parse_config(FAST_YAML)
    assert run(cfg, "dress", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["schema_version"] == 1
    assert report["command"] == "dress"
    assert report["failures"] == []
    assert all(v["pass"] for v in report["verdicts"])
    assert report["dressing"]["bad_terms_left"] == []
    assert report["dressing"]["K"]


def test_verify_command_passes(tmp_path):
    cfg = parse_config(FAST_YAML)
    assert run(cfg, "all", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    names = {v["check"] for v in report["verdicts"]}
    assert {"no_bad_terms", "momentum_commutation", "oracle_equivalence_slope",
            "residual_slopes"} <= names


def test_report_is_byte_stable(tmp_path):
    cfg = parse_config(FAST_YAML)
    run(cfg, "dress", tmp_path / "a")
    run(cfg, "dress", tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == \
        (tmp_path / "b" / "report.json").read_bytes()


def test_zero_denominator_exits_one(tmp_path):
    cfg = parse_config(FAST_YAML.replace("order: 2", "order: 2\n  policy: weidlich"))
    assert run(cfg, "dress", tmp_path) == 1
    report = json.loads((tmp_path / "report.json").read_text())
    (failure,) = report["failures"]
    assert failure["reason"] == "zero_denominator"
    assert failure["order"] == 2
    assert failure["signatures"]


def test_scan_command_writes_csv(tmp_path):
    text = FAST_YAML.replace("cutoff: 4", "cutoff: 6") + """
checks:
  equal_time: {enabled: true, times: [0.0], lambdas: [0.0, 0.1]}
output:
  formats: [json, csv]
"""
    cfg = parse_config(text)
    assert run(cfg, "scan", tmp_path) == 0
    assert (tmp_path / "equal_time.csv").exists()
    header = (tmp_path / "equal_time.csv").read_text().splitlines()[0]
    assert header == "separation,tau,lambda,magnitude,baseline,subtracted"


def test_unknown_command_rejected():
    with pytest.raises(ValueError, match="unknown command"):
        run(parse_config(""), "meditate", ".")


# ---------------------------------------------------------------------------
# command-line entry point


def test_cli_missing_config_file(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "nope.yaml"), "--command", "dress"])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_cli_config_error(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("model:\n  policy: frobnicate\n")
    code = main(["--config", str(path), "--command", "dress"])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_cli_bad_arguments():
    assert main(["--command", "dress"]) == 2


def test_cli_end_to_end(tmp_path, capsys):
    path = tmp_path / "run.yaml"
    path.write_text(FAST_YAML)
    code = main(["--config", str(path), "--command", "dress",
                 "--out-dir", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "report.json").exists()
    err = capsys.readouterr().err
    assert "exit 0" in err
