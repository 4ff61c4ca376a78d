import pytest

from fgk.config import (DEFAULT_WORKERS, load_chart_config, load_family_spec, parse_chart_config, seed_override,
                        worker_count)
from fgk.errors import ConfigError
from fgk.schemas import ChartConfig, CheckRecord, Report
from fgk.services.suites import SuiteContext

FLAT = {"dimension": 1, "flavor": "complex", "tensor": [["1"]], "rng_seed": 7}


def test_defaults_are_filled_in():
    config = parse_chart_config(FLAT)
    assert config.fiber_truncation == 4
    assert config.nu_truncation == 0
    assert config.word_length == 3
    assert config.rng_seed == 7


def test_seed_environment_overrides_file(monkeypatch):
    monkeypatch.setenv("FGK_SEED", "42")
    assert seed_override() == 42
    assert parse_chart_config(FLAT).rng_seed == 42


@pytest.mark.parametrize("value", ["abc", "-1", "1.5"])
def test_bad_seed_is_config_error(monkeypatch, value):
    monkeypatch.setenv("FGK_SEED", value)
    with pytest.raises(ConfigError):
        parse_chart_config(FLAT)


@pytest.mark.parametrize("change", [
    {"tensor": [["1", "0"]]},
    {"dimension": 0},
    {"flavor": "quaternionic"},
    {"word_length": 6},
    {"unknown": 1},
])
def test_invalid_config_is_config_error(change):
    with pytest.raises(ConfigError) as info:
        parse_chart_config({**FLAT, **change})
    assert info.value.details


def test_missing_and_malformed_files(tmp_path, write_json):
    with pytest.raises(ConfigError):
        load_chart_config(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_chart_config(str(broken))
    assert load_chart_config(write_json("flat.json", FLAT)).dimension == 1


def test_config_survives_json_round_trip():
    config = parse_chart_config(FLAT)
    assert ChartConfig.model_validate_json(config.model_dump_json()) == config


def test_family_spec_accepts_bare_list(write_json):
    spec = load_family_spec(write_json("family.json", [[{"coefficient": "1", "derivatives": []}]]))
    assert len(spec.operators) == 1
    assert spec.operators[0][0].coefficient == "1"
    with pytest.raises(ConfigError):
        load_family_spec(write_json("bad.json", {"operators": [[{"coefficient": 1}]]}))


def test_worker_count(monkeypatch):
    assert worker_count() == DEFAULT_WORKERS
    assert worker_count(0) == 1
    monkeypatch.setenv("FGK_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("FGK_WORKERS", "many")
    with pytest.raises(ConfigError):
        worker_count()


def test_report_sorts_checks_and_sets_exit_code():
    report = Report(command="verify", config={}, checks=[
        CheckRecord(name="b", status="pass"),
        CheckRecord(name="a", status="skipped", detail="flat only"),
    ])
    assert [record.name for record in report.checks] == ["a", "b"]
    assert report.exit_code == 0
    report.checks.append(CheckRecord(name="c", status="fail", residual="1"))
    assert report.exit_code == 1


def test_default_word_length_reaches_three_letter_words(flat_groupoid):
    ctx = SuiteContext(parse_chart_config(FLAT), flat_groupoid)
    assert ctx.word_length == 3
