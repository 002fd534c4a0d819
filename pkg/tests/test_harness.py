import io
import json
import os

import pytest

from dtztn.exceptions import ConfigError, InsufficientData, IoError
from dtztn.harness import cli
from dtztn.harness.config import ScenarioConfig, config_from_dict, default_config_json, load_config
from dtztn.harness.report import (emit_report, step_means_from_csv, summary_from_csv,
                                  techniques_from_csv, text_table)
from dtztn.harness.scenarios import (TECHNIQUES, ScenarioReport, run_scenario, scenario_schedule,
                                     summarize)
from dtztn.twin import ClosedLoopRecord

FAST = {"traffic": {"train_length": 300, "test_length": 100},
        "predictor": {"hidden_size": 8, "epochs": 2}, "agent": {"episodes": 300}}


@pytest.fixture
def fast_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(FAST))
    return str(path)


class TestConfig:
    def test_defaults_round_trip(self):
        assert config_from_dict(json.loads(default_config_json())) == ScenarioConfig()

    def test_unknown_field_names_path(self):
        with pytest.raises(ConfigError) as exc:
            config_from_dict({"agent": {"alpah": 0.3}})
        assert exc.value.field == "agent.alpah"

    def test_type_error(self):
        with pytest.raises(ConfigError) as exc:
            config_from_dict({"predictor": {"hidden_size": "big"}})
        assert exc.value.field == "predictor.hidden_size"

    @pytest.mark.parametrize("doc,field", [
        ({"agent": {"gamma": 1.0}}, "agent.gamma"),
        ({"netsim": {"paced_beta": 0.5}}, "netsim.paced_beta"),
        ({"name": "nope"}, "name"),
        ({"traffic": {"train_length": 5}}, "traffic.train_length"),
        ({"agent": {"levels": [100, 100]}}, "agent.levels"),
    ])
    def test_validation(self, doc, field):
        with pytest.raises(ConfigError) as exc:
            config_from_dict(doc)
        assert exc.value.field == field

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            load_config(tmp_path / "none.json")
        assert "config file not found" in str(exc.value)


class TestSchedules:
    def test_what_if_inserts_state(self):
        caps = scenario_schedule(ScenarioConfig(), "what_if").capacities()
        assert 100.0 in caps and len(caps) == 90

    def test_adaptive_twice(self):
        sched = scenario_schedule(ScenarioConfig(), "adaptive")
        assert [c for _, _, c in sched.segment_ranges()].count(50.0) == 2

    def test_explicit_schedule(self):
        cfg = config_from_dict({"netsim": {"schedule": {"total_steps": 4,
                                                        "segments": [{"start": 0, "kbps": 300}]}}})
        assert list(scenario_schedule(cfg).capacities()) == [300.0] * 4

    def test_bad_explicit_schedule(self):
        cfg = config_from_dict({"netsim": {"schedule": {"total_steps": 4, "segments": []}}})
        with pytest.raises(ConfigError):
            scenario_schedule(cfg)


def _records():
    return [ClosedLoopRecord(i, c, c, a, ach, p) for i, (c, a, ach, p) in enumerate(
        [(300.0, 300.0, 300.0, "optimal"), (50.0, 70.0, 48.0, "suboptimal"),
         (50.0, 50.0, 50.0, "optimal")])]


class TestReport:
    def test_summarize(self):
        s = summarize(_records(), warmup=1)
        assert s["mean_abs_error_kbps"] == pytest.approx(2 / 3)
        assert s["mean_abs_error_after_warmup_kbps"] == pytest.approx(1.0)
        assert s["provenance_counts"] == {"optimal": 2, "what_if": 0, "suboptimal": 1}

    def test_emit_and_recompute(self, tmp_path):
        report = ScenarioReport("default", _records(), summarize(_records(), 1))
        stream = io.StringIO()
        files = emit_report(report, tmp_path, ("csv", "svg_chart", "text_table"), stream)
        assert {os.path.basename(f) for f in files} == {"records.csv", "summary.json",
                                                       "default.svg"}
        assert summary_from_csv(tmp_path / "records.csv", 1) == report.summary
        assert "scenario default" in stream.getvalue()

    def test_empty_records_write_nothing(self, tmp_path):
        with pytest.raises(InsufficientData):
            emit_report(ScenarioReport("default", [], {}), tmp_path / "o")
        assert not (tmp_path / "o").exists()

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        report = ScenarioReport("default", _records(), summarize(_records()))
        with pytest.raises(IoError):
            emit_report(report, blocker / "sub")

    def test_compare_report(self, fast_config, tmp_path):
        report = run_scenario(fast_config.replace(name="compare"))
        emit_report(report, tmp_path, ("csv",))
        from_csv = techniques_from_csv(tmp_path / "compare.csv")
        assert from_csv == report.techniques
        means = step_means_from_csv(tmp_path / "compare_steps.csv")
        for k, _ in TECHNIQUES:
            assert means[k] == pytest.approx(report.techniques[k], abs=1e-9)
        assert "BW variation + TS + ZTN + DT" in text_table(report)


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_print_defaults(self, capsys):
        code, out, _ = _run(["generate", "--print-defaults"], capsys)
        assert code == 0 and json.loads(out)["agent"]["alpha"] == 0.3

    def test_generate(self, tmp_path, capsys):
        code, _, _ = _run(["generate", "--out", str(tmp_path)], capsys)
        assert code == 0
        assert (tmp_path / "train_series.csv").exists()
        assert (tmp_path / "schedule_adaptive.json").exists()

    def test_usage_error(self, capsys):
        assert _run(["run", "--scenario", "bogus"], capsys)[0] == 1
        assert _run([], capsys)[0] == 1

    def test_missing_config(self, tmp_path, capsys):
        code, _, err = _run(["train", "--config", str(tmp_path / "x.json")], capsys)
        assert code == 1 and "config file not found" in err

    def test_inspect_missing_db(self, tmp_path, capsys):
        assert _run(["inspect-db", "--out", str(tmp_path)], capsys)[0] == 2

    def test_train_run_inspect(self, tmp_path, fast_config_file, capsys):
        out = str(tmp_path / "o")
        base = ["--config", fast_config_file, "--out", out]
        assert _run(["train"] + base, capsys)[0] == 0
        assert os.path.exists(os.path.join(out, "qtable.csv"))
        code, stdout, _ = _run(["run", "--scenario", "adaptive", "--no-svg"] + base, capsys)
        assert code == 0 and "provenance" in stdout
        code, stdout, _ = _run(["inspect-db"] + base, capsys)
        assert code == 0 and "adaptive" in stdout

    def test_what_if(self, tmp_path, fast_config_file, capsys):
        base = ["--config", fast_config_file, "--out", str(tmp_path)]
        code, stdout, _ = _run(["what-if", "--state", "100"] + base, capsys)
        assert code == 0 and json.loads(stdout)["action_kbps"] == 100.0
        db = json.loads((tmp_path / "action_db.json").read_text())
        assert {"state_kbps": 100.0, "action_kbps": 100.0, "origin": "what_if",
                "occurrences": 1} in db["entries"]

    def test_what_if_bad_state(self, tmp_path, capsys):
        assert _run(["what-if", "--state", "-5", "--out", str(tmp_path)], capsys)[0] == 1
