import json

import pytest

from dtztn.agent import ActionSpace, greedy_policy
from dtztn.exceptions import InsufficientData, IoError, ParameterError, StateError
from dtztn.netsim import VariationSchedule
from dtztn.predictor import MemoryModule, PredictorBundle
from dtztn.twin import (PROVENANCES, ActionDatabase, ClosedLoopRecord, DigitalTwin,
                        read_records_csv, suboptimal_fallback, write_records_csv)


@pytest.fixture
def twin(fresh_bundle, trained_q, default_spaces):
    states, actions = default_spaces
    return DigitalTwin(fresh_bundle, trained_q.copy(), states, actions, seed=0)


class TestActionDatabase:
    def test_record_never_overwrites(self):
        db = ActionDatabase()
        db.record(50, 70, "known")
        e = db.record(50, 50, "adaptive")
        assert e.action == 70 and e.origin == "known" and e.occurrences == 2

    def test_bad_origin(self):
        with pytest.raises(ParameterError):
            ActionDatabase().record(50, 50, "guess")

    def test_json_round_trip(self, tmp_path):
        db = ActionDatabase()
        db.record(100, 100, "what_if")
        db.record(300, 300, "known")
        db.save(tmp_path / "db.json")
        doc = json.loads((tmp_path / "db.json").read_text())
        assert set(doc["entries"][0]) == {"state_kbps", "action_kbps", "origin", "occurrences"}
        assert ActionDatabase.load(tmp_path / "db.json").to_dict() == db.to_dict()

    def test_corrupt(self, tmp_path):
        (tmp_path / "db.json").write_text('{"entries": [{"state_kbps": 1}]}')
        with pytest.raises(IoError):
            ActionDatabase.load(tmp_path / "db.json")


class TestFallback:
    def test_examples(self):
        a = ActionSpace()
        assert suboptimal_fallback(50, a) == 70
        assert suboptimal_fallback(45, a) == 70
        assert suboptimal_fallback(600, a) == 600

    def test_nonpositive(self):
        with pytest.raises(ParameterError):
            suboptimal_fallback(0, ActionSpace())


class TestResolveAction:
    def test_known_state_is_optimal(self, twin):
        twin.observe_state(300)
        assert twin.resolve_action(300) == (300.0, "optimal")

    def test_what_if_state(self, twin):
        entry = twin.what_if(100)
        assert (entry.action, entry.origin) == (100.0, "what_if")
        twin.observe_state(100)
        assert twin.resolve_action(100) == (100.0, "what_if")

    def test_adaptive_state(self, twin):
        twin.observe_state(50)
        assert twin.resolve_action(50) == (70.0, "suboptimal")
        entry = twin.what_if(50)
        assert (entry.action, entry.origin) == (50.0, "adaptive")
        # still the first occurrence until the state changes
        assert twin.resolve_action(50) == (70.0, "suboptimal")
        twin.observe_state(300)
        twin.observe_state(50)
        assert twin.resolve_action(50) == (50.0, "optimal")

    def test_what_if_does_not_touch_history(self, twin):
        twin.history = [300.0] * 9
        twin.what_if(100)
        assert twin.history == [300.0] * 9

    def test_repeat_what_if_bumps_count(self, twin):
        twin.what_if(100)
        assert twin.what_if(100).occurrences == 2

    def test_db_seeded_from_policy(self, twin, default_spaces):
        states, actions = default_spaces
        for level, action in greedy_policy(twin.q, states, actions).items():
            assert twin.db.get(level).action == action and twin.db.get(level).origin == "known"


class TestClosedLoop:
    def test_no_predictor(self, trained_q, default_spaces):
        t = DigitalTwin(None, trained_q.copy(), *default_spaces)
        with pytest.raises(StateError):
            t.closed_loop_run(VariationSchedule.constant(300, 5), 600)

    def test_sync_short_telemetry(self, twin):
        with pytest.raises(InsufficientData):
            twin.sync([300.0] * 3)

    def test_sync_appends(self, twin):
        twin.sync([300.0] * 12)
        assert len(twin.history) == 12

    def test_adaptive_sequence(self, twin):
        sched = VariationSchedule.from_levels([300, 50, 400, 50, 250], 10)
        recs = twin.closed_loop_run(sched, 600)
        assert all(r.provenance in PROVENANCES for r in recs)
        first = recs[10:20]
        second = recs[30:40]
        assert [r.action for r in first] == [70.0] * 10
        assert all(r.provenance == "suboptimal" for r in first)
        assert [r.action for r in second] == [50.0] * 10
        assert all(r.provenance == "optimal" for r in second)
        assert twin.db.get(50).origin == "adaptive"
        # suboptimal only ever on the first occurrence of a state
        assert {r.capacity for r in recs if r.provenance == "suboptimal"} == {50.0}

    def test_known_schedule_tracks_capacity(self, twin):
        sched = VariationSchedule.from_levels([300, 400, 150], 10)
        recs = twin.closed_loop_run(sched, 600)
        assert all(r.achieved == r.capacity for r in recs)
        assert all(r.provenance == "optimal" for r in recs)

    def test_deterministic(self, small_bundle, trained_q, default_spaces):
        sched = VariationSchedule.from_levels([300, 50, 300, 50], 10)
        runs = []
        for _ in range(2):
            b = PredictorBundle(small_bundle.model, small_bundle.scaler, MemoryModule())
            t = DigitalTwin(b, trained_q.copy(), *default_spaces, seed=3)
            runs.append(t.closed_loop_run(sched, 600))
        assert runs[0] == runs[1]

    def test_ztn_only_uses_fallback_rate(self, fresh_bundle, trained_q, default_spaces):
        t = DigitalTwin(fresh_bundle, trained_q.copy(), *default_spaces, few_shot=False,
                        digital_twin=False, fallback_rate=310.0)
        recs = t.closed_loop_run(VariationSchedule.constant(300, 5), 310)
        assert all(r.provenance in ("optimal", "suboptimal") for r in recs)
        assert len(t.db) == len(default_spaces[0])


def test_records_csv_round_trip(tmp_path):
    recs = [ClosedLoopRecord(0, 300.0, 300.0, 300.0, 300.0, "optimal"),
            ClosedLoopRecord(1, 50.0, 50.0, 70.0, 48.2142857142857, "suboptimal")]
    write_records_csv(tmp_path / "r.csv", recs)
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == \
        "step,capacity,predicted,action,achieved,provenance"
    back = read_records_csv(tmp_path / "r.csv")
    assert [(r.step, r.capacity, r.action, r.achieved, r.provenance) for r in back] == \
        [(r.step, r.capacity, r.action, r.achieved, r.provenance) for r in recs]
