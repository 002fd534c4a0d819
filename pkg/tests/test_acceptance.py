"""End-to-end acceptance checks, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
"""
import filecmp
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from dtztn.agent import greedy_policy, oracle_policy
from dtztn.harness import cli
from dtztn.harness.config import ScenarioConfig
from dtztn.harness.scenarios import (build_twin, compare_techniques, run_scenario,
                                     scenario_schedule, train_policy, train_predictor)
from dtztn.predictor import MemoryModule, init_model, loss_and_grads, predict_with_memory
from dtztn.predictor.memory import memory_update
from dtztn.traffic import Scaler

pytestmark = pytest.mark.slow


@contextmanager
def criterion(number, title, limit_s):
    """Time the block, enforce ``limit_s`` and record one PASS/FAIL line."""
    notes = []
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield notes.append
        elapsed = time.perf_counter() - start
        notes.append(f"{elapsed:.1f}s (limit {limit_s}s)")
        assert elapsed < limit_s, f"took {elapsed:.1f}s, limit {limit_s}s"
        status = "PASS"
    finally:
        line = f"[{status}] criterion {number}: {title}: " + "; ".join(notes)
        ACCEPTANCE_LINES.append(line)
        print(line)


def test_1_gradient_check():
    with criterion(1, "BPTT gradients match central differences", 5) as note:
        rng = np.random.default_rng(0)
        model = init_model(3, 4, seed=0)
        X, y = rng.random((5, 4)), rng.random(5)
        _, grads = loss_and_grads(model, X, y)
        h, worst = 1e-5, 0.0
        for name, arr in model.params.items():
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                lp, _ = loss_and_grads(model, X, y)
                arr[idx] = old - h
                lm, _ = loss_and_grads(model, X, y)
                arr[idx] = old
                num = (lp - lm) / (2 * h)
                # floor keeps near-zero gradients from inflating the ratio
                rel = abs(num - grads[name][idx]) / max(abs(num) + abs(grads[name][idx]), 1e-8)
                worst = max(worst, rel)
        note(f"max rel err {worst:.2e}")
        assert worst < 1e-4


def test_2_memory_semantics():
    with criterion(2, "few-shot memory re-prediction exact", 1) as note:
        rng = np.random.default_rng(1)
        model = init_model(4, 9, seed=1)
        scaler = Scaler(0.0, 1000.0)
        stored = unchanged = 0
        for _ in range(100):
            mem = MemoryModule()
            x = rng.random(9)
            y_hat = predict_with_memory(mem, model, x).value
            # half the targets inside the threshold, half well outside
            if rng.random() < 0.5:
                y_des = float(np.clip(y_hat + rng.uniform(-0.004, 0.004), 0, 1))
            else:
                y_des = float(rng.random())
            before = mem.copy()
            memory_update(mem, x, y_hat, y_des, 5.0, scaler)
            if abs(scaler.inverse(y_hat) - scaler.inverse(y_des)) > 5.0:
                assert predict_with_memory(mem, model, x).value == y_des
                stored += 1
            else:
                assert mem == before
                unchanged += 1
        note(f"{stored} stored, {unchanged} unchanged")


def test_3_predictor_tracking():
    with criterion(3, "predictor MAE <= 0.5 x unit_size", 120) as note:
        cfg = ScenarioConfig()
        _, metrics, _ = train_predictor(cfg)
        limit = 0.5 * cfg.traffic.unit_size
        note(f"MAE {metrics['mae']:.2f} Kbps vs {limit:g}")
        assert metrics["mae"] <= limit


def test_4_policy_optimality():
    with criterion(4, "greedy policy equals oracle on 10 states", 30) as note:
        cfg = ScenarioConfig()
        q, states, actions = train_policy(cfg)
        twin = build_twin(cfg, None, q, states, actions)
        for s in (100, 50):
            twin.what_if(s)
        got = greedy_policy(twin.q, twin.states, twin.actions)
        want = oracle_policy(twin.states, twin.actions)
        note(f"{sum(got[k] == want[k] for k in want)}/{len(want)} match")
        assert len(want) == 10 and got == want


def test_5_scenarios():
    with criterion(5, "default/what-if/adaptive scenarios", 60) as note:
        cfg = ScenarioConfig()
        bundle, _, _ = train_predictor(cfg)
        artifacts = (bundle,) + train_policy(cfg)
        default = run_scenario(cfg.replace(name="default"), artifacts)
        err = default.summary["mean_abs_error_after_warmup_kbps"]
        assert err <= 10.0

        wcfg = cfg.replace(name="what_if")
        what_if = run_scenario(wcfg, artifacts)
        seg = [(s, e) for s, e, c in scenario_schedule(wcfg).segment_ranges() if c == 100.0]
        (s, e), = seg
        assert [r.achieved for r in what_if.records[s:e]] == [100.0] * (e - s)

        acfg = cfg.replace(name="adaptive")
        adaptive = run_scenario(acfg, artifacts)
        segs = [(s, e) for s, e, c in scenario_schedule(acfg).segment_ranges() if c == 50.0]
        first = {r.action for r in adaptive.records[segs[0][0]:segs[0][1]]}
        second = {r.action for r in adaptive.records[segs[1][0]:segs[1][1]]}
        note(f"default err {err:.2f} Kbps; shaper {sorted(first)} then {sorted(second)}")
        assert first == {70.0} and second == {50.0}


def test_6_technique_ordering():
    with criterion(6, "technique ordering over 10 seeds", 120) as note:
        gaps = []
        for seed in range(10):
            t = compare_techniques(ScenarioConfig(name="compare", seed=seed)).techniques
            assert (t["variation"] < t["variation_ts"] < t["variation_ts_ztn"]
                    < t["variation_ts_ztn_dt"] <= t["no_variation"]), (seed, t)
            gaps.append(t["no_variation"] - t["variation_ts_ztn_dt"])
            assert gaps[-1] <= 5.0
        note(f"max DT gap to baseline {max(gaps):.3f} Kbps")


def test_7_cli_determinism(tmp_path, capsys):
    with criterion(7, "run --seed 7 twice is byte-identical", 60) as note:
        outs = [str(tmp_path / d) for d in ("a", "b")]
        for out in outs:
            assert cli.main(["run", "--scenario", "default", "--seed", "7", "--out", out]) == 0
        capsys.readouterr()
        names = sorted(os.listdir(outs[0]))
        match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
        note(f"{len(match)} files identical")
        assert "records.csv" in match and not mismatch and not errors
