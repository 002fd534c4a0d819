"""End-to-end scenario runs and the five-technique throughput comparison."""
from dataclasses import dataclass, field

import numpy as np

from ..agent import ActionSpace, RewardParams, StateSpace, train_agent
from ..exceptions import ConfigError
from ..netsim import LinkModel, ShaperConfig, VariationSchedule, step
from ..predictor import PredictorBundle, TrainConfig, init_model, train
from ..predictor.memory import MemoryModule, evaluate
from ..traffic import TrafficParams, fit_normalize, generate_series, windowize
from ..twin import PROVENANCES, DigitalTwin
from .config import validate

TECHNIQUES = (
    ("no_variation", "No BW variation"),
    ("variation", "BW variation"),
    ("variation_ts", "BW variation + TS"),
    ("variation_ts_ztn", "BW variation + TS + ZTN"),
    ("variation_ts_ztn_dt", "BW variation + TS + ZTN + DT"),
)


@dataclass
class ScenarioReport:
    name: str
    records: list
    summary: dict
    techniques: dict = field(default_factory=dict)
    technique_steps: dict = field(default_factory=dict)


def summarize(records, warmup=0):
    """Summary numbers derived only from the per-step records."""
    achieved = np.array([r.achieved for r in records])
    capacity = np.array([r.capacity for r in records])
    err = np.abs(achieved - capacity)
    counts = {p: sum(r.provenance == p for r in records) for p in PROVENANCES}
    return {
        "steps": len(records),
        "mean_achieved_kbps": float(achieved.mean()),
        "mean_abs_error_kbps": float(err.mean()),
        "mean_abs_error_after_warmup_kbps": float(err[warmup:].mean()) if len(err) > warmup
        else float("nan"),
        "warmup_steps": warmup,
        "provenance_counts": counts,
    }


def scenario_schedule(cfg, name=None):
    """Capacity schedule for a scenario: known levels plus any new-state segments."""
    name = name or cfg.name
    if cfg.netsim.schedule is not None:
        try:
            return VariationSchedule.from_dict(cfg.netsim.schedule)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("netsim.schedule", str(exc)) from exc
    levels = list(cfg.agent.levels)
    if name == "what_if":
        mid = len(levels) // 2
        levels = levels[:mid] + list(cfg.what_if_states) + levels[mid:]
    elif name == "adaptive":
        # Each new state appears twice, well separated.
        third = max(len(levels) // 3, 1)
        for s in cfg.adaptive_states:
            levels = levels[:third] + [s] + levels[third:2 * third] + [s] + levels[2 * third:]
    elif name == "compare":
        return VariationSchedule.from_levels(cfg.compare.levels, cfg.compare.segment_steps)
    return VariationSchedule.from_levels(levels, cfg.netsim.segment_steps)


def known_schedule(cfg):
    return VariationSchedule.from_levels(cfg.agent.levels, cfg.netsim.segment_steps)


def spaces(cfg):
    a = cfg.agent
    states = StateSpace(sorted(a.levels), a.state_step)
    actions = ActionSpace.grid(a.action_low, a.action_high, a.action_step)
    return states, actions


def train_predictor(cfg, seed=None):
    """Generate Poisson traffic and fit the BiLSTM; returns (bundle, test metrics, losses)."""
    seed = cfg.seed if seed is None else seed
    t, p = cfg.traffic, cfg.predictor
    train_series = generate_series(TrafficParams(t.lam, t.unit_size, t.train_length, seed, t.hold))
    test_series = generate_series(TrafficParams(t.lam, t.unit_size, t.test_length, seed + 1,
                                                t.hold))
    normalized, scaler = fit_normalize(train_series)
    model = init_model(p.hidden_size, p.seq_len, seed=seed)
    tcfg = TrainConfig(epochs=p.epochs, learning_rate=p.learning_rate, batch_size=p.batch_size,
                       beta1=p.beta1, beta2=p.beta2, eps=p.eps, seed=seed)
    model, losses = train(model, windowize(normalized, p.seq_len), tcfg)
    bundle = PredictorBundle(model, scaler, MemoryModule(p.memory_capacity))
    test_windows = windowize(np.clip(scaler.transform(test_series.values), 0.0, 1.0), p.seq_len)
    metrics = evaluate(model, MemoryModule(), test_windows, scaler)
    return bundle, metrics, losses


def train_policy(cfg, seed=None):
    seed = cfg.seed if seed is None else seed
    states, actions = spaces(cfg)
    a = cfg.agent
    q = train_agent(known_schedule(cfg).capacities(), states, actions,
                    RewardParams(a.overshoot_penalty), a.episodes, seed=seed, alpha=a.alpha,
                    gamma=a.gamma, eps_start=a.eps_start, eps_end=a.eps_end)
    return q, states, actions


def build_twin(cfg, bundle, q, states, actions, seed=None, **overrides):
    a, n = cfg.agent, cfg.netsim
    kwargs = dict(reward_params=RewardParams(a.overshoot_penalty),
                  delta=cfg.predictor.delta_kbps, what_if_episodes=a.what_if_episodes,
                  what_if_steps=a.what_if_steps,
                  link=LinkModel(n.congestion_beta, n.paced_beta),
                  seed=cfg.seed if seed is None else seed)
    kwargs.update(overrides)
    return DigitalTwin(bundle, q.copy(), states, actions, **kwargs)


def run_scenario(cfg, artifacts=None):
    """Run one named scenario end to end. Deterministic for a given config.

    ``artifacts`` may carry a pre-trained ``(bundle, q, states, actions)`` to
    skip training; a copy of the bundle memory is used so runs stay independent.
    """
    validate(cfg)
    if cfg.name == "compare":
        return compare_techniques(cfg)
    if artifacts is None:
        bundle, metrics, losses = train_predictor(cfg)
        q, states, actions = train_policy(cfg)
    else:
        bundle, q, states, actions = artifacts
        metrics, losses = {}, []
    bundle = PredictorBundle(bundle.model, bundle.scaler, bundle.memory.copy())
    twin = build_twin(cfg, bundle, q, states, actions)
    if cfg.name == "what_if":
        for s in cfg.what_if_states:
            twin.what_if(s)
    records = twin.closed_loop_run(scenario_schedule(cfg), cfg.netsim.offered_kbps)
    summary = summarize(records, cfg.warmup_steps)
    summary["predictor_test_mae_kbps"] = metrics.get("mae", float("nan"))
    summary["predictor_final_train_mse"] = losses[-1] if losses else float("nan")
    report = ScenarioReport(cfg.name, records, summary)
    report.twin = twin
    return report


def compare_techniques(cfg, artifacts=None):
    """Mean throughput of the five techniques at the required bandwidth."""
    validate(cfg)
    R = cfg.required_bandwidth
    if artifacts is None:
        bundle, _, _ = train_predictor(cfg)
        q, states, actions = train_policy(cfg)
    else:
        bundle, q, states, actions = artifacts
    schedule = scenario_schedule(cfg, "compare")
    caps = schedule.capacities()
    link = LinkModel(cfg.netsim.congestion_beta, cfg.netsim.paced_beta)

    steps = {
        "no_variation": [step(R, ShaperConfig(), cfg.compare.nominal_capacity, link).achieved
                         for _ in caps],
        "variation": [step(R, ShaperConfig(), c, link).achieved for c in caps],
        "variation_ts": [step(R, ShaperConfig(R), c, link).achieved for c in caps],
    }
    fresh = lambda: PredictorBundle(bundle.model, bundle.scaler, MemoryModule(bundle.memory.capacity))
    ztn = build_twin(cfg, fresh(), q, states, actions, few_shot=False, digital_twin=False,
                     fallback_rate=R)
    steps["variation_ts_ztn"] = [r.achieved for r in ztn.closed_loop_run(schedule, R)]
    full = build_twin(cfg, fresh(), q, states, actions)
    records = full.closed_loop_run(schedule, R)
    steps["variation_ts_ztn_dt"] = [r.achieved for r in records]

    techniques = {k: float(np.mean(v)) for k, v in steps.items()}
    summary = summarize(records, cfg.warmup_steps)
    summary["required_bandwidth_kbps"] = R
    summary["techniques"] = dict(techniques)
    report = ScenarioReport("compare", records, summary, techniques,
                            {k: list(map(float, v)) for k, v in steps.items()})
    report.capacities = [float(c) for c in caps]
    return report
