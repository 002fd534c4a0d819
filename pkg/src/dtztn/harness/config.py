"""Scenario configuration: one JSON document with a section per module."""
import dataclasses
import json
from dataclasses import dataclass, field

from ..exceptions import ConfigError

SCENARIOS = ("default", "what_if", "adaptive", "compare")

DEFAULT_LEVELS = [300, 400, 250, 450, 200, 350, 150, 500]


@dataclass
class TrafficSection:
    lam: float = 4.0
    unit_size: float = 100.0
    train_length: int = 1800
    test_length: int = 700
    hold: int = 10


@dataclass
class PredictorSection:
    seq_len: int = 9
    hidden_size: int = 32
    epochs: int = 40
    learning_rate: float = 1e-3
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    delta_kbps: float = 5.0
    memory_capacity: int = 4096


@dataclass
class AgentSection:
    levels: list = field(default_factory=lambda: list(DEFAULT_LEVELS))
    state_step: float = 50.0
    action_low: float = 10.0
    action_high: float = 600.0
    action_step: float = 10.0
    alpha: float = 0.3
    gamma: float = 0.9
    eps_start: float = 1.0
    eps_end: float = 0.01
    episodes: int = 500
    overshoot_penalty: float = 2.0
    what_if_episodes: int = 200
    what_if_steps: int = 10


@dataclass
class NetsimSection:
    congestion_beta: float = 0.25
    paced_beta: float = 0.125
    segment_steps: int = 10
    offered_kbps: float = 600.0
    # Optional explicit {"total_steps", "segments"} overriding the scenario's own.
    schedule: dict = None


@dataclass
class CompareSection:
    levels: list = field(default_factory=lambda: [400, 300, 450, 300, 500, 350])
    segment_steps: int = 20
    nominal_capacity: float = 500.0


@dataclass
class ScenarioConfig:
    name: str = "default"
    seed: int = 0
    out: str = "out"
    required_bandwidth: float = 310.0
    warmup_steps: int = 10
    what_if_states: list = field(default_factory=lambda: [100])
    adaptive_states: list = field(default_factory=lambda: [50])
    traffic: TrafficSection = field(default_factory=TrafficSection)
    predictor: PredictorSection = field(default_factory=PredictorSection)
    agent: AgentSection = field(default_factory=AgentSection)
    netsim: NetsimSection = field(default_factory=NetsimSection)
    compare: CompareSection = field(default_factory=CompareSection)

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_SECTIONS = {"traffic": TrafficSection, "predictor": PredictorSection,
             "agent": AgentSection, "netsim": NetsimSection, "compare": CompareSection}


def _coerce(value, default, path):
    """Check ``value`` against the type of its default; ints are accepted as floats."""
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if ok:
            value = float(value)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = value is None or isinstance(value, dict)
    if not ok:
        raise ConfigError(path, f"expected {type(default).__name__}, got {value!r}")
    return value


def _build(cls, doc, prefix):
    if not isinstance(doc, dict):
        raise ConfigError(prefix, "expected a JSON object")
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in names:
            raise ConfigError(path, "unknown field")
        if key in _SECTIONS and cls is ScenarioConfig:
            kwargs[key] = _build(_SECTIONS[key], value, path)
        else:
            kwargs[key] = _coerce(value, getattr(defaults, key), path)
    return cls(**kwargs)


def _positive(value, path, strict=True):
    if (value <= 0) if strict else (value < 0):
        raise ConfigError(path, f"must be {'>' if strict else '>='} 0, got {value}")


def validate(cfg):
    """Cross-field checks; raises ConfigError naming the offending field."""
    if cfg.name not in SCENARIOS:
        raise ConfigError("name", f"must be one of {', '.join(SCENARIOS)}")
    _positive(cfg.required_bandwidth, "required_bandwidth")
    _positive(cfg.warmup_steps, "warmup_steps", strict=False)
    t, p, a, n, c = cfg.traffic, cfg.predictor, cfg.agent, cfg.netsim, cfg.compare
    _positive(t.lam, "traffic.lam", strict=False)
    _positive(t.unit_size, "traffic.unit_size")
    for name in ("train_length", "test_length", "hold"):
        _positive(getattr(t, name), f"traffic.{name}")
    if t.train_length <= p.seq_len:
        raise ConfigError("traffic.train_length", "must exceed predictor.seq_len")
    for name in ("seq_len", "hidden_size", "epochs", "batch_size", "memory_capacity",
                 "learning_rate", "eps"):
        _positive(getattr(p, name), f"predictor.{name}")
    for name in ("beta1", "beta2"):
        if not 0 < getattr(p, name) < 1:
            raise ConfigError(f"predictor.{name}", "must lie in (0, 1)")
    _positive(p.delta_kbps, "predictor.delta_kbps", strict=False)
    if not a.levels or any(not isinstance(v, (int, float)) or v <= 0 for v in a.levels):
        raise ConfigError("agent.levels", "must be a non-empty list of positive numbers")
    if len(set(a.levels)) != len(a.levels):
        raise ConfigError("agent.levels", "levels must be distinct")
    for name in ("state_step", "action_low", "action_step", "episodes",
                 "what_if_episodes", "what_if_steps"):
        _positive(getattr(a, name), f"agent.{name}")
    if a.action_high <= a.action_low:
        raise ConfigError("agent.action_high", "must exceed agent.action_low")
    if not 0 < a.alpha <= 1:
        raise ConfigError("agent.alpha", "must lie in (0, 1]")
    if not 0 <= a.gamma < 1:
        raise ConfigError("agent.gamma", "must lie in [0, 1)")
    for name in ("eps_start", "eps_end"):
        if not 0 <= getattr(a, name) <= 1:
            raise ConfigError(f"agent.{name}", "must lie in [0, 1]")
    if a.overshoot_penalty < 1:
        raise ConfigError("agent.overshoot_penalty", "must be >= 1")
    if not 0 <= n.congestion_beta < 1:
        raise ConfigError("netsim.congestion_beta", "must lie in [0, 1)")
    if not 0 <= n.paced_beta <= n.congestion_beta:
        raise ConfigError("netsim.paced_beta", "must lie in [0, congestion_beta]")
    _positive(n.segment_steps, "netsim.segment_steps")
    _positive(n.offered_kbps, "netsim.offered_kbps", strict=False)
    if not c.levels or any(not isinstance(v, (int, float)) or v <= 0 for v in c.levels):
        raise ConfigError("compare.levels", "must be a non-empty list of positive numbers")
    _positive(c.segment_steps, "compare.segment_steps")
    _positive(c.nominal_capacity, "compare.nominal_capacity")
    for name in ("what_if_states", "adaptive_states"):
        if any(not isinstance(v, (int, float)) or v <= 0 for v in getattr(cfg, name)):
            raise ConfigError(name, "must list positive Kbps values")
    return cfg


def config_from_dict(doc):
    return validate(_build(ScenarioConfig, doc, ""))


def load_config(path):
    """Read a JSON config. A missing file is a ConfigError naming the path."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def default_config_json():
    return json.dumps(ScenarioConfig().to_dict(), indent=2)
