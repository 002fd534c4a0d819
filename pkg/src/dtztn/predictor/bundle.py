"""JSON persistence of the trained predictor (weights, scaler, memory)."""
import json
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import IoError
from ..traffic import Scaler
from .lstm import BiLstmModel
from .memory import MemoryModule

FORMAT_VERSION = 1


@dataclass
class PredictorBundle:
    model: BiLstmModel
    scaler: Scaler
    memory: MemoryModule = field(default_factory=MemoryModule)


def bundle_to_dict(bundle):
    return {
        "format_version": FORMAT_VERSION,
        "hidden_size": bundle.model.hidden_size,
        "L": bundle.model.seq_len,
        "scaler": {"b_min": bundle.scaler.b_min, "b_max": bundle.scaler.b_max},
        "weights": {
            name: {"shape": list(arr.shape), "data": arr.ravel(order="C").tolist()}
            for name, arr in sorted(bundle.model.params.items())
        },
        "memory": {
            "capacity": bundle.memory.capacity,
            "entries": [{"key": k, "value": v} for k, v in bundle.memory.items()],
        },
    }


def bundle_from_dict(doc):
    if doc.get("format_version") != FORMAT_VERSION:
        raise IoError(f"unsupported bundle format_version {doc.get('format_version')!r}")
    model = BiLstmModel(int(doc["hidden_size"]), int(doc["L"]))
    expected = model.param_shapes()
    for name, shape in expected.items():
        w = doc["weights"][name]
        arr = np.asarray(w["data"], dtype=np.float64)
        if tuple(w["shape"]) != shape or arr.size != int(np.prod(shape)):
            raise IoError(f"weight {name} has shape {w['shape']}, expected {list(shape)}")
        model.params[name] = arr.reshape(shape)
    scaler = Scaler(float(doc["scaler"]["b_min"]), float(doc["scaler"]["b_max"]))
    mem_doc = doc.get("memory", {})
    memory = MemoryModule(int(mem_doc.get("capacity", 4096)))
    for entry in mem_doc.get("entries", []):
        memory.put(entry["key"], entry["value"])
    return PredictorBundle(model, scaler, memory)


def save_bundle(bundle, path):
    try:
        with open(path, "w") as fh:
            json.dump(bundle_to_dict(bundle), fh)
    except OSError as exc:
        raise IoError(f"cannot write predictor bundle {path}: {exc}") from exc


def load_bundle(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return bundle_from_dict(doc)
    except OSError as exc:
        raise IoError(f"cannot read predictor bundle {path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise IoError(f"corrupt predictor bundle {path}: {exc}") from exc
