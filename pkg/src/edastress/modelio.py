"""Model persistence: a single JSON document holding the architecture
config, every parameter tensor as a shape-annotated flat array, and the
creation seed. Tensor values cross the boundary as 32-bit floats; loading
widens back to float64, so a round trip perturbs nothing beyond float32
rounding.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .network import ModelConfig, ModelParams, expected_shapes

SCHEMA_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file is missing, truncated, or shape-inconsistent."""


def save_model(params: ModelParams, cfg: ModelConfig, path: str | Path,
               seed: int | None = None) -> None:
    tensors = {}
    for name, arr in params.items():
        flat = np.asarray(arr, dtype=np.float32).ravel()
        tensors[name] = {
            "shape": list(arr.shape),
            "values": [float(v) for v in flat],
        }
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(cfg),
        "seed": seed,
        "tensors": tensors,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1))


def load_model(path: str | Path) -> tuple[ModelParams, ModelConfig, int | None]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: expected a JSON object at the top level")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(f"{path}: unsupported schema_version {version!r}")
    try:
        cfg = ModelConfig(**doc["config"])
    except KeyError:
        raise ModelFormatError(f"{path}: missing 'config' block") from None
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: bad config: {exc}") from exc

    tensors = doc.get("tensors")
    if not isinstance(tensors, dict):
        raise ModelFormatError(f"{path}: missing 'tensors' block")
    arrays = {}
    for name, shape in expected_shapes(cfg).items():
        entry = tensors.get(name)
        if entry is None:
            raise ModelFormatError(f"{path}: tensor {name}: missing")
        got_shape = tuple(entry.get("shape", ()))
        if got_shape != shape:
            raise ModelFormatError(
                f"{path}: tensor {name}: shape {list(got_shape)} does not match "
                f"config-implied {list(shape)}")
        values = entry.get("values")
        if not isinstance(values, list) or len(values) != int(np.prod(shape)):
            raise ModelFormatError(
                f"{path}: tensor {name}: expected {int(np.prod(shape))} values")
        arr = np.asarray(values, dtype=np.float64).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise ModelFormatError(f"{path}: tensor {name}: non-finite values")
        arrays[name] = arr
    return ModelParams(**arrays), cfg, doc.get("seed")
