"""Adapter configuration, loadable from a flat key = value file."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

ADVERSARIAL_MODES = ("none", "fgm", "pgd")


class AdapterConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    """Checkpoint, decoding and adversarial-training settings.

    The adversarial defaults (epsilon, step counts, alpha) are this
    package's choices, not published values.
    """

    checkpoint: str
    cache_dir: str | None = None
    max_length: int = 200
    adversarial: str = "none"
    epsilon: float = 1.0
    pgd_steps: int = 3
    pgd_alpha: float = 0.3
    seed: int = 0
    num_beams: int = 1

    def __post_init__(self):
        if not self.checkpoint:
            raise AdapterConfigError("checkpoint is required")
        if self.adversarial not in ADVERSARIAL_MODES:
            raise AdapterConfigError(f"adversarial must be one of {ADVERSARIAL_MODES}")
        if self.adversarial != "none" and not self.epsilon > 0:
            raise AdapterConfigError("epsilon must be > 0 when adversarial training is enabled")
        if self.pgd_steps < 1:
            raise AdapterConfigError("pgd_steps must be >= 1")
        if self.max_length < 8:
            raise AdapterConfigError("max_length is too small to hold a prompt")
        if self.num_beams < 1:
            raise AdapterConfigError("num_beams must be >= 1")


def load_adapter_config(path: str) -> AdapterConfig:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise AdapterConfigError(f"{path}:{lineno}: expected `key = value`")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()

    known = {f.name: f.type for f in fields(AdapterConfig)}
    unknown = set(values) - set(known)
    if unknown:
        raise AdapterConfigError(f"{path}: unknown keys: {', '.join(sorted(unknown))}")
    coerced: dict = {}
    for key, raw in values.items():
        if key in ("max_length", "pgd_steps", "seed", "num_beams"):
            coerced[key] = int(raw)
        elif key in ("epsilon", "pgd_alpha"):
            coerced[key] = float(raw)
        else:
            coerced[key] = raw
    return AdapterConfig(**coerced)


def resolve_checkpoint(config: AdapterConfig) -> str:
    """Local directory for the checkpoint id, if one exists.

    Ids resolve against the cache directory first; anything else is handed
    to transformers unchanged (its own cache applies, no network required
    for cached models).
    """
    if os.path.isdir(config.checkpoint):
        return config.checkpoint
    if config.cache_dir:
        candidate = os.path.join(config.cache_dir, config.checkpoint)
        if os.path.isdir(candidate):
            return candidate
    return config.checkpoint
