"""Pipeline configuration: a key-value config file, EVOLOG_-prefixed
environment overrides, then CLI flags, in increasing precedence."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import UsageError

ENV_PREFIX = "EVOLOG_"


@dataclass
class PipelineConfig:
    app_id: str = ""
    reviews: str = ""
    logs: str = ""
    reviews_format: str = "jsonl"
    labels: str = ""          # labeled TSV -> train an NB filter
    review_scores: str = ""   # imported relevance scores
    pair_scores: str = ""     # imported match scores
    overrides: str = ""       # vague/keep override file
    rules: str = ""           # normalization rules file
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json", "md")
    window_days: int = 183
    lead_time_days: int = 0
    threshold_relevance: float = 0.5
    threshold_candidate: float = 0.3
    threshold_decision: float = 0.5
    seed: int = 0
    timeline_bin: str = "week"
    downsample: bool = False

    def validate(self) -> None:
        for name in ("threshold_relevance", "threshold_candidate", "threshold_decision"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise UsageError(f"{name} must be in [0,1], got {v}")
        if self.window_days < 0:
            raise UsageError(f"window_days must be >= 0, got {self.window_days}")
        if self.lead_time_days < 0:
            raise UsageError(f"lead_time_days must be >= 0, got {self.lead_time_days}")
        for f in self.formats:
            if f not in ("csv", "json", "md"):
                raise UsageError(f"unknown report format {f!r}")
        if self.timeline_bin not in ("day", "week", "month"):
            raise UsageError(f"timeline_bin must be day|week|month, got {self.timeline_bin}")

    def snapshot(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_INT_KEYS = {"window_days", "lead_time_days", "seed"}
_FLOAT_KEYS = {"threshold_relevance", "threshold_candidate", "threshold_decision"}
_BOOL_KEYS = {"downsample"}
_PATH_KEYS = {"reviews", "logs", "labels", "review_scores", "pair_scores",
              "overrides", "rules", "out_dir"}
_STR_KEYS = {"app_id", "reviews_format", "timeline_bin"}


def _assign(config: PipelineConfig, key: str, value: str, *, base_dir: Path | None,
            where: str) -> None:
    if key in _INT_KEYS:
        try:
            setattr(config, key, int(value))
        except ValueError:
            raise UsageError(f"{where}: {key} must be an integer, got {value!r}") from None
    elif key in _FLOAT_KEYS:
        try:
            setattr(config, key, float(value))
        except ValueError:
            raise UsageError(f"{where}: {key} must be a number, got {value!r}") from None
    elif key in _BOOL_KEYS:
        setattr(config, key, value.lower() in ("1", "true", "yes"))
    elif key == "formats":
        setattr(config, key, tuple(p.strip() for p in value.split(",") if p.strip()))
    elif key in _PATH_KEYS:
        path = value
        if base_dir is not None and path and not os.path.isabs(path):
            path = str(base_dir / path)
        setattr(config, key, path)
    elif key in _STR_KEYS:
        setattr(config, key, value)
    else:
        raise UsageError(f"{where}: unknown config key {key!r}")


def load_config(path: str | None = None, env: dict | None = None) -> PipelineConfig:
    """Build a config from an optional file plus EVOLOG_* env overrides.

    Relative paths inside the file resolve against the file's directory.
    """
    config = PipelineConfig()
    if path:
        base_dir = Path(path).resolve().parent
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {path!r}: {exc}") from None
        with fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                _assign(config, key.strip(), value.strip(), base_dir=base_dir,
                        where=f"{path}:{lineno}")

    known = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _PATH_KEYS | _STR_KEYS | {"formats"}
    env = os.environ if env is None else env
    for key, value in sorted(env.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name not in known:
            continue  # the env namespace is shared (e.g. EVOLOG_NO_EXT)
        _assign(config, name, value, base_dir=None, where=f"env {key}")
    return config
