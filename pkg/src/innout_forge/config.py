"""Pipeline configuration.

Configs are YAML files whose keys may be nested mappings or dotted paths,
e.g. ``curation.basic.min_duration_s: 4``. Score rules are keyed by dataset
tag: ``curation.scores.<dataset_tag>.<metric>.{tail,low,high}``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .curation import BasicFilterConfig, PercentileRule, Tail
from .cycle import CycleConfig
from .errors import ValidationError
from .identity import IdentityConfig
from .miner import BoxSamplerConfig
from .raster import MotionRasterConfig


def _rules(iqa, ocr, aesthetic, complexity_low, complexity_high) -> dict:
    return {
        "clip_iqa": PercentileRule("clip_iqa", Tail.LOW, low_fraction=iqa),
        "ocr_area": PercentileRule("ocr_area", Tail.HIGH, high_fraction=ocr),
        "aesthetic": PercentileRule("aesthetic", Tail.LOW, low_fraction=aesthetic),
        "complexity": PercentileRule("complexity", Tail.BOTH, complexity_low, complexity_high),
    }


def default_score_rules() -> dict:
    openvid = _rules(0.03, 0.15, 0.05, 0.10, 0.05)
    return {
        "default": openvid,
        "openvid": openvid,
        "vidgen": _rules(0.05, 0.10, 0.05, 0.05, 0.10),
        "webvid": _rules(0.15, 0.05, 0.10, 0.05, 0.10),
    }


@dataclass(frozen=True)
class CameraConfig:
    rot_high: float = 0.40
    trans_high: float = 0.40
    focal_high: float = 0.10
    window_s: float = 10.0
    sample_fps: float = 6.0


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    workers: int = 1
    camera_before_identity: bool = False


@dataclass(frozen=True)
class InputsConfig:
    videos: Optional[str] = None
    poses: Optional[str] = None
    segments: Optional[str] = None
    tracks: Optional[str] = None
    masks: Optional[str] = None


@dataclass(frozen=True)
class PipelineConfig:
    basic: BasicFilterConfig = field(default_factory=BasicFilterConfig)
    scores: dict = field(default_factory=default_score_rules)
    camera: CameraConfig = field(default_factory=CameraConfig)
    identity: IdentityConfig = field(default_factory=IdentityConfig)
    cycle: CycleConfig = field(default_factory=CycleConfig)
    innout: BoxSamplerConfig = field(default_factory=BoxSamplerConfig)
    motion: MotionRasterConfig = field(default_factory=MotionRasterConfig)
    run: RunConfig = field(default_factory=RunConfig)
    inputs: InputsConfig = field(default_factory=InputsConfig)

    def score_rules(self, dataset_tag: str) -> dict:
        return self.scores.get(dataset_tag, self.scores["default"])

    def replace(self, **sections) -> "PipelineConfig":
        return dataclasses.replace(self, **sections)


SECTIONS = {
    "curation.basic": "basic",
    "curation.camera": "camera",
    "curation.identity": "identity",
    "curation.cycle": "cycle",
    "curation.innout": "innout",
    "render.motion": "motion",
    "pipeline": "run",
    "inputs": "inputs",
}


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}.{k}" if prefix else str(k)
        if isinstance(v, dict) and v:
            out.update(flatten(v, key))
        else:
            out[key] = v
    return out


def _jsonable(v):
    if isinstance(v, (frozenset, set)):
        return sorted(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, Tail):
        return v.value
    return v


def to_flat(cfg: PipelineConfig) -> dict:
    """Resolved config as a flat dotted-key mapping."""
    out = {}
    for prefix, attr in SECTIONS.items():
        section = getattr(cfg, attr)
        for f in dataclasses.fields(section):
            out[f"{prefix}.{f.name}"] = _jsonable(getattr(section, f.name))
    for tag, rules in sorted(cfg.scores.items()):
        for metric, rule in sorted(rules.items()):
            base = f"curation.scores.{tag}.{metric}"
            out[f"{base}.tail"] = rule.tail.value
            out[f"{base}.low"] = rule.low_fraction
            out[f"{base}.high"] = rule.high_fraction
    return out


def _coerce(section, name, value):
    current = getattr(section, name)
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, frozenset):
        return frozenset(value)
    if isinstance(current, tuple):
        return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    if isinstance(current, int) and not isinstance(value, bool):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


def from_flat(flat: dict, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    cfg = base or PipelineConfig()
    updates: dict = {}
    score_updates: dict = {}
    for key, value in flat.items():
        if key.startswith("curation.scores."):
            parts = key.split(".")
            if len(parts) != 5 or parts[4] not in ("tail", "low", "high"):
                raise ValidationError(f"bad score rule key {key!r}")
            score_updates.setdefault((parts[2], parts[3]), {})[parts[4]] = value
            continue
        prefix, _, name = key.rpartition(".")
        if prefix not in SECTIONS:
            raise ValidationError(f"unknown config key {key!r}")
        attr = SECTIONS[prefix]
        section = getattr(cfg, attr)
        if name not in {f.name for f in dataclasses.fields(section)}:
            raise ValidationError(f"unknown config key {key!r}")
        updates.setdefault(attr, {})[name] = _coerce(section, name, value)
    try:
        sections = {attr: dataclasses.replace(getattr(cfg, attr), **kw) for attr, kw in updates.items()}
    except TypeError as e:
        raise ValidationError(str(e)) from None
    scores = {tag: dict(rules) for tag, rules in cfg.scores.items()}
    for (tag, metric), kw in sorted(score_updates.items()):
        old = scores.get(tag, {}).get(metric) or scores["default"].get(metric) or PercentileRule(metric, Tail.LOW)
        scores.setdefault(tag, dict(scores["default"]))[metric] = PercentileRule(
            metric,
            Tail(kw.get("tail", old.tail)),
            float(kw.get("low", old.low_fraction)),
            float(kw.get("high", old.high_fraction)),
        )
    return dataclasses.replace(cfg, scores=scores, **sections)


def load_config(path=None, overrides: Optional[dict] = None) -> PipelineConfig:
    flat = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: config must be a mapping")
        flat = flatten(data)
    flat.update(overrides or {})
    return from_flat(flat)


def write_resolved(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(json.dumps(to_flat(cfg), indent=1, sort_keys=True) + "\n", encoding="utf-8")
