"""YAML run configuration with strict key checking."""
from __future__ import annotations

import dataclasses
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import yaml

from .corpus.datasets import D1Options
from .corpus.fixture import FixtureParams
from .evaluation import SLICE_KINDS
from .network import EncoderConfig
from .training import TrainConfig

TASKS = ("tagger", "sense")
SPLITS = ("random", "kfold")


class ConfigError(ValueError):
    pass


@dataclass
class FixtureSection:
    n_sentences: int = 200
    vocab_size: int = 60
    relation_rate: float = 0.6
    multi_relation_rate: float = 0.05
    altlex_rate: float = 0.1
    linked_rate: float = 0.05
    discontinuous_rate: float = 0.03
    arg2_first_rate: float = 0.1

    def params(self) -> FixtureParams:
        p = FixtureParams(**asdict(self))
        p.validate()
        return p


@dataclass
class RunConfig:
    corpus: Optional[str] = None
    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    test_path: Optional[str] = None
    input_path: Optional[str] = None
    out_dir: str = "runs/default"
    task: str = "tagger"
    split: str = "random"
    split_unit: str = "sentence"
    folds: int = 10
    seed: int = 0
    constrained_training: bool = False
    class_weighted: bool = False
    strategy: str = "likelihood"
    slices: List[str] = field(default_factory=list)
    sense_threshold: int = 100
    plots: bool = False
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    sense_training: Optional[TrainConfig] = None
    dataset: D1Options = field(default_factory=D1Options)
    fixture: FixtureSection = field(default_factory=FixtureSection)

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.split not in SPLITS:
            raise ConfigError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.split_unit not in ("sentence", "document"):
            raise ConfigError("split_unit must be 'sentence' or 'document'")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if self.strategy not in ("likelihood", "baseline"):
            raise ConfigError("strategy must be 'likelihood' or 'baseline'")
        bad = sorted(set(self.slices) - set(SLICE_KINDS))
        if bad:
            raise ConfigError(f"unknown slice kinds {bad}; choose from {SLICE_KINDS}")
        try:
            self.encoder.validate()
            self.training.validate()
            self.sense_train_config().validate()
            self.fixture.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("train_path", "dev_path", "test_path"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{name} {path!r} does not exist")

    def sense_train_config(self) -> TrainConfig:
        """Training settings for the sense task; clip norm defaults to 0.5 when not given."""
        if self.sense_training is not None:
            return self.sense_training
        return dataclasses.replace(self.training, max_grad_norm=0.5)

    def train_config(self, task: Optional[str] = None) -> TrainConfig:
        return self.sense_train_config() if (task or self.task) == "sense" else self.training

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.sense_training is None:
            d["sense_training"] = None
        return d


_SECTIONS = {
    "encoder": EncoderConfig,
    "training": TrainConfig,
    "sense_training": TrainConfig,
    "dataset": D1Options,
    "fixture": FixtureSection,
}


def _build(cls, raw, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return raw


def config_from_dict(raw: dict) -> RunConfig:
    raw = dict(_build(RunConfig, raw or {}, "config"))
    for key, cls in _SECTIONS.items():
        if raw.get(key) is not None:
            raw[key] = cls(**_build(cls, raw[key], key))
    if isinstance(raw.get("slices"), str):
        raw["slices"] = [s for s in raw["slices"].split(",") if s]
    try:
        cfg = RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path!r} not found")
    try:
        raw = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    return config_from_dict(raw)


def write_echo(cfg: RunConfig, out_dir) -> Path:
    path = Path(out_dir) / "config.yaml"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
    return path


__all__ = ["ConfigError", "RunConfig", "config_from_dict", "load_config", "write_echo"]
