"""Run configuration: one JSON file, overridable by CLI flags.

Example::

    {
      "dataset": "heart_disease_health_indicators_BRFSS2015.csv",
      "schema": null,
      "seed": 0,
      "n_per_class": 1000,
      "test_fraction": 0.3,
      "models": ["LogReg", "Knn"],
      "features": ["GenHlth", "Age"],
      "features_from": "out/stability_consensus.csv",
      "hyperparams": {"LogReg": {"lr": 0.1}},
      "stability": {"iterations": 300, "k_select": 10, "models": ["LogReg"], "workers": 1},
      "out": "results"
    }

A run manifest written by the CLI is also accepted; its ``config`` block is used.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .classifiers import ALL_KINDS, IMPORTANCE_KINDS, Hyperparams, ModelKind
from .errors import InputError
from .sampling import DEFAULT_TEST_FRACTION

MANIFEST_FORMAT = "hdsurvey-manifest"


@dataclass(frozen=True)
class StabilitySettings:
    iterations: int = 300
    k_select: int = 10
    models: tuple[str, ...] = tuple(k.value for k in IMPORTANCE_KINDS)
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    dataset: str | None = None
    schema: str | None = None
    seed: int = 0
    n_per_class: int = 1000
    test_fraction: float = DEFAULT_TEST_FRACTION
    models: tuple[str, ...] = tuple(k.value for k in ALL_KINDS)
    features: tuple[str, ...] | None = None
    features_from: str | None = None
    hyperparams: dict = field(default_factory=dict)
    stability: StabilitySettings = field(default_factory=StabilitySettings)
    out: str = "results"

    def __post_init__(self):
        for name in self.models:
            ModelKind.parse(name)
        for name in self.stability.models:
            ModelKind.parse(name)
        self.hp()  # validate early

    def hp(self) -> Hyperparams:
        return Hyperparams.from_dict(self.hyperparams)

    def model_kinds(self) -> list[ModelKind]:
        return [ModelKind.parse(m) for m in self.models]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = list(self.models)
        d["features"] = list(self.features) if self.features is not None else None
        d["stability"]["models"] = list(self.stability.models)
        # resolved hyperparameters, so the snapshot does not depend on library defaults
        d["hyperparams"] = self.hp().to_dict()
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if raw.get("format") == MANIFEST_FORMAT:
            raw = raw["config"]
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise InputError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        kw = dict(raw)
        if "stability" in kw:
            st = kw["stability"] or {}
            bad = set(st) - {f.name for f in fields(StabilitySettings)}
            if bad:
                raise InputError(f"unknown stability key(s): {', '.join(sorted(bad))}")
            if "models" in st:
                st = {**st, "models": tuple(st["models"])}
            kw["stability"] = StabilitySettings(**st)
        if "models" in kw:
            kw["models"] = tuple(kw["models"])
        if kw.get("features") is not None:
            kw["features"] = tuple(kw["features"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise InputError(f"malformed config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def override(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        st = {k[len("stability_"):]: changes.pop(k) for k in list(changes) if k.startswith("stability_")}
        cfg = replace(self, **changes) if changes else self
        if st:
            cfg = replace(cfg, stability=replace(cfg.stability, **st))
        return cfg
