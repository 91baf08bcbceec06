"""Repeated sample -> train -> select runs and cross-model consensus.

Iteration ``i`` uses seed ``derive_seed(master_seed, i)`` for its balanced
draw; model ``j`` in that iteration trains with ``derive_seed(seed_i, j)``.
All models of an iteration share one draw. Results are merged by iteration
index, so any number of workers gives the same table.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import IMPORTANCE_KINDS, Hyperparams, ModelKind, importance, top_k, train
from .dataset import Dataset, class_counts
from .errors import InfeasibleError, InputError
from .rng import derive_seed
from .sampling import SampleSpec, balanced_sample


@dataclass(frozen=True)
class StabilityConfig:
    iterations: int = 300
    n_per_class: int = 1000
    k_select: int = 10
    model_set: tuple[ModelKind, ...] = IMPORTANCE_KINDS
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model_set", tuple(
            ModelKind.parse(k) if isinstance(k, str) else k for k in self.model_set))
        if self.iterations < 1:
            raise InputError("iterations must be >= 1")
        if self.k_select < 1:
            raise InputError("k_select must be >= 1")
        if not self.model_set:
            raise InputError("model_set must not be empty")
        bad = [k.value for k in self.model_set if k not in IMPORTANCE_KINDS]
        if bad:
            raise InputError(f"models without embedded importance cannot select features: {', '.join(bad)}")
        if len(set(self.model_set)) != len(self.model_set):
            raise InputError("model_set contains duplicates")

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "n_per_class": self.n_per_class,
            "k_select": self.k_select,
            "model_set": [k.value for k in self.model_set],
            "master_seed": self.master_seed,
        }


@dataclass
class SelectionFrequencyTable:
    models: tuple[ModelKind, ...]
    feature_names: tuple[str, ...]
    counts: np.ndarray  # models x features, times selected in a top-k
    iterations: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.iterations

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", *self.feature_names])
        for kind, row in zip(self.models, self.frequencies):
            writer.writerow([kind.value, *(repr(float(v)) for v in row)])
        return buf.getvalue()


@dataclass
class StabilityResult:
    table: SelectionFrequencyTable
    consensus: list[int]
    top_stable: list[int]
    seeds: list[int]
    # iterations x models x k_select feature indices, in importance order
    selections: np.ndarray = field(repr=False)

    def consensus_csv(self) -> str:
        mean = self.table.frequencies.mean(axis=0)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "feature_index", "feature", "mean_frequency"])
        for rank, j in enumerate(self.consensus, start=1):
            writer.writerow([rank, j, self.table.feature_names[j], repr(float(mean[j]))])
        return buf.getvalue()

    @property
    def top_stable_names(self) -> list[str]:
        return [self.table.feature_names[j] for j in self.top_stable]


def aggregate(table: SelectionFrequencyTable) -> list[int]:
    """Features by unweighted mean selection frequency across models, descending;
    ties go to the lower feature index."""
    # integer totals rank identically to the mean and keep ties exact
    totals = table.counts.sum(axis=0)
    order = np.lexsort((np.arange(totals.size), -totals))
    return [int(j) for j in order]


def reduce_dataset(d: Dataset, selected) -> Dataset:
    selected = [int(j) for j in selected]
    if not selected:
        raise InputError("feature selection is empty")
    if len(set(selected)) != len(selected):
        raise InputError(f"duplicate feature indices in selection {selected}")
    bad = [j for j in selected if not 0 <= j < d.n_features]
    if bad:
        raise InputError(f"feature indices out of range 0..{d.n_features - 1}: {bad}")
    return d.select_features(selected)


def _run_iteration(d: Dataset, cfg: StabilityConfig, hp: Hyperparams, i: int, backend=None) -> np.ndarray:
    seed_i = derive_seed(cfg.master_seed, i)
    sample = balanced_sample(d, SampleSpec(cfg.n_per_class, seed_i))
    out = np.empty((len(cfg.model_set), cfg.k_select), dtype=np.int64)
    for j, kind in enumerate(cfg.model_set):
        model = train(kind, sample, hp, seed=derive_seed(seed_i, j), backend=backend)
        out[j] = top_k(importance(model), cfg.k_select)
    return out


_WORKER_STATE: dict = {}


def _init_worker(d, cfg, hp, backend):
    _WORKER_STATE.update(d=d, cfg=cfg, hp=hp, backend=backend)


def _worker(i):
    s = _WORKER_STATE
    return i, _run_iteration(s["d"], s["cfg"], s["hp"], i, s["backend"])


def run_stability(d: Dataset, cfg: StabilityConfig, hp: Hyperparams | None = None, workers: int = 1,
                  backend: str | None = None, progress=None) -> StabilityResult:
    """Run ``cfg.iterations`` balanced draws, train every model in
    ``cfg.model_set`` on each, and count top-``k_select`` memberships."""
    hp = hp or Hyperparams()
    if not d.normalized:
        raise InputError("stability analysis expects a normalized dataset")
    if cfg.k_select > d.n_features:
        raise InputError(f"k_select={cfg.k_select} exceeds the {d.n_features} available features")
    cc = class_counts(d)
    for name, size in (("negative", cc.negatives), ("positive", cc.positives)):
        if size < cfg.n_per_class:
            raise InfeasibleError(f"{name} class has only {size} rows, cannot draw {cfg.n_per_class} per class")

    selections = np.empty((cfg.iterations, len(cfg.model_set), cfg.k_select), dtype=np.int64)
    if workers <= 1:
        for i in range(cfg.iterations):
            selections[i] = _run_iteration(d, cfg, hp, i, backend)
            if progress is not None:
                progress(i + 1, cfg.iterations)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(d, cfg, hp, backend)) as pool:
            done = 0
            for i, sel in pool.map(_worker, range(cfg.iterations), chunksize=max(1, cfg.iterations // (4 * workers))):
                selections[i] = sel
                done += 1
                if progress is not None:
                    progress(done, cfg.iterations)

    counts = np.zeros((len(cfg.model_set), d.n_features), dtype=np.int64)
    for j in range(len(cfg.model_set)):
        counts[j] = np.bincount(selections[:, j, :].ravel(), minlength=d.n_features)
    table = SelectionFrequencyTable(cfg.model_set, tuple(d.feature_names), counts, cfg.iterations)
    consensus = aggregate(table)
    return StabilityResult(
        table=table,
        consensus=consensus,
        top_stable=consensus[:cfg.k_select],
        seeds=[derive_seed(cfg.master_seed, i) for i in range(cfg.iterations)],
        selections=selections,
    )
