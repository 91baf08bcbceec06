"""Command-line entry point.

Exit codes: 0 success, 1 analysis infeasible, 2 malformed input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, _core
from . import classifiers as clf
from .config import MANIFEST_FORMAT, RunConfig
from .dataset import (FeatureSchema, apply_transform, brfss_schema, class_counts, load_csv, normalize,
                      synthesize, write_csv)
from .errors import InfeasibleError, InputError, TrainingError
from .metrics import TableRow, compute, confusion, table_csv, table_text
from .rng import derive_seed, make_rng
from .sampling import SampleSpec, balanced_sample, train_test_split
from .stability import StabilityConfig, reduce_dataset, run_stability
from .surveytime import (TIME_UNIT, LogisticParams, TriangularParams, best_fit, read_times,
                         reduction_percent, sample_logistic, sample_triangular)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


class Run:
    """Collects outputs and stage timings; writes the manifest last."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.out)
        self.outputs: dict[str, str] = {}
        self.timings: dict[str, float] = {}

    def write(self, name: str, text: str) -> None:
        _atomic_write(self.out / name, text)
        self.outputs[name] = hashlib.sha256(text.encode()).hexdigest()

    def stage(self, name):
        run = self

        class _Timer:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = time.perf_counter() - self.t

        return _Timer()

    def finish(self, extra: dict | None = None) -> None:
        manifest = {
            "format": MANIFEST_FORMAT,
            "version": 1,
            "command": self.command,
            "library_version": __version__,
            "kernel_backend": _core.BACKEND,
            "config": _resolved(self.cfg.to_dict()),
            "timings_seconds": self.timings,
            "outputs": self.outputs,
        }
        if extra:
            manifest.update(extra)
        _atomic_write(self.out / f"manifest_{self.command}.json", json.dumps(manifest, indent=2) + "\n")


def _resolved(snapshot: dict) -> dict:
    for key in ("dataset", "schema", "features_from"):
        if snapshot.get(key):
            snapshot[key] = str(Path(snapshot[key]).resolve())
    snapshot["out"] = str(Path(snapshot["out"]).resolve())
    return snapshot


def _schema(cfg: RunConfig) -> FeatureSchema:
    return FeatureSchema.from_json(cfg.schema) if cfg.schema else brfss_schema()


def _load(cfg: RunConfig):
    if not cfg.dataset:
        raise InputError("no dataset given (use --data or the config's 'dataset')")
    return load_csv(cfg.dataset, _schema(cfg))


def _selected_features(cfg: RunConfig, names: list[str], k: int) -> list[int] | None:
    if cfg.features is not None:
        chosen = list(cfg.features)
    elif cfg.features_from:
        path = Path(cfg.features_from)
        if not path.is_file():
            raise InputError(f"no such file: {path}")
        lines = path.read_text().splitlines()[1:]
        chosen = [line.split(",")[2] for line in lines if line.strip()][:k]
    else:
        return None
    idx = []
    for name in chosen:
        if name.isdigit():
            idx.append(int(name))
        elif name in names:
            idx.append(names.index(name))
        else:
            raise InputError(f"unknown feature {name!r}")
    return idx


def _evaluate(kinds, train, test, hp, seed, selected):
    rows = []
    for j, kind in enumerate(kinds):
        model = clf.train(kind, train, hp, seed=derive_seed(seed, 2, j))
        before = compute(confusion(model, test))
        after = None
        if selected is not None:
            rtrain, rtest = reduce_dataset(train, selected), reduce_dataset(test, selected)
            rmodel = clf.train(kind, rtrain, hp, seed=derive_seed(seed, 2, j))
            after = compute(confusion(rmodel, rtest))
        rows.append(TableRow(kind.value, before, after))
    return rows


def _report_json(rows, meta) -> str:
    doc = dict(meta)
    doc["rows"] = [
        {"model": r.model, "before": r.before.as_dict(), "after": r.after.as_dict() if r.after else None}
        for r in rows
    ]
    return json.dumps(doc, indent=2) + "\n"


# -- commands ------------------------------------------------------------------

def cmd_inspect(cfg: RunConfig) -> int:
    d = _load(cfg)
    cc = class_counts(d)
    print(f"{d.n_rows} rows, {cc.negatives} negative, {cc.positives} positive, {d.n_features} features")
    if d.n_rows:
        lo, hi = d.matrix.min(axis=0), d.matrix.max(axis=0)
        for name, a, b in zip(d.feature_names, lo, hi):
            print(f"  {name:<20} [{a:g}, {b:g}]")
    return 0


def _split_and_scale(d, cfg):
    train, test = train_test_split(d, cfg.test_fraction, seed=derive_seed(cfg.seed, 1))
    train = normalize(train)
    return train, apply_transform(test, train.transform)


def cmd_baseline(cfg: RunConfig) -> int:
    run = Run(cfg, "baseline")
    with run.stage("load"):
        d = _load(cfg)
    selected = _selected_features(cfg, d.feature_names, cfg.stability.k_select)
    with run.stage("train_evaluate"):
        train, test = _split_and_scale(d, cfg)
        rows = _evaluate(cfg.model_kinds(), train, test, cfg.hp(), cfg.seed, selected)
    meta = {"table": "whole data", "split": f"stratified {1 - cfg.test_fraction:g}/{cfg.test_fraction:g}",
            "train_rows": train.n_rows, "test_rows": test.n_rows,
            "selected_features": [d.feature_names[j] for j in selected] if selected else None}
    text = table_text(rows, "Performance on whole (imbalanced) data, test split")
    print(text, end="")
    run.write("table1.txt", text)
    run.write("table1.csv", table_csv(rows))
    run.write("table1.json", _report_json(rows, meta))
    run.finish()
    return 0


def cmd_balanced(cfg: RunConfig) -> int:
    run = Run(cfg, "balanced")
    with run.stage("load"):
        d = _load(cfg)
    selected = _selected_features(cfg, d.feature_names, cfg.stability.k_select)
    if selected is None:
        with run.stage("stability"):
            res = run_stability(normalize(d), _stability_config(cfg), cfg.hp(), workers=cfg.stability.workers)
        selected = res.top_stable
        run.write("stability_consensus.csv", res.consensus_csv())
    with run.stage("train_evaluate"):
        sample = balanced_sample(d, SampleSpec(cfg.n_per_class, cfg.seed))
        train, test = _split_and_scale(sample, cfg)
        rows = _evaluate(cfg.model_kinds(), train, test, cfg.hp(), cfg.seed, selected)
    meta = {"table": "balanced sample", "n_per_class": cfg.n_per_class,
            "split": f"stratified {1 - cfg.test_fraction:g}/{cfg.test_fraction:g}",
            "train_rows": train.n_rows, "test_rows": test.n_rows,
            "selected_features": [d.feature_names[j] for j in selected]}
    text = table_text(rows, f"Performance on balanced sample ({cfg.n_per_class} per class), test split")
    print(text, end="")
    print("selected: " + ", ".join(meta["selected_features"]))
    run.write("table2.txt", text)
    run.write("table2.csv", table_csv(rows))
    run.write("table2.json", _report_json(rows, meta))
    run.finish()
    return 0


def _stability_config(cfg: RunConfig) -> StabilityConfig:
    return StabilityConfig(iterations=cfg.stability.iterations, n_per_class=cfg.n_per_class,
                           k_select=cfg.stability.k_select, model_set=cfg.stability.models,
                           master_seed=cfg.seed)


def cmd_stability(cfg: RunConfig) -> int:
    run = Run(cfg, "stability")
    with run.stage("load"):
        d = normalize(_load(cfg))
    scfg = _stability_config(cfg)
    with run.stage("iterations"):
        res = run_stability(d, scfg, cfg.hp(), workers=cfg.stability.workers)
    table = res.table
    per_model = table.counts.sum(axis=1)
    if not np.all(per_model == scfg.k_select * scfg.iterations):
        raise RuntimeError("selection counts violate the counting identity")
    run.write("stability_frequencies.csv", table.to_csv())
    run.write("stability_consensus.csv", res.consensus_csv())
    seeds = "iteration,seed\n" + "".join(f"{i},{s}\n" for i, s in enumerate(res.seeds))
    run.write("stability_seeds.csv", seeds)
    print(f"{scfg.iterations} iterations x {len(scfg.model_set)} models, top {scfg.k_select}")
    print("consensus top: " + ", ".join(res.top_stable_names))
    run.finish({"sampling": "one balanced draw per iteration shared by all models",
                "counting_identity": "ok"})
    return 0


def cmd_reduce_time(cfg: RunConfig, before: str, after: str) -> int:
    run = Run(cfg, "reduce-time")
    reports = {}
    for label, path in (("full_survey", before), ("reduced_survey", after)):
        try:
            reports[label] = best_fit(read_times(path, label))
        except InputError as exc:
            raise InputError(f"{path}: {exc}") from exc
    mb, ma = reports["full_survey"].best.mean, reports["reduced_survey"].best.mean
    pct = reduction_percent(mb, ma)
    doc = {
        "unit": TIME_UNIT,
        "triangular_parameter_order": "(lower, mode, upper)",
        "before": reports["full_survey"].as_dict(),
        "after": reports["reduced_survey"].as_dict(),
        "mean_before": mb,
        "mean_after": ma,
        "reduction_percent": pct,
        "reduction_percent_rounding": "unrounded value; text table shows one decimal",
    }
    lines = [f"{'':<28}{'Before feature selection':>26}{'After feature selection':>26}"]
    lines.append(f"{'Survey time distribution':<28}" + "".join(
        f"{_dist_str(reports[k].best):>26}" for k in ("full_survey", "reduced_survey")))
    lines.append(f"{'AIC (winner)':<28}" + "".join(
        f"{reports[k].best.aic:>26.3f}" for k in ("full_survey", "reduced_survey")))
    lines.append(f"{'Mean (' + TIME_UNIT + ')':<28}{mb:>26.3f}{ma:>26.3f}")
    lines.append(f"{'Survey time reduction':<28}{'-':>26}{pct:>25.1f}%")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    run.write("table3.txt", text)
    run.write("table3.json", json.dumps(doc, indent=2) + "\n")
    run.finish({"inputs": {"before": str(Path(before).resolve()), "after": str(Path(after).resolve())}})
    return 0


def _dist_str(f) -> str:
    p = f.params
    if isinstance(p, TriangularParams):
        return f"Triangle ({p.a:.3g},{p.c:.3g},{p.b:.3g})"
    return f"Logistic ({p.location:.3g},{p.scale:.2g})"


def cmd_synth(args) -> int:
    out = Path(args.out)
    if args.what == "dataset":
        signal = [int(s) for s in args.signal.split(",")] if args.signal else []
        d = synthesize(args.n_neg, args.n_pos, signal, args.strength, args.seed, args.n_features)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(d, out / "synthetic.csv")
        _atomic_write(out / "synthetic_schema.json", json.dumps(d.schema.to_dict(), indent=2) + "\n")
        print(f"wrote {out / 'synthetic.csv'} ({d.n_rows} rows) and {out / 'synthetic_schema.json'}")
    else:
        vals = [float(v) for v in args.params.split(",")]
        rng = make_rng(args.seed)
        if args.family == "triangular":
            x = sample_triangular(TriangularParams(*vals), args.n, rng)
        else:
            x = sample_logistic(LogisticParams(*vals), args.n, rng)
        name = out / f"times_{args.family}.csv"
        _atomic_write(name, "minutes\n" + "".join(f"{v!r}\n" for v in x.tolist()))
        print(f"wrote {name} ({args.n} samples)")
    return 0


# -- argument parsing ------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON run config or an emitted manifest")
    p.add_argument("--data", help="survey CSV (overrides config 'dataset')")
    p.add_argument("--schema", help="schema JSON (default: BRFSS 21-question schema)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-per-class", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--models", help="comma-separated model kinds")
    p.add_argument("--features", help="comma-separated feature names or indices for the 'after' panel")
    p.add_argument("--features-from", help="consensus CSV from a stability run")
    p.add_argument("--iterations", type=int)
    p.add_argument("--k", type=int, help="features kept per run")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdsurvey", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("inspect", "row/class counts and feature ranges"),
                        ("baseline", "all models on the whole imbalanced data"),
                        ("balanced", "all models on a balanced sample, before/after selection"),
                        ("stability", "repeated-sampling feature selection frequencies")):
        _common(sub.add_parser(name, help=help_))
    rt = sub.add_parser("reduce-time", help="fit survey times and compute the time reduction")
    _common(rt)
    rt.add_argument("before", help="time CSV for the full survey")
    rt.add_argument("after", help="time CSV for the reduced survey")
    sy = sub.add_parser("synth", help="generate fixture files")
    sy_sub = sy.add_subparsers(dest="what", required=True)
    sd = sy_sub.add_parser("dataset")
    sd.add_argument("--n-neg", type=int, default=1000)
    sd.add_argument("--n-pos", type=int, default=1000)
    sd.add_argument("--n-features", type=int, default=21)
    sd.add_argument("--signal", default="0,1,2", help="comma-separated signal feature indices")
    sd.add_argument("--strength", type=float, default=1.0)
    sd.add_argument("--seed", type=int, default=0)
    sd.add_argument("--out", default=".")
    st = sy_sub.add_parser("times")
    st.add_argument("--family", choices=("triangular", "logistic"), required=True)
    st.add_argument("--params", required=True, help="a,c,b for triangular; location,scale for logistic")
    st.add_argument("--n", type=int, default=15)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--out", default=".")
    return parser


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    split = lambda s: tuple(x.strip() for x in s.split(",") if x.strip()) if s else None  # noqa: E731
    return cfg.override(
        dataset=args.data, schema=args.schema, seed=args.seed, n_per_class=args.n_per_class,
        test_fraction=args.test_fraction, models=split(args.models), features=split(args.features),
        features_from=args.features_from, out=args.out,
        stability_iterations=args.iterations, stability_k_select=args.k, stability_workers=args.workers,
        stability_models=split(args.models) if args.command == "stability" else None,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        cfg = _config_from_args(args)
        if args.command == "inspect":
            return cmd_inspect(cfg)
        if args.command == "baseline":
            return cmd_baseline(cfg)
        if args.command == "balanced":
            return cmd_balanced(cfg)
        if args.command == "stability":
            return cmd_stability(cfg)
        return cmd_reduce_time(cfg, args.before, args.after)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
