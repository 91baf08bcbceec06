"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each case runs on identical inputs under both backends; tree outputs are
checked for equality before timings are reported.
"""
import argparse
import json
import statistics
import time

import numpy as np

from hdsurvey import _core
from hdsurvey import classifiers as clf
from hdsurvey.dataset import normalize, synthesize


def _time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(rng):
    X = rng.random((2000, 21))
    y = (X[:, 0] + 0.5 * rng.random(2000) > 0.75).astype(float)
    ones = np.ones(2000)
    rows = np.arange(2000)
    keys = rng.random((2 ** 9 - 1, 21))
    zero_keys = np.zeros((2 ** 4 - 1, 21))
    resid = y - y.mean()
    pres = _core.presort(X)  # only the compiled kernel uses this hint
    tree = _core.build_tree(X, y, ones, rows, keys, 8, 5)
    order = rng.permutation(2000).astype(np.intp)
    data = normalize(synthesize(1000, 1000, [0, 1, 2], 0.5, seed=1))
    hp = clf.Hyperparams.from_dict({"RandomForest": {"n_trees": 20}, "GradBoost": {"rounds": 20}})

    def gini_tree(b):
        return lambda: _core.build_tree(X, y, ones, rows, keys, 8, 5, presorted=pres, backend=b)

    def mse_tree(b):
        return lambda: _core.build_tree(X, resid, ones, rows, zero_keys, 3, 21, criterion=_core.MSE,
                                        presorted=pres, backend=b)

    def apply(b):
        return lambda: _core.apply_tree(X, *tree[:4], backend=b)

    def sgd(b):
        return lambda: _core.sgd_logreg_epoch(X, y, np.zeros(21), 0.0, order, 0.05, 1e-3, 0, backend=b)

    def forest(b):
        return lambda: clf.train("RandomForest", data, hp, seed=0, backend=b)

    def boost(b):
        return lambda: clf.train("GradBoost", data, hp, backend=b)

    return {
        "build_tree gini depth 8 (2000x21)": gini_tree,
        "build_tree mse depth 3 (2000x21)": mse_tree,
        "apply_tree (2000 rows)": apply,
        "sgd epoch (2000x21)": sgd,
        "RandomForest 20 trees": forest,
        "GradBoost 20 rounds": boost,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    if _core.BACKEND != "compiled":
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation` first")

    rng = np.random.default_rng(0)
    results = []
    print(f"{'case':<36}{'python s':>11}{'compiled s':>12}{'speedup':>9}")
    for name, make in cases(rng).items():
        if name.startswith("build_tree"):
            a, b = make("python")(), make("compiled")()
            assert all(np.array_equal(u, v) for u, v in zip(a, b)), name
        tp = _time(make("python"), args.repeat)
        tc = _time(make("compiled"), args.repeat)
        results.append({"case": name, "python_s": tp, "compiled_s": tc, "speedup": tp / tc})
        print(f"{name:<36}{tp:>11.4f}{tc:>12.4f}{tp / tc:>8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
