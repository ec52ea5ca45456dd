#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-python one.

Times the four hot operations of a Gibbs sweep (bottom-up evaluation, tree
sampling, component sampling, max decoding) on a structure learned from a
clustered table, at a configurable row count.  Reports best-of-N wall times
and the speedup factor, plus a cross-backend agreement check on the root
log-densities.

Usage:
    python benchmarks/bench_kernels.py [--rows 20000] [--repeats 5] [--seed 0]
"""
import argparse
import time

import numpy as np

from spnmix import _kernels_py
from spnmix.synth import SynthConfig, generate
from spnmix.structure import StructureConfig, learn_structure

BACKENDS = {"python": _kernels_py}
try:
    from spnmix import _kernels_cy
    BACKENDS["compiled"] = _kernels_cy
except ImportError:
    _kernels_cy = None


def build_inputs(rows, seed):
    """A learned structure plus synthetic kernel inputs at sweep shapes."""
    rng = np.random.default_rng(seed)
    ds, _ = generate(SynthConfig(n=2000, d=8, seed=seed))
    spn = learn_structure(ds, StructureConfig(min_instances_fraction=0.005,
                                              seed=seed))

    leaf_vals = -np.abs(rng.normal(2.0, 1.0, (rows, spn.n_leaf_slots))) - 0.1
    edge_logw = spn.init_edge_logw.copy()
    n_comp = 2
    comp_off = np.arange(spn.n_leaf_slots + 1, dtype=np.int64) * n_comp
    comp_logp = -np.abs(rng.normal(2.0, 1.0, (rows, spn.n_leaf_slots * n_comp))) - 0.1
    leaf_logw = np.full(spn.n_leaf_slots * n_comp, -np.log(n_comp))
    observed = rng.random((rows, spn.n_features)) < 0.9
    u_tree = rng.random((rows, spn.n_sums))
    u_comp = rng.random((rows, spn.n_features))
    return spn, dict(leaf_vals=leaf_vals, edge_logw=edge_logw,
                     comp_off=comp_off, comp_logp=comp_logp,
                     leaf_logw=leaf_logw, observed=observed,
                     u_tree=u_tree, u_comp=u_comp)


def time_op(fn, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run_backend(mod, spn, inp, repeats):
    times = {}
    t, v = time_op(lambda: mod.bottom_up(spn.kind, spn.ch_off, spn.ch_ids,
                                         spn.leaf_gl, inp["edge_logw"],
                                         inp["leaf_vals"], False), repeats)
    times["bottom_up"] = t

    t, trees = time_op(lambda: mod.sample_trees(
        v, spn.kind, spn.ch_off, spn.ch_ids, spn.sum_pos, spn.feat, spn.slot,
        inp["edge_logw"], spn.root, spn.n_features, inp["u_tree"]), repeats)
    times["sample_trees"] = t
    _, jmat, _ = trees

    obs = inp["observed"]
    obs = obs if mod is _kernels_py else np.ascontiguousarray(obs).view(np.uint8)
    t, _ = time_op(lambda: mod.sample_components(
        inp["comp_logp"], inp["leaf_logw"], inp["comp_off"], spn.feat_off,
        jmat, obs, inp["u_comp"]), repeats)
    times["sample_components"] = t

    t, _ = time_op(lambda: mod.decode_max(
        v, spn.kind, spn.ch_off, spn.ch_ids, spn.sum_pos, spn.feat, spn.slot,
        inp["edge_logw"], spn.root, spn.n_features), repeats)
    times["decode_max"] = t
    return times, v


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spn, inp = build_inputs(args.rows, args.seed)
    print("structure: %d nodes (%d sums, %d products, %d leaf slots), "
          "%d rows" % (spn.n_nodes, spn.n_sums, spn.n_products,
                       spn.n_leaf_slots, args.rows))
    if "compiled" not in BACKENDS:
        print("compiled extension not available; timing python backend only")

    results = {}
    roots = {}
    for name, mod in BACKENDS.items():
        results[name], v = run_backend(mod, spn, inp, args.repeats)
        roots[name] = v[:, spn.root].copy()

    ops = ["bottom_up", "sample_trees", "sample_components", "decode_max"]
    header = "%-20s" % "op" + "".join("%14s" % n for n in results)
    if len(results) == 2:
        header += "%12s" % "speedup"
    print(header)
    for op in ops:
        line = "%-20s" % op
        for name in results:
            line += "%12.2f ms" % (results[name][op] * 1e3)
        if len(results) == 2:
            line += "%11.1fx" % (results["python"][op] /
                                 results["compiled"][op])
        print(line)

    if len(roots) == 2:
        diff = np.max(np.abs(roots["python"] - roots["compiled"]))
        print("max |root logdensity diff| across backends: %.3e" % diff)


if __name__ == "__main__":
    main()
