"""Command-line interface: fit, impute, score, types, patterns, synth,
eval-synth, report."""

import argparse
import hashlib
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .data import load_csv, save_csv
from .errors import SpnmixError
from .gibbs import GibbsConfig
from .model_io import load_model, load_truth, save_model, save_truth
from .patterns import (format_partition_report, format_pattern, mine,
                       partition_report)
from .structure import StructureConfig
from .synth import SynthConfig, generate, holdout_split, recovery_report
from .tasks import (_mc_log_density, anomaly_scores, fit, impute_batch,
                    type_posterior)

log = logging.getLogger("spnmix")


def _add_fit_flags(p):
    p.add_argument("--rdc-threshold", type=float, default=0.3,
                   help="dependence threshold for column splits")
    p.add_argument("--min-instances", type=float, default=0.1,
                   help="row-cluster floor as a fraction of the dataset")
    p.add_argument("--iters", type=int, default=1500)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thinning", type=int, default=1)
    p.add_argument("--gamma", type=float, default=10.0,
                   help="sum-weight Dirichlet concentration")
    p.add_argument("--alpha", type=float, default=0.1,
                   help="leaf-weight Dirichlet concentration")
    p.add_argument("--seed", type=int, default=None)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spnmix",
        description="Density analysis for heterogeneous tabular data: "
                    "fit a mixture network by Gibbs sampling, then impute, "
                    "score, type, and mine it.")
    ap.add_argument("--version", action="version",
                    version="spnmix %s" % __version__)
    ap.add_argument("-v", "--verbose", action="store_true",
                    help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to a CSV table")
    p.add_argument("data")
    _add_fit_flags(p)
    p.add_argument("-o", "--output", required=True, help="model file")

    p = sub.add_parser("impute", help="fill missing cells")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--mode", choices=("map", "mc"), default="map")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("score", help="anomaly scores (negative log-lik)")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("types", help="statistical-type posteriors")
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("patterns", help="mine interval patterns")
    p.add_argument("model")
    p.add_argument("--lambda", dest="lam", type=float, default=0.9,
                   help="central leaf mass covered by each interval")
    p.add_argument("--theta", type=float, default=0.9,
                   help="presence threshold at the source leaf")
    p.add_argument("--support-floor", type=float, default=0.05)
    p.add_argument("--max-arity", type=int, default=4)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True, help="output directory")

    p = sub.add_parser("eval-synth",
                       help="fit on a synthetic benchmark and score recovery")
    p.add_argument("dir", help="directory produced by `spnmix synth`")
    _add_fit_flags(p)
    p.add_argument("-o", "--output", required=True,
                   help="recovery table CSV (confusion matrix lands next "
                        "to it)")

    p = sub.add_parser("report", help="markdown report with density grids")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--grid-points", type=int, default=200)
    p.add_argument("--top-patterns", type=int, default=20)
    p.add_argument("-o", "--output", required=True)
    return ap


# ----------------------------------------------------------------------
# provenance

def _config_hash(args):
    skip = {"command", "verbose"}
    doc = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    canon = json.dumps(doc, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _resolve_seed(args):
    if getattr(args, "seed", None) is None:
        seed = int(np.random.SeedSequence().entropy % (2 ** 31))
        print("seed=%d" % seed)
        if hasattr(args, "seed"):
            args.seed = seed
        return seed
    return args.seed


def _provenance(args, seed=None):
    return "spnmix %s seed=%s config=%s" % (
        __version__, "-" if seed is None else seed, _config_hash(args))


# ----------------------------------------------------------------------
# subcommands

def _configs(args, seed):
    sc = StructureConfig(rdc_threshold=args.rdc_threshold,
                         min_instances_fraction=args.min_instances,
                         seed=seed)
    gc = GibbsConfig(iterations=args.iters, burn_in=args.burn_in,
                     thinning=args.thinning, gamma=args.gamma,
                     alpha=args.alpha, seed=seed)
    return sc, gc


def cmd_fit(args):
    seed = _resolve_seed(args)
    data = load_csv(args.data)
    sc, gc = _configs(args, seed)
    model = fit(data, sc, gc)
    save_model(model, args.output)
    n_draws = len(model.samples)
    print("fit: %d rows, %d features -> %d nodes, %d draws, sparsity=%.4f"
          % (data.n_rows, data.n_features, model.spn.n_nodes, n_draws,
             model.sparsity))
    print("model=%s %s" % (args.output, _provenance(args, seed)))
    return 0


def _check_hash(model, data):
    if model.data_hash and model.data_hash != data.content_hash():
        print("warning: dataset differs from the one the model was "
              "fit on (hash mismatch)", file=sys.stderr)


def cmd_impute(args):
    model = load_model(args.model)
    data = load_csv(args.data)
    _check_hash(model, data)
    mode = {"map": "map_sample", "mc": "mc_average"}[args.mode]
    filled = impute_batch(model, data.values, mode=mode)
    save_csv(args.output, data.replace_values(filled),
             comments=(_provenance(args),))
    print("impute: filled %d cells -> %s"
          % (int((~data.observed).sum()), args.output))
    return 0


def cmd_score(args):
    model = load_model(args.model)
    data = load_csv(args.data)
    _check_hash(model, data)
    scores = anomaly_scores(model, data)
    scores = sorted(scores, key=lambda a: a.row)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("# %s\n" % _provenance(args))
        fh.write("row,nll,path\n")
        for s in scores:
            path = ";".join("%d:%d" % e for e in s.path) or "-"
            fh.write("%d,%r,%s\n" % (s.row, s.score, path))
    print("score: %d rows -> %s" % (len(scores), args.output))
    return 0


def cmd_types(args):
    model = load_model(args.model)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("# %s\n" % _provenance(args))
        fh.write("feature,name,axis,label,probability,stderr\n")
        for d in range(model.spn.n_features):
            tp = type_posterior(model, d)
            for k, p, se in zip(tp.kinds, tp.kind_probs, tp.kind_se):
                fh.write("%d,%s,kind,%s,%r,%r\n"
                         % (d, model.names[d], k, float(p), float(se)))
            for t, p, se in zip(tp.stat_types, tp.stat_probs, tp.stat_se):
                fh.write("%d,%s,stat,%s,%r,%r\n"
                         % (d, model.names[d], t.name, float(p), float(se)))
    print("types: %d features -> %s" % (model.spn.n_features, args.output))
    return 0


def cmd_patterns(args):
    model = load_model(args.model)
    found = mine(model, lam=args.lam, theta=args.theta,
                 max_arity=args.max_arity, support_floor=args.support_floor)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("# %s\n" % _provenance(args))
        fh.write("rank,support,arity,anchor,pattern\n")
        for i, pat in enumerate(found):
            fh.write('%d,%r,%d,%d,"%s"\n'
                     % (i + 1, pat.support, pat.arity, pat.anchor,
                        format_pattern(pat, model.names)))
    print("patterns: %d mined -> %s" % (len(found), args.output))
    return 0


def cmd_synth(args):
    seed = _resolve_seed(args)
    cfg = SynthConfig(n=args.n, d=args.d, seed=seed)
    dataset, truth = generate(cfg)
    rng = np.random.default_rng(seed)
    train, valid, test = holdout_split(dataset, (0.7, 0.1, 0.2), rng)
    os.makedirs(args.output, exist_ok=True)
    note = (_provenance(args, seed),)
    for name, part in (("data", dataset), ("train", train),
                       ("valid", valid), ("test", test)):
        save_csv(os.path.join(args.output, name + ".csv"), part,
                 comments=note)
    save_truth(truth, os.path.join(args.output, "truth.json"))
    print("synth: n=%d d=%d -> %s (data/train/valid/test.csv, truth.json)"
          % (args.n, args.d, args.output))
    return 0


def cmd_eval_synth(args):
    seed = _resolve_seed(args)
    truth = load_truth(os.path.join(args.dir, "truth.json"))
    train = load_csv(os.path.join(args.dir, "train.csv"))
    test = load_csv(os.path.join(args.dir, "test.csv"))
    sc, gc = _configs(args, seed)
    model = fit(train, sc, gc)
    rep = recovery_report(model, truth, test)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("# %s\n" % _provenance(args, seed))
        fh.write("feature,archetype,true_kind,top_kind,kind_correct,"
                 "kind_cosine,stat_cosine\n")
        for r in rep["features"]:
            fh.write("%d,%s,%s,%s,%d,%r,%r\n"
                     % (r["feature"], r["archetype"], r["true_kind"],
                        r["top_kind"], int(r["kind_correct"]),
                        r["kind_cosine"], r["stat_cosine"]))
    stem, ext = os.path.splitext(args.output)
    conf_path = stem + "_confusion" + (ext or ".csv")
    pairs = {}
    for r in rep["features"]:
        key = (r["true_kind"], r["top_kind"])
        pairs[key] = pairs.get(key, 0) + 1
    with open(conf_path, "w", encoding="utf-8") as fh:
        fh.write("# %s\n" % _provenance(args, seed))
        fh.write("true_kind,predicted_kind,count\n")
        for (t, p), c in sorted(pairs.items()):
            fh.write("%s,%s,%d\n" % (t, p, c))
    print("eval-synth: mean_stat_cosine=%.4f mean_kind_cosine=%.4f "
          "model_test_ll=%.4f oracle_test_ll=%.4f gap_per_feature=%.4f"
          % (rep["mean_stat_cosine"], rep["mean_kind_cosine"],
             rep["model_test_ll"], rep["oracle_test_ll"],
             rep["ll_gap_per_feature"]))
    print("tables: %s, %s" % (args.output, conf_path))
    return 0


def _marginal_grid(model, data, d, n_points):
    from .likelihoods import MetaType
    stats = data.feature_stats(d)
    if model.meta_types[d] is MetaType.DISCRETE:
        xs = np.arange(int(stats.minimum), int(stats.maximum) + 1,
                       dtype=np.float64)
    else:
        span = stats.maximum - stats.minimum
        pad = 0.05 * span if span > 0 else 1.0
        xs = np.linspace(stats.minimum - pad, stats.maximum + pad, n_points)
    probe = np.full((xs.size, model.spn.n_features), np.nan)
    probe[:, d] = xs
    obs = ~np.isnan(probe)
    mixture = np.exp(_mc_log_density(model, probe, obs))
    spn = model.spn
    params = model.best_params
    parts = []
    if int(spn.kind[spn.root]) == 0:   # sum root: one column per partition
        comp_logp = spn.comp_logpdf_matrix(params, probe, obs)
        leaf_vals = spn.leaf_values(params, comp_logp, obs)
        v = spn.bottom_up(params, leaf_vals)
        for c in spn.children(spn.root):
            parts.append(np.exp(v[:, int(c)]))
    return xs, mixture, parts


def cmd_report(args):
    model = load_model(args.model)
    data = load_csv(args.data)
    _check_hash(model, data)
    grid_dir = os.path.splitext(args.output)[0] + "_grids"
    os.makedirs(grid_dir, exist_ok=True)
    grid_files = []
    for d in range(data.n_features):
        xs, mixture, parts = _marginal_grid(model, data, d,
                                            args.grid_points)
        path = os.path.join(grid_dir, "feature_%02d_%s.csv"
                            % (d, model.names[d]))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# %s\n" % _provenance(args))
            cols = ["x", "mixture"] + ["partition_%d" % i
                                       for i in range(len(parts))]
            fh.write(",".join(cols) + "\n")
            for i, x in enumerate(xs):
                row = [repr(float(x)), repr(float(mixture[i]))]
                row += [repr(float(p[i])) for p in parts]
                fh.write(",".join(row) + "\n")
        grid_files.append(path)

    entries = partition_report(model, data)
    tree_text = format_partition_report(entries, model.names)
    found = mine(model)[:args.top_patterns]

    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("# Model report\n\n")
        fh.write("- rows: %d, features: %d\n" % (data.n_rows,
                                                 data.n_features))
        fh.write("- network: %d nodes (%d sums, %d products, %d leaves)\n"
                 % (model.spn.n_nodes, model.spn.n_sums,
                    model.spn.n_products, model.spn.n_leaf_slots))
        fh.write("- posterior draws: %d, sparsity: %.4f\n"
                 % (len(model.samples), model.sparsity))
        fh.write("\n## Marginal density grids\n\n")
        for path in grid_files:
            fh.write("- `%s`\n" % path)
        fh.write("\n## Partition tree\n\n```\n%s\n```\n" % tree_text)
        fh.write("\n## Top patterns\n\n")
        if not found:
            fh.write("(none above the support floor)\n")
        for i, pat in enumerate(found):
            fh.write("%d. %s\n" % (i + 1, format_pattern(pat, model.names)))
        fh.write("\n---\n%s\n" % _provenance(args))
    print("report: %s (+%d grid files in %s)"
          % (args.output, len(grid_files), grid_dir))
    return 0


_COMMANDS = {
    "fit": cmd_fit, "impute": cmd_impute, "score": cmd_score,
    "types": cmd_types, "patterns": cmd_patterns, "synth": cmd_synth,
    "eval-synth": cmd_eval_synth, "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except SpnmixError as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: OSError: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
