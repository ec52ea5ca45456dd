"""Synthetic ground-truth harness: random guillotine partitionings of an
N x D matrix turned into generating networks with known per-feature kinds,
plus the split/missing-injection utilities and the recovery scorer."""

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import BadFractions, InvalidData
from .likelihoods import (Categorical, Exponential, Gaussian, GammaFixedShape,
                          MetaType, Poisson, stat_type_of)
from .spn import ParamSet, SpnBuilder
from .tasks import cosine_similarity, type_posterior

# per-feature generating archetypes
REAL, POS, NUM, NOM = 0, 1, 2, 3
_ARCHETYPE_NAMES = ("real", "positive", "numerical", "nominal")


@dataclass(frozen=True)
class SynthConfig:
    n: int = 2000
    d: int = 4
    theta_split: float = 0.8
    beta_a: float = 4.0
    beta_b: float = 5.0
    min_partition_fraction: float = 0.1
    max_split_attempts: int = 100
    seed: int = 0


@dataclass
class GroundTruth:
    spn: object
    params: ParamSet
    meta_types: tuple
    archetypes: tuple          # per-feature generating archetype name
    kind_weights: tuple        # per feature: {kind: row-mass fraction}
    stat_weights: tuple        # per feature: {StatType name: fraction}
    block_of: np.ndarray       # (n, d) leaf-block id per cell
    row_labels: np.ndarray     # finest guillotine cell per row


def _draw_leaf_model(arch, n_categories, rng):
    if arch == REAL:
        var = 1.0 / rng.gamma(10.0, 1.0 / 10.0)
        mu = rng.normal(0.0, np.sqrt(30.0 * var))
        return Gaussian(float(mu), float(var))
    if arch == POS:
        if rng.random() < 0.5:
            return GammaFixedShape(float(rng.uniform(5.0, 25.0)),
                                   float(rng.gamma(10.0, 1.0 / 10.0)))
        return Exponential(float(rng.gamma(20.0, 1.0 / 5.0)))
    if arch == NUM:
        return Poisson(float(rng.gamma(100.0, 1.0 / 10.0)))
    probs = rng.dirichlet(np.full(n_categories, 10.0))
    return Categorical(tuple(float(p) for p in probs))


def generate(config=None, rng=None):
    """Simulate the stochastic guillotine process: per sweep, attempt a
    column split with probability theta_split (Bernoulli column assignment,
    Beta(a,b) parameter; degenerate splits abandoned), otherwise a row split
    (same scheme, sum weights = the drawn parameter); partitions below the
    row floor become products of univariate leaves with freshly drawn
    parameters."""
    if config is None:
        config = SynthConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n, d = config.n, config.d
    min_rows = config.min_partition_fraction * n

    archetypes = rng.integers(0, 4, size=d)
    n_cats = np.array([int(rng.integers(5, 16)) if a == NOM else 0
                       for a in archetypes])
    meta_types = tuple(MetaType.CONTINUOUS if a in (REAL, POS)
                       else MetaType.DISCRETE for a in archetypes)

    builder = SpnBuilder(d)
    values = np.empty((n, d))
    block_of = np.empty((n, d), dtype=np.int64)
    blocks = []          # (rows, feature, model)
    comps = {}           # leaf node id -> model

    def make_block(rows, feats):
        ids = []
        for f in feats:
            model = _draw_leaf_model(int(archetypes[f]), int(n_cats[f]), rng)
            values[rows, f] = model.sample(rng, size=rows.size)
            block_of[rows, f] = len(blocks)
            blocks.append((rows, f, model))
            nid = builder.leaf(f)
            comps[nid] = model
            ids.append(nid)
        return ids[0] if len(ids) == 1 else builder.product(ids)

    def rec(rows, feats):
        if rows.size < min_rows:
            return make_block(rows, feats)
        for _ in range(config.max_split_attempts):
            if len(feats) >= 2 and rng.random() < config.theta_split:
                q = rng.beta(config.beta_a, config.beta_b)
                side = rng.random(len(feats)) < q
                if side.all() or not side.any():
                    continue
                g0 = [f for f, s in zip(feats, side) if s]
                g1 = [f for f, s in zip(feats, side) if not s]
                return builder.product([rec(rows, g0), rec(rows, g1)])
            p = rng.beta(config.beta_a, config.beta_b)
            side = rng.random(rows.size) < p
            if side.all() or not side.any():
                continue
            c0 = rec(rows[side], feats)
            c1 = rec(rows[~side], feats)
            return builder.sum([c0, c1], [p, 1.0 - p])
        return make_block(rows, feats)

    root = rec(np.arange(n), list(range(d)))
    spn = builder.build(root)
    comp_lists = [None] * spn.n_leaf_slots
    for nid, model in comps.items():
        comp_lists[int(spn.leaf_gl[nid])] = (model,)
    params = ParamSet.build(spn, comp_lists)

    kind_weights = []
    stat_weights = []
    for f in range(d):
        kw = {}
        sw = {}
        for rows, bf, model in blocks:
            if bf != f:
                continue
            kind = type(model).__name__.lower()
            kind = {"gammafixedshape": "gamma"}.get(kind, kind)
            frac = rows.size / n
            kw[kind] = kw.get(kind, 0.0) + frac
            st = stat_type_of(kind).name
            sw[st] = sw.get(st, 0.0) + frac
        kind_weights.append(kw)
        stat_weights.append(sw)

    _, row_labels = np.unique(block_of, axis=0, return_inverse=True)
    dataset = Dataset(values, meta_types)
    truth = GroundTruth(spn=spn, params=params, meta_types=meta_types,
                        archetypes=tuple(_ARCHETYPE_NAMES[a]
                                         for a in archetypes),
                        kind_weights=tuple(kind_weights),
                        stat_weights=tuple(stat_weights),
                        block_of=block_of, row_labels=row_labels)
    return dataset, truth


def holdout_split(dataset, fractions, rng):
    """Disjoint row partition by the given fractions (must sum to 1)."""
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.ndim != 1 or fr.size < 2 or np.any(fr <= 0) or \
            abs(fr.sum() - 1.0) > 1e-9:
        raise BadFractions("fractions must be positive and sum to 1")
    n = dataset.n_rows
    perm = rng.permutation(n)
    bounds = np.rint(np.cumsum(fr) * n).astype(int)
    bounds[-1] = n
    parts = []
    start = 0
    for b in bounds:
        parts.append(dataset.take_rows(np.sort(perm[start:b])))
        start = b
    return tuple(parts)


def inject_missing(dataset, fraction, rng):
    """MCAR cell mask at the given rate; returns (masked dataset, truth
    table holding the removed values, NaN elsewhere)."""
    if not (0.0 <= fraction < 1.0):
        raise InvalidData("missing fraction must lie in [0,1)")
    mask = rng.random(dataset.values.shape) < fraction
    mask &= dataset.observed
    masked = dataset.values.copy()
    truth = np.full(dataset.values.shape, np.nan)
    truth[mask] = dataset.values[mask]
    masked[mask] = np.nan
    return dataset.replace_values(masked), truth


# ----------------------------------------------------------------------
# recovery scoring (the controlled-experiment harness)

def truth_vectors(truth, d, kinds, stat_types):
    """Ground-truth weight vectors aligned to an inferred posterior's kind
    and StatType axes."""
    kv = np.array([truth.kind_weights[d].get(k, 0.0) for k in kinds])
    sv = np.array([truth.stat_weights[d].get(t.name, 0.0)
                   for t in stat_types])
    return kv, sv


def recovery_report(model, truth, test_dataset=None):
    """Per-feature cosine similarities between inferred and true kind /
    StatType vectors, hard-decision accuracy, and (optionally) the model-vs-
    generator test log-likelihood gap, per feature."""
    rows = []
    for d in range(model.spn.n_features):
        tp = type_posterior(model, d)
        kv, sv = truth_vectors(truth, d, tp.kinds, tp.stat_types)
        kind_cos = cosine_similarity(tp.kind_probs, kv) if kv.any() else np.nan
        stat_cos = cosine_similarity(tp.stat_probs, sv) if sv.any() else np.nan
        true_kind = max(truth.kind_weights[d], key=truth.kind_weights[d].get)
        rows.append({
            "feature": d,
            "archetype": truth.archetypes[d],
            "kinds": tp.kinds,
            "kind_probs": tp.kind_probs,
            "true_kind": true_kind,
            "top_kind": tp.top_kind(),
            "kind_cosine": kind_cos,
            "stat_cosine": stat_cos,
            "kind_correct": tp.top_kind() == true_kind,
        })
    report = {
        "features": rows,
        "mean_kind_cosine": float(np.nanmean([r["kind_cosine"] for r in rows])),
        "mean_stat_cosine": float(np.nanmean([r["stat_cosine"] for r in rows])),
    }
    if test_dataset is not None:
        from .tasks import _mc_log_density
        obs = test_dataset.observed
        model_ll = _mc_log_density(model, test_dataset.values, obs)
        oracle_ll = truth.spn.log_density_batch(truth.params,
                                                test_dataset.values, obs)
        report["model_test_ll"] = float(np.mean(model_ll))
        report["oracle_test_ll"] = float(np.mean(oracle_ll))
        report["ll_gap_per_feature"] = float(
            abs(report["model_test_ll"] - report["oracle_test_ll"])
            / model.spn.n_features)
    return report
