"""Structure learning: recursive row clustering / feature splitting.

Dependency between features is measured with the randomized dependence
coefficient (copula ranks -> random sine features -> largest canonical
correlation), computed over jointly observed cells only so missing entries
never contribute.  Row clustering is 2-means on the rank matrix.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import AllMissing, InvalidStructure
from .spn import SpnBuilder

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StructureConfig:
    rdc_threshold: float = 0.3
    min_instances_fraction: float = 0.1
    rdc_features: int = 20
    rdc_scale: float = 1.0 / 6.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.rdc_threshold < 1.0):
            raise InvalidStructure("rdc_threshold must lie in (0,1)")
        if not (0.0 < self.min_instances_fraction <= 1.0):
            raise InvalidStructure("min_instances_fraction must lie in (0,1]")
        if self.rdc_features < 1:
            raise InvalidStructure("rdc_features must be >= 1")


def copula_transform(column, missing_mask=None):
    """Empirical-CDF ranks in (0,1] over observed cells (average ranks for
    ties); missing cells get 0.5 and are excluded from the CDF estimate."""
    col = np.asarray(column, dtype=np.float64)
    if missing_mask is None:
        missing = np.isnan(col)
    else:
        missing = np.asarray(missing_mask, dtype=bool)
    obs = ~missing
    n_obs = int(obs.sum())
    if n_obs == 0:
        raise AllMissing("cannot rank a fully missing column")
    out = np.full(col.shape, 0.5)
    out[obs] = rankdata(col[obs], method="average") / n_obs
    return out


def _ranks_or_half(column):
    try:
        return copula_transform(column)
    except AllMissing:
        return np.full(np.asarray(column).shape, 0.5)


def _max_canonical_corr(a, b):
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    ua, sa, _ = np.linalg.svd(a, full_matrices=False)
    ub, sb, _ = np.linalg.svd(b, full_matrices=False)
    ka = sa > (sa.max() * 1e-10 if sa.size else 0)
    kb = sb > (sb.max() * 1e-10 if sb.size else 0)
    if not ka.any() or not kb.any():
        return 0.0
    sv = np.linalg.svd(ua[:, ka].T @ ub[:, kb], compute_uv=False)
    return float(np.clip(sv[0], 0.0, 1.0))


def _sine_features(u, k, scale, rng):
    x = np.column_stack([u, np.ones(u.shape[0])])
    w = rng.normal(size=(x.shape[1], k)) * (scale / x.shape[1])
    return np.sin(x @ w)


def rdc(col_a, col_b, joint_observed_mask=None, config=None, rng=None):
    """Randomized dependence coefficient in [0,1]; 0 when fewer than
    max(10, k) jointly observed rows are available."""
    if config is None:
        config = StructureConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    a = np.asarray(col_a, dtype=np.float64)
    b = np.asarray(col_b, dtype=np.float64)
    if joint_observed_mask is None:
        joint_observed_mask = ~(np.isnan(a) | np.isnan(b))
    mask = np.asarray(joint_observed_mask, dtype=bool)
    k = config.rdc_features
    if int(mask.sum()) < max(10, k):
        return 0.0
    ua = copula_transform(a[mask])
    ub = copula_transform(b[mask])
    fa = _sine_features(ua, k, config.rdc_scale, rng)
    fb = _sine_features(ub, k, config.rdc_scale, rng)
    return _max_canonical_corr(fa, fb)


def split_columns(values, rows, feats, config, rng):
    """Partition the slice's features into groups connected by pairwise
    rdc >= threshold; a single group means no split."""
    feats = list(feats)
    parent = list(range(len(feats)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    sub = values[np.ix_(rows, feats)]
    obs = ~np.isnan(sub)
    for i in range(len(feats)):
        for j in range(i + 1, len(feats)):
            coeff = rdc(sub[:, i], sub[:, j], obs[:, i] & obs[:, j],
                        config, rng)
            if coeff >= config.rdc_threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups = {}
    for i in range(len(feats)):
        groups.setdefault(find(i), []).append(feats[i])
    return [groups[r] for r in sorted(groups)]


def _kmeans2(m, rng, restarts=10, iters=100):
    """2-means on rows of m; returns labels or None when no proper split
    exists (an empty cluster in every restart)."""
    n = m.shape[0]
    if n < 2:
        return None
    best_labels = None
    best_inertia = np.inf
    for _ in range(restarts):
        i0, i1 = rng.choice(n, size=2, replace=False)
        cent = np.stack([m[i0], m[i1]]).astype(np.float64)
        labels = None
        for _ in range(iters):
            d0 = ((m - cent[0]) ** 2).sum(axis=1)
            d1 = ((m - cent[1]) ** 2).sum(axis=1)
            new_labels = (d1 < d0).astype(np.int64)
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            n1 = int(labels.sum())
            if n1 == 0 or n1 == n:
                break
            cent = np.stack([m[labels == 0].mean(axis=0),
                             m[labels == 1].mean(axis=0)])
        n1 = int(labels.sum())
        if n1 == 0 or n1 == n:
            continue
        inertia = float(np.minimum(((m - cent[0]) ** 2).sum(axis=1),
                                   ((m - cent[1]) ** 2).sum(axis=1)).sum())
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return best_labels


def cluster_rows(values, rows, feats, config, rng):
    """Two row groups from 2-means on the slice's copula ranks (missing cells
    pinned at 0.5); None when the data does not support a split."""
    sub = values[np.ix_(rows, list(feats))]
    ranks = np.column_stack([_ranks_or_half(sub[:, j])
                             for j in range(sub.shape[1])])
    labels = _kmeans2(ranks, rng)
    if labels is None:
        return None
    rows = np.asarray(rows)
    return rows[labels == 0], rows[labels == 1]


def learn_structure(data, config=None, rng=None):
    """LearnSPN-style recursion: column split (product) first, then row
    clustering (sum, weights proportional to cluster sizes); slices below the
    instance floor or with one feature become leaves."""
    if config is None:
        config = StructureConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    values = data.values
    n, d = values.shape
    if n == 0 or d == 0:
        raise InvalidStructure("cannot learn a structure from an empty table")
    min_rows = config.min_instances_fraction * n
    builder = SpnBuilder(d)
    root_ss = np.random.SeedSequence(int(rng.integers(2 ** 63)))

    def leaves_product(feats):
        ids = [builder.leaf(f) for f in feats]
        if len(ids) == 1:
            return ids[0]
        return builder.product(ids)

    def rec(rows, feats, ss):
        local = np.random.default_rng(ss)
        if len(feats) == 1 or len(rows) < min_rows:
            return leaves_product(feats)
        groups = split_columns(values, rows, feats, config, local)
        if len(groups) > 1:
            log.debug("column split: %d rows -> groups %s", len(rows), groups)
            seeds = ss.spawn(len(groups))
            return builder.product(
                [rec(rows, g, s) for g, s in zip(groups, seeds)])
        split = cluster_rows(values, rows, feats, config, local)
        if split is not None:
            r0, r1 = split
            log.debug("row split: %d rows -> %d + %d",
                      len(rows), len(r0), len(r1))
            s0, s1 = ss.spawn(2)
            children = [rec(r0, feats, s0), rec(r1, feats, s1)]
            w = np.array([len(r0), len(r1)], dtype=np.float64)
            return builder.sum(children, w / w.sum())
        return leaves_product(feats)

    root = rec(np.arange(n), list(range(d)), root_ss)
    spn = builder.build(root)
    report = spn.validate()
    if not report.ok:
        raise InvalidStructure("learned structure failed validation:\n%s"
                               % report)
    return spn
