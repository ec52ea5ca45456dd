"""Dependency-pattern mining: interval atoms from leaf components, exact
support through the network, Apriori-style composition restricted to leaves
of a common sub-partition, and the partition hierarchy report."""

from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidData
from .likelihoods import interval_log_mass
from .spn import LEAF, PRODUCT, SUM


@dataclass(frozen=True)
class IntervalPattern:
    """Event lo <= X_feature < hi, extracted from one leaf component."""

    feature: int
    lo: float
    hi: float
    leaf_slot: int        # global leaf slot the atom came from
    component: int
    mass_at_source: float

    def key(self):
        return (self.feature, self.lo, self.hi)


@dataclass(frozen=True)
class CompositePattern:
    atoms: tuple
    support: float
    anchor: int           # node anchoring the shared partition

    @property
    def arity(self):
        return len(self.atoms)

    def features(self):
        return tuple(a.feature for a in self.atoms)


def format_pattern(pattern, names=None):
    def nm(d):
        return names[d] if names is not None else "x%d" % d
    parts = ["%.4g <= %s < %.4g" % (a.lo, nm(a.feature), a.hi)
             for a in pattern.atoms]
    return "%s  (supp=%.3f)" % (" AND ".join(parts), pattern.support)


# ----------------------------------------------------------------------
# posterior means

def _mean_model(models):
    proto = models[0]
    kwargs = {}
    for f in fields(proto):
        vals = [getattr(m, f.name) for m in models]
        if isinstance(vals[0], tuple):
            kwargs[f.name] = tuple(float(np.mean(col)) for col in zip(*vals))
        elif isinstance(vals[0], (int, np.integer)):
            kwargs[f.name] = vals[0]
        else:
            kwargs[f.name] = float(np.mean(vals))
    return type(proto)(**kwargs)


def posterior_mean_leaves(model):
    """Per leaf slot: (mean mixture weights, mean component models) across
    the retained draws."""
    model._require_draws()
    draws = model.samples.draws
    comp_off = draws[0].comp_off
    out = []
    for gl in range(len(comp_off) - 1):
        c0, c1 = int(comp_off[gl]), int(comp_off[gl + 1])
        w = np.mean([np.exp(p.leaf_logw[c0:c1]) for p in draws], axis=0)
        ms = tuple(_mean_model([p.comps[gl][k] for p in draws])
                   for k in range(c1 - c0))
        out.append((w, ms))
    return out


# ----------------------------------------------------------------------
# atoms

_WEIGHT_FLOOR = 0.1


def extract_atoms(model, lam, mean_leaves=None):
    """Central-mass intervals per sufficiently weighted leaf component, under
    posterior-mean parameters.  Discrete intervals are integer-aligned
    [lo, hi+1)."""
    if not (0.0 < lam < 1.0):
        raise InvalidData("lambda must lie in (0,1)")
    if mean_leaves is None:
        mean_leaves = posterior_mean_leaves(model)
    spn = model.spn
    gl_feature = spn.gl_feature
    p_lo, p_hi = (1.0 - lam) / 2.0, (1.0 + lam) / 2.0
    atoms = []
    for gl, (w, ms) in enumerate(mean_leaves):
        d = int(gl_feature[gl])
        discrete = model.meta_types[d].name == "DISCRETE"
        for k, m in enumerate(ms):
            if w[k] < _WEIGHT_FLOOR:
                continue
            lo = float(m.quantile(p_lo))
            hi = float(m.quantile(p_hi))
            if discrete:
                hi = hi + 1.0
            if not lo < hi:
                continue
            mass = float(np.exp(interval_log_mass(m, lo, hi)))
            atoms.append(IntervalPattern(feature=d, lo=lo, hi=hi,
                                         leaf_slot=gl, component=k,
                                         mass_at_source=mass))
    return atoms


def _leaf_mixture_mass(mean_leaves, gl, lo, hi):
    w, ms = mean_leaves[gl]
    return float(sum(wk * np.exp(interval_log_mass(m, lo, hi))
                     for wk, m in zip(w, ms)))


# ----------------------------------------------------------------------
# support

def _support_overrides(spn, params, intervals):
    """Per-slot leaf log-values for an interval event per constrained
    feature: log of the leaf's mixture mass inside the interval; log 1
    elsewhere."""
    row = np.zeros(spn.n_leaf_slots)
    gl_feature = spn.gl_feature
    for gl in range(spn.n_leaf_slots):
        d = int(gl_feature[gl])
        if d not in intervals:
            continue
        lo, hi = intervals[d]
        c0, c1 = params.comp_slice(gl)
        mass = sum(np.exp(params.leaf_logw[c0 + k]) *
                   np.exp(interval_log_mass(m, lo, hi))
                   for k, m in enumerate(params.comps[gl]))
        with np.errstate(divide="ignore"):
            row[gl] = np.log(mass) if mass > 0 else -np.inf
    return row


def pattern_support(model, pattern):
    """Exact probability of the conjunction of interval events, averaged over
    the posterior draws in probability space."""
    atoms = pattern.atoms if isinstance(pattern, CompositePattern) else \
        tuple(pattern)
    if len(atoms) == 0:
        return 1.0
    feats = [a.feature for a in atoms]
    if len(set(feats)) != len(feats):
        raise InvalidData("pattern features must be pairwise distinct")
    intervals = {a.feature: (a.lo, a.hi) for a in atoms}
    model._require_draws()
    spn = model.spn
    vals = []
    for params in model.samples.draws:
        row = _support_overrides(spn, params, intervals)
        vals.append(np.exp(spn.eval_leaf_matrix(params, row.reshape(1, -1))[0]))
    return float(np.mean(vals))


# ----------------------------------------------------------------------
# mining

def _product_groups(spn):
    """For every product node: the leaf slots reachable through product nodes
    only (one shared sub-partition; sum nodes block the descent)."""
    down = [frozenset()] * spn.n_nodes
    for i in range(spn.n_nodes):
        if spn.kind[i] == LEAF:
            down[i] = frozenset((int(spn.leaf_gl[i]),))
        elif spn.kind[i] == PRODUCT:
            s = frozenset()
            for c in spn.children(i):
                s = s | down[c]
            down[i] = s
        else:
            down[i] = frozenset()
    groups = [(i, down[i]) for i in range(spn.n_nodes)
              if spn.kind[i] == PRODUCT]
    groups.sort(key=lambda g: (len(g[1]), g[0]))
    return groups


def _find_anchor(groups, slots):
    for nid, g in groups:
        if slots <= g:
            return nid
    return None


def mine(model, lam=0.9, theta=0.9, max_arity=4, support_floor=0.05):
    """Levelwise pattern growth: atoms whose leaf-level probability passes
    theta, composed only within a shared product partition, pruned by the
    support floor, ranked by support (anti-monotonicity asserted)."""
    mean_leaves = posterior_mean_leaves(model)
    atoms = [a for a in extract_atoms(model, lam, mean_leaves)
             if _leaf_mixture_mass(mean_leaves, a.leaf_slot, a.lo, a.hi)
             >= theta]
    spn = model.spn
    groups = _product_groups(spn)
    gl_nodes = spn.gl_node_ids

    sup = {}
    out = []
    frontier = []
    singles = []
    for i, a in enumerate(atoms):
        s = pattern_support(model, (a,))
        if s < support_floor:
            continue
        key = frozenset((i,))
        sup[key] = s
        singles.append(i)
        frontier.append(key)
        out.append(CompositePattern(atoms=(a,), support=s,
                                    anchor=int(gl_nodes[a.leaf_slot])))

    for _ in range(2, max_arity + 1):
        cands = set()
        for fs in frontier:
            feats = {atoms[i].feature for i in fs}
            slots = frozenset(atoms[i].leaf_slot for i in fs)
            for j in singles:
                if j in fs or atoms[j].feature in feats:
                    continue
                if _find_anchor(groups,
                                slots | {atoms[j].leaf_slot}) is None:
                    continue
                cands.add(fs | {j})
        new_frontier = []
        for fs in sorted(cands, key=sorted):
            subs = [fs - {i} for i in fs]
            if any(sb not in sup for sb in subs):
                continue
            members = tuple(sorted(fs, key=lambda i: atoms[i].feature))
            patt = tuple(atoms[i] for i in members)
            s = pattern_support(model, patt)
            floor_bound = min(sup[sb] for sb in subs)
            assert s <= floor_bound + 1e-9, \
                "anti-monotonicity violated: %r > %r" % (s, floor_bound)
            if s < support_floor:
                continue
            sup[fs] = s
            new_frontier.append(fs)
            anchor = _find_anchor(
                groups, frozenset(a.leaf_slot for a in patt))
            out.append(CompositePattern(atoms=patt, support=s, anchor=anchor))
        frontier = new_frontier
        if not frontier:
            break

    out.sort(key=lambda p: (-p.support,
                            tuple((a.feature, a.lo, a.hi) for a in p.atoms)))
    return out


def confidence(model, pattern, antecedent_features):
    """supp(antecedent AND consequent) / supp(antecedent) for any split of a
    composite pattern."""
    ante = tuple(a for a in pattern.atoms if a.feature in antecedent_features)
    if len(ante) == 0 or len(ante) == len(pattern.atoms):
        raise InvalidData("antecedent must be a proper nonempty subset")
    return pattern.support / pattern_support(model, ante)


# ----------------------------------------------------------------------
# partition hierarchy

@dataclass(frozen=True)
class PartitionEntry:
    node: int
    kind: str
    depth: int
    path: tuple
    n_rows: int
    feature_stats: tuple  # (feature, count, mean, min, max) per scope feature


def partition_report(model, data):
    """Hierarchical co-clustering induced by max-product decoding under the
    maximum-train-likelihood draw: per reached node, its path, row count and
    per-feature summaries of the assigned rows."""
    params = model.best_params
    spn = model.spn
    values = data.values if hasattr(data, "values") else np.asarray(data)
    observed = ~np.isnan(values)
    comp_logp = spn.comp_logpdf_matrix(params, values, observed)
    leaf_vals = spn.leaf_values(params, comp_logp, observed, max_mode=True)
    v = spn.bottom_up(params, leaf_vals, max_mode=True)
    _, _, reached = spn.decode_max_batch(params, v)
    kind_name = {SUM: "sum", PRODUCT: "product", LEAF: "leaf"}

    entries = []

    def stats_for(rows, node):
        st = []
        for d in sorted(spn.scopes[node]):
            cells = values[rows, d]
            cells = cells[~np.isnan(cells)]
            if cells.size:
                st.append((d, int(cells.size), float(cells.mean()),
                           float(cells.min()), float(cells.max())))
            else:
                st.append((d, 0, np.nan, np.nan, np.nan))
        return tuple(st)

    def walk(node, depth, path, rows):
        entries.append(PartitionEntry(
            node=int(node), kind=kind_name[int(spn.kind[node])], depth=depth,
            path=path, n_rows=int(rows.size),
            feature_stats=stats_for(rows, node)))
        for c in spn.children(node):
            sub = rows[reached[rows, c].astype(bool)]
            if sub.size:
                walk(int(c), depth + 1, path + (int(node),), sub)

    walk(spn.root, 0, (), np.arange(values.shape[0]))
    return entries


def format_partition_report(entries, names=None):
    lines = []
    for e in entries:
        feats = ", ".join(
            "%s: n=%d mean=%.3g" % (
                names[d] if names is not None else "x%d" % d, n, mean)
            for d, n, mean, _, _ in e.feature_stats[:4])
        lines.append("%s[%d %s] rows=%d  %s"
                     % ("  " * e.depth, e.node, e.kind, e.n_rows, feats))
    return "\n".join(lines)
