"""Sum-product network core: arena storage, validation, evaluation, sampling.

Nodes live in an index-addressed arena where every child id is smaller than
its parent id, so ascending ids are a topological order (children first) and
descending ids visit parents before children.  All evaluation happens in
natural-log space; mixtures inside leaves are collapsed with log-sum-exp.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (InvalidStructure, MissingOverride, NonFiniteValue,
                     TooManyTrees)

SUM, PRODUCT, LEAF = 0, 1, 2
_KIND_NAMES = {SUM: "sum", PRODUCT: "product", LEAF: "leaf"}


@dataclass(frozen=True)
class InducedTree:
    """One tree path through the network: a child per reached sum node and one
    leaf slot per feature.  log_weight is the log prior mass of the path."""

    chosen_child: dict
    leaf_slots: tuple
    log_weight: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple
    n_nodes: int
    n_sums: int
    n_products: int
    n_leaves: int

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        head = ("valid" if self.ok else "INVALID") + (
            " spn: %d nodes (%d sums, %d products, %d leaves)"
            % (self.n_nodes, self.n_sums, self.n_products, self.n_leaves))
        return "\n".join([head] + ["  - " + v for v in self.violations])


class SpnBuilder:
    """Constructs an Spn bottom-up.  Children must exist before their parent,
    which forces child id < parent id and hence acyclicity."""

    def __init__(self, n_features):
        if n_features < 1:
            raise InvalidStructure("n_features must be >= 1")
        self.n_features = int(n_features)
        self._kind = []
        self._children = []
        self._weights = []
        self._feature = []

    def _add(self, kind, children, weights, feature):
        nid = len(self._kind)
        for c in children:
            if not (0 <= c < nid):
                raise InvalidStructure(
                    "child id %r of node %d does not exist yet" % (c, nid))
        self._kind.append(kind)
        self._children.append(tuple(int(c) for c in children))
        self._weights.append(weights)
        self._feature.append(feature)
        return nid

    def leaf(self, feature):
        if not (0 <= feature < self.n_features):
            raise InvalidStructure("leaf feature %r out of range" % (feature,))
        return self._add(LEAF, (), None, int(feature))

    def product(self, children):
        if len(children) < 1:
            raise InvalidStructure("product node needs at least one child")
        return self._add(PRODUCT, children, None, -1)

    def sum(self, children, weights=None):
        if len(children) < 1:
            raise InvalidStructure("sum node needs at least one child")
        if weights is None:
            w = np.full(len(children), 1.0 / len(children))
        else:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != (len(children),):
                raise InvalidStructure("sum weights/children length mismatch")
            if not np.all(np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
                raise InvalidStructure("sum weights must be finite, >=0, with positive total")
            w = w / w.sum()
        return self._add(SUM, children, w, -1)

    def build(self, root=None):
        n = len(self._kind)
        if n == 0:
            raise InvalidStructure("cannot build an empty network")
        if root is None:
            root = n - 1
        if not (0 <= root < n):
            raise InvalidStructure("root id %r out of range" % (root,))

        kind = np.array(self._kind, dtype=np.int8)
        ch_off = np.zeros(n + 1, dtype=np.int64)
        for i, ch in enumerate(self._children):
            ch_off[i + 1] = ch_off[i] + len(ch)
        ch_ids = np.array(
            [c for ch in self._children for c in ch] or [], dtype=np.int32)

        init_edge_logw = np.zeros(ch_off[-1], dtype=np.float64)
        for i in range(n):
            if kind[i] == SUM:
                w = self._weights[i]
                with np.errstate(divide="ignore"):
                    init_edge_logw[ch_off[i]:ch_off[i + 1]] = np.log(w)

        feat = np.full(n, -1, dtype=np.int32)
        slot = np.full(n, -1, dtype=np.int32)
        leaves_by_feature = [[] for _ in range(self.n_features)]
        for i in range(n):
            if kind[i] == LEAF:
                d = self._feature[i]
                feat[i] = d
                slot[i] = len(leaves_by_feature[d])
                leaves_by_feature[d].append(i)

        feat_off = np.zeros(self.n_features + 1, dtype=np.int64)
        for d in range(self.n_features):
            feat_off[d + 1] = feat_off[d] + len(leaves_by_feature[d])
        leaf_gl = np.full(n, -1, dtype=np.int32)
        for i in range(n):
            if kind[i] == LEAF:
                leaf_gl[i] = feat_off[feat[i]] + slot[i]

        sum_pos = np.full(n, -1, dtype=np.int32)
        s = 0
        for i in range(n):
            if kind[i] == SUM:
                sum_pos[i] = s
                s += 1

        # Scopes, computed permissively; violations are validate()'s job.
        scopes = []
        for i in range(n):
            if kind[i] == LEAF:
                scopes.append(frozenset((self._feature[i],)))
            else:
                sc = frozenset()
                for c in self._children[i]:
                    sc = sc | scopes[c]
                scopes.append(sc)

        return Spn(n_features=self.n_features, kind=kind, ch_off=ch_off,
                   ch_ids=ch_ids, feat=feat, slot=slot, leaf_gl=leaf_gl,
                   sum_pos=sum_pos, feat_off=feat_off, root=int(root),
                   scopes=tuple(scopes),
                   leaves_by_feature=tuple(tuple(l) for l in leaves_by_feature),
                   init_edge_logw=init_edge_logw)


@dataclass
class Spn:
    """Immutable arena; see SpnBuilder.  Parameters (weights, leaf models)
    live in a ParamSet so one structure supports many posterior draws."""

    n_features: int
    kind: np.ndarray
    ch_off: np.ndarray
    ch_ids: np.ndarray
    feat: np.ndarray
    slot: np.ndarray
    leaf_gl: np.ndarray
    sum_pos: np.ndarray
    feat_off: np.ndarray
    root: int
    scopes: tuple
    leaves_by_feature: tuple
    init_edge_logw: np.ndarray

    @property
    def n_nodes(self):
        return len(self.kind)

    @property
    def n_sums(self):
        return int((self.kind == SUM).sum())

    @property
    def n_products(self):
        return int((self.kind == PRODUCT).sum())

    @property
    def n_leaf_slots(self):
        return int(self.feat_off[-1])

    def children(self, nid):
        return self.ch_ids[self.ch_off[nid]:self.ch_off[nid + 1]]

    @property
    def gl_feature(self):
        """Feature index per global leaf slot."""
        out = np.empty(self.n_leaf_slots, dtype=np.int32)
        for d in range(self.n_features):
            out[self.feat_off[d]:self.feat_off[d + 1]] = d
        return out

    @property
    def gl_node_ids(self):
        """Arena node id per global leaf slot."""
        out = np.empty(self.n_leaf_slots, dtype=np.int32)
        for i in range(self.n_nodes):
            if self.kind[i] == LEAF:
                out[self.leaf_gl[i]] = i
        return out

    # ------------------------------------------------------------------
    # validation

    def validate(self):
        bad = []
        reach = np.zeros(self.n_nodes, dtype=bool)
        reach[self.root] = True
        for i in range(self.n_nodes - 1, -1, -1):
            if reach[i]:
                reach[self.children(i)] = True
        for i in np.flatnonzero(~reach):
            bad.append("node %d unreachable from root %d" % (i, self.root))
        for i in range(self.n_nodes):
            ch = self.children(i)
            if self.kind[i] == SUM:
                first = self.scopes[ch[0]]
                for c in ch[1:]:
                    if self.scopes[c] != first:
                        bad.append(
                            "completeness violation at sum %d: child %d scope "
                            "differs from child %d" % (i, c, ch[0]))
            elif self.kind[i] == PRODUCT:
                seen = set()
                for c in ch:
                    if seen & self.scopes[c]:
                        bad.append(
                            "decomposability violation at product %d: child %d "
                            "overlaps siblings on features %s"
                            % (i, c, sorted(seen & self.scopes[c])))
                    seen |= self.scopes[c]
        if self.scopes[self.root] != frozenset(range(self.n_features)):
            bad.append("root scope %s != full feature set"
                       % (sorted(self.scopes[self.root]),))
        return ValidationReport(violations=tuple(bad), n_nodes=self.n_nodes,
                                n_sums=self.n_sums, n_products=self.n_products,
                                n_leaves=int((self.kind == LEAF).sum()))

    # ------------------------------------------------------------------
    # evaluation

    def comp_logpdf_matrix(self, params, data, observed):
        """log p_l(x) for every (row, leaf component); rows where the
        component's feature is unobserved are left at 0 and must be masked by
        the caller (leaf_values does)."""
        n = data.shape[0]
        out = np.zeros((n, int(params.comp_off[-1])), dtype=np.float64)
        for d in range(self.n_features):
            rows = np.flatnonzero(observed[:, d])
            if rows.size == 0:
                continue
            col = data[rows, d]
            for gl in range(int(self.feat_off[d]), int(self.feat_off[d + 1])):
                c0 = int(params.comp_off[gl])
                for k, model in enumerate(params.comps[gl]):
                    out[rows, c0 + k] = model.log_pdf(col)
        return out

    def leaf_values(self, params, comp_logp, observed, max_mode=False,
                    check=True):
        """Collapse each leaf's component mixture: log-sum-exp (or max) of
        log w + log pdf for observed cells, log 1 = 0 for unobserved."""
        n = comp_logp.shape[0]
        out = np.zeros((n, self.n_leaf_slots), dtype=np.float64)
        gl_feature = self.gl_feature
        for gl in range(self.n_leaf_slots):
            c0, c1 = int(params.comp_off[gl]), int(params.comp_off[gl + 1])
            block = comp_logp[:, c0:c1] + params.leaf_logw[c0:c1][None, :]
            m = block.max(axis=1)
            if max_mode:
                val = m
            else:
                with np.errstate(invalid="ignore"):
                    val = m + np.log(np.exp(block - m[:, None]).sum(axis=1))
                val = np.where(np.isneginf(m), -np.inf, val)
            out[:, gl] = np.where(observed[:, gl_feature[gl]], val, 0.0)
        if check and np.isnan(out).any():
            raise NonFiniteValue("leaf value is NaN")
        return out

    def bottom_up(self, params, leaf_vals, max_mode=False):
        """All node log-values, shape (n_rows, n_nodes)."""
        return kernels.bottom_up(self.kind, self.ch_off, self.ch_ids,
                                 self.leaf_gl, params.edge_logw, leaf_vals,
                                 max_mode)

    def log_density_batch(self, params, data, observed=None):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.n_features:
            raise InvalidStructure("data must be (n, %d)" % self.n_features)
        if observed is None:
            observed = ~np.isnan(data)
        comp_logp = self.comp_logpdf_matrix(params, data, observed)
        leaf_vals = self.leaf_values(params, comp_logp, observed)
        v = self.bottom_up(params, leaf_vals)
        out = v[:, self.root].copy()
        # full marginalization is exactly log 1
        out[~observed.any(axis=1)] = 0.0
        return out

    def log_density(self, params, row, observed_mask=None):
        row = np.asarray(row, dtype=np.float64).reshape(1, -1)
        obs = None if observed_mask is None else \
            np.asarray(observed_mask, dtype=bool).reshape(1, -1)
        return float(self.log_density_batch(params, row, obs)[0])

    def eval_leaf_matrix(self, params, leaf_mat, max_mode=False):
        """Root log-value for caller-supplied per-slot leaf log-values
        (one row per evaluation point)."""
        leaf_mat = np.asarray(leaf_mat, dtype=np.float64)
        v = self.bottom_up(params, leaf_mat, max_mode)
        return v[:, self.root]

    def eval_with_leaf_overrides(self, params, overrides):
        """Propagate with every leaf's log-value fixed by `overrides`, a map
        from leaf node id to log-value.  Used for type posteriors and pattern
        support."""
        row = np.empty((1, self.n_leaf_slots), dtype=np.float64)
        for i in range(self.n_nodes):
            if self.kind[i] == LEAF:
                if i not in overrides:
                    raise MissingOverride("no override for leaf node %d" % i)
                row[0, self.leaf_gl[i]] = overrides[i]
        return float(self.eval_leaf_matrix(params, row)[0])

    # ------------------------------------------------------------------
    # sampling / decoding

    def sample_trees_batch(self, params, v, uniforms):
        """Ancestral top-down pass over every row of `v` (node values from
        bottom_up).  Detached sums draw from the prior weights.  Returns
        (choices (n, n_sums), leaf slot per feature (n, d), reached mask)."""
        return kernels.sample_trees(v, self.kind, self.ch_off, self.ch_ids,
                                    self.sum_pos, self.feat, self.slot,
                                    params.edge_logw, self.root,
                                    self.n_features, uniforms)

    def decode_max_batch(self, params, v):
        return kernels.decode_max(v, self.kind, self.ch_off, self.ch_ids,
                                  self.sum_pos, self.feat, self.slot,
                                  params.edge_logw, self.root, self.n_features)

    def _tree_from_arrays(self, params, choices, jmat, reached):
        chosen = {}
        logw = 0.0
        for i in range(self.n_nodes):
            if self.kind[i] == SUM and reached[i]:
                j = int(self.ch_off[i]) + int(choices[self.sum_pos[i]])
                chosen[i] = int(self.ch_ids[j])
                logw += float(params.edge_logw[j])
        return InducedTree(chosen_child=chosen,
                           leaf_slots=tuple(int(x) for x in jmat),
                           log_weight=logw)

    def sample_induced_tree(self, params, row, observed_mask, rng):
        row = np.asarray(row, dtype=np.float64).reshape(1, -1)
        obs = np.asarray(observed_mask, dtype=bool).reshape(1, -1)
        comp_logp = self.comp_logpdf_matrix(params, row, obs)
        leaf_vals = self.leaf_values(params, comp_logp, obs)
        v = self.bottom_up(params, leaf_vals)
        u = rng.random((1, self.n_sums))
        choices, jmat, reached = self.sample_trees_batch(params, v, u)
        return self._tree_from_arrays(params, choices[0], jmat[0], reached[0])

    # ------------------------------------------------------------------
    # MPE completion

    def _mode_tables(self, params):
        n_gl = self.n_leaf_slots
        miss_val = np.empty(n_gl)
        miss_mode = np.empty(n_gl)
        for gl in range(n_gl):
            c0 = int(params.comp_off[gl])
            scores = np.array([params.leaf_logw[c0 + k] + m.mode_log_pdf()
                               for k, m in enumerate(params.comps[gl])])
            best = int(np.argmax(scores))
            miss_val[gl] = scores[best]
            miss_mode[gl] = params.comps[gl][best].mode()
        return miss_val, miss_mode

    def mpe_complete_batch(self, params, data, observed=None):
        data = np.asarray(data, dtype=np.float64)
        if observed is None:
            observed = ~np.isnan(data)
        observed = np.asarray(observed, dtype=bool)
        comp_logp = self.comp_logpdf_matrix(params, data, observed)
        leaf_vals = self.leaf_values(params, comp_logp, observed,
                                     max_mode=True)
        miss_val, miss_mode = self._mode_tables(params)
        gl_feature = self.gl_feature
        miss_rows = ~observed[:, gl_feature]      # (n, n_gl)
        leaf_vals = np.where(miss_rows, miss_val[None, :], leaf_vals)
        v = self.bottom_up(params, leaf_vals, max_mode=True)
        _, jmat, _ = self.decode_max_batch(params, v)
        out = data.copy()
        for d in range(self.n_features):
            rows = np.flatnonzero(~observed[:, d])
            if rows.size == 0:
                continue
            gls = self.feat_off[d] + jmat[rows, d]
            out[rows, d] = miss_mode[gls]
        return out

    def mpe_complete(self, params, row, observed_mask=None):
        row = np.asarray(row, dtype=np.float64).reshape(1, -1)
        obs = None if observed_mask is None else \
            np.asarray(observed_mask, dtype=bool).reshape(1, -1)
        return self.mpe_complete_batch(params, row, obs)[0]

    # ------------------------------------------------------------------
    # enumeration / generation

    def count_induced_trees(self):
        counts = np.zeros(self.n_nodes, dtype=np.float64)
        for i in range(self.n_nodes):
            if self.kind[i] == LEAF:
                counts[i] = 1.0
            elif self.kind[i] == PRODUCT:
                counts[i] = np.prod(counts[self.children(i)])
            else:
                counts[i] = np.sum(counts[self.children(i)])
        return float(counts[self.root])

    def enumerate_induced_trees(self, params=None, cap=10**6):
        """Exhaustive list of induced trees with log prior weights; the
        exponentiated weights sum to one."""
        n_trees = self.count_induced_trees()
        if n_trees > cap:
            raise TooManyTrees("%g induced trees exceeds cap %d"
                               % (n_trees, cap))
        edge_logw = self.init_edge_logw if params is None else params.edge_logw

        memo = {}

        def frags(nid):
            if nid in memo:
                return memo[nid]
            if self.kind[nid] == LEAF:
                out = [(0.0, {int(self.feat[nid]): int(self.slot[nid])}, {})]
            elif self.kind[nid] == PRODUCT:
                parts = [frags(int(c)) for c in self.children(nid)]
                out = []
                for combo in itertools.product(*parts):
                    lw = sum(f[0] for f in combo)
                    slots = {}
                    chosen = {}
                    for f in combo:
                        slots.update(f[1])
                        chosen.update(f[2])
                    out.append((lw, slots, chosen))
            else:
                out = []
                o0 = int(self.ch_off[nid])
                for ci, c in enumerate(self.children(nid)):
                    w = float(edge_logw[o0 + ci])
                    for lw, slots, chosen in frags(int(c)):
                        ch2 = dict(chosen)
                        ch2[nid] = int(c)
                        out.append((lw + w, slots, ch2))
            memo[nid] = out
            return out

        trees = []
        for lw, slots, chosen in frags(self.root):
            vec = tuple(slots.get(d, -1) for d in range(self.n_features))
            trees.append(InducedTree(chosen_child=chosen, leaf_slots=vec,
                                     log_weight=lw))
        return trees

    def sample_dataset(self, params, n, rng):
        """Forward-sample n rows (ancestral: tree, then component, then value)."""
        v = np.zeros((n, self.n_nodes), dtype=np.float64)
        u_tree = rng.random((n, self.n_sums))
        _, jmat, _ = self.sample_trees_batch(params, v, u_tree)
        comp_logp = np.zeros((n, int(params.comp_off[-1])))
        observed = np.ones((n, self.n_features), dtype=bool)
        u_comp = rng.random((n, self.n_features))
        smat = kernels.sample_components(comp_logp, params.leaf_logw,
                                         params.comp_off, self.feat_off, jmat,
                                         observed, u_comp)
        out = np.empty((n, self.n_features), dtype=np.float64)
        for d in range(self.n_features):
            for s in range(int(self.feat_off[d + 1] - self.feat_off[d])):
                gl = int(self.feat_off[d]) + s
                for k, model in enumerate(params.comps[gl]):
                    rows = np.flatnonzero((jmat[:, d] == s) & (smat[:, d] == k))
                    if rows.size:
                        out[rows, d] = model.sample(rng, size=rows.size)
        return out


@dataclass
class ParamSet:
    """One concrete parameterization of an Spn: per-edge log sum-weights, and
    per-leaf component models with log mixture weights (flat CSR layout)."""

    edge_logw: np.ndarray
    comp_off: np.ndarray
    comps: tuple
    leaf_logw: np.ndarray

    @classmethod
    def build(cls, spn, comps, leaf_w=None, edge_logw=None):
        comps = tuple(tuple(c) for c in comps)
        if len(comps) != spn.n_leaf_slots:
            raise InvalidStructure("need one component list per leaf slot")
        comp_off = np.zeros(len(comps) + 1, dtype=np.int64)
        for gl, c in enumerate(comps):
            if len(c) == 0:
                raise InvalidStructure("leaf slot %d has no components" % gl)
            comp_off[gl + 1] = comp_off[gl] + len(c)
        if leaf_w is None:
            leaf_logw = np.concatenate(
                [np.full(len(c), -np.log(len(c))) for c in comps])
        else:
            leaf_logw = np.empty(int(comp_off[-1]))
            for gl, w in enumerate(leaf_w):
                w = np.asarray(w, dtype=np.float64)
                if w.shape != (len(comps[gl]),) or np.any(w < 0) or w.sum() <= 0:
                    raise InvalidStructure("bad leaf weights at slot %d" % gl)
                with np.errstate(divide="ignore"):
                    leaf_logw[comp_off[gl]:comp_off[gl + 1]] = \
                        np.log(w / w.sum())
        if edge_logw is None:
            edge_logw = spn.init_edge_logw.copy()
        else:
            edge_logw = np.asarray(edge_logw, dtype=np.float64)
            if edge_logw.shape != spn.init_edge_logw.shape:
                raise InvalidStructure("edge weight array shape mismatch")
        return cls(edge_logw=edge_logw, comp_off=comp_off, comps=comps,
                   leaf_logw=leaf_logw)

    @property
    def n_components(self):
        return int(self.comp_off[-1])

    def comp_slice(self, gl):
        return int(self.comp_off[gl]), int(self.comp_off[gl + 1])

    def leaf_weights(self, gl):
        c0, c1 = self.comp_slice(gl)
        return np.exp(self.leaf_logw[c0:c1])

    def sum_weights(self, spn, nid):
        o0, o1 = int(spn.ch_off[nid]), int(spn.ch_off[nid + 1])
        return np.exp(self.edge_logw[o0:o1])

    def copy(self):
        return ParamSet(edge_logw=self.edge_logw.copy(),
                        comp_off=self.comp_off, comps=self.comps,
                        leaf_logw=self.leaf_logw.copy())
