"""Pure NumPy implementations of the evaluation/sampling kernels.

These are the fallback for the Cython extension (spnmix._kernels_cy).  Both
backends implement the same four entry points with identical contracts and
consume caller-supplied uniforms in the same (row, node) layout, so a fixed
seed produces the same draws on either backend up to floating-point noise.

Node ids are a topological order by construction (every child id is smaller
than its parent's), so bottom-up passes iterate ascending ids and top-down
passes iterate descending ids.
"""

import numpy as np

_NEG_INF = -np.inf


def bottom_up(kind, ch_off, ch_ids, leaf_gl, edge_logw, leaf_vals, max_mode):
    """Evaluate all nodes for a batch of rows.

    Parameters
    ----------
    kind : int8[n_nodes] -- 0 sum, 1 product, 2 leaf
    ch_off, ch_ids : children CSR
    leaf_gl : int32[n_nodes], global leaf index or -1
    edge_logw : float64 parallel to ch_ids (only sums' slices are read)
    leaf_vals : float64[N, n_leaves]
    max_mode : sums take max instead of log-sum-exp (MPE pass)

    Returns float64[N, n_nodes].
    """
    n_nodes = kind.shape[0]
    n = leaf_vals.shape[0]
    v = np.empty((n, n_nodes), dtype=np.float64)
    for node in range(n_nodes):
        k = kind[node]
        o0, o1 = ch_off[node], ch_off[node + 1]
        if k == 2:
            v[:, node] = leaf_vals[:, leaf_gl[node]]
        elif k == 1:
            acc = v[:, ch_ids[o0]].copy()
            for j in range(o0 + 1, o1):
                acc += v[:, ch_ids[j]]
            v[:, node] = acc
        else:
            ts = v[:, ch_ids[o0:o1]] + edge_logw[o0:o1]
            m = ts.max(axis=1)
            if max_mode:
                v[:, node] = m
            else:
                finite = m > _NEG_INF
                with np.errstate(invalid="ignore"):
                    acc = np.exp(ts - m[:, None]).sum(axis=1)
                    v[:, node] = np.where(finite, m + np.log(acc), _NEG_INF)
    return v


def _pick(ts, u):
    """Inverse-CDF choice per row from unnormalized log-probability rows."""
    m = ts.max(axis=1)
    with np.errstate(invalid="ignore"):
        cum = np.cumsum(np.exp(ts - m[:, None]), axis=1)
    tot = cum[:, -1]
    t = u * tot
    choice = (cum < t[:, None]).sum(axis=1)
    bad = ~np.isfinite(tot) | (tot <= 0)
    choice[bad] = 0
    return np.minimum(choice, ts.shape[1] - 1).astype(np.int32)


def sample_trees(v, kind, ch_off, ch_ids, sum_pos, feat, slot,
                 edge_logw, root, n_feats, uniforms):
    """Top-down ancestral induced-tree sampling for a batch of rows.

    Every sum draws a child for every row: reached sums from the posterior
    (weights x child values), unreached sums from the prior weights alone.
    One uniform per (row, sum) is consumed either way.

    Returns (choices int32[N, n_sums], jmat int32[N, D], reached uint8[N, n_nodes]).
    """
    n_nodes = kind.shape[0]
    n = v.shape[0]
    n_sums = uniforms.shape[1]
    reached = np.zeros((n, n_nodes), dtype=bool)
    reached[:, root] = True
    choices = np.zeros((n, n_sums), dtype=np.int32)
    jmat = np.full((n, n_feats), -1, dtype=np.int32)
    for node in range(n_nodes - 1, -1, -1):
        k = kind[node]
        r = reached[:, node]
        if k == 2:
            rows = np.nonzero(r)[0]
            jmat[rows, feat[node]] = slot[node]
            continue
        o0, o1 = ch_off[node], ch_off[node + 1]
        ch = ch_ids[o0:o1]
        if k == 1:
            for c in ch:
                reached[:, c] |= r
            continue
        s = sum_pos[node]
        lw = edge_logw[o0:o1]
        ts = np.where(r[:, None], v[:, ch] + lw, lw[None, :])
        choice = _pick(ts, uniforms[:, s])
        choices[:, s] = choice
        for ci in range(ch.shape[0]):
            reached[:, ch[ci]] |= r & (choice == ci)
    return choices, jmat, reached.astype(np.uint8)


def decode_max(v, kind, ch_off, ch_ids, sum_pos, feat, slot,
               edge_logw, root, n_feats):
    """Deterministic argmax decode (MPE top-down); ties -> lowest child index."""
    n_nodes = kind.shape[0]
    n = v.shape[0]
    n_sums = int((kind == 0).sum())
    reached = np.zeros((n, n_nodes), dtype=bool)
    reached[:, root] = True
    choices = np.zeros((n, n_sums), dtype=np.int32)
    jmat = np.full((n, n_feats), -1, dtype=np.int32)
    for node in range(n_nodes - 1, -1, -1):
        k = kind[node]
        r = reached[:, node]
        if k == 2:
            rows = np.nonzero(r)[0]
            jmat[rows, feat[node]] = slot[node]
            continue
        o0, o1 = ch_off[node], ch_off[node + 1]
        ch = ch_ids[o0:o1]
        if k == 1:
            for c in ch:
                reached[:, c] |= r
            continue
        s = sum_pos[node]
        lw = edge_logw[o0:o1]
        ts = np.where(r[:, None], v[:, ch] + lw, lw[None, :])
        choice = np.argmax(ts, axis=1).astype(np.int32)
        choices[:, s] = choice
        for ci in range(ch.shape[0]):
            reached[:, ch[ci]] |= r & (choice == ci)
    return choices, jmat, reached.astype(np.uint8)


def sample_components(comp_logp, leaf_logw, comp_off, feat_off, jmat,
                      observed, uniforms):
    """Draw a mixture-component index for every observed cell.

    The cell (n, d) belongs to leaf slot jmat[n, d] of feature d; the draw is
    categorical with probability proportional to weight x component density.
    Missing cells keep -1.  One uniform per (row, feature) is consumed for
    observed cells.
    """
    n, n_feats = jmat.shape
    smat = np.full((n, n_feats), -1, dtype=np.int32)
    for d in range(n_feats):
        g0, g1 = feat_off[d], feat_off[d + 1]
        for g in range(g0, g1):
            rows = observed[:, d] & (jmat[:, d] == (g - g0))
            if not rows.any():
                continue
            c0, c1 = comp_off[g], comp_off[g + 1]
            ts = leaf_logw[c0:c1] + comp_logp[rows, c0:c1]
            smat[rows, d] = _pick(ts, uniforms[rows, d])
    return smat
