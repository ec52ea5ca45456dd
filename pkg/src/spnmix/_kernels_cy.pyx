# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Cython implementations of the evaluation/sampling kernels.

Same contracts as spnmix._kernels_py (the reference implementation); per-row
C loops instead of per-node vectorized passes.  Uniform consumption layout is
identical, so both backends draw the same trees/components for the same
uniforms (up to floating-point ties).
"""

from libc.math cimport exp, log, INFINITY
import numpy as np
cimport numpy as cnp

cnp.import_array()


def bottom_up(cnp.int8_t[::1] kind, cnp.int64_t[::1] ch_off, cnp.int32_t[::1] ch_ids,
              cnp.int32_t[::1] leaf_gl, double[::1] edge_logw,
              double[:, ::1] leaf_vals, bint max_mode):
    cdef Py_ssize_t n_nodes = kind.shape[0]
    cdef Py_ssize_t n = leaf_vals.shape[0]
    out = np.empty((n, n_nodes), dtype=np.float64)
    cdef double[:, ::1] v = out
    cdef Py_ssize_t row, node
    cdef cnp.int64_t j, o0, o1
    cdef int k
    cdef double acc, m, t
    for row in range(n):
        for node in range(n_nodes):
            k = kind[node]
            if k == 2:
                v[row, node] = leaf_vals[row, leaf_gl[node]]
                continue
            o0 = ch_off[node]
            o1 = ch_off[node + 1]
            if k == 1:
                acc = v[row, ch_ids[o0]]
                for j in range(o0 + 1, o1):
                    acc += v[row, ch_ids[j]]
                v[row, node] = acc
            else:
                m = -INFINITY
                for j in range(o0, o1):
                    t = v[row, ch_ids[j]] + edge_logw[j]
                    if t > m:
                        m = t
                if max_mode or m == -INFINITY:
                    v[row, node] = m
                else:
                    acc = 0.0
                    for j in range(o0, o1):
                        acc += exp(v[row, ch_ids[j]] + edge_logw[j] - m)
                    v[row, node] = m + log(acc)
    return out


def sample_trees(double[:, ::1] v, cnp.int8_t[::1] kind, cnp.int64_t[::1] ch_off,
                 cnp.int32_t[::1] ch_ids, cnp.int32_t[::1] sum_pos,
                 cnp.int32_t[::1] feat, cnp.int32_t[::1] slot,
                 double[::1] edge_logw, Py_ssize_t root, Py_ssize_t n_feats,
                 double[:, ::1] uniforms):
    cdef Py_ssize_t n_nodes = kind.shape[0]
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t n_sums = uniforms.shape[1]
    choices_arr = np.zeros((n, n_sums), dtype=np.int32)
    jmat_arr = np.full((n, n_feats), -1, dtype=np.int32)
    reached_arr = np.zeros((n, n_nodes), dtype=np.uint8)
    cdef cnp.int32_t[:, ::1] choices = choices_arr
    cdef cnp.int32_t[:, ::1] jmat = jmat_arr
    cdef cnp.uint8_t[:, ::1] reached = reached_arr
    cdef Py_ssize_t row, node, s
    cdef cnp.int64_t j, o0, o1
    cdef int k, r, choice, ci, nch
    cdef double m, t, tot, cum, u
    for row in range(n):
        reached[row, root] = 1
        for node in range(n_nodes - 1, -1, -1):
            k = kind[node]
            r = reached[row, node]
            if k == 2:
                if r:
                    jmat[row, feat[node]] = slot[node]
                continue
            o0 = ch_off[node]
            o1 = ch_off[node + 1]
            if k == 1:
                if r:
                    for j in range(o0, o1):
                        reached[row, ch_ids[j]] = 1
                continue
            s = sum_pos[node]
            nch = <int> (o1 - o0)
            m = -INFINITY
            for j in range(o0, o1):
                t = (v[row, ch_ids[j]] + edge_logw[j]) if r else edge_logw[j]
                if t > m:
                    m = t
            choice = 0
            if m > -INFINITY and m == m:
                tot = 0.0
                for j in range(o0, o1):
                    t = (v[row, ch_ids[j]] + edge_logw[j]) if r else edge_logw[j]
                    tot += exp(t - m)
                if tot > 0.0 and tot == tot:
                    u = uniforms[row, s] * tot
                    cum = 0.0
                    choice = nch - 1
                    for ci in range(nch):
                        j = o0 + ci
                        t = (v[row, ch_ids[j]] + edge_logw[j]) if r else edge_logw[j]
                        cum += exp(t - m)
                        if cum >= u:
                            choice = ci
                            break
            choices[row, s] = choice
            if r:
                reached[row, ch_ids[o0 + choice]] = 1
    return choices_arr, jmat_arr, reached_arr


def decode_max(double[:, ::1] v, cnp.int8_t[::1] kind, cnp.int64_t[::1] ch_off,
               cnp.int32_t[::1] ch_ids, cnp.int32_t[::1] sum_pos,
               cnp.int32_t[::1] feat, cnp.int32_t[::1] slot,
               double[::1] edge_logw, Py_ssize_t root, Py_ssize_t n_feats):
    cdef Py_ssize_t n_nodes = kind.shape[0]
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t n_sums = 0
    cdef Py_ssize_t node
    for node in range(n_nodes):
        if kind[node] == 0:
            n_sums += 1
    choices_arr = np.zeros((n, n_sums), dtype=np.int32)
    jmat_arr = np.full((n, n_feats), -1, dtype=np.int32)
    reached_arr = np.zeros((n, n_nodes), dtype=np.uint8)
    cdef cnp.int32_t[:, ::1] choices = choices_arr
    cdef cnp.int32_t[:, ::1] jmat = jmat_arr
    cdef cnp.uint8_t[:, ::1] reached = reached_arr
    cdef Py_ssize_t row, s
    cdef cnp.int64_t j, o0, o1
    cdef int k, r, choice, ci
    cdef double m, t
    for row in range(n):
        reached[row, root] = 1
        for node in range(n_nodes - 1, -1, -1):
            k = kind[node]
            r = reached[row, node]
            if k == 2:
                if r:
                    jmat[row, feat[node]] = slot[node]
                continue
            o0 = ch_off[node]
            o1 = ch_off[node + 1]
            if k == 1:
                if r:
                    for j in range(o0, o1):
                        reached[row, ch_ids[j]] = 1
                continue
            s = sum_pos[node]
            m = -INFINITY
            choice = 0
            for ci in range(<int> (o1 - o0)):
                j = o0 + ci
                t = (v[row, ch_ids[j]] + edge_logw[j]) if r else edge_logw[j]
                if t > m:
                    m = t
                    choice = ci
            choices[row, s] = choice
            if r:
                reached[row, ch_ids[o0 + choice]] = 1
    return choices_arr, jmat_arr, reached_arr


def sample_components(double[:, ::1] comp_logp, double[::1] leaf_logw,
                      cnp.int64_t[::1] comp_off, cnp.int64_t[::1] feat_off,
                      cnp.int32_t[:, ::1] jmat, cnp.uint8_t[:, ::1] observed,
                      double[:, ::1] uniforms):
    cdef Py_ssize_t n = jmat.shape[0]
    cdef Py_ssize_t n_feats = jmat.shape[1]
    smat_arr = np.full((n, n_feats), -1, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] smat = smat_arr
    cdef Py_ssize_t row, d
    cdef cnp.int64_t g, j, c0, c1
    cdef int choice, ci, nc
    cdef double m, t, tot, cum, u
    for row in range(n):
        for d in range(n_feats):
            if not observed[row, d] or jmat[row, d] < 0:
                continue
            g = feat_off[d] + jmat[row, d]
            c0 = comp_off[g]
            c1 = comp_off[g + 1]
            nc = <int> (c1 - c0)
            m = -INFINITY
            for j in range(c0, c1):
                t = leaf_logw[j] + comp_logp[row, j]
                if t > m:
                    m = t
            choice = 0
            if m > -INFINITY and m == m:
                tot = 0.0
                for j in range(c0, c1):
                    tot += exp(leaf_logw[j] + comp_logp[row, j] - m)
                if tot > 0.0 and tot == tot:
                    u = uniforms[row, d] * tot
                    cum = 0.0
                    choice = nc - 1
                    for ci in range(nc):
                        j = c0 + ci
                        cum += exp(leaf_logw[j] + comp_logp[row, j] - m)
                        if cum >= u:
                            choice = ci
                            break
            smat[row, d] = choice
    return smat_arr
